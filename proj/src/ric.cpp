#include "gobrem/ric.hpp"

#include <sstream>

namespace gobrem::ric {
namespace {

std::string token_value(const std::vector<std::string_view>& tokens, std::string_view key) {
  for (auto t : tokens)
    if (t.size() > key.size() && t.substr(0, key.size()) == key && t[key.size()] == '=')
      return std::string(t.substr(key.size() + 1));
  throw FormatError("missing field '" + std::string(key) + "'");
}

}  // namespace

std::string A1PolicyMessage::serialize() const {
  std::ostringstream os;
  os << "A1 beta=" << format_double(beta) << " gamma=" << format_double(gamma)
     << " rem_checksum=" << rem_checksum << " issued_at=" << issued_at_ms
     << " bytes=" << artifact.size() << '\n'
     << artifact;
  return os.str();
}

A1PolicyMessage A1PolicyMessage::parse(const std::string& text) {
  const auto nl = text.find('\n');
  if (nl == std::string::npos) throw FormatError("A1 message without body");
  const auto tokens = split(trim(std::string_view(text).substr(0, nl)), ' ');
  if (tokens.empty() || tokens[0] != "A1") throw FormatError("not an A1 message");
  A1PolicyMessage msg;
  msg.beta = parse_double(token_value(tokens, "beta"));
  msg.gamma = parse_double(token_value(tokens, "gamma"));
  msg.rem_checksum = token_value(tokens, "rem_checksum");
  msg.issued_at_ms = parse_int(token_value(tokens, "issued_at"));
  const auto bytes = static_cast<std::size_t>(parse_int(token_value(tokens, "bytes")));
  msg.artifact = text.substr(nl + 1);
  if (msg.artifact.size() != bytes) throw FormatError("A1 body length mismatch");
  return msg;
}

std::string A1PolicyMessage::intent() const {
  if (beta == 1.0) return "BR-MIN";
  if (beta == 0.0) return "RSRP-MAX";
  return "MIXED";
}

std::string E2Command::serialize() const {
  std::ostringstream os;
  os << "E2 ue=" << ue << " beam=" << target_beam << " t=" << issued_at_ms
     << " reason=" << bm::to_string(reason);
  return os.str();
}

E2Command E2Command::parse(const std::string& line) {
  const auto tokens = split(trim(line), ' ');
  if (tokens.empty() || tokens[0] != "E2") throw FormatError("not an E2 command");
  E2Command cmd;
  cmd.ue = static_cast<int>(parse_int(token_value(tokens, "ue")));
  cmd.target_beam = static_cast<int>(parse_int(token_value(tokens, "beam")));
  cmd.issued_at_ms = parse_int(token_value(tokens, "t"));
  cmd.reason = bm::reason_from_string(token_value(tokens, "reason"));
  return cmd;
}

A1PolicyMessage nonrt_train(const rem::Rem& rem, const TrainingRequest& request) {
  request.params.validate();
  const mdp::Policy policy = mdp::policy_iteration(rem, request.params, request.options);
  A1PolicyMessage msg;
  msg.artifact = policy.to_string();
  msg.beta = request.params.beta;
  msg.gamma = request.options.gamma;
  msg.rem_checksum = policy.meta().rem_checksum;
  msg.issued_at_ms = request.issued_at_ms;
  return msg;
}

A1PolicyMessage nonrt_train(const std::string& rem_path, const TrainingRequest& request) {
  return nonrt_train(rem::read_rem_file(rem_path), request);
}

A1PolicyMessage nonrt_train(std::span<const rem::LocatedReport> reports, const rem::Grid& grid,
                            int n_beams, const TrainingRequest& request) {
  if (reports.empty()) throw std::invalid_argument("empty report stream");
  rem::Rem rem(grid, n_beams);
  for (const auto& r : reports) rem.ingest(r);
  return nonrt_train(rem, request);
}

void BmXapp::deploy(const A1PolicyMessage& msg) {
  if (msg.artifact == deployed_artifact_) return;
  auto policy = std::make_shared<const mdp::Policy>(mdp::Policy::from_string(msg.artifact));
  if (policy->meta().rem_checksum != msg.rem_checksum)
    throw IntegrityError("A1 message checksum does not match its policy artifact");
  if (policy->meta().beta != msg.beta || policy->meta().gamma != msg.gamma)
    throw IntegrityError("A1 message metadata does not match its policy artifact");
  policy_ = std::move(policy);
  deployed_artifact_ = msg.artifact;
}

void BmXapp::deploy(const A1PolicyMessage& msg, const rem::Rem& current) {
  if (current.checksum() != msg.rem_checksum)
    throw IntegrityError("policy was trained on a different REM (checksum " + msg.rem_checksum +
                         ", REM " + current.checksum() + ")");
  deploy(msg);
}

std::vector<XappDecision> BmXapp::decide(std::span<const UeReport> reports) {
  const auto policy = policy_;  // one snapshot per burst
  std::vector<XappDecision> out;
  out.reserve(reports.size());
  for (const auto& r : reports) {
    const bm::Decision baseline = baseline_.step(r.measurement, r.serving_beam);
    bm::Decision d;
    if (bm::detect_rlf(r.measurement, r.serving_beam, delta_th_)) {
      d = bm::rlf_fallback(r.measurement, r.serving_beam);
    } else if (auto p = policy ? bm::policy_decide(*policy, r.position, r.speed, r.direction,
                                                   r.serving_beam)
                               : std::nullopt) {
      d = *p;
    } else {
      d = baseline;
    }
    out.push_back({r.ue, r.serving_beam, d});
  }
  return out;
}

std::vector<E2Command> BmXapp::step(std::span<const UeReport> reports, std::int64_t now_ms) {
  std::vector<E2Command> cmds;
  for (const auto& d : decide(reports))
    if (d.decision.is_switch())
      cmds.push_back({d.ue, *d.decision.target, now_ms, d.decision.reason});
  return cmds;
}

}  // namespace gobrem::ric
