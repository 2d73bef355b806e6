#include "gobrem/bm.hpp"

#include <ostream>

namespace gobrem::bm {

int MeasurementSet::best_beam() const {
  Eigen::Index best = 0;
  rsrp_dbm.maxCoeff(&best);
  return static_cast<int>(best);
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::BaselineMargin: return "baseline-margin";
    case Reason::Policy: return "policy";
    case Reason::RlfFallback: return "rlf-fallback";
  }
  return "unknown";
}

Reason reason_from_string(std::string_view text) {
  if (text == "baseline-margin") return Reason::BaselineMargin;
  if (text == "policy") return Reason::Policy;
  if (text == "rlf-fallback") return Reason::RlfFallback;
  throw FormatError("unknown decision reason '" + std::string(text) + "'");
}

bool detect_rlf(const MeasurementSet& m, int source, double delta_th) {
  if (source < 0 || source >= m.beams()) throw std::out_of_range("source beam out of range");
  return m.rsrp_dbm(source) < m.rsrp_dbm.maxCoeff() - delta_th;
}

Decision baseline_decide(const MeasurementSet& m, int source, double delta_ho) {
  if (source < 0 || source >= m.beams()) throw std::out_of_range("source beam out of range");
  const int best = m.best_beam();
  if (m.rsrp_dbm(source) < m.rsrp_dbm(best) - delta_ho)
    return Decision::switch_to(best, Reason::BaselineMargin);
  return Decision::keep(Reason::BaselineMargin);
}

std::optional<Decision> policy_decide(const mdp::Policy& policy, const Vec2& reported_pos,
                                      double speed, double direction_deg, int source) {
  const rem::Grid grid = policy.grid();
  if (!grid.contains(reported_pos)) return std::nullopt;
  const mdp::State s{grid.quantize(reported_pos), rem::quantize_speed(speed),
                     rem::quantize_direction(direction_deg), source};
  const auto action = policy.action(s);
  if (!action) return std::nullopt;
  if (*action == source) return Decision::keep(Reason::Policy);
  return Decision::switch_to(*action, Reason::Policy);
}

Decision rlf_fallback(const MeasurementSet& m, int source) {
  const int best = m.best_beam();
  if (best == source) return Decision::keep(Reason::RlfFallback);
  return Decision::switch_to(best, Reason::RlfFallback);
}

Decision BaselineController::step(const MeasurementSet& current, int source) {
  Decision d = Decision::keep(Reason::BaselineMargin);
  if (const auto it = previous_.find(current.ue); it != previous_.end())
    d = baseline_decide(it->second, source, delta_ho_);
  previous_.insert_or_assign(current.ue, current);
  return d;
}

void write_decision_log(std::ostream& out, const std::vector<DecisionRecord>& log) {
  out << "t_ms,ue,reason,from_beam,to_beam\n";
  for (const auto& r : log)
    out << r.t_ms << ',' << r.ue << ',' << to_string(r.reason) << ',' << r.from_beam << ','
        << r.to_beam << '\n';
}

}  // namespace gobrem::bm
