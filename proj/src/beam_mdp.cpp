#include "gobrem/mdp/beam_mdp.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace gobrem::mdp {

void RewardParams::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(delta_th >= 0.0)) throw ConfigError("RLF margin must be non-negative");
}

std::vector<State> build_state_space(const rem::Rem& rem) {
  const auto tiles = rem.known_tiles();
  if (tiles.empty()) throw std::invalid_argument("REM has no tile with RSRP for every beam");
  const auto motions = rem.mobility().observed_motions();
  if (motions.empty()) throw std::invalid_argument("REM has no mobility observations");
  std::vector<State> states;
  states.reserve(tiles.size() * motions.size() * rem.beams());
  for (const auto& t : tiles)
    for (const auto& m : motions)
      for (int b = 0; b < rem.beams(); ++b) states.push_back({t, m.speed, m.direction, b});
  return states;
}

double reward(const State& s, int action, const rem::Rem& rem, const RewardParams& params) {
  if (action < 0 || action >= rem.beams()) throw std::out_of_range("action outside the codebook");
  const Eigen::VectorXd p = rem.rsrp_vector(s.tile);
  Eigen::Index best_beam = 0;
  const double best = p.maxCoeff(&best_beam);  // first maximum
  double f_br = 0.0;
  if (p(action) < best - params.delta_th)
    f_br = kRlfPenalty;
  else if (action != s.source_beam)
    f_br = kSwitchPenalty;
  const double f_rsrp = action == best_beam ? 0.0 : kNotBestPenalty;
  return params.beta * f_br + (1.0 - params.beta) * f_rsrp;
}

rem::TileIndex direction_step(int direction_deg) {
  switch (((direction_deg % 360) + 360) % 360) {
    case 0: return {0, 1};
    case 45: return {1, 1};
    case 90: return {1, 0};
    case 135: return {1, -1};
    case 180: return {0, -1};
    case 225: return {-1, -1};
    case 270: return {-1, 0};
    case 315: return {-1, 1};
    default: throw std::invalid_argument("direction is not a multiple of 45 degrees");
  }
}

std::vector<Successor> transition(const State& s, int action, const rem::Rem& rem,
                                  double ssb_period_ms) {
  if (action < 0 || action >= rem.beams()) throw std::out_of_range("action outside the codebook");
  std::vector<Successor> out;
  double off_map = 0.0;
  for (const auto& [m, q] : rem.mobility().distribution(s.tile, s.motion())) {
    const double cross =
        std::clamp(m.speed * ssb_period_ms * 1e-3 / rem.grid().tile_size, 0.0, 1.0);
    if (cross < 1.0) out.push_back({State{s.tile, m.speed, m.direction, action}, q * (1.0 - cross)});
    if (cross > 0.0) {
      const auto step = direction_step(m.direction);
      const rem::TileIndex ahead{s.tile.x + step.x, s.tile.y + step.y};
      if (rem.known(ahead))
        out.push_back({State{ahead, m.speed, m.direction, action}, q * cross});
      else
        off_map += q * cross;
    }
  }
  if (off_map > 0.0) out.push_back({std::nullopt, off_map});
  return out;
}

// --- Policy ----------------------------------------------------------------

rem::Grid Policy::grid() const {
  rem::Grid g;
  g.tile_size = meta_.tile_size;
  g.nx = meta_.nx;
  g.ny = meta_.ny;
  return g;
}

void Policy::set(const State& s, int action) {
  if (action < 0 || action >= meta_.n_beams) throw std::out_of_range("action outside the codebook");
  actions_[s] = action;
}

std::optional<int> Policy::action(const State& s) const {
  const auto it = actions_.find(s);
  if (it == actions_.end()) return std::nullopt;
  return it->second;
}

void Policy::write(std::ostream& out) const {
  out << "POLv1 beta=" << format_double(meta_.beta) << " gamma=" << format_double(meta_.gamma)
      << " rem_checksum=" << meta_.rem_checksum << " nbeams=" << meta_.n_beams
      << " g=" << format_double(meta_.tile_size) << " nx=" << meta_.nx << " ny=" << meta_.ny
      << '\n';
  for (const auto& [s, a] : actions_)
    out << s.tile.x << ',' << s.tile.y << ',' << format_double(s.speed) << ',' << s.direction
        << ',' << s.source_beam << ',' << a << '\n';
}

std::string Policy::to_string() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

Policy Policy::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty policy artifact");
  const auto tokens = split(trim(line), ' ');
  if (tokens.empty() || tokens[0] != "POLv1") throw FormatError("not a POLv1 artifact");
  PolicyMeta meta;
  bool have_beta = false, have_gamma = false, have_sum = false, have_beams = false;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) throw FormatError("bad policy header token");
    const auto key = tokens[i].substr(0, eq);
    const auto val = tokens[i].substr(eq + 1);
    if (key == "beta") meta.beta = parse_double(val), have_beta = true;
    else if (key == "gamma") meta.gamma = parse_double(val), have_gamma = true;
    else if (key == "rem_checksum") meta.rem_checksum = std::string(val), have_sum = true;
    else if (key == "nbeams") meta.n_beams = static_cast<int>(parse_int(val)), have_beams = true;
    else if (key == "g") meta.tile_size = parse_double(val);
    else if (key == "nx") meta.nx = static_cast<int>(parse_int(val));
    else if (key == "ny") meta.ny = static_cast<int>(parse_int(val));
    else throw FormatError("unknown policy header key '" + std::string(key) + "'");
  }
  if (!have_beta || !have_gamma || !have_sum || !have_beams)
    throw FormatError("policy header is missing required fields");
  Policy policy(meta);
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto f = split(text, ',');
    if (f.size() != 6) throw FormatError("bad policy row");
    const State s{{static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1]))},
                  parse_double(f[2]),
                  static_cast<int>(parse_int(f[3])),
                  static_cast<int>(parse_int(f[4]))};
    try {
      policy.set(s, static_cast<int>(parse_int(f[5])));
    } catch (const std::out_of_range& e) {
      throw FormatError(e.what());
    }
  }
  return policy;
}

Policy Policy::from_string(const std::string& text) {
  std::istringstream is(text);
  return read(is);
}

bool Policy::operator==(const Policy& other) const { return to_string() == other.to_string(); }

// --- BeamMdp ---------------------------------------------------------------

BeamMdp::BeamMdp(const rem::Rem& rem, RewardParams params, double ssb_period_ms)
    : rem_(&rem), params_(params), states_(build_state_space(rem)) {
  params_.validate();
  if (!(ssb_period_ms > 0)) throw ConfigError("SSB period must be positive");
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);

  const Eigen::Index n = terminal() + 1;
  const int n_actions = rem.beams();
  mdp_.rewards = Eigen::MatrixXd::Zero(n, n_actions);
  std::vector<std::vector<Eigen::Triplet<double>>> triplets(n_actions);
  for (Eigen::Index i = 0; i < terminal(); ++i) {
    const State& s = states_[i];
    for (int a = 0; a < n_actions; ++a) {
      mdp_.rewards(i, a) = reward(s, a, rem, params_);
      for (const auto& succ : transition(s, a, rem, ssb_period_ms)) {
        Eigen::Index j = terminal();
        if (succ.next) j = index_of(*succ.next).value_or(terminal());
        triplets[a].emplace_back(static_cast<int>(i), static_cast<int>(j), succ.probability);
      }
    }
  }
  for (int a = 0; a < n_actions; ++a) {
    triplets[a].emplace_back(static_cast<int>(terminal()), static_cast<int>(terminal()), 1.0);
    FiniteMdp<double>::Kernel k(n, n);
    k.setFromTriplets(triplets[a].begin(), triplets[a].end());  // duplicates are summed
    mdp_.transitions.push_back(std::move(k));
  }
}

std::optional<Eigen::Index> BeamMdp::index_of(const State& s) const {
  const auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ActionVector BeamMdp::keep_source_policy() const {
  ActionVector p = ActionVector::Zero(terminal() + 1);
  for (Eigen::Index i = 0; i < terminal(); ++i) p(i) = states_[i].source_beam;
  return p;
}

Policy BeamMdp::to_policy(const ActionVector& actions, double gamma) const {
  PolicyMeta meta;
  meta.beta = params_.beta;
  meta.gamma = gamma;
  meta.rem_checksum = rem_->checksum();
  meta.n_beams = rem_->beams();
  meta.tile_size = rem_->grid().tile_size;
  meta.nx = rem_->grid().nx;
  meta.ny = rem_->grid().ny;
  Policy policy(meta);
  for (Eigen::Index i = 0; i < terminal(); ++i) policy.set(states_[i], actions(i));
  return policy;
}

ActionVector BeamMdp::to_actions(const Policy& policy) const {
  ActionVector p = ActionVector::Zero(terminal() + 1);
  for (Eigen::Index i = 0; i < terminal(); ++i) {
    const auto a = policy.action(states_[i]);
    if (!a) throw std::invalid_argument("policy does not cover the MDP state space");
    p(i) = *a;
  }
  return p;
}

Eigen::VectorXd policy_evaluation(const BeamMdp& mdp, const Policy& policy, double gamma,
                                  double tol) {
  return policy_evaluation(mdp.finite(), mdp.to_actions(policy), gamma, tol);
}

Policy policy_improvement(const BeamMdp& mdp, const Eigen::VectorXd& values, double gamma) {
  return mdp.to_policy(policy_improvement(mdp.finite(), values, gamma), gamma);
}

Policy policy_iteration(const rem::Rem& rem, const RewardParams& params,
                        const TrainingOptions& options) {
  if (!(options.gamma >= 0 && options.gamma < 1)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(options.tol > 0)) throw ConfigError("tolerance must be positive");
  const BeamMdp mdp(rem, params, options.ssb_period_ms);
  const auto result = policy_iteration(mdp.finite(), options.gamma, options.tol,
                                       mdp.keep_source_policy(), options.max_rounds);
  return mdp.to_policy(result.policy, options.gamma);
}

}  // namespace gobrem::mdp
