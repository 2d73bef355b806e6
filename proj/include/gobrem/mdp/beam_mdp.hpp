#pragma once

// Beam-selection MDP derived from a REM: states are (tile, motion, source
// beam), actions are target beams.

#include "gobrem/mdp/solver.hpp"
#include "gobrem/rem.hpp"

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gobrem::mdp {

struct State {
  rem::TileIndex tile;
  double speed = 0.0;  // quantized m/s
  int direction = 0;   // quantized degrees
  int source_beam = 0;

  rem::Motion motion() const { return {speed, direction}; }
  auto operator<=>(const State&) const = default;
};

inline constexpr double kRlfPenalty = -1000.0;
inline constexpr double kSwitchPenalty = -1.0;
inline constexpr double kNotBestPenalty = -1000.0;

struct RewardParams {
  double beta = 1.0;      // 1: minimize reselections, 0: maximize RSRP
  double delta_th = 8.0;  // dB, radio link failure margin

  void validate() const;
};

/// Known tiles x observed motions x beams, in State order. Throws
/// std::invalid_argument when the REM has no known tile.
std::vector<State> build_state_space(const rem::Rem& rem);

/// beta * f_BR + (1 - beta) * f_RSRP against the REM means at s.tile.
double reward(const State& s, int action, const rem::Rem& rem, const RewardParams& params);

/// One successor; `next` is empty for the absorbing off-map state.
struct Successor {
  std::optional<State> next;
  double probability = 0.0;
};

/// Next source beam is `action`; the next motion follows the mobility map and
/// the UE crosses into the neighbouring tile along its direction with
/// probability min(1, v * T_B / g). Mass leaving the known tiles goes to the
/// absorbing state.
std::vector<Successor> transition(const State& s, int action, const rem::Rem& rem,
                                  double ssb_period_ms);

/// Tile step for a quantized direction; 0 deg moves toward +y, 90 deg toward +x.
rem::TileIndex direction_step(int direction_deg);

struct PolicyMeta {
  double beta = 1.0;
  double gamma = 0.9;
  std::string rem_checksum;
  int n_beams = 0;
  double tile_size = 2.0;
  int nx = 0;
  int ny = 0;
};

/// Deterministic state -> beam mapping with training metadata.
class Policy {
 public:
  Policy() = default;
  explicit Policy(PolicyMeta meta) : meta_(std::move(meta)) {}

  const PolicyMeta& meta() const { return meta_; }
  rem::Grid grid() const;
  const std::map<State, int>& actions() const { return actions_; }
  std::size_t size() const { return actions_.size(); }

  void set(const State& s, int action);
  std::optional<int> action(const State& s) const;

  void write(std::ostream& out) const;
  std::string to_string() const;
  static Policy read(std::istream& in);
  static Policy from_string(const std::string& text);

  bool operator==(const Policy&) const;

 private:
  PolicyMeta meta_;
  std::map<State, int> actions_;
};

/// The REM-derived MDP in solver form. The absorbing state is the last index.
class BeamMdp {
 public:
  BeamMdp(const rem::Rem& rem, RewardParams params, double ssb_period_ms);

  const std::vector<State>& states() const { return states_; }
  std::optional<Eigen::Index> index_of(const State& s) const;
  Eigen::Index terminal() const { return static_cast<Eigen::Index>(states_.size()); }
  const FiniteMdp<double>& finite() const { return mdp_; }
  const rem::Rem& rem() const { return *rem_; }
  const RewardParams& params() const { return params_; }

  /// Initial policy for Policy Iteration: keep the source beam.
  ActionVector keep_source_policy() const;
  Policy to_policy(const ActionVector& actions, double gamma) const;
  ActionVector to_actions(const Policy& policy) const;

 private:
  const rem::Rem* rem_;
  RewardParams params_;
  std::vector<State> states_;
  std::map<State, Eigen::Index> index_;
  FiniteMdp<double> mdp_;
};

Eigen::VectorXd policy_evaluation(const BeamMdp& mdp, const Policy& policy, double gamma,
                                  double tol);
Policy policy_improvement(const BeamMdp& mdp, const Eigen::VectorXd& values, double gamma);

struct TrainingOptions {
  double gamma = 0.9;
  double tol = 1e-6;
  double ssb_period_ms = 20.0;
  int max_rounds = 1000;
};

/// Policy Iteration from the keep-source policy until the policy is stable.
Policy policy_iteration(const rem::Rem& rem, const RewardParams& params,
                        const TrainingOptions& options = {});

}  // namespace gobrem::mdp
