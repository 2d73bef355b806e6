#pragma once

// Runtime beam-management controllers.

#include "gobrem/mdp/beam_mdp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace gobrem::bm {

/// RSRP of every beam from one SSB burst.
struct MeasurementSet {
  Eigen::VectorXd rsrp_dbm;
  std::int64_t timestamp_ms = 0;
  int ue = 0;

  int beams() const { return static_cast<int>(rsrp_dbm.size()); }
  /// Strongest beam; lowest index on ties.
  int best_beam() const;
};

enum class Reason { BaselineMargin, Policy, RlfFallback };
std::string_view to_string(Reason r);
Reason reason_from_string(std::string_view text);

struct Decision {
  std::optional<int> target;  // empty: keep the serving beam
  Reason reason = Reason::Policy;

  bool is_switch() const { return target.has_value(); }
  static Decision keep(Reason r) { return {std::nullopt, r}; }
  static Decision switch_to(int beam, Reason r) { return {beam, r}; }
};

/// True iff the source beam is more than `delta_th` below the strongest beam.
bool detect_rlf(const MeasurementSet& m, int source, double delta_th);

/// Margin rule on a (delayed) measurement: switch to the strongest beam when
/// the source is more than `delta_ho` below it.
Decision baseline_decide(const MeasurementSet& m, int source, double delta_ho);

/// Policy lookup on the quantized state. Empty when the policy has no entry
/// for the state (caller must fall back).
std::optional<Decision> policy_decide(const mdp::Policy& policy, const Vec2& reported_pos,
                                      double speed, double direction_deg, int source);

/// Switch to the strongest measured beam.
Decision rlf_fallback(const MeasurementSet& m, int source);

/// Baseline controller with its one-burst measurement buffer per UE.
class BaselineController {
 public:
  explicit BaselineController(double delta_ho) : delta_ho_(delta_ho) {}

  double delta_ho() const { return delta_ho_; }
  /// Decides on the previous burst's measurement, then buffers `current`.
  /// Keeps the beam when the UE has no previous measurement.
  Decision step(const MeasurementSet& current, int source);
  void forget(int ue) { previous_.erase(ue); }

 private:
  double delta_ho_;
  std::map<int, MeasurementSet> previous_;
};

struct DecisionRecord {
  std::int64_t t_ms = 0;
  int ue = 0;
  Reason reason = Reason::Policy;
  int from_beam = 0;
  int to_beam = 0;
};

/// CSV rows `t_ms,ue,reason,from_beam,to_beam`.
void write_decision_log(std::ostream& out, const std::vector<DecisionRecord>& log);

}  // namespace gobrem::bm
