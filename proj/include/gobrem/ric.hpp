#pragma once

// In-process model of the RIC split: Non-RT training produces A1 policy
// messages, the Near-RT BM-xApp enforces them and emits E2 commands.

#include "gobrem/bm.hpp"
#include "gobrem/mdp/beam_mdp.hpp"
#include "gobrem/rem.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gobrem::ric {

/// Policy transfer record (A1).
struct A1PolicyMessage {
  std::string artifact;  // POLv1 text
  double beta = 0.0;
  double gamma = 0.0;
  std::string rem_checksum;
  std::int64_t issued_at_ms = 0;

  /// Line-oriented form: one `A1 ...` header line, then the artifact.
  std::string serialize() const;
  static A1PolicyMessage parse(const std::string& text);
  /// "BR-MIN" for beta 1, "RSRP-MAX" for beta 0, "MIXED" otherwise.
  std::string intent() const;
};

/// Beam switch command to the gNB (E2).
struct E2Command {
  int ue = 0;
  int target_beam = 0;
  std::int64_t issued_at_ms = 0;
  bm::Reason reason = bm::Reason::Policy;

  std::string serialize() const;
  static E2Command parse(const std::string& line);
};

struct TrainingRequest {
  mdp::RewardParams params;
  mdp::TrainingOptions options;
  std::int64_t issued_at_ms = 0;
};

/// Trains on a REM and wraps the policy for transfer.
A1PolicyMessage nonrt_train(const rem::Rem& rem, const TrainingRequest& request);
/// Loads a REM artifact file, then trains.
A1PolicyMessage nonrt_train(const std::string& rem_path, const TrainingRequest& request);
/// Builds a REM on `grid` from a report stream, then trains.
A1PolicyMessage nonrt_train(std::span<const rem::LocatedReport> reports, const rem::Grid& grid,
                            int n_beams, const TrainingRequest& request);

/// Non-RT side: holds the REM and retrains on request.
class NonRtRic {
 public:
  explicit NonRtRic(rem::Rem rem) : rem_(std::move(rem)) {}
  const rem::Rem& rem() const { return rem_; }
  void ingest(const rem::LocatedReport& report) { rem_.ingest(report); }
  /// Manual model update; there is no automatic RLF-driven trigger.
  A1PolicyMessage retrain(const TrainingRequest& request) const { return nonrt_train(rem_, request); }

 private:
  rem::Rem rem_;
};

/// What the xApp sees of one UE at a burst.
struct UeReport {
  int ue = 0;
  Vec2 position;  // from the localization feed
  double speed = 0.0;
  double direction = 0.0;
  int serving_beam = 0;
  bm::MeasurementSet measurement;
};

struct XappDecision {
  int ue = 0;
  int from_beam = 0;
  bm::Decision decision;
};

class BmXapp {
 public:
  explicit BmXapp(double delta_th = 8.0, double fallback_delta_ho = 5.0)
      : delta_th_(delta_th), baseline_(fallback_delta_ho) {}

  /// Installs the policy carried by `msg`. Throws IntegrityError when the
  /// artifact header disagrees with the message.
  void deploy(const A1PolicyMessage& msg);
  /// As above, and additionally rejects a policy not trained on `current`.
  void deploy(const A1PolicyMessage& msg, const rem::Rem& current);

  bool deployed() const { return policy_ != nullptr; }
  std::shared_ptr<const mdp::Policy> policy() const { return policy_; }

  /// Per UE: RLF fallback, else policy lookup, else the baseline rule.
  /// At most one decision per UE; `keep` decisions are included.
  std::vector<XappDecision> decide(std::span<const UeReport> reports);
  /// E2 commands for the switch decisions of one burst.
  std::vector<E2Command> step(std::span<const UeReport> reports, std::int64_t now_ms);

 private:
  double delta_th_;
  bm::BaselineController baseline_;
  std::shared_ptr<const mdp::Policy> policy_;
  std::string deployed_artifact_;
};

}  // namespace gobrem::ric
