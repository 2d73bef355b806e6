#pragma once

// SSB-burst-clocked road scenario: UE mobility, measurements, controllers
// and KPI collection.

#include "gobrem/bm.hpp"
#include "gobrem/channel.hpp"
#include "gobrem/rem.hpp"
#include "gobrem/ric.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gobrem::sim {

struct ChannelConfig {
  channel::ArrayConfig array;
  int n_beams = 16;
  double shadowing_sigma = 4.0;        // dB; 0 disables shadowing
  double correlation_distance = 10.0;  // m
  double shadowing_resolution = 1.0;   // m
  std::uint64_t seed = 1;
};

struct ScenarioConfig {
  double cell_width = 500.0;
  double cell_height = 500.0;
  double ssb_period_ms = 20.0;
  int n_ues = 300;
  double speed = 25.0;                 // m/s
  std::vector<int> directions{0, 180};  // 0 moves toward +y, 180 toward -y
  double delta_th = 8.0;               // dB
  double duration_s = 15.0;
  double road_x = 250.0;               // m
  double position_noise = 0.0;         // m, std of the localization error per axis
  bool fading = true;                  // Rayleigh fading on every measurement
  std::uint64_t traffic_seed = 1;

  void validate() const;
  std::int64_t bursts() const;
};

struct RemConfig {
  double tile_size = 2.0;
  int passes = 100;
  rem::Averaging averaging = rem::Averaging::Db;
};

channel::RadioChannel build_channel(const ChannelConfig& cfg, const ScenarioConfig& scenario);

struct BaselineSpec {
  double delta_ho = 5.0;
};
struct PolicySpec {
  ric::A1PolicyMessage message;
  double fallback_delta_ho = 5.0;
};
using ControllerSpec = std::variant<BaselineSpec, PolicySpec>;

struct UeKpi {
  int ue = 0;
  std::int64_t reselections = 0;
  std::int64_t rlfs = 0;
  std::int64_t bursts = 0;
  double active_s = 0.0;
};

struct KpiReport {
  std::vector<UeKpi> per_ue;
  std::vector<double> rsrp_samples;  // serving-beam RSRP per UE per burst, dBm

  std::int64_t reselections() const;
  std::int64_t rlfs() const;
  double active_seconds() const;
  /// Events per user per second: total events over total active UE time.
  double reselections_per_user_s() const;
  double rlf_per_user_s() const;
};

struct TraceRow {
  std::int64_t t_ms = 0;
  int ue = 0;
  int beam = 0;
  double rsrp_dbm = 0.0;
};

/// Full per-burst measurement, kept only on request.
struct MeasurementRecord {
  std::int64_t t_ms = 0;
  int ue = 0;
  int serving_beam = 0;
  Vec2 position;
  Eigen::VectorXd rsrp_dbm;
};

struct RunOptions {
  bool record_measurements = false;
};

struct RunResult {
  std::string controller;  // "baseline" or "policy"
  double delta_ho = 0.0;   // baseline only
  double beta = 0.0;       // policy only
  KpiReport kpi;
  std::vector<TraceRow> trace;
  std::vector<bm::DecisionRecord> decisions;
  std::vector<MeasurementRecord> measurements;
};

/// Runs the scenario for `duration_s`. Deterministic given the scenario's
/// traffic seed and the channel.
RunResult run(const ScenarioConfig& scenario, const ControllerSpec& controller,
              const channel::RadioChannel& channel, const RunOptions& options = {});

/// Drives `n_passes` probe UEs per configured direction along the whole road
/// and ingests every burst's report into a fresh REM.
rem::Rem populate_rem(const ScenarioConfig& scenario, const channel::RadioChannel& channel,
                      const RemConfig& rem_cfg, int n_passes, std::uint64_t seed);

/// Nearest-rank percentile; throws std::invalid_argument on empty input.
double percentile(std::span<const double> samples, double p);
double rsrp_cdf(const KpiReport& report, double p);

/// Centered moving average; the window shrinks at the edges.
std::vector<double> smooth_trace(std::span<const double> trace, int window);

/// Leading comment line for every CSV output.
std::string csv_comment(std::uint64_t channel_seed, std::uint64_t traffic_seed,
                        const std::string& config_checksum);

void write_kpi_csv(std::ostream& out, const std::string& comment,
                   std::span<const RunResult> runs);
void write_rsrp_samples_csv(std::ostream& out, const std::string& comment,
                            std::span<const RunResult> runs);
void write_trace_csv(std::ostream& out, const std::string& comment, const RunResult& run);

}  // namespace gobrem::sim
