#include "gobrem/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace gobrem::sim {
namespace {

constexpr std::uint32_t kFadingTag = 0xf4d3u;
constexpr std::uint32_t kNoiseTag = 0x10cau;
constexpr std::uint64_t kProbeStreamBase = 1'000'000'000ULL;

Vec2 heading(int direction_deg) {
  const double a = direction_deg * std::numbers::pi / 180.0;
  // Snap the rounding residue of sin(pi) and friends so axis-aligned roads
  // stay on their tile column.
  auto snap = [](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; };
  return {snap(std::sin(a)), snap(std::cos(a))};
}

std::mt19937_64 ue_stream(std::uint64_t seed, std::uint64_t ue, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(ue), static_cast<std::uint32_t>(ue >> 32), tag};
  return std::mt19937_64(seq);
}

Vec2 road_entry(const ScenarioConfig& sc, int direction) {
  return {sc.road_x, direction == 0 ? 0.0 : sc.cell_height};
}

struct ActiveUe {
  int id = 0;
  int direction = 0;
  Vec2 position;
  int serving = -1;
  std::mt19937_64 fading_rng;
  std::mt19937_64 noise_rng;
  std::exponential_distribution<double> fading{1.0};
  std::normal_distribution<double> noise{0.0, 1.0};
  UeKpi kpi;
};

Eigen::VectorXd draw_fading(ActiveUe& ue, int beams, bool enabled) {
  if (!enabled) return Eigen::VectorXd::Ones(beams);
  Eigen::VectorXd f(beams);
  for (int b = 0; b < beams; ++b) f(b) = ue.fading(ue.fading_rng);
  return f;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(cell_width > 0 && cell_height > 0)) throw ConfigError("cell size must be positive");
  if (!(ssb_period_ms > 0)) throw ConfigError("SSB period must be positive");
  if (n_ues <= 0) throw ConfigError("number of UEs must be positive");
  if (!(speed > 0)) throw ConfigError("UE speed must be positive");
  if (!(delta_th > 0)) throw ConfigError("RLF margin must be positive");
  if (!(duration_s > 0)) throw ConfigError("duration must be positive");
  if (!(road_x >= 0 && road_x <= cell_width)) throw ConfigError("road lies outside the cell");
  if (!(position_noise >= 0)) throw ConfigError("position noise must be non-negative");
  if (directions.empty()) throw ConfigError("at least one direction is required");
  for (int d : directions)
    if (d != 0 && d != 180)
      throw ConfigError("the road runs along y: directions must be 0 or 180 degrees");
}

std::int64_t ScenarioConfig::bursts() const {
  return static_cast<std::int64_t>(std::llround(duration_s * 1000.0 / ssb_period_ms));
}

channel::RadioChannel build_channel(const ChannelConfig& cfg, const ScenarioConfig& scenario) {
  cfg.array.validate(cfg.n_beams);
  auto codebook = channel::build_codebook(cfg.array, cfg.n_beams);
  const Vec2 area(scenario.cell_width, scenario.cell_height);
  if (cfg.shadowing_sigma < 0) throw ConfigError("shadowing sigma must be non-negative");
  auto field = cfg.shadowing_sigma == 0
                   ? channel::ShadowingField::zeros(area, cfg.shadowing_resolution, cfg.n_beams)
                   : channel::generate_shadowing(cfg.seed, area, cfg.shadowing_resolution,
                                                 cfg.correlation_distance, cfg.shadowing_sigma,
                                                 cfg.n_beams);
  return channel::RadioChannel(cfg.array, std::move(codebook), std::move(field));
}

// --- KPIs ------------------------------------------------------------------

std::int64_t KpiReport::reselections() const {
  std::int64_t n = 0;
  for (const auto& u : per_ue) n += u.reselections;
  return n;
}

std::int64_t KpiReport::rlfs() const {
  std::int64_t n = 0;
  for (const auto& u : per_ue) n += u.rlfs;
  return n;
}

double KpiReport::active_seconds() const {
  double s = 0.0;
  for (const auto& u : per_ue) s += u.active_s;
  return s;
}

double KpiReport::reselections_per_user_s() const {
  const double t = active_seconds();
  return t > 0 ? static_cast<double>(reselections()) / t : 0.0;
}

double KpiReport::rlf_per_user_s() const {
  const double t = active_seconds();
  return t > 0 ? static_cast<double>(rlfs()) / t : 0.0;
}

// --- Scenario run ----------------------------------------------------------

RunResult run(const ScenarioConfig& sc, const ControllerSpec& controller,
              const channel::RadioChannel& channel, const RunOptions& options) {
  sc.validate();
  const Vec2 extent = channel.shadowing().extent();
  if (extent.x() < sc.cell_width - 1e-9 || extent.y() < sc.cell_height - 1e-9)
    throw ConfigError("channel does not cover the scenario cell");
  const int beams = channel.beams();
  const std::int64_t bursts = sc.bursts();
  const double step_s = sc.ssb_period_ms * 1e-3;

  RunResult result;
  std::optional<bm::BaselineController> baseline;
  std::optional<ric::BmXapp> xapp;
  if (const auto* b = std::get_if<BaselineSpec>(&controller)) {
    result.controller = "baseline";
    result.delta_ho = b->delta_ho;
    baseline.emplace(b->delta_ho);
  } else {
    const auto& p = std::get<PolicySpec>(controller);
    result.controller = "policy";
    result.beta = p.message.beta;
    xapp.emplace(sc.delta_th, p.fallback_delta_ho);
    xapp->deploy(p.message);
    if (xapp->policy()->meta().n_beams != beams)
      throw ConfigError("policy was trained for a different number of beams");
  }

  std::vector<ActiveUe> active;
  std::vector<UeKpi> finished;
  int next_ue = 0;
  std::vector<ric::UeReport> reports;
  std::vector<bm::MeasurementSet> measurements;

  auto retire = [&](ActiveUe& ue) { finished.push_back(ue.kpi); };

  for (std::int64_t k = 0; k < bursts; ++k) {
    const std::int64_t t_ms = static_cast<std::int64_t>(std::llround(k * sc.ssb_period_ms));
    // Arrivals are staggered uniformly over the run.
    while (next_ue < sc.n_ues && next_ue * bursts / sc.n_ues <= k) {
      ActiveUe ue;
      ue.id = next_ue;
      ue.direction = sc.directions[next_ue % sc.directions.size()];
      ue.position = road_entry(sc, ue.direction);
      ue.fading_rng = ue_stream(sc.traffic_seed, next_ue, kFadingTag);
      ue.noise_rng = ue_stream(sc.traffic_seed, next_ue, kNoiseTag);
      ue.kpi.ue = next_ue;
      active.push_back(std::move(ue));
      ++next_ue;
    }

    reports.clear();
    measurements.clear();
    for (auto& ue : active) {
      bm::MeasurementSet m;
      m.rsrp_dbm = channel.measure(ue.position, draw_fading(ue, beams, sc.fading));
      m.timestamp_ms = t_ms;
      m.ue = ue.id;
      if (ue.serving < 0) ue.serving = m.best_beam();  // initial access

      ++ue.kpi.bursts;
      ue.kpi.active_s += step_s;
      if (bm::detect_rlf(m, ue.serving, sc.delta_th)) ++ue.kpi.rlfs;
      result.kpi.rsrp_samples.push_back(m.rsrp_dbm(ue.serving));
      result.trace.push_back({t_ms, ue.id, ue.serving, m.rsrp_dbm(ue.serving)});
      if (options.record_measurements)
        result.measurements.push_back({t_ms, ue.id, ue.serving, ue.position, m.rsrp_dbm});

      if (xapp) {
        Vec2 reported = ue.position;
        if (sc.position_noise > 0) {
          reported += sc.position_noise * Vec2(ue.noise(ue.noise_rng), ue.noise(ue.noise_rng));
          reported = reported.cwiseMax(Vec2::Zero()).cwiseMin(Vec2(sc.cell_width, sc.cell_height));
        }
        reports.push_back({ue.id, reported, sc.speed, static_cast<double>(ue.direction),
                           ue.serving, m});
      }
      measurements.push_back(std::move(m));
    }

    std::vector<bm::Decision> decisions;
    decisions.reserve(active.size());
    if (xapp) {
      for (const auto& d : xapp->decide(reports)) decisions.push_back(d.decision);
    } else {
      for (std::size_t i = 0; i < active.size(); ++i)
        decisions.push_back(baseline->step(measurements[i], active[i].serving));
    }

    for (std::size_t i = 0; i < active.size(); ++i) {
      auto& ue = active[i];
      const auto& d = decisions[i];
      if (d.is_switch() && *d.target != ue.serving) {
        result.decisions.push_back({t_ms, ue.id, d.reason, ue.serving, *d.target});
        ue.serving = *d.target;
        ++ue.kpi.reselections;
      }
      ue.position += sc.speed * step_s * heading(ue.direction);
    }

    // Departures: UEs that drove out of the cell.
    for (auto it = active.begin(); it != active.end();) {
      const Vec2& p = it->position;
      if (p.x() < 0 || p.y() < 0 || p.x() > sc.cell_width || p.y() > sc.cell_height) {
        if (baseline) baseline->forget(it->id);
        retire(*it);
        it = active.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& ue : active) retire(ue);
  std::sort(finished.begin(), finished.end(),
            [](const UeKpi& a, const UeKpi& b) { return a.ue < b.ue; });
  result.kpi.per_ue = std::move(finished);
  return result;
}

rem::Rem populate_rem(const ScenarioConfig& sc, const channel::RadioChannel& channel,
                      const RemConfig& rem_cfg, int n_passes, std::uint64_t seed) {
  sc.validate();
  if (n_passes < 1) throw ConfigError("REM population needs at least one pass");
  rem::Rem rem(rem::Grid::covering(sc.cell_width, sc.cell_height, rem_cfg.tile_size),
               channel.beams(), rem_cfg.averaging);
  const double step = sc.speed * sc.ssb_period_ms * 1e-3;
  const rem::Motion motion{rem::quantize_speed(sc.speed), 0};
  std::uint64_t probe = 0;
  for (int pass = 0; pass < n_passes; ++pass) {
    for (int direction : sc.directions) {
      auto rng = ue_stream(seed, kProbeStreamBase + probe++, kFadingTag);
      std::exponential_distribution<double> fading(1.0);
      const rem::Motion m{motion.speed, rem::quantize_direction(direction)};
      Vec2 pos = road_entry(sc, direction);
      std::optional<rem::LocatedReport::Fix> previous;
      while (rem.grid().contains(pos)) {
        Eigen::VectorXd f = Eigen::VectorXd::Ones(channel.beams());
        if (sc.fading)
          for (int b = 0; b < channel.beams(); ++b) f(b) = fading(rng);
        rem::LocatedReport report{pos, sc.speed, static_cast<double>(direction),
                                  channel.measure(pos, f), previous};
        rem.ingest(report);
        previous = rem::LocatedReport::Fix{pos, m};
        pos += step * heading(direction);
      }
    }
  }
  return rem;
}

// --- Statistics and output ---------------------------------------------------

double percentile(std::span<const double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile must lie in [0, 1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n)));
  return sorted[std::min(rank, sorted.size()) - 1];
}

double rsrp_cdf(const KpiReport& report, double p) { return percentile(report.rsrp_samples, p); }

std::vector<double> smooth_trace(std::span<const double> trace, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("window must be odd and >= 1");
  const auto n = static_cast<std::ptrdiff_t>(trace.size());
  const std::ptrdiff_t half = window / 2;
  std::vector<double> out(trace.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double sum = 0.0;
    for (auto j = lo; j <= hi; ++j) sum += trace[j];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::string csv_comment(std::uint64_t channel_seed, std::uint64_t traffic_seed,
                        const std::string& config_checksum) {
  return "# gobrem " GOBREM_VERSION " channel_seed=" + std::to_string(channel_seed) +
         " traffic_seed=" + std::to_string(traffic_seed) + " config=" + config_checksum;
}

void write_kpi_csv(std::ostream& out, const std::string& comment,
                   std::span<const RunResult> runs) {
  out << comment << "\ncontroller,delta_ho,beta,reselections_per_user_s,rlf_per_user_s\n";
  for (const auto& r : runs) {
    const bool base = r.controller == "baseline";
    out << r.controller << ',' << (base ? format_double(r.delta_ho) : "NA") << ','
        << (base ? "NA" : format_double(r.beta)) << ','
        << format_double(r.kpi.reselections_per_user_s()) << ','
        << format_double(r.kpi.rlf_per_user_s()) << '\n';
  }
}

void write_rsrp_samples_csv(std::ostream& out, const std::string& comment,
                            std::span<const RunResult> runs) {
  out << comment << "\ncontroller,dbm\n";
  for (const auto& r : runs)
    for (double s : r.kpi.rsrp_samples) out << r.controller << ',' << format_double(s) << '\n';
}

void write_trace_csv(std::ostream& out, const std::string& comment, const RunResult& run) {
  out << comment << "\nt_ms,ue,beam,rsrp_dbm\n";
  for (const auto& t : run.trace)
    out << t.t_ms << ',' << t.ue << ',' << t.beam << ',' << format_double(t.rsrp_dbm) << '\n';
}

}  // namespace gobrem::sim
