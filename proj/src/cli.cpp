#include "gobrem/cli.hpp"

#include "gobrem/config.hpp"
#include "gobrem/ric.hpp"
#include "gobrem/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace gobrem {
namespace {

/// Bad command-line usage detected after parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : read_config_file(path);
}

// --- build-rem ---------------------------------------------------------------

struct BuildRemArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> passes;
  std::string out;
};

int cmd_build_rem(const BuildRemArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(a.config);
  if (a.seed) cfg.scenario.traffic_seed = *a.seed;
  if (a.passes) {
    if (*a.passes < 1) throw UsageError("--passes must be at least 1");
    cfg.rem.passes = *a.passes;
  }
  cfg.validate();
  const auto channel = sim::build_channel(cfg.channel, cfg.scenario);
  const rem::Rem rem = sim::populate_rem(cfg.scenario, channel, cfg.rem, cfg.rem.passes,
                                         cfg.scenario.traffic_seed);
  const fs::path path = a.out.empty() ? fs::path(cfg.output_dir) / "rem.txt" : fs::path(a.out);
  write_text(path, rem.to_string());
  out << "rem " << path.string() << " checksum=" << rem.checksum()
      << " known_tiles=" << rem.known_tiles().size() << '\n';
  return kExitOk;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string rem;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(a.config);
  if (a.beta) cfg.solver.beta = *a.beta;
  if (a.gamma) cfg.solver.gamma = *a.gamma;
  cfg.validate();
  ric::TrainingRequest request{cfg.reward_params(), cfg.training_options(), 0};
  const auto msg = ric::nonrt_train(a.rem, request);
  const fs::path path = a.out.empty() ? fs::path(cfg.output_dir) / ("policy_beta" +
                                                                    format_double(cfg.solver.beta) + ".txt")
                                      : fs::path(a.out);
  write_text(path, msg.artifact);
  out << "policy " << path.string() << " intent=" << msg.intent()
      << " rem_checksum=" << msg.rem_checksum << '\n';
  return kExitOk;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string controller;
  double delta_ho = 5.0;
  std::string policy;
  std::string rem;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_ues;
  std::optional<double> duration;
  std::string out;
};

std::string run_label(const sim::RunResult& r) {
  if (r.controller == "baseline") return "baseline/" + format_double(r.delta_ho) + "dB";
  if (r.beta == 1.0) return "BR-MIN";
  if (r.beta == 0.0) return "RSRP-MAX";
  return "policy/beta=" + format_double(r.beta);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  RunConfig cfg = load_config(a.config);
  if (a.seed) cfg.scenario.traffic_seed = *a.seed;
  if (a.n_ues) cfg.scenario.n_ues = *a.n_ues;
  if (a.duration) cfg.scenario.duration_s = *a.duration;
  cfg.validate();

  sim::ControllerSpec spec;
  if (a.controller == "baseline") {
    if (!a.policy.empty()) throw UsageError("--policy is only valid with --controller policy");
    if (!(a.delta_ho >= 0)) throw UsageError("--delta-ho must be non-negative");
    spec = sim::BaselineSpec{a.delta_ho};
  } else {
    if (a.policy.empty()) throw UsageError("--controller policy requires --policy");
    const mdp::Policy policy = mdp::Policy::from_string(read_text(a.policy));
    ric::A1PolicyMessage msg;
    msg.artifact = policy.to_string();
    msg.beta = policy.meta().beta;
    msg.gamma = policy.meta().gamma;
    msg.rem_checksum = policy.meta().rem_checksum;
    if (!a.rem.empty()) {
      // Integrity check only: the xApp refuses a policy trained on another REM.
      ric::BmXapp probe;
      probe.deploy(msg, rem::read_rem_file(a.rem));
    }
    spec = sim::PolicySpec{msg, cfg.fallback_delta_ho};
  }

  const auto channel = sim::build_channel(cfg.channel, cfg.scenario);
  const sim::RunResult result = sim::run(cfg.scenario, spec, channel);
  const std::string comment =
      sim::csv_comment(cfg.channel.seed, cfg.scenario.traffic_seed, cfg.checksum());
  const fs::path dir = a.out.empty() ? fs::path(cfg.output_dir) : fs::path(a.out);
  fs::create_directories(dir);
  const std::span<const sim::RunResult> runs(&result, 1);
  {
    std::ostringstream os;
    sim::write_kpi_csv(os, comment, runs);
    write_text(dir / "kpi.csv", os.str());
  }
  {
    std::ostringstream os;
    sim::write_rsrp_samples_csv(os, comment, runs);
    write_text(dir / "rsrp_samples.csv", os.str());
  }
  {
    std::ostringstream os;
    sim::write_trace_csv(os, comment, result);
    write_text(dir / "trace.csv", os.str());
  }
  {
    std::ostringstream os;
    os << comment << '\n';
    bm::write_decision_log(os, result.decisions);
    write_text(dir / "decisions.csv", os.str());
  }
  out << run_label(result) << " reselections_per_user_s="
      << format_double(result.kpi.reselections_per_user_s())
      << " rlf_per_user_s=" << format_double(result.kpi.rlf_per_user_s()) << '\n';
  return kExitOk;
}

// --- report ------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> in;
  double percentile = 0.10;
  std::string out;
  std::optional<int> smooth_ue;
  int window = 15;
};

/// Data rows of a CSV output, skipping the comment and header lines.
std::vector<std::vector<std::string>> csv_rows(const fs::path& path, std::size_t columns) {
  const std::string text = read_text(path);
  std::vector<std::vector<std::string>> rows;
  bool header = true;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> row;
    for (auto f : split(line, ',')) row.emplace_back(f);
    if (row.size() != columns) throw FormatError("malformed row in '" + path.string() + "'");
    rows.push_back(std::move(row));
  }
  return rows;
}

struct ReportRow {
  std::string label;
  double reselections = 0.0;
  double rlf = 0.0;
  double edge_rsrp = 0.0;
  bool br_min = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (!(a.percentile > 0.0 && a.percentile <= 1.0))
    throw UsageError("--percentile must lie in (0, 1]");
  std::vector<ReportRow> rows;
  for (const auto& d : a.in) {
    const fs::path dir(d);
    if (!fs::is_directory(dir)) throw std::runtime_error("'" + d + "' is not a directory");
    if (!fs::exists(dir / "kpi.csv"))
      throw std::runtime_error("no kpi.csv in '" + d + "'");
    const auto kpi = csv_rows(dir / "kpi.csv", 5);
    if (kpi.empty()) throw std::runtime_error("empty kpi.csv in '" + d + "'");
    std::vector<double> samples;
    for (const auto& r : csv_rows(dir / "rsrp_samples.csv", 2)) samples.push_back(parse_double(r[1]));
    if (samples.empty()) throw std::runtime_error("no RSRP samples in '" + d + "'");
    for (const auto& k : kpi) {
      sim::RunResult tag;
      tag.controller = k[0];
      if (k[0] == "baseline") tag.delta_ho = parse_double(k[1]);
      else tag.beta = parse_double(k[2]);
      ReportRow row;
      row.label = run_label(tag);
      row.br_min = tag.controller == "policy" && tag.beta == 1.0;
      row.reselections = parse_double(k[3]);
      row.rlf = parse_double(k[4]);
      row.edge_rsrp = sim::percentile(samples, a.percentile);
      rows.push_back(row);
    }
    if (a.smooth_ue) {
      std::vector<double> trace;
      std::vector<std::string> times;
      for (const auto& r : csv_rows(dir / "trace.csv", 4))
        if (parse_int(r[1]) == *a.smooth_ue) {
          times.push_back(r[0]);
          trace.push_back(parse_double(r[3]));
        }
      if (trace.empty()) throw std::runtime_error("UE " + std::to_string(*a.smooth_ue) +
                                                  " has no trace in '" + d + "'");
      const auto smooth = sim::smooth_trace(trace, a.window);
      std::ostringstream os;
      os << "t_ms,rsrp_dbm,smoothed_dbm\n";
      for (std::size_t i = 0; i < trace.size(); ++i)
        os << times[i] << ',' << format_double(trace[i]) << ',' << format_double(smooth[i]) << '\n';
      write_text(dir / ("trace_ue" + std::to_string(*a.smooth_ue) + "_smoothed.csv"), os.str());
    }
  }

  const auto ref = std::find_if(rows.begin(), rows.end(), [](const ReportRow& r) { return r.br_min; });
  auto ratio = [](double num, double den) {
    return den > 0 ? format_double(num / den) : std::string("NA");
  };
  auto ratio_text = [](double num, double den) {
    if (!(den > 0)) return std::string("NA");
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << num / den;
    return os.str();
  };
  const std::string pct = "p" + format_double(a.percentile * 100) + "_rsrp_dbm";

  std::ostringstream csv;
  csv << "run,reselections_per_user_s,rlf_per_user_s," << pct;
  if (ref != rows.end()) csv << ",reselection_ratio_vs_br_min,rlf_ratio_vs_br_min";
  csv << '\n';
  out << std::left << std::setw(18) << "run" << std::right << std::setw(14) << "resel/user/s"
      << std::setw(14) << "rlf/user/s" << std::setw(14) << pct.substr(0, pct.size() - 9) + " dBm";
  if (ref != rows.end()) out << std::setw(14) << "resel ratio" << std::setw(14) << "rlf ratio";
  out << '\n';
  for (const auto& r : rows) {
    csv << r.label << ',' << format_double(r.reselections) << ',' << format_double(r.rlf) << ','
        << format_double(r.edge_rsrp);
    out << std::left << std::setw(18) << r.label << std::right << std::fixed << std::setprecision(4)
        << std::setw(14) << r.reselections << std::setw(14) << r.rlf << std::setprecision(2)
        << std::setw(14) << r.edge_rsrp;
    if (ref != rows.end()) {
      csv << ',' << ratio(r.reselections, ref->reselections) << ',' << ratio(r.rlf, ref->rlf);
      out << std::setw(14) << ratio_text(r.reselections, ref->reselections) << std::setw(14)
          << ratio_text(r.rlf, ref->rlf);
    }
    csv << '\n';
    out << std::defaultfloat << '\n';
  }
  const fs::path path = a.out.empty() ? fs::path(a.in.front()) / "summary.csv" : fs::path(a.out);
  write_text(path, csv.str());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid-of-Beams beam management simulator", "bmsim"};
  app.set_version_flag("--version", GOBREM_VERSION);
  app.require_subcommand(1);

  BuildRemArgs rem_args;
  auto* build_rem = app.add_subcommand("build-rem", "Populate a REM by driving probe UEs");
  build_rem->add_option("--config", rem_args.config, "Configuration file");
  build_rem->add_option("--seed", rem_args.seed, "Traffic seed (probe fading)");
  build_rem->add_option("--passes", rem_args.passes, "Probe passes per direction");
  build_rem->add_option("--out", rem_args.out, "REM artifact path");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a policy on a REM with Policy Iteration");
  train->add_option("--config", train_args.config, "Configuration file");
  train->add_option("--rem", train_args.rem, "REM artifact")->required();
  train->add_option("--beta", train_args.beta, "1: BR-MIN, 0: RSRP-MAX");
  train->add_option("--gamma", train_args.gamma, "Discount factor");
  train->add_option("--out", train_args.out, "Policy artifact path");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run the road scenario with one controller");
  simulate->add_option("--config", sim_args.config, "Configuration file");
  simulate->add_option("--controller", sim_args.controller, "baseline or policy")
      ->required()
      ->check(CLI::IsMember({"baseline", "policy"}));
  simulate->add_option("--delta-ho", sim_args.delta_ho, "Baseline switching margin, dB");
  simulate->add_option("--policy", sim_args.policy, "Policy artifact");
  simulate->add_option("--rem", sim_args.rem, "REM the policy must have been trained on");
  simulate->add_option("--seed", sim_args.seed, "Traffic seed");
  simulate->add_option("--ues", sim_args.n_ues, "Number of UEs");
  simulate->add_option("--duration", sim_args.duration, "Simulated time, s");
  simulate->add_option("--out", sim_args.out, "Output directory");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Summarize simulation outputs");
  report->add_option("--in", report_args.in, "Simulation output directory (repeatable)")
      ->required();
  report->add_option("--percentile", report_args.percentile, "Cell-edge RSRP percentile");
  report->add_option("--out", report_args.out, "Summary CSV path");
  report->add_option("--smooth-ue", report_args.smooth_ue, "Write a smoothed trace for this UE");
  report->add_option("--window", report_args.window, "Moving-average window (odd)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build_rem) return cmd_build_rem(rem_args, out);
    if (*train) return cmd_train(train_args, out);
    if (*simulate) return cmd_simulate(sim_args, out);
    if (*report) return cmd_report(report_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace gobrem
