#include "gobrem/cli.hpp"
#include "gobrem/config.hpp"
#include "gobrem/rem.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gobrem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::path(GOBREM_TEST_TMP) / ("cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path quick_config(const fs::path& dir) {
  const fs::path cfg = dir / "quick.ini";
  std::ofstream(cfg) << "# desk-sized run\n"
                        "[scenario]\nn_ues = 6\nduration_s = 2\n\n"
                        "[channel]\nshadowing_sigma = 0\n\n"
                        "[rem]\npasses = 2\n";
  return cfg;
}

}  // namespace

TEST_CASE("default config holds the reference parameters") {
  const RunConfig c;
  CHECK(c.scenario.cell_width == 500.0);
  CHECK(c.scenario.ssb_period_ms == 20.0);
  CHECK(c.scenario.n_ues == 300);
  CHECK(c.scenario.speed == 25.0);
  CHECK(c.scenario.delta_th == 8.0);
  CHECK(c.channel.n_beams == 16);
  CHECK(c.channel.array.rows == 8);
  CHECK(c.channel.array.center_frequency == 26.0);
  CHECK(c.channel.correlation_distance == 10.0);
  CHECK(c.rem.tile_size == 2.0);
  CHECK(c.solver.gamma == 0.9);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config round-trips through its canonical form") {
  const RunConfig def;
  CHECK(RunConfig::parse("").to_string() == def.to_string());
  CHECK(RunConfig::parse(def.to_string()).to_string() == def.to_string());

  const auto c = RunConfig::parse(
      "[scenario]\n  speed = 20 # slower\ndirections = 180, 0\n[rem]\naveraging = linear\n");
  CHECK(c.scenario.speed == 20.0);
  CHECK(c.scenario.directions == std::vector<int>{180, 0});
  CHECK(c.rem.averaging == rem::Averaging::Linear);
  CHECK(RunConfig::parse(c.to_string()).to_string() == c.to_string());
  CHECK(c.checksum() != def.checksum());
}

TEST_CASE("config rejects unknown or invalid entries") {
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nlanes = 2\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[traffic]\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("speed = 3\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nspeed\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nspeed = fast\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\nspeed = 1\nspeed = 2\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[solver]\nbeta = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[channel]\nn_beams = 65\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[scenario]\ndirections = 90\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("[channel]\nseed = -1\n"), ConfigError);
}

TEST_CASE("build-rem writes a REM artifact") {
  const auto dir = workdir("rem");
  const auto cfg = quick_config(dir);
  const auto a = cli({"build-rem", "--config", cfg.string(), "--out", (dir / "a.txt").string()});
  REQUIRE(a.code == 0);
  const std::string text = slurp(dir / "a.txt");
  CHECK(text.rfind("REMv1 g=2 ", 0) == 0);
  const auto b = cli({"build-rem", "--config", cfg.string(), "--out", (dir / "b.txt").string()});
  CHECK(slurp(dir / "b.txt") == text);
  CHECK(a.out == b.out.substr(0, 4) + a.out.substr(4));

  const auto c = cli({"build-rem", "--config", cfg.string(), "--seed", "5", "--out",
                      (dir / "c.txt").string()});
  CHECK(c.code == 0);
  CHECK(rem::read_rem_file((dir / "c.txt").string()).checksum() !=
        rem::read_rem_file((dir / "a.txt").string()).checksum());

  CHECK(cli({"build-rem", "--config", cfg.string(), "--passes", "0"}).code == 2);
  CHECK(cli({"build-rem", "--config", (dir / "missing.ini").string()}).code == 2);
  CHECK(cli({"build-rem", "--bogus"}).code == 2);
  CHECK(cli({}).code == 2);
}

TEST_CASE("train, simulate and report") {
  const auto dir = workdir("pipeline");
  const auto cfg = quick_config(dir).string();
  const auto rem = (dir / "rem.txt").string();
  REQUIRE(cli({"build-rem", "--config", cfg, "--out", rem}).code == 0);

  const auto br = cli({"train", "--config", cfg, "--rem", rem, "--beta", "1", "--out",
                       (dir / "br.txt").string()});
  REQUIRE(br.code == 0);
  CHECK(br.out.find("intent=BR-MIN") != std::string::npos);
  const auto rs = cli({"train", "--config", cfg, "--rem", rem, "--beta", "0", "--out",
                       (dir / "rs.txt").string()});
  CHECK(rs.out.find("intent=RSRP-MAX") != std::string::npos);
  CHECK(slurp(dir / "br.txt").rfind("POLv1 beta=1 ", 0) == 0);
  REQUIRE(cli({"train", "--config", cfg, "--rem", rem, "--beta", "1", "--out",
               (dir / "br2.txt").string()}).code == 0);
  CHECK(slurp(dir / "br2.txt") == slurp(dir / "br.txt"));
  CHECK(cli({"train", "--rem", rem, "--beta", "1.5"}).code == 2);
  CHECK(cli({"train", "--rem", (dir / "nope.txt").string()}).code == 1);

  const auto b5 = (dir / "b5").string();
  REQUIRE(cli({"simulate", "--config", cfg, "--controller", "baseline", "--delta-ho", "5",
               "--out", b5}).code == 0);
  const std::string kpi = slurp(fs::path(b5) / "kpi.csv");
  CHECK(kpi.rfind("# gobrem ", 0) == 0);
  CHECK(kpi.find("\nbaseline,5,NA,") != std::string::npos);
  for (const char* f : {"rsrp_samples.csv", "trace.csv", "decisions.csv"})
    CHECK(fs::exists(fs::path(b5) / f));

  REQUIRE(cli({"simulate", "--config", cfg, "--controller", "baseline", "--delta-ho", "5",
               "--out", (dir / "b5again").string()}).code == 0);
  for (const char* f : {"kpi.csv", "rsrp_samples.csv", "trace.csv"})
    CHECK(slurp(fs::path(b5) / f) == slurp(dir / "b5again" / f));

  CHECK(cli({"simulate", "--config", cfg, "--controller", "policy"}).code == 2);
  CHECK(cli({"simulate", "--config", cfg, "--controller", "oracle"}).code == 2);

  const auto pol = (dir / "brmin").string();
  REQUIRE(cli({"simulate", "--config", cfg, "--controller", "policy", "--policy",
               (dir / "br.txt").string(), "--rem", rem, "--out", pol}).code == 0);
  CHECK(slurp(fs::path(pol) / "kpi.csv").find("\npolicy,NA,1,") != std::string::npos);

  // A policy checked against a REM it was not trained on is refused.
  REQUIRE(cli({"build-rem", "--config", cfg, "--seed", "9", "--out",
               (dir / "other.txt").string()}).code == 0);
  CHECK(cli({"simulate", "--config", cfg, "--controller", "policy", "--policy",
             (dir / "br.txt").string(), "--rem", (dir / "other.txt").string()}).code == 1);

  const auto rep = cli({"report", "--in", pol, "--in", b5, "--percentile", "0.10", "--smooth-ue",
                        "0", "--out", (dir / "summary.csv").string()});
  REQUIRE(rep.code == 0);
  CHECK(rep.out.find("BR-MIN") != std::string::npos);
  CHECK(rep.out.find("baseline/5dB") != std::string::npos);
  const std::string summary = slurp(dir / "summary.csv");
  CHECK(summary.rfind("run,reselections_per_user_s,rlf_per_user_s,p10_rsrp_dbm,"
                      "reselection_ratio_vs_br_min,rlf_ratio_vs_br_min\n", 0) == 0);
  CHECK(fs::exists(fs::path(pol) / "trace_ue0_smoothed.csv"));

  fs::create_directories(dir / "empty");
  CHECK(cli({"report", "--in", (dir / "empty").string()}).code == 1);
  CHECK(cli({"report", "--in", b5, "--percentile", "1.5"}).code == 2);
}
