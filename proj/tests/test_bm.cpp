#include "gobrem/bm.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace gobrem;
using namespace gobrem::bm;

namespace {

MeasurementSet meas(std::vector<double> v, int ue = 0, std::int64_t t = 0) {
  MeasurementSet m;
  m.rsrp_dbm = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  m.ue = ue;
  m.timestamp_ms = t;
  return m;
}

}  // namespace

TEST_CASE("RLF detection uses a strict margin") {
  CHECK(detect_rlf(meas({-90.0, -81.0}), 0, 8.0));
  CHECK_FALSE(detect_rlf(meas({-90.0, -83.0}), 0, 8.0));
  CHECK_FALSE(detect_rlf(meas({-90.0, -82.0}), 0, 8.0));
  CHECK_THROWS_AS(detect_rlf(meas({-90.0, -82.0}), 2, 8.0), std::out_of_range);
}

TEST_CASE("RLF detection is monotone in the source RSRP") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-110.0, -70.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = u(rng);
    const bool before = detect_rlf(meas(v), 3, 8.0);
    v[3] += 2.0;
    if (!before) CHECK_FALSE(detect_rlf(meas(v), 3, 8.0));
  }
}

TEST_CASE("baseline margin rule") {
  const auto sw = baseline_decide(meas({-85.0, -79.0}), 0, 5.0);
  CHECK(sw.is_switch());
  CHECK(*sw.target == 1);
  CHECK(sw.reason == Reason::BaselineMargin);
  CHECK_FALSE(baseline_decide(meas({-85.0, -81.0}), 0, 5.0).is_switch());
  CHECK_FALSE(baseline_decide(meas({-85.0, -80.0}), 0, 5.0).is_switch());
}

TEST_CASE("baseline never switches without the margin") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-110.0, -70.0);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> v(16);
    for (auto& x : v) x = u(rng);
    const auto m = meas(v);
    const int src = i % 16;
    const auto d = baseline_decide(m, src, 3.0);
    const bool margin = v[src] < m.rsrp_dbm.maxCoeff() - 3.0;
    CHECK(d.is_switch() == margin);
    if (d.is_switch()) CHECK(*d.target == m.best_beam());
  }
}

TEST_CASE("baseline controller acts on the previous burst") {
  BaselineController ctl(3.0);
  // First burst: nothing buffered yet.
  CHECK_FALSE(ctl.step(meas({-90.0, -80.0}, 7, 0), 0).is_switch());
  // Second burst decides on the first burst's measurement.
  const auto d = ctl.step(meas({-80.0, -90.0}, 7, 20), 0);
  REQUIRE(d.is_switch());
  CHECK(*d.target == 1);
  // Another UE has its own buffer.
  CHECK_FALSE(ctl.step(meas({-90.0, -80.0}, 8, 20), 0).is_switch());
  ctl.forget(7);
  CHECK_FALSE(ctl.step(meas({-90.0, -80.0}, 7, 40), 0).is_switch());
}

TEST_CASE("RLF fallback targets the strongest beam") {
  const auto d = rlf_fallback(meas({-90.0, -95.0, -91.0, -80.0, -99.0, -70.0}), 0);
  REQUIRE(d.is_switch());
  CHECK(*d.target == 5);
  CHECK(d.reason == Reason::RlfFallback);
  CHECK_FALSE(rlf_fallback(meas({-70.0, -90.0}), 0).is_switch());
  CHECK(*rlf_fallback(meas({-90.0, -70.0, -70.0}), 0).target == 1);
}

TEST_CASE("policy lookup") {
  const auto rem = oracle::road_rem({{-80.0, -85.0, -100.0}, {-80.0, -85.0, -100.0}});
  mdp::PolicyMeta meta;
  meta.n_beams = 3;
  meta.tile_size = 2.0;
  meta.nx = 1;
  meta.ny = 2;
  mdp::Policy pol(meta);
  pol.set({{0, 0}, 25.0, 0, 0}, 0);
  pol.set({{0, 0}, 25.0, 0, 1}, 0);

  const auto keep = policy_decide(pol, {1.0, 1.2}, 24.0, 2.0, 0);
  REQUIRE(keep.has_value());
  CHECK_FALSE(keep->is_switch());
  CHECK(keep->reason == Reason::Policy);

  const auto sw = policy_decide(pol, {1.0, 1.2}, 25.0, 0.0, 1);
  REQUIRE(sw.has_value());
  CHECK(*sw->target == 0);

  CHECK_FALSE(policy_decide(pol, {1.0, 3.0}, 25.0, 0.0, 0).has_value());   // tile absent
  CHECK_FALSE(policy_decide(pol, {1.0, 1.0}, 25.0, 180.0, 0).has_value()); // motion absent
  CHECK_FALSE(policy_decide(pol, {9.0, 1.0}, 25.0, 0.0, 0).has_value());   // off the map
  CHECK(*policy_decide(pol, {1.0, 1.2}, 25.0, 0.0, 1)->target ==
        *policy_decide(pol, {1.0, 1.2}, 25.0, 0.0, 1)->target);
}

TEST_CASE("reason names and decision log") {
  for (auto r : {Reason::BaselineMargin, Reason::Policy, Reason::RlfFallback})
    CHECK(reason_from_string(to_string(r)) == r);
  CHECK_THROWS_AS(reason_from_string("bogus"), FormatError);
  std::ostringstream os;
  write_decision_log(os, {{20, 3, Reason::RlfFallback, 1, 5}});
  CHECK(os.str() == "t_ms,ue,reason,from_beam,to_beam\n20,3,rlf-fallback,1,5\n");
}
