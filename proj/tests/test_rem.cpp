#include "gobrem/rem.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gobrem;
using namespace gobrem::rem;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

LocatedReport report(Vec2 pos, Eigen::VectorXd rsrp, double speed = 25.0, double dir = 0.0) {
  LocatedReport r;
  r.position = pos;
  r.speed = speed;
  r.direction = dir;
  r.rsrp_dbm = std::move(rsrp);
  return r;
}

}  // namespace

TEST_CASE("quantization picks the nearest tile center") {
  const Grid g = Grid::covering(500.0, 500.0, 2.0);
  CHECK(g.nx == 250);
  CHECK(g.ny == 250);
  CHECK(quantize_location(g, {3.1, 0.9}) == TileIndex{1, 0});
  CHECK(quantize_location(g, {0.0, 0.0}) == TileIndex{0, 0});
  CHECK(quantize_location(g, {500.0, 500.0}) == TileIndex{249, 249});
  CHECK(g.center({1, 0}) == Vec2(3.0, 1.0));
}

TEST_CASE("equidistant points resolve to the lower tile index") {
  const Grid g = Grid::covering(500.0, 500.0, 2.0);
  CHECK(quantize_location(g, {4.0, 1.0}) == TileIndex{1, 0});
  CHECK(quantize_location(g, {250.0, 250.0}) == TileIndex{124, 124});
  CHECK(quantize_location(g, {250.0 + 1e-9, 1.0}) == TileIndex{125, 0});
}

TEST_CASE("quantization outside the grid throws") {
  const Grid g = Grid::covering(500.0, 500.0, 2.0);
  CHECK_THROWS_AS(quantize_location(g, {-0.1, 3.0}), std::out_of_range);
  CHECK_THROWS_AS(quantize_location(g, {10.0, 500.5}), std::out_of_range);
  CHECK_THROWS_AS(Grid::covering(500.0, 500.0, 3.0), ConfigError);
  CHECK_THROWS_AS(Grid::covering(500.0, 500.0, 0.0), ConfigError);
}

TEST_CASE("RSRP map averages in dB by default") {
  RsrpMap m(4, 2);
  ingest_report(m, 1, 0, -80.0);
  ingest_report(m, 1, 0, -90.0);
  CHECK(*query_rsrp(m, 1, 0) == doctest::Approx(-85.0));
  CHECK(m.count(1, 0) == 2);
  CHECK_FALSE(query_rsrp(m, 1, 1).has_value());
  CHECK_FALSE(query_rsrp(m, 2, 0).has_value());
  CHECK_FALSE(m.known(1));
  ingest_report(m, 1, 1, -70.0);
  CHECK(m.known(1));
  CHECK_THROWS_AS(m.ingest(4, 0, -80.0), std::out_of_range);
  CHECK_THROWS_AS(m.query(0, 2), std::out_of_range);
}

TEST_CASE("linear averaging is available") {
  RsrpMap m(1, 1, Averaging::Linear);
  m.ingest(0, 0, -80.0);
  m.ingest(0, 0, -90.0);
  const double expect = 10.0 * std::log10(0.5 * (std::pow(10.0, -8.0) + std::pow(10.0, -9.0)));
  CHECK(*m.query(0, 0) == doctest::Approx(expect));
}

TEST_CASE("Welford mean matches the arithmetic mean") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(-95.0, 6.0);
  RsrpMap m(1, 1);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double x = dist(rng);
    sum += x;
    m.ingest(0, 0, x);
  }
  CHECK(*m.query(0, 0) == doctest::Approx(sum / n).epsilon(1e-12));
}

TEST_CASE("motion quantization") {
  CHECK(quantize_speed(25.0) == 25.0);
  CHECK(quantize_speed(23.0) == 25.0);
  CHECK(quantize_speed(22.4) == 20.0);
  CHECK(quantize_speed(80.0) == 50.0);
  CHECK(quantize_direction(0.0) == 0);
  CHECK(quantize_direction(181.0) == 180);
  CHECK(quantize_direction(350.0) == 0);
  CHECK(quantize_direction(-90.0) == 270);
  CHECK(is_quantized({25.0, 180}));
  CHECK_FALSE(is_quantized({23.0, 180}));
  CHECK_FALSE(is_quantized({25.0, 10}));
}

TEST_CASE("mobility map estimates transition frequencies") {
  MobilityMap map;
  const Motion fwd{25.0, 0}, turn{25.0, 90};
  for (int i = 0; i < 3; ++i) observe_transition(map, {1, 1}, fwd, fwd);
  observe_transition(map, {1, 1}, fwd, turn);
  const auto d = mobility_dist(map, {1, 1}, fwd);
  REQUIRE(d.size() == 2);
  CHECK(d[0].first == fwd);
  CHECK(d[0].second == doctest::Approx(0.75));
  CHECK(d[1].first == turn);
  CHECK(d[1].second == doctest::Approx(0.25));

  const auto unseen = mobility_dist(map, {7, 7}, turn);
  REQUIRE(unseen.size() == 1);
  CHECK(unseen[0].first == turn);
  CHECK(unseen[0].second == 1.0);

  CHECK_THROWS_AS(map.observe({0, 0}, {23.0, 0}, fwd), std::invalid_argument);
  CHECK(map.observed_motions() == std::vector<Motion>{fwd, turn});
}

TEST_CASE("REM ingest records RSRP and mobility at the previous tile") {
  Rem rem(Grid::covering(10.0, 10.0, 2.0), 2);
  auto r0 = report({1.0, 1.0}, vec({-80.0, -90.0}));
  rem.ingest(r0);
  auto r1 = report({1.0, 3.0}, vec({-82.0, -88.0}));
  r1.previous = LocatedReport::Fix{{1.0, 1.0}, {25.0, 0}};
  rem.ingest(r1);
  CHECK(rem.known({0, 0}));
  CHECK(rem.known({0, 1}));
  CHECK_FALSE(rem.known({1, 1}));
  CHECK(rem.known_tiles() == std::vector<TileIndex>{{0, 0}, {0, 1}});
  CHECK(rem.rsrp_vector({0, 1}) == vec({-82.0, -88.0}));
  CHECK_THROWS_AS(rem.rsrp_vector({3, 3}), std::out_of_range);
  const auto d = rem.mobility().distribution({0, 0}, {25.0, 0});
  REQUIRE(d.size() == 1);
  CHECK(d[0].first == Motion{25.0, 0});
  CHECK(rem.mobility().entries().size() == 1);
  CHECK_THROWS_AS(rem.ingest(report({1.0, 1.0}, vec({-80.0}))), std::invalid_argument);
}

TEST_CASE("REM artifact round-trips bit-exactly") {
  Rem rem(Grid::covering(20.0, 20.0, 2.0), 3, Averaging::Db);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> dist(-90.0, 7.0);
  std::optional<LocatedReport::Fix> prev;
  for (double y = 0.0; y <= 20.0; y += 0.5) {
    auto r = report({5.0, y}, vec({dist(rng), dist(rng), dist(rng)}));
    r.previous = prev;
    rem.ingest(r);
    prev = LocatedReport::Fix{{5.0, y}, {25.0, 0}};
  }
  const std::string text = rem.to_string();
  CHECK(text.rfind("REMv1 g=2 nx=10 ny=10 nbeams=3\n", 0) == 0);
  const Rem back = Rem::from_string(text);
  CHECK(back.to_string() == text);
  CHECK(back.checksum() == rem.checksum());
  CHECK(back.rsrp_vector({2, 4}) == rem.rsrp_vector({2, 4}));
  CHECK(rem.checksum().size() == 16);

  Rem lin(Grid::covering(4.0, 4.0, 2.0), 1, Averaging::Linear);
  lin.ingest(report({1.0, 1.0}, vec({-80.0})));
  CHECK(lin.to_string().find(" avg=linear\n") != std::string::npos);
  CHECK(Rem::from_string(lin.to_string()).rsrp().averaging() == Averaging::Linear);
}

TEST_CASE("checksum changes with content") {
  Rem a(Grid::covering(4.0, 4.0, 2.0), 1);
  a.ingest(report({1.0, 1.0}, vec({-80.0})));
  Rem b(Grid::covering(4.0, 4.0, 2.0), 1);
  b.ingest(report({1.0, 1.0}, vec({-80.000001})));
  CHECK(a.checksum() != b.checksum());
}

TEST_CASE("malformed REM artifacts are rejected") {
  CHECK_THROWS_AS(Rem::from_string(""), FormatError);
  CHECK_THROWS_AS(Rem::from_string("REMv2 g=2 nx=1 ny=1 nbeams=1\n"), FormatError);
  CHECK_THROWS_AS(Rem::from_string("REMv1 g=2 nx=1 nbeams=1\n"), FormatError);
  const std::string head = "REMv1 g=2 nx=2 ny=2 nbeams=1\nRSRP: tile_x,tile_y,beam,mean_dbm,count\n";
  CHECK_THROWS_AS(Rem::from_string(head + "5,0,0,-80,1\n"), FormatError);
  CHECK_THROWS_AS(Rem::from_string(head + "0,0,0,abc,1\n"), FormatError);
  CHECK_THROWS_AS(Rem::from_string(head + "0,0,0,-80,0\n"), FormatError);
  CHECK_NOTHROW(Rem::from_string(head + "0,0,0,-80,1\nMOB: tile_x,tile_y,vq,aq,v,a,count\n"));
}
