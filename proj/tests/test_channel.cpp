#include "gobrem/channel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace gobrem;
using namespace gobrem::channel;

namespace {

BeamCodebook default_codebook() { return build_codebook(ArrayConfig{}, 16); }

double array_gain_db(const BeamCodebook& cb, int beam, double az, double el) {
  return 10.0 * std::log10(std::norm(cb.weights.col(beam).dot(steering_vector(cb, az, el))));
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace

TEST_CASE("path loss matches the UMi LOS formula") {
  CHECK(std::abs(path_loss(100.0, 26.0) - 102.70) < 0.01);
  CHECK(std::abs(path_loss(1.0, 26.0) - 60.70) < 0.01);
  CHECK(path_loss(200.0, 26.0) > path_loss(100.0, 26.0));
  CHECK(path_loss(0.2, 26.0) == path_loss(1.0, 26.0));
  for (double d = 1.5; d < 1000.0; d += 0.5) CHECK(path_loss(d, 26.0) > path_loss(d - 0.5, 26.0));
}

TEST_CASE("codebook is orthonormal") {
  const auto cb = default_codebook();
  REQUIRE(cb.size() == 16);
  const Eigen::MatrixXcd gram = cb.weights.adjoint() * cb.weights;
  for (int i = 0; i < cb.size(); ++i) {
    CHECK(std::abs(cb.weights.col(i).norm() - 1.0) < 1e-12);
    for (int j = 0; j < cb.size(); ++j)
      if (i != j) CHECK(std::abs(gram(i, j)) < 1e-9);
  }
}

TEST_CASE("codebook size limits") {
  CHECK_THROWS_AS(build_codebook(ArrayConfig{}, 65), ConfigError);
  CHECK_THROWS_AS(build_codebook(ArrayConfig{}, 0), ConfigError);
  CHECK_NOTHROW(build_codebook(ArrayConfig{}, 8));
  CHECK(build_codebook(ArrayConfig{}, 64).size() == 64);
}

TEST_CASE("broadside beam has full array gain") {
  const auto cb = default_codebook();
  // Uniform weights toward boresight: |sum of 64 unit phasors / 8|^2 = 64.
  CHECK(std::abs(array_gain_db(cb, 0, 0.0, 0.0) - 10.0 * std::log10(64.0)) < 1e-9);
  CHECK(std::abs(array_gain_db(cb, 0, 0.0, 0.0) - 18.06) < 0.01);
}

TEST_CASE("every beam peaks at its own steering direction") {
  const auto cb = default_codebook();
  for (int b = 0; b < cb.size(); ++b) {
    const double el = deg(std::asin(cb.steering_v(b)));
    const double s = cb.steering_u(b) / std::cos(std::asin(cb.steering_v(b)));
    if (std::abs(s) >= 1.0) continue;  // endfire or invisible for this layer
    const double az = deg(std::asin(s));
    const double peak = array_gain_db(cb, b, az, el);
    CHECK(std::abs(peak - 18.0618) < 1e-3);
    for (double a = -89.0; a <= 89.0; a += 0.5) CHECK(array_gain_db(cb, b, a, el) <= peak + 1e-9);
    for (int o = 0; o < cb.size(); ++o) {
      if (o == b) continue;
      CHECK(array_gain_db(cb, o, az, el) < peak);
    }
  }
}

TEST_CASE("element pattern") {
  CHECK(element_gain(0.0, 0.0) == doctest::Approx(8.0));
  CHECK(element_gain(32.5, 0.0) == doctest::Approx(5.0));
  CHECK(element_gain(180.0, 0.0) == doctest::Approx(-22.0));
  CHECK(element_gain(0.0, 90.0) == doctest::Approx(8.0 - 12.0 * std::pow(90.0 / 65.0, 2)));
}

TEST_CASE("rsrp decomposes into tx + gain - path loss + shadowing + fading") {
  const ArrayConfig cfg;
  const auto cb = default_codebook();
  const auto zero = ShadowingField::zeros({500.0, 500.0}, 1.0, 16);
  const Vec2 pos(120.0, 300.0);
  const auto g = link_geometry(cfg, pos);
  for (int b = 0; b < 16; ++b) {
    const double expect = cfg.tx_power_density + beam_gain(cb, b, g.azimuth_deg, g.elevation_deg) -
                          path_loss(g.d3d, cfg.center_frequency);
    CHECK(std::abs(rsrp(cfg, cb, zero, pos, b, 1.0) - expect) < 1e-9);
    CHECK(rsrp(cfg, cb, zero, pos, b, 1.0) - rsrp(cfg, cb, zero, pos, b, 0.5) ==
          doctest::Approx(10.0 * std::log10(2.0)));
  }
  CHECK(std::abs(10.0 * std::log10(2.0) - 3.01) < 0.005);
  CHECK_THROWS_AS(rsrp(cfg, cb, zero, pos, 16, 1.0), std::out_of_range);
  CHECK_THROWS_AS(rsrp(cfg, cb, zero, Vec2(-1.0, 10.0), 0, 1.0), std::out_of_range);

  const RadioChannel ch(cfg, cb, zero);
  const Eigen::VectorXd mean = ch.mean_rsrp(pos);
  for (int b = 0; b < 16; ++b) CHECK(mean(b) == doctest::Approx(rsrp(cfg, cb, zero, pos, b, 1.0)));
}

TEST_CASE("rsrp decreases along the boresight ray") {
  const ArrayConfig cfg;
  const auto cb = default_codebook();
  const auto zero = ShadowingField::zeros({500.0, 500.0}, 1.0, 16);
  double prev = rsrp(cfg, cb, zero, {1.0, 250.0}, 0, 1.0);
  for (double x = 2.0; x <= 500.0; x += 1.0) {
    const double now = rsrp(cfg, cb, zero, {x, 250.0}, 0, 1.0);
    // Near the array the UE sits in the vertical sidelobes; past the main lobe
    // edge (~70 m) path loss dominates.
    if (x > 80.0) CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("shadowing field is reproducible and has the configured statistics") {
  const auto a = generate_shadowing(7, {200.0, 200.0}, 1.0, 10.0, 4.0, 2);
  const auto b = generate_shadowing(7, {200.0, 200.0}, 1.0, 10.0, 4.0, 2);
  const auto c = generate_shadowing(8, {200.0, 200.0}, 1.0, 10.0, 4.0, 2);
  REQUIRE(a.beams() == 2);
  CHECK(a.grid(0) == b.grid(0));
  CHECK(a.grid(1) == b.grid(1));
  CHECK(a.grid(0) != c.grid(0));
  CHECK(a.grid(0) != a.grid(1));

  const Eigen::MatrixXd& g = a.grid(0);
  const double mean = g.mean();
  const double sd = std::sqrt((g.array() - mean).square().mean());
  CHECK(std::abs(mean) < 1.0);
  CHECK(std::abs(sd - 4.0) < 0.7);
}

TEST_CASE("shadowing interpolates bilinearly between grid points") {
  const auto f = generate_shadowing(3, {20.0, 20.0}, 1.0, 10.0, 4.0, 1);
  const auto& g = f.grid(0);
  CHECK(f.at(0, {3.0, 4.0}) == doctest::Approx(g(3, 4)));
  const double mid = 0.25 * (g(3, 4) + g(4, 4) + g(3, 5) + g(4, 5));
  CHECK(f.at(0, {3.5, 4.5}) == doctest::Approx(mid));
  CHECK(f.at(0, {3.25, 4.0}) == doctest::Approx(0.75 * g(3, 4) + 0.25 * g(4, 4)));
}

TEST_CASE("shadowing rejects bad parameters") {
  CHECK_THROWS_AS(generate_shadowing(1, {100.0, 100.0}, 1.0, 10.0, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_shadowing(1, {100.0, 100.0}, 1.0, 0.0, 4.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_shadowing(1, {100.0, 100.0}, 1.0, -3.0, 4.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_shadowing(1, {100.0, 100.0}, 20.0, 10.0, 4.0, 1), ConfigError);
}

TEST_CASE("shadowing csv export") {
  const auto f = generate_shadowing(3, {4.0, 4.0}, 1.0, 2.0, 4.0, 2);
  std::ostringstream os;
  f.write_csv(os, 2);
  const std::string text = os.str();
  CHECK(text.rfind("x,y,beam,db\n", 0) == 0);
  // 3 x 3 grid points per beam at stride 2 over a 5 x 5 grid.
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 9);
}

TEST_CASE("Rayleigh power samples have unit mean") {
  RayleighFading fading(11);
  const Eigen::VectorXd x = fading.draw(100000);
  CHECK(std::abs(x.mean() - 1.0) < 0.02);
  CHECK((x.array() >= 0).all());
  RayleighFading again(11);
  CHECK(again.draw(5) == x.head(5));
}
