#include "gobrem/channel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>

namespace gobrem::channel {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Direction cosine a DFT index steers to, wrapped into [-1/(2d), 1/(2d)).
double dft_direction(int k, int n, double spacing) {
  double f = static_cast<double>(k) / n;
  if (f >= 0.5) f -= 1.0;
  return f / spacing;
}

}  // namespace

void ArrayConfig::validate(int n_beams) const {
  if (rows <= 0 || cols <= 0) throw ConfigError("array rows/cols must be positive");
  if (element_spacing <= 0 || height <= 0 || bandwidth <= 0 || center_frequency <= 0)
    throw ConfigError("array physical quantities must be strictly positive");
  if (tx_power_density <= 0) throw ConfigError("tx power density must be positive");
  if (n_beams <= 0) throw ConfigError("number of beams must be positive");
  if (n_beams > rows * cols)
    throw ConfigError("number of beams exceeds the number of array elements");
}

double BeamCodebook::steering_u(int b) const {
  return dft_direction(column_index.at(b), cols, spacing);
}

double BeamCodebook::steering_v(int b) const {
  return dft_direction(row_index.at(b), rows, spacing);
}

BeamCodebook build_codebook(const ArrayConfig& cfg, int n_beams) {
  cfg.validate(n_beams);
  if (n_beams % cfg.cols != 0)
    throw ConfigError("number of beams must be a multiple of the array column count");
  const int layers = n_beams / cfg.cols;

  // Vertical layer order: 0, R-1, 1, R-2, ... (horizon, then downtilt/uptilt pairs).
  std::vector<int> layer_order;
  for (int i = 0; static_cast<int>(layer_order.size()) < cfg.rows; ++i) {
    layer_order.push_back(i);
    if (static_cast<int>(layer_order.size()) < cfg.rows) layer_order.push_back(cfg.rows - 1 - i);
  }

  BeamCodebook cb;
  cb.rows = cfg.rows;
  cb.cols = cfg.cols;
  cb.spacing = cfg.element_spacing;
  const int n_elem = cfg.rows * cfg.cols;
  cb.weights.resize(n_elem, n_beams);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n_elem));
  for (int layer = 0; layer < layers; ++layer) {
    const int ky = layer_order[layer];
    for (int kx = 0; kx < cfg.cols; ++kx) {
      const int b = layer * cfg.cols + kx;
      cb.column_index.push_back(kx);
      cb.row_index.push_back(ky);
      for (int m = 0; m < cfg.rows; ++m)
        for (int n = 0; n < cfg.cols; ++n) {
          const double phase = 2.0 * std::numbers::pi *
                                (static_cast<double>(n * kx) / cfg.cols +
                                 static_cast<double>(m * ky) / cfg.rows);
          cb.weights(m * cfg.cols + n, b) = std::polar(norm, phase);
        }
    }
  }
  return cb;
}

Eigen::VectorXcd steering_vector(const BeamCodebook& codebook, double azimuth_deg,
                                 double elevation_deg) {
  const double az = azimuth_deg * kDeg;
  const double el = elevation_deg * kDeg;
  const double u = std::sin(az) * std::cos(el);
  const double v = std::sin(el);
  const double k = 2.0 * std::numbers::pi * codebook.spacing;

  Eigen::VectorXcd h(codebook.cols), w(codebook.rows);
  for (int n = 0; n < codebook.cols; ++n) h(n) = std::polar(1.0, k * n * u);
  for (int m = 0; m < codebook.rows; ++m) w(m) = std::polar(1.0, k * m * v);

  Eigen::VectorXcd a(codebook.rows * codebook.cols);
  for (int m = 0; m < codebook.rows; ++m) a.segment(m * codebook.cols, codebook.cols) = w(m) * h;
  return a;
}

double element_gain(double azimuth_deg, double elevation_deg) {
  double az = std::remainder(azimuth_deg, 360.0);
  const double a_h = -std::min(12.0 * std::pow(az / 65.0, 2), 30.0);
  const double a_v = -std::min(12.0 * std::pow(elevation_deg / 65.0, 2), 30.0);
  return 8.0 - std::min(-(a_h + a_v), 30.0);
}

Eigen::VectorXd beam_gains(const BeamCodebook& codebook, double azimuth_deg,
                           double elevation_deg) {
  const Eigen::VectorXcd a = steering_vector(codebook, azimuth_deg, elevation_deg);
  const Eigen::VectorXd power = (codebook.weights.adjoint() * a).cwiseAbs2();
  const double elem = element_gain(azimuth_deg, elevation_deg);
  return (10.0 * power.array().max(1e-30).log10() + elem).matrix();
}

double beam_gain(const BeamCodebook& codebook, int beam, double azimuth_deg,
                 double elevation_deg) {
  if (beam < 0 || beam >= codebook.size()) throw std::out_of_range("beam index out of range");
  const Eigen::VectorXcd a = steering_vector(codebook, azimuth_deg, elevation_deg);
  const double power = std::norm(codebook.weights.col(beam).dot(a));
  return 10.0 * std::log10(std::max(power, 1e-30)) + element_gain(azimuth_deg, elevation_deg);
}

double path_loss(double d3d, double fc_ghz) {
  if (d3d < 1.0) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::clog << "gobrem: path_loss distance " << d3d << " m clamped to 1 m\n";
    d3d = 1.0;
  }
  return 32.4 + 21.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
}

LinkGeometry link_geometry(const ArrayConfig& cfg, const Vec2& ue_pos, double ue_height) {
  const Vec2 d = ue_pos - cfg.position;
  const double d2d = d.norm();
  const double dz = ue_height - cfg.height;
  LinkGeometry g;
  g.d3d = std::hypot(d2d, dz);
  g.azimuth_deg = std::atan2(d.y(), d.x()) / kDeg;
  g.elevation_deg = std::atan2(dz, d2d) / kDeg;
  return g;
}

RayleighFading::RayleighFading(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0xfad1u};
  engine_.seed(seq);
}

Eigen::VectorXd RayleighFading::draw(int n) {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = dist_(engine_);
  return out;
}

double rsrp(const ArrayConfig& cfg, const BeamCodebook& codebook,
            const ShadowingField& shadowing, const Vec2& ue_pos, int beam,
            double fading_draw) {
  if (beam < 0 || beam >= codebook.size()) throw std::out_of_range("beam index out of range");
  const Vec2 ext = shadowing.extent();
  if (ue_pos.x() < 0 || ue_pos.y() < 0 || ue_pos.x() > ext.x() || ue_pos.y() > ext.y())
    throw std::out_of_range("UE position outside the cell");
  const LinkGeometry g = link_geometry(cfg, ue_pos);
  return cfg.tx_power_density + beam_gain(codebook, beam, g.azimuth_deg, g.elevation_deg) -
         path_loss(g.d3d, cfg.center_frequency) + shadowing.at(beam, ue_pos) +
         10.0 * std::log10(fading_draw);
}

RadioChannel::RadioChannel(ArrayConfig cfg, BeamCodebook codebook, ShadowingField shadowing)
    : cfg_(std::move(cfg)), codebook_(std::move(codebook)), shadowing_(std::move(shadowing)) {
  if (shadowing_.beams() != codebook_.size())
    throw ConfigError("shadowing field and codebook disagree on the number of beams");
}

Eigen::VectorXd RadioChannel::mean_rsrp(const Vec2& ue_pos) const {
  const LinkGeometry g = link_geometry(cfg_, ue_pos);
  Eigen::VectorXd out = beam_gains(codebook_, g.azimuth_deg, g.elevation_deg);
  out.array() += cfg_.tx_power_density - path_loss(g.d3d, cfg_.center_frequency);
  out += shadowing_.at(ue_pos);
  return out;
}

Eigen::VectorXd RadioChannel::measure(const Vec2& ue_pos, const Eigen::VectorXd& fading) const {
  return mean_rsrp(ue_pos) + (10.0 * fading.array().log10()).matrix();
}

}  // namespace gobrem::channel
