#pragma once

// Ground-truth radio layer for a single Grid-of-Beams cell.
//
// Conventions: the array sits in the x-z plane facing +x. Azimuth is measured
// from the array boresight in the horizontal plane (positive toward +y),
// elevation is positive above the horizon. Array elements are indexed
// row-major, element (m, n) -> m * cols + n, with rows stacked vertically.

#include "gobrem/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace gobrem::channel {

inline constexpr double kUeHeight = 1.5;  // m

struct ArrayConfig {
  int rows = 8;
  int cols = 8;
  double element_spacing = 0.5;  // wavelengths
  double height = 10.0;          // m
  Vec2 position{0.0, 250.0};     // m
  double tx_power_density = 10.0;  // dBm/MHz
  double bandwidth = 100.0;        // MHz
  double center_frequency = 26.0;  // GHz

  /// Throws ConfigError unless every physical quantity is positive and
  /// the array has at least `n_beams` elements.
  void validate(int n_beams) const;
};

/// Orthonormal set of 2D DFT beams, one weight column per beam.
struct BeamCodebook {
  int rows = 0;
  int cols = 0;
  double spacing = 0.5;
  Eigen::MatrixXcd weights;  // (rows * cols) x n_beams
  std::vector<int> column_index;  // horizontal DFT index per beam
  std::vector<int> row_index;     // vertical DFT index per beam

  int size() const { return static_cast<int>(weights.cols()); }
  Eigen::VectorXcd beam(int b) const { return weights.col(b); }
  /// Horizontal / vertical direction cosines each beam is steered to.
  double steering_u(int b) const;
  double steering_v(int b) const;
};

/// Beams are taken from the rows x cols DFT grid: all `cols` horizontal
/// directions per vertical layer, layers ordered horizon first, then
/// alternating downtilt/uptilt. Beam 0 is the broadside beam.
BeamCodebook build_codebook(const ArrayConfig& cfg, int n_beams);

/// Unit-magnitude array response toward (azimuth, elevation) in degrees.
Eigen::VectorXcd steering_vector(const BeamCodebook& codebook, double azimuth_deg,
                                 double elevation_deg);

/// Synthetic sector element pattern: 8 dBi peak, 65 deg 3-dB beamwidth,
/// 30 dB front-to-back and side-lobe floor.
double element_gain(double azimuth_deg, double elevation_deg);

/// Element gain plus array gain |w^H a|^2, in dBi.
double beam_gain(const BeamCodebook& codebook, int beam, double azimuth_deg,
                 double elevation_deg);
Eigen::VectorXd beam_gains(const BeamCodebook& codebook, double azimuth_deg,
                           double elevation_deg);

/// UMi street-canyon LOS path loss in dB. Distances below 1 m are clamped.
double path_loss(double d3d, double fc_ghz);

struct LinkGeometry {
  double d3d = 0.0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};
LinkGeometry link_geometry(const ArrayConfig& cfg, const Vec2& ue_pos,
                           double ue_height = kUeHeight);

/// Per-beam shadowing maps sampled on a regular grid; bilinear in between.
class ShadowingField {
 public:
  ShadowingField() = default;
  ShadowingField(std::vector<Eigen::MatrixXd> grids, double resolution,
                 double correlation_distance, double sigma, std::uint64_t seed);

  /// All-zero field, for runs with shadowing switched off.
  static ShadowingField zeros(const Vec2& area, double resolution, int n_beams);

  int beams() const { return static_cast<int>(grids_.size()); }
  double resolution() const { return resolution_; }
  double correlation_distance() const { return correlation_distance_; }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  Vec2 extent() const;

  /// Grid samples for one beam, indexed (ix, iy) at (ix, iy) * resolution.
  const Eigen::MatrixXd& grid(int beam) const { return grids_.at(beam); }

  double at(int beam, const Vec2& pos) const;
  Eigen::VectorXd at(const Vec2& pos) const;

  /// Rows `x,y,beam,db` for every `stride`-th grid point.
  void write_csv(std::ostream& out, int stride = 1) const;

 private:
  std::vector<Eigen::MatrixXd> grids_;
  double resolution_ = 1.0;
  double correlation_distance_ = 0.0;
  double sigma_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Zero-mean Gaussian field per beam with isotropic exp(-d / d_corr)
/// correlation, generated by circulant embedding. Each beam draws its white
/// noise from an independent substream of `seed`.
ShadowingField generate_shadowing(std::uint64_t seed, const Vec2& area, double resolution,
                                  double d_corr, double sigma, int n_beams);

/// Unit-mean exponential power samples (Rayleigh amplitude).
class RayleighFading {
 public:
  explicit RayleighFading(std::uint64_t seed, std::uint64_t stream = 0);
  double draw() { return dist_(engine_); }
  Eigen::VectorXd draw(int n);

 private:
  std::mt19937_64 engine_;
  std::exponential_distribution<double> dist_{1.0};
};

/// RSRP in dBm: reference TX power density + beam gain - path loss
/// + shadowing + fading.
double rsrp(const ArrayConfig& cfg, const BeamCodebook& codebook,
            const ShadowingField& shadowing, const Vec2& ue_pos, int beam,
            double fading_draw);

/// Bundles the radio layer of one cell; evaluates all beams at once.
class RadioChannel {
 public:
  RadioChannel(ArrayConfig cfg, BeamCodebook codebook, ShadowingField shadowing);

  const ArrayConfig& config() const { return cfg_; }
  const BeamCodebook& codebook() const { return codebook_; }
  const ShadowingField& shadowing() const { return shadowing_; }
  int beams() const { return codebook_.size(); }

  /// RSRP of every beam without fading.
  Eigen::VectorXd mean_rsrp(const Vec2& ue_pos) const;
  /// RSRP of every beam with the given per-beam fading power samples.
  Eigen::VectorXd measure(const Vec2& ue_pos, const Eigen::VectorXd& fading) const;

 private:
  ArrayConfig cfg_;
  BeamCodebook codebook_;
  ShadowingField shadowing_;
};

}  // namespace gobrem::channel
