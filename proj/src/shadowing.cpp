#include "gobrem/channel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

namespace gobrem::channel {
namespace {

using Complex = std::complex<double>;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place 2D DFT over a column-major complex matrix. Inverse includes 1/N.
void fft2(Eigen::MatrixXcd& data, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in, out;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    in.assign(data.col(c).data(), data.col(c).data() + data.rows());
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    std::copy(out.begin(), out.end(), data.col(c).data());
  }
  in.resize(data.cols());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) in[c] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = out[c];
  }
}

std::mt19937_64 substream(std::uint64_t seed, int beam) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(beam), 0x5ad0u};
  return std::mt19937_64(seq);
}

}  // namespace

ShadowingField::ShadowingField(std::vector<Eigen::MatrixXd> grids, double resolution,
                               double correlation_distance, double sigma, std::uint64_t seed)
    : grids_(std::move(grids)),
      resolution_(resolution),
      correlation_distance_(correlation_distance),
      sigma_(sigma),
      seed_(seed) {}

ShadowingField ShadowingField::zeros(const Vec2& area, double resolution, int n_beams) {
  const int nx = static_cast<int>(std::lround(area.x() / resolution)) + 1;
  const int ny = static_cast<int>(std::lround(area.y() / resolution)) + 1;
  return ShadowingField(std::vector<Eigen::MatrixXd>(n_beams, Eigen::MatrixXd::Zero(nx, ny)),
                        resolution, 0.0, 0.0, 0);
}

Vec2 ShadowingField::extent() const {
  if (grids_.empty()) return Vec2::Zero();
  return Vec2((grids_.front().rows() - 1) * resolution_, (grids_.front().cols() - 1) * resolution_);
}

double ShadowingField::at(int beam, const Vec2& pos) const {
  const Eigen::MatrixXd& g = grids_.at(beam);
  const double fx = std::clamp(pos.x() / resolution_, 0.0, static_cast<double>(g.rows() - 1));
  const double fy = std::clamp(pos.y() / resolution_, 0.0, static_cast<double>(g.cols() - 1));
  // Grids always hold at least 2 x 2 samples.
  const Eigen::Index ix = std::min<Eigen::Index>(static_cast<Eigen::Index>(fx), g.rows() - 2);
  const Eigen::Index iy = std::min<Eigen::Index>(static_cast<Eigen::Index>(fy), g.cols() - 2);
  const double tx = fx - ix;
  const double ty = fy - iy;
  const Eigen::Index jx = ix + 1;
  const Eigen::Index jy = iy + 1;
  return (1 - tx) * (1 - ty) * g(ix, iy) + tx * (1 - ty) * g(jx, iy) +
         (1 - tx) * ty * g(ix, jy) + tx * ty * g(jx, jy);
}

Eigen::VectorXd ShadowingField::at(const Vec2& pos) const {
  Eigen::VectorXd out(beams());
  for (int b = 0; b < beams(); ++b) out(b) = at(b, pos);
  return out;
}

void ShadowingField::write_csv(std::ostream& out, int stride) const {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  out << "x,y,beam,db\n";
  for (int b = 0; b < beams(); ++b) {
    const auto& g = grids_[b];
    for (Eigen::Index iy = 0; iy < g.cols(); iy += stride)
      for (Eigen::Index ix = 0; ix < g.rows(); ix += stride)
        out << format_double(ix * resolution_) << ',' << format_double(iy * resolution_) << ','
            << b << ',' << format_double(g(ix, iy)) << '\n';
  }
}

ShadowingField generate_shadowing(std::uint64_t seed, const Vec2& area, double resolution,
                                  double d_corr, double sigma, int n_beams) {
  if (sigma <= 0) throw ConfigError("shadowing sigma must be positive");
  if (d_corr <= 0) throw ConfigError("shadowing correlation distance must be positive");
  if (resolution <= 0 || resolution > d_corr)
    throw ConfigError("shadowing resolution must be in (0, correlation distance]");
  if (area.x() <= 0 || area.y() <= 0) throw ConfigError("shadowing area must be positive");
  if (n_beams <= 0) throw ConfigError("number of beams must be positive");

  const int nx = static_cast<int>(std::lround(area.x() / resolution)) + 1;
  const int ny = static_cast<int>(std::lround(area.y() / resolution)) + 1;
  // Torus periods at least twice the field extent keep every in-field lag exact.
  const int px = next_pow2(std::max(2 * (nx - 1), 2));
  const int py = next_pow2(std::max(2 * (ny - 1), 2));

  Eigen::MatrixXcd spectrum(px, py);
  for (int j = 0; j < py; ++j) {
    const double dy = std::min(j, py - j) * resolution;
    for (int i = 0; i < px; ++i) {
      const double dx = std::min(i, px - i) * resolution;
      spectrum(i, j) = std::exp(-std::hypot(dx, dy) / d_corr);
    }
  }
  fft2(spectrum, false);
  // Eigenvalues of the embedded covariance; tiny negative ones come from the
  // periodic wrap and are clipped.
  const Eigen::ArrayXXd amplitude = spectrum.real().array().max(0.0).sqrt();

  std::vector<Eigen::MatrixXd> grids(n_beams);
  // Two beams per transform: real and imaginary parts carry independent fields.
  for (int b = 0; b < n_beams; b += 2) {
    const bool pair = b + 1 < n_beams;
    auto first = substream(seed, b);
    std::normal_distribution<double> normal_first;
    Eigen::MatrixXcd noise(px, py);
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise(k) = Complex(normal_first(first), 0.0);
    if (pair) {
      auto second = substream(seed, b + 1);
      std::normal_distribution<double> normal_second;
      for (Eigen::Index k = 0; k < noise.size(); ++k) noise(k).imag(normal_second(second));
    }
    fft2(noise, false);
    noise.array() *= amplitude.cast<Complex>();
    fft2(noise, true);
    grids[b] = sigma * noise.real().topLeftCorner(nx, ny);
    if (pair) grids[b + 1] = sigma * noise.imag().topLeftCorner(nx, ny);
  }
  return ShadowingField(std::move(grids), resolution, d_corr, sigma, seed);
}

}  // namespace gobrem::channel
