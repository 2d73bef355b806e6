#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gobrem {

using Vec2 = Eigen::Vector2d;

/// Invalid or inconsistent configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed artifact text.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checksum or provenance mismatch between artifacts.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver gave up before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace gobrem
