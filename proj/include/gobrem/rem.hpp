#pragma once

// Radio Environment Map: per-tile per-beam RSRP averages and the UE
// mobility-pattern map, plus their text artifact.

#include "gobrem/common.hpp"

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gobrem::rem {

struct TileIndex {
  int x = 0;
  int y = 0;
  auto operator<=>(const TileIndex&) const = default;
};

/// Square tiling of the cell. Tiles must cover the area exactly.
struct Grid {
  Vec2 origin{0.0, 0.0};
  double tile_size = 2.0;
  int nx = 250;
  int ny = 250;

  static Grid covering(double width, double height, double tile_size);

  int tiles() const { return nx * ny; }
  int linear(TileIndex t) const { return t.y * nx + t.x; }
  TileIndex tile(int linear_index) const { return {linear_index % nx, linear_index / nx}; }
  bool contains(const Vec2& pos) const;
  bool valid(TileIndex t) const { return t.x >= 0 && t.y >= 0 && t.x < nx && t.y < ny; }
  Vec2 center(TileIndex t) const;

  /// Tile whose center is nearest to `pos`; equidistant points go to the
  /// lower tile index. Throws std::out_of_range outside the grid.
  TileIndex quantize(const Vec2& pos) const;
};

TileIndex quantize_location(const Grid& grid, const Vec2& pos);

enum class Averaging { Db, Linear };

/// Running per-(tile, beam) mean RSRP.
class RsrpMap {
 public:
  RsrpMap() = default;
  RsrpMap(int tiles, int beams, Averaging averaging = Averaging::Db);

  int beams() const { return static_cast<int>(mean_.cols()); }
  int tiles() const { return static_cast<int>(mean_.rows()); }
  Averaging averaging() const { return averaging_; }

  void ingest(int tile, int beam, double rsrp_dbm);
  /// Stored mean, or nullopt when the pair was never reported.
  std::optional<double> query(int tile, int beam) const;
  std::int64_t count(int tile, int beam) const;
  /// True when every beam has at least one report for the tile.
  bool known(int tile) const;

  /// Restores an entry verbatim (artifact loading).
  void restore(int tile, int beam, double mean_dbm, std::int64_t count);

 private:
  void check(int tile, int beam) const;

  Eigen::ArrayXXd mean_;  // tiles x beams, dBm
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> count_;
  Averaging averaging_ = Averaging::Db;
};

RsrpMap& ingest_report(RsrpMap& map, int tile, int beam, double rsrp_dbm);
std::optional<double> query_rsrp(const RsrpMap& map, int tile, int beam);

/// Quantized speed (m/s) and direction (degrees, multiple of 45).
struct Motion {
  double speed = 0.0;
  int direction = 0;
  auto operator<=>(const Motion&) const = default;
};

inline constexpr double kSpeedBucket = 5.0;   // m/s
inline constexpr double kMaxSpeed = 50.0;     // m/s
inline constexpr int kDirectionStep = 45;     // degrees

double quantize_speed(double speed);
int quantize_direction(double direction_deg);
bool is_quantized(const Motion& m);

using MotionDistribution = std::vector<std::pair<Motion, double>>;

/// Empirical P(next motion | tile, current motion).
class MobilityMap {
 public:
  struct Key {
    TileIndex tile;
    Motion current;
    auto operator<=>(const Key&) const = default;
  };
  using Counts = std::map<Motion, std::int64_t>;

  /// Throws std::invalid_argument for unquantized motions.
  void observe(TileIndex tile, const Motion& current, const Motion& next, std::int64_t count = 1);
  /// Normalized distribution in Motion order; {current: 1} when unseen.
  MotionDistribution distribution(TileIndex tile, const Motion& current) const;

  const std::map<Key, Counts>& entries() const { return entries_; }
  /// Every motion seen as condition or outcome, sorted.
  std::vector<Motion> observed_motions() const;

 private:
  std::map<Key, Counts> entries_;
};

MobilityMap& observe_transition(MobilityMap& map, TileIndex tile, const Motion& current,
                                const Motion& next);
MotionDistribution mobility_dist(const MobilityMap& map, TileIndex tile, const Motion& current);

/// Location-tagged UE report: position, motion and per-beam RSRP.
struct LocatedReport {
  struct Fix {
    Vec2 position;
    Motion motion;
  };
  Vec2 position;
  double speed = 0.0;
  double direction = 0.0;
  Eigen::VectorXd rsrp_dbm;
  /// Previous fix of the same UE; feeds the mobility map when present.
  std::optional<Fix> previous;
};

class Rem {
 public:
  Rem() = default;
  Rem(Grid grid, int n_beams, Averaging averaging = Averaging::Db);

  const Grid& grid() const { return grid_; }
  int beams() const { return n_beams_; }
  RsrpMap& rsrp() { return rsrp_; }
  const RsrpMap& rsrp() const { return rsrp_; }
  MobilityMap& mobility() { return mobility_; }
  const MobilityMap& mobility() const { return mobility_; }

  void ingest(const LocatedReport& report);

  std::optional<double> rsrp_at(TileIndex tile, int beam) const;
  /// Mean RSRP of every beam; requires a known tile.
  Eigen::VectorXd rsrp_vector(TileIndex tile) const;
  bool known(TileIndex tile) const;
  std::vector<TileIndex> known_tiles() const;

  void write(std::ostream& out) const;
  std::string to_string() const;
  static Rem read(std::istream& in);
  static Rem from_string(const std::string& text);
  /// FNV-1a over the canonical artifact text.
  std::string checksum() const;

 private:
  Grid grid_;
  int n_beams_ = 0;
  RsrpMap rsrp_;
  MobilityMap mobility_;
};

void write_rem_file(const Rem& rem, const std::string& path);
Rem read_rem_file(const std::string& path);

}  // namespace gobrem::rem
