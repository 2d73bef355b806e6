#include "gobrem/rem.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace gobrem::rem {
namespace {

int quantize_axis(double offset, double g, int n) {
  const double u = offset / g;
  if (!(u >= 0.0) || u > n) throw std::out_of_range("position outside the REM grid");
  const double f = std::floor(u);
  // A point on a tile border is equidistant to both centers: lower index wins.
  int idx = (u == f && u > 0.0) ? static_cast<int>(f) - 1 : static_cast<int>(f);
  return std::min(idx, n - 1);
}

std::string header_value(const std::vector<std::string_view>& tokens, std::string_view key) {
  for (auto t : tokens) {
    if (t.size() > key.size() && t.substr(0, key.size()) == key && t[key.size()] == '=')
      return std::string(t.substr(key.size() + 1));
  }
  throw FormatError("REM header lacks '" + std::string(key) + "'");
}

}  // namespace

Grid Grid::covering(double width, double height, double tile_size) {
  if (!(tile_size > 0)) throw ConfigError("tile size must be positive");
  if (!(width > 0) || !(height > 0)) throw ConfigError("grid area must be positive");
  Grid g;
  g.tile_size = tile_size;
  g.nx = static_cast<int>(std::lround(width / tile_size));
  g.ny = static_cast<int>(std::lround(height / tile_size));
  if (std::abs(g.nx * tile_size - width) > 1e-9 || std::abs(g.ny * tile_size - height) > 1e-9)
    throw ConfigError("tiles of size " + format_double(tile_size) +
                      " m do not cover the cell exactly");
  return g;
}

bool Grid::contains(const Vec2& pos) const {
  const Vec2 d = pos - origin;
  return d.x() >= 0 && d.y() >= 0 && d.x() <= nx * tile_size && d.y() <= ny * tile_size;
}

Vec2 Grid::center(TileIndex t) const {
  return origin + Vec2((t.x + 0.5) * tile_size, (t.y + 0.5) * tile_size);
}

TileIndex Grid::quantize(const Vec2& pos) const {
  const Vec2 d = pos - origin;
  return {quantize_axis(d.x(), tile_size, nx), quantize_axis(d.y(), tile_size, ny)};
}

TileIndex quantize_location(const Grid& grid, const Vec2& pos) { return grid.quantize(pos); }

// --- RsrpMap ---------------------------------------------------------------

RsrpMap::RsrpMap(int tiles, int beams, Averaging averaging)
    : mean_(Eigen::ArrayXXd::Zero(tiles, beams)),
      count_(decltype(count_)::Zero(tiles, beams)),
      averaging_(averaging) {}

void RsrpMap::check(int tile, int beam) const {
  if (beam < 0 || beam >= beams()) throw std::out_of_range("beam index out of range");
  if (tile < 0 || tile >= tiles()) throw std::out_of_range("tile index out of range");
}

void RsrpMap::ingest(int tile, int beam, double rsrp_dbm) {
  check(tile, beam);
  const std::int64_t n = ++count_(tile, beam);
  double& mean = mean_(tile, beam);
  if (averaging_ == Averaging::Db) {
    mean += (rsrp_dbm - mean) / static_cast<double>(n);
  } else {
    const double prev = n == 1 ? 0.0 : db_to_linear(mean);
    mean = linear_to_db(prev + (db_to_linear(rsrp_dbm) - prev) / static_cast<double>(n));
  }
}

std::optional<double> RsrpMap::query(int tile, int beam) const {
  check(tile, beam);
  if (count_(tile, beam) == 0) return std::nullopt;
  return mean_(tile, beam);
}

std::int64_t RsrpMap::count(int tile, int beam) const {
  check(tile, beam);
  return count_(tile, beam);
}

bool RsrpMap::known(int tile) const {
  if (tile < 0 || tile >= tiles()) return false;
  return (count_.row(tile) > 0).all();
}

void RsrpMap::restore(int tile, int beam, double mean_dbm, std::int64_t count) {
  check(tile, beam);
  if (count <= 0) throw FormatError("REM entry with non-positive count");
  mean_(tile, beam) = mean_dbm;
  count_(tile, beam) = count;
}

RsrpMap& ingest_report(RsrpMap& map, int tile, int beam, double rsrp_dbm) {
  map.ingest(tile, beam, rsrp_dbm);
  return map;
}

std::optional<double> query_rsrp(const RsrpMap& map, int tile, int beam) {
  return map.query(tile, beam);
}

// --- Mobility --------------------------------------------------------------

double quantize_speed(double speed) {
  return std::clamp(std::round(speed / kSpeedBucket) * kSpeedBucket, 0.0, kMaxSpeed);
}

int quantize_direction(double direction_deg) {
  const double wrapped = std::fmod(std::fmod(direction_deg, 360.0) + 360.0, 360.0);
  return (static_cast<int>(std::lround(wrapped / kDirectionStep)) % (360 / kDirectionStep)) *
         kDirectionStep;
}

bool is_quantized(const Motion& m) {
  return m.direction >= 0 && m.direction < 360 && m.direction % kDirectionStep == 0 &&
         m.speed >= 0 && m.speed <= kMaxSpeed && quantize_speed(m.speed) == m.speed;
}

void MobilityMap::observe(TileIndex tile, const Motion& current, const Motion& next,
                          std::int64_t count) {
  if (!is_quantized(current) || !is_quantized(next))
    throw std::invalid_argument("mobility observation with unquantized speed or direction");
  if (count <= 0) throw std::invalid_argument("observation count must be positive");
  entries_[Key{tile, current}][next] += count;
}

MotionDistribution MobilityMap::distribution(TileIndex tile, const Motion& current) const {
  const auto it = entries_.find(Key{tile, current});
  if (it == entries_.end()) return {{current, 1.0}};
  std::int64_t total = 0;
  for (const auto& [m, c] : it->second) total += c;
  MotionDistribution out;
  out.reserve(it->second.size());
  for (const auto& [m, c] : it->second)
    out.emplace_back(m, static_cast<double>(c) / static_cast<double>(total));
  return out;
}

std::vector<Motion> MobilityMap::observed_motions() const {
  std::set<Motion> seen;
  for (const auto& [key, counts] : entries_) {
    seen.insert(key.current);
    for (const auto& [m, c] : counts) seen.insert(m);
  }
  return {seen.begin(), seen.end()};
}

MobilityMap& observe_transition(MobilityMap& map, TileIndex tile, const Motion& current,
                                const Motion& next) {
  map.observe(tile, current, next);
  return map;
}

MotionDistribution mobility_dist(const MobilityMap& map, TileIndex tile, const Motion& current) {
  return map.distribution(tile, current);
}

// --- Rem -------------------------------------------------------------------

Rem::Rem(Grid grid, int n_beams, Averaging averaging)
    : grid_(grid), n_beams_(n_beams), rsrp_(grid.tiles(), n_beams, averaging) {
  if (n_beams <= 0) throw ConfigError("REM needs at least one beam");
}

void Rem::ingest(const LocatedReport& report) {
  if (report.rsrp_dbm.size() != n_beams_)
    throw std::invalid_argument("report does not carry one RSRP per beam");
  const TileIndex tile = grid_.quantize(report.position);
  const int lin = grid_.linear(tile);
  for (int b = 0; b < n_beams_; ++b) rsrp_.ingest(lin, b, report.rsrp_dbm(b));
  if (report.previous) {
    const Motion now{quantize_speed(report.speed), quantize_direction(report.direction)};
    mobility_.observe(grid_.quantize(report.previous->position), report.previous->motion, now);
  }
}

std::optional<double> Rem::rsrp_at(TileIndex tile, int beam) const {
  if (!grid_.valid(tile)) throw std::out_of_range("tile outside the REM grid");
  return rsrp_.query(grid_.linear(tile), beam);
}

Eigen::VectorXd Rem::rsrp_vector(TileIndex tile) const {
  if (!known(tile)) throw std::out_of_range("no RSRP data for tile");
  Eigen::VectorXd out(n_beams_);
  for (int b = 0; b < n_beams_; ++b) out(b) = *rsrp_.query(grid_.linear(tile), b);
  return out;
}

bool Rem::known(TileIndex tile) const {
  return grid_.valid(tile) && rsrp_.known(grid_.linear(tile));
}

std::vector<TileIndex> Rem::known_tiles() const {
  std::vector<TileIndex> out;
  for (int x = 0; x < grid_.nx; ++x)
    for (int y = 0; y < grid_.ny; ++y)
      if (rsrp_.known(grid_.linear({x, y}))) out.push_back({x, y});
  return out;
}

void Rem::write(std::ostream& out) const {
  out << "REMv1 g=" << format_double(grid_.tile_size) << " nx=" << grid_.nx
      << " ny=" << grid_.ny << " nbeams=" << n_beams_;
  if (rsrp_.averaging() == Averaging::Linear) out << " avg=linear";
  out << "\nRSRP: tile_x,tile_y,beam,mean_dbm,count\n";
  for (int x = 0; x < grid_.nx; ++x)
    for (int y = 0; y < grid_.ny; ++y) {
      const int lin = grid_.linear({x, y});
      for (int b = 0; b < n_beams_; ++b) {
        const auto n = rsrp_.count(lin, b);
        if (n == 0) continue;
        out << x << ',' << y << ',' << b << ',' << format_double(*rsrp_.query(lin, b)) << ','
            << n << '\n';
      }
    }
  out << "MOB: tile_x,tile_y,vq,aq,v,a,count\n";
  for (const auto& [key, counts] : mobility_.entries())
    for (const auto& [m, c] : counts)
      out << key.tile.x << ',' << key.tile.y << ',' << format_double(key.current.speed) << ','
          << key.current.direction << ',' << format_double(m.speed) << ',' << m.direction << ','
          << c << '\n';
}

std::string Rem::to_string() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

Rem Rem::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty REM artifact");
  const auto tokens = split(trim(line), ' ');
  if (tokens.empty() || tokens[0] != "REMv1") throw FormatError("not a REMv1 artifact");
  Grid grid;
  grid.tile_size = parse_double(header_value(tokens, "g"));
  grid.nx = static_cast<int>(parse_int(header_value(tokens, "nx")));
  grid.ny = static_cast<int>(parse_int(header_value(tokens, "ny")));
  const int n_beams = static_cast<int>(parse_int(header_value(tokens, "nbeams")));
  Averaging avg = Averaging::Db;
  for (auto t : tokens)
    if (t == "avg=linear") avg = Averaging::Linear;
  if (grid.tile_size <= 0 || grid.nx <= 0 || grid.ny <= 0 || n_beams <= 0)
    throw FormatError("REM header has non-positive dimensions");
  Rem rem(grid, n_beams, avg);

  enum class Section { None, Rsrp, Mob } section = Section::None;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty()) continue;
    if (text.starts_with("RSRP:")) {
      section = Section::Rsrp;
      continue;
    }
    if (text.starts_with("MOB:")) {
      section = Section::Mob;
      continue;
    }
    const auto f = split(text, ',');
    try {
      if (section == Section::Rsrp && f.size() == 5) {
        const TileIndex t{static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1]))};
        if (!grid.valid(t)) throw FormatError("REM row outside the grid");
        rem.rsrp_.restore(grid.linear(t), static_cast<int>(parse_int(f[2])), parse_double(f[3]),
                          parse_int(f[4]));
      } else if (section == Section::Mob && f.size() == 7) {
        const TileIndex t{static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1]))};
        const Motion cur{parse_double(f[2]), static_cast<int>(parse_int(f[3]))};
        const Motion next{parse_double(f[4]), static_cast<int>(parse_int(f[5]))};
        rem.mobility_.observe(t, cur, next, parse_int(f[6]));
      } else {
        throw FormatError("unexpected REM line");
      }
    } catch (const std::out_of_range& e) {
      throw FormatError(std::string("REM row out of range: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("bad REM row: ") + e.what());
    }
  }
  return rem;
}

Rem Rem::from_string(const std::string& text) {
  std::istringstream is(text);
  return read(is);
}

std::string Rem::checksum() const { return fnv1a_hex(to_string()); }

void write_rem_file(const Rem& rem, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  rem.write(out);
}

Rem read_rem_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return Rem::read(in);
}

}  // namespace gobrem::rem
