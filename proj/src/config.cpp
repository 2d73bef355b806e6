#include "gobrem/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gobrem {
namespace {

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

double to_double(std::string_view v) {
  try {
    return parse_double(v);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

long long to_int(std::string_view v) {
  try {
    return parse_int(v);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

bool to_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

template <class T>
Field real(const char* section, const char* key, T RunConfig::*group, double T::*member) {
  return {section, key, [=](const RunConfig& c) { return format_double(c.*group.*member); },
          [=](RunConfig& c, std::string_view v) { c.*group.*member = to_double(v); }};
}

template <class T, class I>
Field integer(const char* section, const char* key, T RunConfig::*group, I T::*member) {
  return {section, key, [=](const RunConfig& c) { return std::to_string(c.*group.*member); },
          [=](RunConfig& c, std::string_view v) {
            const long long n = to_int(v);
            if constexpr (std::is_unsigned_v<I>) {
              if (n < 0) throw ConfigError("seed must be non-negative");
            }
            c.*group.*member = static_cast<I>(n);
          }};
}

const std::vector<Field>& fields() {
  using sim::ChannelConfig;
  using sim::RemConfig;
  using sim::ScenarioConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    constexpr auto sc = &RunConfig::scenario;
    f.push_back(real("scenario", "cell_width", sc, &ScenarioConfig::cell_width));
    f.push_back(real("scenario", "cell_height", sc, &ScenarioConfig::cell_height));
    f.push_back(real("scenario", "ssb_period_ms", sc, &ScenarioConfig::ssb_period_ms));
    f.push_back(integer("scenario", "n_ues", sc, &ScenarioConfig::n_ues));
    f.push_back(real("scenario", "speed", sc, &ScenarioConfig::speed));
    f.push_back({"scenario", "directions",
                 [](const RunConfig& c) {
                   std::string out;
                   for (int d : c.scenario.directions) {
                     if (!out.empty()) out += ',';
                     out += std::to_string(d);
                   }
                   return out;
                 },
                 [](RunConfig& c, std::string_view v) {
                   c.scenario.directions.clear();
                   for (auto t : split(v, ','))
                     c.scenario.directions.push_back(static_cast<int>(to_int(trim(t))));
                 }});
    f.push_back(real("scenario", "delta_th", sc, &ScenarioConfig::delta_th));
    f.push_back(real("scenario", "duration_s", sc, &ScenarioConfig::duration_s));
    f.push_back(real("scenario", "road_x", sc, &ScenarioConfig::road_x));
    f.push_back(real("scenario", "position_noise", sc, &ScenarioConfig::position_noise));
    f.push_back({"scenario", "fading",
                 [](const RunConfig& c) { return std::string(c.scenario.fading ? "true" : "false"); },
                 [](RunConfig& c, std::string_view v) { c.scenario.fading = to_bool(v); }});
    f.push_back(integer("scenario", "traffic_seed", sc, &ScenarioConfig::traffic_seed));

    constexpr auto ch = &RunConfig::channel;
    f.push_back({"channel", "rows", [](const RunConfig& c) { return std::to_string(c.channel.array.rows); },
                 [](RunConfig& c, std::string_view v) { c.channel.array.rows = static_cast<int>(to_int(v)); }});
    f.push_back({"channel", "cols", [](const RunConfig& c) { return std::to_string(c.channel.array.cols); },
                 [](RunConfig& c, std::string_view v) { c.channel.array.cols = static_cast<int>(to_int(v)); }});
    auto array_real = [](const char* key, double channel::ArrayConfig::*m) {
      return Field{"channel", key, [=](const RunConfig& c) { return format_double(c.channel.array.*m); },
                   [=](RunConfig& c, std::string_view v) { c.channel.array.*m = to_double(v); }};
    };
    f.push_back(array_real("element_spacing", &channel::ArrayConfig::element_spacing));
    f.push_back(array_real("gnb_height", &channel::ArrayConfig::height));
    f.push_back({"channel", "gnb_x", [](const RunConfig& c) { return format_double(c.channel.array.position.x()); },
                 [](RunConfig& c, std::string_view v) { c.channel.array.position.x() = to_double(v); }});
    f.push_back({"channel", "gnb_y", [](const RunConfig& c) { return format_double(c.channel.array.position.y()); },
                 [](RunConfig& c, std::string_view v) { c.channel.array.position.y() = to_double(v); }});
    f.push_back(array_real("tx_power_density", &channel::ArrayConfig::tx_power_density));
    f.push_back(array_real("bandwidth", &channel::ArrayConfig::bandwidth));
    f.push_back(array_real("center_frequency", &channel::ArrayConfig::center_frequency));
    f.push_back(integer("channel", "n_beams", ch, &ChannelConfig::n_beams));
    f.push_back(real("channel", "shadowing_sigma", ch, &ChannelConfig::shadowing_sigma));
    f.push_back(real("channel", "correlation_distance", ch, &ChannelConfig::correlation_distance));
    f.push_back(real("channel", "shadowing_resolution", ch, &ChannelConfig::shadowing_resolution));
    f.push_back(integer("channel", "seed", ch, &ChannelConfig::seed));

    constexpr auto rm = &RunConfig::rem;
    f.push_back(real("rem", "tile_size", rm, &RemConfig::tile_size));
    f.push_back(integer("rem", "passes", rm, &RemConfig::passes));
    f.push_back({"rem", "averaging",
                 [](const RunConfig& c) {
                   return std::string(c.rem.averaging == rem::Averaging::Linear ? "linear" : "db");
                 },
                 [](RunConfig& c, std::string_view v) {
                   if (v == "db") c.rem.averaging = rem::Averaging::Db;
                   else if (v == "linear") c.rem.averaging = rem::Averaging::Linear;
                   else throw ConfigError("averaging must be db or linear");
                 }});

    constexpr auto so = &RunConfig::solver;
    f.push_back(real("solver", "beta", so, &SolverConfig::beta));
    f.push_back(real("solver", "gamma", so, &SolverConfig::gamma));
    f.push_back(real("solver", "tol", so, &SolverConfig::tol));
    f.push_back(integer("solver", "max_rounds", so, &SolverConfig::max_rounds));

    f.push_back({"xapp", "fallback_delta_ho",
                 [](const RunConfig& c) { return format_double(c.fallback_delta_ho); },
                 [](RunConfig& c, std::string_view v) { c.fallback_delta_ho = to_double(v); }});
    f.push_back({"output", "dir", [](const RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); }});
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  scenario.validate();
  channel.array.validate(channel.n_beams);
  if (channel.n_beams < 1) throw ConfigError("n_beams must be positive");
  if (channel.shadowing_sigma < 0) throw ConfigError("shadowing_sigma must be non-negative");
  if (!(channel.correlation_distance > 0)) throw ConfigError("correlation_distance must be positive");
  if (!(channel.shadowing_resolution > 0)) throw ConfigError("shadowing_resolution must be positive");
  if (!(rem.tile_size > 0)) throw ConfigError("tile_size must be positive");
  if (rem.passes < 1) throw ConfigError("passes must be at least 1");
  reward_params().validate();
  if (!(solver.gamma > 0 && solver.gamma < 1)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(solver.tol > 0)) throw ConfigError("tol must be positive");
  if (solver.max_rounds < 1) throw ConfigError("max_rounds must be positive");
  if (!(fallback_delta_ho >= 0)) throw ConfigError("fallback_delta_ho must be non-negative");
  if (output_dir.empty()) throw ConfigError("output dir must not be empty");
}

mdp::RewardParams RunConfig::reward_params() const {
  return {solver.beta, scenario.delta_th};
}

mdp::TrainingOptions RunConfig::training_options() const {
  mdp::TrainingOptions o;
  o.gamma = solver.gamma;
  o.tol = solver.tol;
  o.ssb_period_ms = scenario.ssb_period_ms;
  o.max_rounds = solver.max_rounds;
  return o;
}

std::string RunConfig::to_string() const {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(*this) << '\n';
  }
  return os.str();
}

std::string RunConfig::checksum() const { return fnv1a_hex(to_string()); }

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> known_sections;
  for (const auto& f : fields()) known_sections.insert(f.section);
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  int line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_sections.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : fields())
      if (section == f.section && key == f.key) field = &f;
    if (!field) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert({section, key}).second)
      throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      field->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + section + "." + key + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return RunConfig::parse(os.str());
}

}  // namespace gobrem
