#include "nextmon/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "nextmon/errors.hpp"

namespace nextmon {

using nlohmann::json;

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  if (plant != "thermal" && plant != "watertank") throw ConfigError("plant must be 'thermal' or 'watertank'");
  if (horizons.empty()) throw ConfigError("at least one horizon is required");
  std::set<std::string> labels;
  for (const auto& h : horizons) {
    if (h.label.empty()) throw ConfigError("horizon label must not be empty");
    if (!labels.insert(h.label).second) throw ConfigError("duplicate horizon label '" + h.label + "'");
    if (!(h.gamma >= 0.0 && h.gamma < 1.0)) throw ConfigError("horizon '" + h.label + "': gamma must lie in [0,1)");
  }
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (alpha && !(*alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (offsets != "uniform" && offsets != "random") throw ConfigError("offsets must be 'uniform' or 'random'");
  if (steps && *steps == 0) throw ConfigError("steps must be > 0");

  coder.validate();
  const auto chans = channels();
  for (const auto& c : coder.channels())
    if (std::find(chans.begin(), chans.end(), c) == chans.end())
      throw ConfigError("coder channel '" + c + "' is not produced by plant '" + plant + "'");
  if (std::find(chans.begin(), chans.end(), reward_channel) == chans.end())
    throw ConfigError("reward channel '" + reward_channel + "' is not produced by plant '" + plant + "'");
  events.validate();

  if (plant == "thermal") {
    house.validate();
    if (weather.empty()) throw ConfigError("thermal plant needs a weather file");
    if (!std::filesystem::exists(weather)) throw ConfigError("weather file not found: " + weather.string());
    for (const auto& [id, path] : scenarios)
      if (!std::filesystem::exists(path)) throw ConfigError("scenario '" + id + "' file not found: " + path.string());
    if (setpoint_schedule.empty()) throw ConfigError("setpoint schedule must not be empty");
    for (std::size_t i = 0; i < setpoint_schedule.size(); ++i) {
      if (!std::isfinite(setpoint_schedule[i].second)) throw ConfigError("setpoint must be finite");
      if (i > 0 && !(setpoint_schedule[i].first > setpoint_schedule[i - 1].first))
        throw ConfigError("setpoint schedule must be sorted by start hour");
    }
    if (!(hysteresis_band > 0.0)) throw ConfigError("hysteresis band must be > 0");
    if (!std::isfinite(initial_t_in)) throw ConfigError("initial indoor temperature must be finite");
  } else {
    if (tank.power_levels.empty()) throw ConfigError("tank needs power levels");
    if (tank.min_on < 1 || tank.max_on < tank.min_on || tank.min_off < 1 || tank.max_off < tank.min_off)
      throw ConfigError("tank episode lengths must satisfy 1 <= min <= max");
    if (!(tank.loss > 0.0 && tank.loss < 1.0)) throw ConfigError("tank loss must lie in (0,1)");
  }
  if (!(service.setpoint_min < service.setpoint_max)) throw ConfigError("service setpoint range is empty");
  if (service.queue_capacity < 1) throw ConfigError("service queue capacity must be >= 1");
}

std::vector<std::string> RunConfig::channels() const {
  if (plant == "watertank") return {"control", "temperature"};
  return {"t_out", "t_in", "heater", "t_set"};
}

features::CoderConfig RunConfig::resolved_coder() const {
  auto c = coder;
  if (offsets == "random") features::randomize_offsets(c, seed);
  return c;
}

namespace {

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) out = it->get<T>();
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

features::CoderConfig parse_coder(const json& j) {
  check_keys(j, {"history_depth", "groups"}, "coder");
  features::CoderConfig c;
  read(j, "history_depth", c.history_depth);
  for (const auto& g : j.at("groups")) {
    check_keys(g, {"dims", "num_tilings", "offsets"}, "coder group");
    features::TilingGroupSpec spec;
    read(g, "num_tilings", spec.num_tilings);
    read(g, "offsets", spec.offsets);
    for (const auto& d : g.at("dims")) {
      check_keys(d, {"channel", "lower", "upper", "tiles", "discrete"}, "coder dimension");
      features::DimensionSpec dim;
      dim.channel = d.at("channel").get<std::string>();
      dim.lower = d.at("lower").get<double>();
      dim.upper = d.at("upper").get<double>();
      dim.tiles = d.at("tiles").get<int>();
      read(d, "discrete", dim.discrete);
      spec.dims.push_back(dim);
    }
    c.groups.push_back(std::move(spec));
  }
  return c;
}

json coder_json(const features::CoderConfig& c) {
  json groups = json::array();
  for (const auto& g : c.groups) {
    json dims = json::array();
    for (const auto& d : g.dims) {
      json dj = {{"channel", d.channel}, {"lower", d.lower}, {"upper", d.upper}, {"tiles", d.tiles}};
      if (d.discrete) dj["discrete"] = true;
      dims.push_back(dj);
    }
    json gj = {{"dims", dims}, {"num_tilings", g.num_tilings}};
    if (!g.offsets.empty()) gj["offsets"] = g.offsets;
    groups.push_back(gj);
  }
  return {{"history_depth", c.history_depth}, {"groups", groups}};
}

Horizon parse_horizon(const json& j) {
  check_keys(j, {"label", "tau", "gamma"}, "horizon");
  const bool has_tau = j.contains("tau"), has_gamma = j.contains("gamma");
  if (has_tau == has_gamma) throw ConfigError("horizon needs exactly one of tau or gamma");
  std::string label;
  read(j, "label", label);
  try {
    if (has_tau) {
      const double tau = j.at("tau").get<double>();
      if (label.empty()) label = "tau" + j.at("tau").dump();
      return Horizon::from_tau(tau, label);
    }
    const double gamma = j.at("gamma").get<double>();
    if (label.empty()) label = "gamma" + j.at("gamma").dump();
    return Horizon::from_gamma(gamma, label);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("horizon: ") + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  try {
    check_keys(doc,
               {"schema_version", "name", "plant", "weather", "scenarios", "steps", "dt_seconds", "house",
                "initial_t_in", "setpoint_schedule", "hysteresis_band", "tank", "coder", "offsets", "horizons",
                "alpha", "lambda", "reward_channel", "events", "burn_in_steps", "match_window_steps", "epsilon",
                "output_dir", "seed", "service"},
               "config");
    RunConfig c;
    if (!doc.contains("schema_version")) throw ConfigError("config is missing schema_version");
    read(doc, "schema_version", c.schema_version);
    if (c.schema_version != kConfigSchemaVersion)
      throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    read(doc, "name", c.name);
    read(doc, "plant", c.plant);
    if (c.plant == "watertank") c.reward_channel = "temperature";
    if (auto it = doc.find("weather"); it != doc.end()) c.weather = resolve(base_dir, it->get<std::string>());
    if (auto it = doc.find("scenarios"); it != doc.end())
      for (const auto& [id, p] : it->items()) c.scenarios[id] = resolve(base_dir, p.get<std::string>());
    if (auto it = doc.find("steps"); it != doc.end() && !it->is_null()) c.steps = it->get<std::size_t>();
    read(doc, "dt_seconds", c.dt);
    if (auto it = doc.find("house"); it != doc.end()) {
      const auto& h = *it;
      check_keys(h,
                 {"a_windows", "u_windows", "a_walls", "u_walls", "c_air", "c_furniture", "c_walls", "heater_power",
                  "efficiency"},
                 "house");
      read(h, "a_windows", c.house.a_windows);
      read(h, "u_windows", c.house.u_windows);
      read(h, "a_walls", c.house.a_walls);
      read(h, "u_walls", c.house.u_walls);
      read(h, "c_air", c.house.c_air);
      read(h, "c_furniture", c.house.c_furniture);
      read(h, "c_walls", c.house.c_walls);
      read(h, "heater_power", c.house.heater_power);
      read(h, "efficiency", c.house.efficiency);
    }
    read(doc, "initial_t_in", c.initial_t_in);
    if (auto it = doc.find("setpoint_schedule"); it != doc.end()) {
      c.setpoint_schedule.clear();
      for (const auto& e : *it) {
        check_keys(e, {"start_hour", "setpoint"}, "setpoint_schedule entry");
        c.setpoint_schedule.emplace_back(e.at("start_hour").get<double>(), e.at("setpoint").get<double>());
      }
    }
    read(doc, "hysteresis_band", c.hysteresis_band);
    if (auto it = doc.find("tank"); it != doc.end()) {
      const auto& t = *it;
      check_keys(t, {"ambient", "loss", "gain", "power_levels", "min_on", "max_on", "min_off", "max_off"}, "tank");
      read(t, "ambient", c.tank.ambient);
      read(t, "loss", c.tank.loss);
      read(t, "gain", c.tank.gain);
      read(t, "power_levels", c.tank.power_levels);
      read(t, "min_on", c.tank.min_on);
      read(t, "max_on", c.tank.max_on);
      read(t, "min_off", c.tank.min_off);
      read(t, "max_off", c.tank.max_off);
    }
    if (!doc.contains("coder")) throw ConfigError("config is missing coder");
    c.coder = parse_coder(doc.at("coder"));
    read(doc, "offsets", c.offsets);
    if (auto it = doc.find("horizons"); it != doc.end())
      for (const auto& h : *it) c.horizons.push_back(parse_horizon(h));
    if (auto it = doc.find("alpha"); it != doc.end() && !it->is_null()) c.alpha = it->get<double>();
    read(doc, "lambda", c.lambda);
    read(doc, "reward_channel", c.reward_channel);
    if (auto it = doc.find("events"); it != doc.end()) {
      const auto& e = *it;
      check_keys(e, {"smoothing_window", "half_width", "prominence_fraction", "range_window", "prominence"}, "events");
      read(e, "smoothing_window", c.events.smoothing_window);
      read(e, "half_width", c.events.half_width);
      read(e, "prominence_fraction", c.events.prominence_fraction);
      read(e, "range_window", c.events.range_window);
      if (auto p = e.find("prominence"); p != e.end() && !p->is_null()) c.events.prominence = p->get<double>();
    }
    read(doc, "burn_in_steps", c.burn_in_steps);
    read(doc, "match_window_steps", c.match_window_steps);
    read(doc, "epsilon", c.epsilon);
    if (auto it = doc.find("output_dir"); it != doc.end()) c.output_dir = resolve(base_dir, it->get<std::string>());
    read(doc, "seed", c.seed);
    if (auto it = doc.find("service"); it != doc.end()) {
      const auto& s = *it;
      check_keys(s, {"speed", "setpoint_min", "setpoint_max", "queue_capacity", "assets"}, "service");
      read(s, "speed", c.service.speed);
      read(s, "setpoint_min", c.service.setpoint_min);
      read(s, "setpoint_max", c.service.setpoint_max);
      read(s, "queue_capacity", c.service.queue_capacity);
      if (auto a = s.find("assets"); a != s.end()) c.service.assets = resolve(base_dir, a->get<std::string>());
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

features::CoderConfig parse_coder_config(const json& doc) {
  try {
    auto c = parse_coder(doc);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed coder: ") + e.what());
  }
}

json to_json(const features::CoderConfig& coder) { return coder_json(coder); }

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  json horizons = json::array();
  for (const auto& h : c.horizons) horizons.push_back({{"label", h.label}, {"gamma", h.gamma}});
  json schedule = json::array();
  for (const auto& [start, sp] : c.setpoint_schedule) schedule.push_back({{"start_hour", start}, {"setpoint", sp}});
  json scenarios = json::object();
  for (const auto& [id, p] : c.scenarios) scenarios[id] = p.string();
  json events = {{"smoothing_window", c.events.smoothing_window},
                 {"half_width", c.events.half_width},
                 {"prominence_fraction", c.events.prominence_fraction},
                 {"range_window", c.events.range_window}};
  if (c.events.prominence) events["prominence"] = *c.events.prominence;
  json doc = {
      {"schema_version", c.schema_version},
      {"name", c.name},
      {"plant", c.plant},
      {"dt_seconds", c.dt},
      {"house",
       {{"a_windows", c.house.a_windows},
        {"u_windows", c.house.u_windows},
        {"a_walls", c.house.a_walls},
        {"u_walls", c.house.u_walls},
        {"c_air", c.house.c_air},
        {"c_furniture", c.house.c_furniture},
        {"c_walls", c.house.c_walls},
        {"heater_power", c.house.heater_power},
        {"efficiency", c.house.efficiency}}},
      {"initial_t_in", c.initial_t_in},
      {"setpoint_schedule", schedule},
      {"hysteresis_band", c.hysteresis_band},
      {"tank",
       {{"ambient", c.tank.ambient},
        {"loss", c.tank.loss},
        {"gain", c.tank.gain},
        {"power_levels", c.tank.power_levels},
        {"min_on", c.tank.min_on},
        {"max_on", c.tank.max_on},
        {"min_off", c.tank.min_off},
        {"max_off", c.tank.max_off}}},
      {"coder", coder_json(c.coder)},
      {"offsets", c.offsets},
      {"horizons", horizons},
      {"alpha", c.alpha ? json(*c.alpha) : json(nullptr)},
      {"lambda", c.lambda},
      {"reward_channel", c.reward_channel},
      {"events", events},
      {"burn_in_steps", c.burn_in_steps},
      {"match_window_steps", c.match_window_steps},
      {"epsilon", c.epsilon},
      {"output_dir", c.output_dir.string()},
      {"seed", c.seed},
      {"scenarios", scenarios},
      {"service",
       {{"speed", c.service.speed},
        {"setpoint_min", c.service.setpoint_min},
        {"setpoint_max", c.service.setpoint_max},
        {"queue_capacity", c.service.queue_capacity},
        {"assets", c.service.assets.string()}}},
  };
  if (!c.weather.empty()) doc["weather"] = c.weather.string();
  doc["steps"] = c.steps ? json(*c.steps) : json(nullptr);
  return doc;
}

RunConfig thermal_default_config(const std::filesystem::path& weather) {
  RunConfig c;
  c.name = "thermal";
  c.plant = "thermal";
  c.weather = weather;
  c.reward_channel = "t_in";
  features::TilingGroupSpec room;
  room.dims = {{"t_in", 16.0, 28.0, 48, false}, {"heater", 0.0, 2.0, 2, true}};
  room.num_tilings = 8;
  features::TilingGroupSpec outdoor;
  outdoor.dims = {{"t_out", -10.0, 30.0, 10, false}};
  outdoor.num_tilings = 4;
  // One tile per degree of setpoint: acts as a learned per-setpoint bias.
  features::TilingGroupSpec setpoint;
  setpoint.dims = {{"t_set", 5.0, 35.0, 30, false}};
  setpoint.num_tilings = 1;
  c.coder.groups = {room, outdoor, setpoint};
  c.coder.history_depth = 0;
  c.horizons = {Horizon::from_tau(50.0, "50min")};
  c.burn_in_steps = 6000;
  c.output_dir = "out/thermal";
  return c;
}

RunConfig watertank_config() {
  RunConfig c;
  c.name = "watertank";
  c.plant = "watertank";
  c.dt = 60.0;
  c.steps = 12000;
  c.reward_channel = "temperature";
  features::TilingGroupSpec joint;
  joint.dims = {{"temperature", 15.0, 95.0, 20, false}, {"control", -0.125, 1.125, 5, true}};
  joint.num_tilings = 8;
  c.coder.groups = {joint};
  c.coder.history_depth = 4;
  c.horizons = {Horizon::from_tau(4.0, "tau4"), Horizon::from_tau(16.0, "tau16")};
  c.burn_in_steps = 3000;
  c.output_dir = "out/watertank";
  c.seed = 7;
  return c;
}

}  // namespace nextmon
