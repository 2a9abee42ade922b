#include "nextmon/thermal.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nextmon/errors.hpp"

namespace nextmon::thermal {

void HouseParams::validate() const {
  const double values[] = {a_windows, u_windows, a_walls,      u_walls,   c_air,
                           c_furniture, c_walls, heater_power, efficiency};
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("house parameters must be positive and finite");
}

HouseState step_house(const HouseParams& params, const HouseState& state, double dt) {
  if (!(dt > 0.0)) throw DomainError("step_house: dt must be > 0");
  if (!std::isfinite(state.t_in) || !std::isfinite(state.t_out) || !std::isfinite(state.t_set))
    throw SimulationFault("non-finite house state at step " + std::to_string(state.step));
  const double power = state.heater_on ? params.heater_power : 0.0;
  const double rate = -params.k_loss() * (state.t_in - state.t_out) + params.k_gain() * power;
  HouseState next = state;
  next.t_in = state.t_in + dt * rate;
  next.step = state.step + 1;
  if (!std::isfinite(next.t_in)) throw SimulationFault("indoor temperature diverged at step " + std::to_string(next.step));
  return next;
}

bool control_hysteresis(const HouseState& state, double band) {
  if (state.t_in <= state.t_set - band) return true;
  if (state.t_in >= state.t_set + band) return false;
  return state.heater_on;
}

void WeatherSeries::validate() const {
  if (samples.size() < 2) throw ConfigError("weather series needs at least two samples");
  const long long spacing = samples[1].epoch_seconds - samples[0].epoch_seconds;
  if (spacing != 3600) throw ConfigError("weather series must be hourly");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].epoch_seconds - samples[i - 1].epoch_seconds != spacing)
      throw ConfigError("weather timestamps must be strictly increasing with uniform hourly spacing (sample " +
                        std::to_string(i) + ")");
  }
}

double WeatherSeries::duration() const {
  return static_cast<double>(samples.back().epoch_seconds - samples.front().epoch_seconds);
}

long long parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail[8] = {0};
  int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%*[T ]%2d:%2d:%2d%7s", &y, &mo, &d, &h, &mi, &s, tail);
  if (n < 6) {
    s = 0;
    tail[0] = 0;
    n = std::sscanf(text.c_str(), "%4d-%2d-%2d%*[T ]%2d:%2d%7s", &y, &mo, &d, &h, &mi, tail);
    if (n < 5) throw std::invalid_argument("not an ISO 8601 timestamp: '" + text + "'");
  }
  if (tail[0] != 0 && std::string(tail) != "Z") throw std::invalid_argument("unsupported timezone in '" + text + "'");
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59 || h < 0 || mi < 0 || s < 0)
    throw std::invalid_argument("invalid date/time in '" + text + "'");
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<long long>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_iso8601(long long epoch_seconds) {
  using namespace std::chrono;
  long long days = epoch_seconds >= 0 ? epoch_seconds / 86400 : -((-epoch_seconds + 86399) / 86400);
  long long rem = epoch_seconds - days * 86400;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600, (rem / 60) % 60,
                rem % 60);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  while (!s.empty() && !not_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && !not_space(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

double parse_temperature(const std::string& cell, const std::string& source, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ParseError(source, line, "bad temperature '" + cell + "'");
  }
  if (used != cell.size() || !std::isfinite(v)) throw ParseError(source, line, "bad temperature '" + cell + "'");
  return v;
}

}  // namespace

WeatherSeries parse_weather_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int dt_col = -1, temp_col = -1;
  WeatherSeries series;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    for (auto& c : cells) c = trim(c);
    if (dt_col < 0) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "datetime") dt_col = static_cast<int>(i);
        if (cells[i] == "temp_c") temp_col = static_cast<int>(i);
      }
      if (dt_col < 0 || temp_col < 0) throw ParseError(source, lineno, "header must name columns datetime,temp_c");
      continue;
    }
    if (cells.size() <= static_cast<std::size_t>(std::max(dt_col, temp_col)))
      throw ParseError(source, lineno, "expected " + std::to_string(std::max(dt_col, temp_col) + 1) + " columns");
    WeatherSample s;
    try {
      s.epoch_seconds = parse_iso8601(cells[static_cast<std::size_t>(dt_col)]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, e.what());
    }
    s.temp_c = parse_temperature(cells[static_cast<std::size_t>(temp_col)], source, lineno);
    if (!series.samples.empty() && s.epoch_seconds <= series.samples.back().epoch_seconds)
      throw ParseError(source, lineno, "timestamps must be strictly increasing");
    series.samples.push_back(s);
  }
  if (dt_col < 0) throw ParseError(source, lineno, "missing header");
  series.validate();
  return series;
}

WeatherSeries parse_epw(const std::string& text, const std::string& source) {
  constexpr std::size_t kHeaderLines = 8;
  constexpr std::size_t kDryBulbColumn = 6;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int first_year = 0;
  WeatherSeries series;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno <= kHeaderLines) continue;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() <= kDryBulbColumn) throw ParseError(source, lineno, "too few EPW columns");
    int year = 0, month = 0, day = 0, hour = 0;
    try {
      year = std::stoi(cells[0]);
      month = std::stoi(cells[1]);
      day = std::stoi(cells[2]);
      hour = std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw ParseError(source, lineno, "bad EPW date fields");
    }
    if (series.samples.empty()) first_year = year;
    if (hour < 1 || hour > 24) throw ParseError(source, lineno, "EPW hour must be 1..24");
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "%04d-%02d-%02dT%02d:00:00", first_year, month, day, hour - 1);
    WeatherSample s;
    try {
      s.epoch_seconds = parse_iso8601(stamp);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, e.what());
    }
    s.temp_c = parse_temperature(trim(cells[kDryBulbColumn]), source, lineno);
    if (!series.samples.empty() && s.epoch_seconds <= series.samples.back().epoch_seconds)
      throw ParseError(source, lineno, "timestamps must be strictly increasing");
    series.samples.push_back(s);
  }
  series.validate();
  return series;
}

WeatherSeries load_weather(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open weather file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".epw") return parse_epw(buf.str(), path.string());
  return parse_weather_csv(buf.str(), path.string());
}

double sample_outdoor(const WeatherSeries& series, double seconds) {
  if (series.samples.size() < 2) throw DomainError("sample_outdoor: series too short");
  if (!(seconds >= 0.0) || seconds > series.duration()) throw DomainError("sample_outdoor: time outside weather range");
  const double hours = seconds / 3600.0;
  auto i = static_cast<std::size_t>(std::floor(hours));
  if (i >= series.samples.size() - 1) return series.samples.back().temp_c;
  const double frac = hours - static_cast<double>(i);
  const double a = series.samples[i].temp_c;
  const double b = series.samples[i + 1].temp_c;
  return a + frac * (b - a);
}

}  // namespace nextmon::thermal
