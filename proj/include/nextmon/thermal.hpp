#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace nextmon::thermal {

/// Single-room house. Areas in m^2, U-values in W/(m^2 K), capacities in J/K.
struct HouseParams {
  double a_windows = 2.0;
  double u_windows = 50.0;
  double a_walls = 10.0;
  double u_walls = 1.0;
  double c_air = 39000.0;
  double c_furniture = 840000.0;
  double c_walls = 9e6;
  double heater_power = 2000.0;
  double efficiency = 0.8;

  void validate() const;
  double capacity() const { return c_air + c_furniture + c_walls; }
  /// Envelope conductance a_windows u_windows + a_walls u_walls [W/K].
  double conductance() const { return a_windows * u_windows + a_walls * u_walls; }
  /// Heat-loss rate [1/s]; the lumped model's "alpha".
  double k_loss() const { return conductance() / capacity(); }
  /// Heater gain [K/J]; the lumped model's "beta".
  double k_gain() const { return efficiency / capacity(); }
  /// Indoor-outdoor offset reached at full power.
  double full_power_offset() const { return efficiency * heater_power / conductance(); }
};

struct HouseState {
  std::size_t step = 0;
  double t_in = 20.0;
  double t_out = 10.0;
  bool heater_on = false;
  double t_set = 23.0;

  bool operator==(const HouseState&) const = default;
};

/// Explicit Euler step of dT_in/dt = -k_loss (T_in - T_out) + k_gain P.
/// Throws SimulationFault if the state is or becomes non-finite.
HouseState step_house(const HouseParams& params, const HouseState& state, double dt = 60.0);

/// On at or below T_set - band, off at or above T_set + band, unchanged in between.
bool control_hysteresis(const HouseState& state, double band = 1.0);

struct WeatherSample {
  /// Seconds since the Unix epoch (UTC, no leap seconds).
  long long epoch_seconds = 0;
  double temp_c = 0.0;
};

/// Uniform hourly outdoor temperature samples.
struct WeatherSeries {
  std::vector<WeatherSample> samples;

  void validate() const;
  /// Seconds covered from the first to the last sample.
  double duration() const;
  long long start() const { return samples.front().epoch_seconds; }
};

/// CSV with header `datetime,temp_c`; datetime is ISO 8601
/// (`YYYY-MM-DDTHH:MM[:SS][Z]`). Throws ParseError with the line number.
WeatherSeries parse_weather_csv(const std::string& text, const std::string& source = "<weather>");

/// EnergyPlus EPW: 8 header lines, then rows whose column 6 (0-based) is the
/// dry-bulb temperature. Hour h (1..24) is stamped at (h-1):00 and every row
/// takes the first row's year.
WeatherSeries parse_epw(const std::string& text, const std::string& source = "<epw>");

/// Dispatches on extension: `.epw` to the EPW importer, anything else to CSV.
WeatherSeries load_weather(const std::filesystem::path& path);

/// Linear interpolation at `seconds` after the first sample.
/// Throws DomainError outside [0, duration].
double sample_outdoor(const WeatherSeries& series, double seconds);

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]` into epoch seconds; throws std::invalid_argument.
long long parse_iso8601(const std::string& text);
std::string format_iso8601(long long epoch_seconds);

}  // namespace nextmon::thermal
