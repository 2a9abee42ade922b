#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nextmon/events.hpp"
#include "nextmon/features.hpp"
#include "nextmon/nexting.hpp"
#include "nextmon/thermal.hpp"

namespace nextmon {

inline constexpr int kConfigSchemaVersion = 1;

/// First-order lag water tank used by the watertank demo.
struct TankParams {
  double ambient = 20.0;
  /// Fractional heat loss per step.
  double loss = 0.02;
  /// Temperature gain per step at full power.
  double gain = 1.2;
  std::vector<double> power_levels{0.5, 0.75, 1.0};
  std::size_t min_on = 40, max_on = 140;
  std::size_t min_off = 60, max_off = 200;
};

struct ServiceSettings {
  double speed = 60.0;
  double setpoint_min = 5.0;
  double setpoint_max = 35.0;
  std::size_t queue_capacity = 256;
  std::filesystem::path assets;
};

/// Everything needed to reproduce one experiment.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "run";
  /// "thermal" or "watertank".
  std::string plant = "thermal";
  std::filesystem::path weather;
  std::map<std::string, std::filesystem::path> scenarios;
  /// Defaults to the full weather duration (thermal) or 12000 (watertank).
  std::optional<std::size_t> steps;
  double dt = 60.0;
  thermal::HouseParams house;
  double initial_t_in = 23.0;
  /// (start hour, setpoint) pairs sorted by start hour.
  std::vector<std::pair<double, double>> setpoint_schedule{{0.0, 23.0}};
  double hysteresis_band = 1.0;
  TankParams tank;

  features::CoderConfig coder;
  /// "uniform" or "random" (seeded); explicit tables in the coder win.
  std::string offsets = "uniform";
  std::vector<Horizon> horizons;
  std::optional<double> alpha;
  double lambda = 0.9;
  std::string reward_channel = "t_in";

  events::EventParams events;
  std::size_t burn_in_steps = 6000;
  /// A heater-off event counts as anticipated when a predicted switch-off
  /// marker falls within this many steps before it.
  std::size_t match_window_steps = 30;
  double epsilon = 1e-6;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  ServiceSettings service;

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
  /// Observation channels of the configured plant, in CSV order.
  std::vector<std::string> channels() const;
  /// Coder with seeded offsets applied when `offsets == "random"`.
  features::CoderConfig resolved_coder() const;
};

/// Parses a config document; relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Parses and validates the "coder" object of a config document on its own.
features::CoderConfig parse_coder_config(const nlohmann::json& doc);
nlohmann::json to_json(const features::CoderConfig& coder);

/// The 20-day thermal experiment: one room, 23 degC setpoint, 50-minute horizon.
RunConfig thermal_default_config(const std::filesystem::path& weather);
/// Synthetic water tank with horizons tau = 4 and tau = 16 and history depth 4.
RunConfig watertank_config();

}  // namespace nextmon
