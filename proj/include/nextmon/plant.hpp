#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nextmon/config.hpp"
#include "nextmon/thermal.hpp"

namespace nextmon {

/// A simulated system observed by the learner. Each step is `prepare()`
/// (controller acts, sensors are read) followed by `advance()`.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::vector<std::string> channels() const = 0;
  /// Sensor and action values of the current step, in `channels()` order.
  virtual std::vector<double> prepare() = 0;
  virtual void advance() = 0;
  virtual std::size_t step() const = 0;
  /// Steps available before the plant's input data runs out (0 = unbounded).
  virtual std::size_t horizon_steps() const = 0;

  virtual nlohmann::json snapshot() const = 0;
  virtual void restore(const nlohmann::json& snapshot) = 0;
};

class ThermalPlant : public Plant {
 public:
  ThermalPlant(thermal::HouseParams params, thermal::WeatherSeries weather,
               std::vector<std::pair<double, double>> schedule, double band, double initial_t_in, double dt,
               bool wrap_weather = false);

  std::vector<std::string> channels() const override { return {"t_out", "t_in", "heater", "t_set"}; }
  std::vector<double> prepare() override;
  void advance() override;
  std::size_t step() const override { return state_.step; }
  std::size_t horizon_steps() const override;
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& snapshot) override;

  const thermal::HouseState& state() const { return state_; }
  const thermal::HouseParams& params() const { return params_; }
  double band() const { return band_; }
  /// Replaces the schedule with a fixed operator setpoint from the next step on.
  void set_setpoint(double setpoint) { override_ = setpoint; }
  std::optional<double> setpoint_override() const { return override_; }
  void set_weather(thermal::WeatherSeries weather);
  double scheduled_setpoint(double hours) const;

 private:
  thermal::HouseParams params_;
  thermal::WeatherSeries weather_;
  std::vector<std::pair<double, double>> schedule_;
  double band_;
  double dt_;
  bool wrap_;
  std::optional<double> override_;
  thermal::HouseState state_;
};

/// First-order lag tank heated in random episodes at discrete power levels.
class WaterTankPlant : public Plant {
 public:
  WaterTankPlant(TankParams params, std::uint64_t seed);

  std::vector<std::string> channels() const override { return {"control", "temperature"}; }
  std::vector<double> prepare() override;
  void advance() override;
  std::size_t step() const override { return step_; }
  std::size_t horizon_steps() const override { return 0; }
  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& snapshot) override;

  double temperature() const { return temperature_; }
  double control_at(std::size_t step);

 private:
  TankParams params_;
  std::uint64_t seed_;
  std::size_t step_ = 0;
  double temperature_;
  double control_ = 0.0;
  // Episode boundaries (start step, level), generated lazily from the seed.
  std::vector<std::pair<std::size_t, double>> episodes_;
  std::size_t generated_until_ = 0;
  std::uint64_t rng_state_;
};

/// Builds the plant described by `config` (loads weather files).
std::unique_ptr<Plant> make_plant(const RunConfig& config, bool wrap_weather = false);

}  // namespace nextmon
