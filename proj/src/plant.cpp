#include "nextmon/plant.hpp"

#include <cmath>
#include <random>

#include "nextmon/errors.hpp"

namespace nextmon {

ThermalPlant::ThermalPlant(thermal::HouseParams params, thermal::WeatherSeries weather,
                           std::vector<std::pair<double, double>> schedule, double band, double initial_t_in,
                           double dt, bool wrap_weather)
    : params_(params),
      weather_(std::move(weather)),
      schedule_(std::move(schedule)),
      band_(band),
      dt_(dt),
      wrap_(wrap_weather) {
  params_.validate();
  weather_.validate();
  if (schedule_.empty()) throw ConfigError("setpoint schedule must not be empty");
  state_.t_in = initial_t_in;
  state_.t_set = scheduled_setpoint(0.0);
  state_.heater_on = false;
}

double ThermalPlant::scheduled_setpoint(double hours) const {
  double sp = schedule_.front().second;
  for (const auto& [start, value] : schedule_)
    if (hours >= start) sp = value;
  return sp;
}

std::size_t ThermalPlant::horizon_steps() const {
  if (wrap_) return 0;
  return static_cast<std::size_t>(std::floor(weather_.duration() / dt_));
}

void ThermalPlant::set_weather(thermal::WeatherSeries weather) {
  weather.validate();
  weather_ = std::move(weather);
}

std::vector<double> ThermalPlant::prepare() {
  double seconds = static_cast<double>(state_.step) * dt_;
  if (wrap_) seconds = std::fmod(seconds, weather_.duration());
  state_.t_out = thermal::sample_outdoor(weather_, seconds);
  state_.t_set = override_ ? *override_ : scheduled_setpoint(static_cast<double>(state_.step) * dt_ / 3600.0);
  state_.heater_on = thermal::control_hysteresis(state_, band_);
  return {state_.t_out, state_.t_in, state_.heater_on ? 1.0 : 0.0, state_.t_set};
}

void ThermalPlant::advance() { state_ = thermal::step_house(params_, state_, dt_); }

nlohmann::json ThermalPlant::snapshot() const {
  nlohmann::json j = {{"step", state_.step},
                      {"t_in", state_.t_in},
                      {"t_out", state_.t_out},
                      {"heater_on", state_.heater_on},
                      {"t_set", state_.t_set}};
  j["setpoint_override"] = override_ ? nlohmann::json(*override_) : nlohmann::json(nullptr);
  return j;
}

void ThermalPlant::restore(const nlohmann::json& j) {
  state_.step = j.at("step").get<std::size_t>();
  state_.t_in = j.at("t_in").get<double>();
  state_.t_out = j.at("t_out").get<double>();
  state_.heater_on = j.at("heater_on").get<bool>();
  state_.t_set = j.at("t_set").get<double>();
  if (j.at("setpoint_override").is_null())
    override_.reset();
  else
    override_ = j.at("setpoint_override").get<double>();
}

WaterTankPlant::WaterTankPlant(TankParams params, std::uint64_t seed)
    : params_(std::move(params)), seed_(seed), temperature_(params_.ambient), rng_state_(seed) {}

double WaterTankPlant::control_at(std::size_t step) {
  std::mt19937_64 rng(rng_state_);
  auto draw = [&rng](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); };
  while (generated_until_ <= step) {
    // Alternate heating at a random level with cooling.
    const double level = params_.power_levels[static_cast<std::size_t>(rng() % params_.power_levels.size())];
    episodes_.emplace_back(generated_until_, level);
    generated_until_ += draw(params_.min_on, params_.max_on);
    episodes_.emplace_back(generated_until_, 0.0);
    generated_until_ += draw(params_.min_off, params_.max_off);
    rng_state_ = rng();
    rng.seed(rng_state_);
  }
  double u = 0.0;
  for (auto it = episodes_.rbegin(); it != episodes_.rend(); ++it) {
    if (it->first <= step) {
      u = it->second;
      break;
    }
  }
  return u;
}

std::vector<double> WaterTankPlant::prepare() {
  control_ = control_at(step_);
  return {control_, temperature_};
}

void WaterTankPlant::advance() {
  temperature_ += -params_.loss * (temperature_ - params_.ambient) + params_.gain * control_;
  if (!std::isfinite(temperature_)) throw SimulationFault("tank temperature diverged");
  ++step_;
}

nlohmann::json WaterTankPlant::snapshot() const {
  return {{"step", step_}, {"temperature", temperature_}, {"control", control_}};
}

void WaterTankPlant::restore(const nlohmann::json& j) {
  step_ = j.at("step").get<std::size_t>();
  temperature_ = j.at("temperature").get<double>();
  control_ = j.at("control").get<double>();
}

std::unique_ptr<Plant> make_plant(const RunConfig& config, bool wrap_weather) {
  if (config.plant == "watertank") return std::make_unique<WaterTankPlant>(config.tank, config.seed);
  return std::make_unique<ThermalPlant>(config.house, thermal::load_weather(config.weather), config.setpoint_schedule,
                                        config.hysteresis_band, config.initial_t_in, config.dt, wrap_weather);
}

}  // namespace nextmon
