#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "nextmon/errors.hpp"
#include "nextmon/plant.hpp"
#include "nextmon/thermal.hpp"

using namespace nextmon;
using namespace nextmon::thermal;

namespace {

const std::string kWeather = std::string(NEXTMON_SOURCE_DIR) + "/data/weather_berlin_april.csv";

WeatherSeries flat_weather(double temp, int hours) {
  WeatherSeries w;
  for (int h = 0; h <= hours; ++h) w.samples.push_back({1459468800LL + h * 3600LL, temp});
  return w;
}

}  // namespace

TEST(House, ParametersDeriveExpectedRates) {
  HouseParams p;
  EXPECT_DOUBLE_EQ(p.capacity(), 9879000.0);
  EXPECT_DOUBLE_EQ(p.conductance(), 110.0);
  EXPECT_NEAR(1.0 / p.k_loss(), 89809.09, 0.01);
  EXPECT_NEAR(p.full_power_offset(), 14.545, 0.001);
}

TEST(House, EquilibriumWithoutHeat) {
  HouseState s{0, 12.5, 12.5, false, 23.0};
  for (int i = 0; i < 1000; ++i) s = step_house(HouseParams{}, s, 60.0);
  EXPECT_EQ(s.t_in, 12.5);
  EXPECT_EQ(s.step, 1000u);
}

TEST(House, FullPowerSteadyStateOffset) {
  HouseParams p;
  HouseState s{0, 5.0, 5.0, true, 23.0};
  for (int i = 0; i < 60 * 24 * 60; ++i) s = step_house(p, s, 60.0);  // 60 days, ~58 time constants
  EXPECT_NEAR(s.t_in - s.t_out, 1600.0 / 110.0, 0.01);
}

TEST(House, RelaxationIsExponentialWithOneOverKLoss) {
  // Analytic oracle: (T_in - T_out)(t) = d0 exp(-k t). Explicit Euler gives
  // exactly d0 (1 - k dt)^n, which drifts from the exponential by about
  // k dt (k t) / 2 relative.
  HouseParams p;
  const double k = 110.0 / 9879000.0;
  HouseState s{0, 25.0, 5.0, false, 23.0};
  const int steps = static_cast<int>(std::round(89809.0909 / 60.0));
  for (int i = 0; i < steps; ++i) s = step_house(p, s, 60.0);
  const double t = steps * 60.0;
  EXPECT_NEAR((s.t_in - s.t_out) / 20.0, std::pow(1.0 - k * 60.0, steps), 1e-12);
  EXPECT_NEAR((s.t_in - s.t_out) / 20.0, std::exp(-k * t), 0.5 * k * 60.0 * k * t + 1e-6);
  EXPECT_NEAR((s.t_in - s.t_out) / 20.0, std::exp(-1.0), 2e-3);
}

TEST(House, NonFiniteStateFaults) {
  HouseState s{0, std::nan(""), 5.0, false, 23.0};
  EXPECT_THROW(step_house(HouseParams{}, s, 60.0), SimulationFault);
  HouseParams bad;
  bad.c_walls = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Hysteresis, SwitchesOnOneDegreeBelow) {
  EXPECT_TRUE(control_hysteresis(HouseState{0, 21.9, 5.0, false, 23.0}));
  EXPECT_TRUE(control_hysteresis(HouseState{0, 22.0, 5.0, false, 23.0}));
  EXPECT_FALSE(control_hysteresis(HouseState{0, 22.1, 5.0, false, 23.0}));
}

TEST(Hysteresis, SwitchesOffOneDegreeAbove) {
  EXPECT_FALSE(control_hysteresis(HouseState{0, 24.0, 5.0, true, 23.0}));
  EXPECT_TRUE(control_hysteresis(HouseState{0, 23.9, 5.0, true, 23.0}));
}

TEST(Hysteresis, DeadbandKeepsState) {
  EXPECT_TRUE(control_hysteresis(HouseState{0, 23.0, 5.0, true, 23.0}));
  EXPECT_FALSE(control_hysteresis(HouseState{0, 23.0, 5.0, false, 23.0}));
}

TEST(Weather, InterpolatesLinearly) {
  auto w = parse_weather_csv("datetime,temp_c\n2016-04-01T00:00:00,10\n2016-04-01T01:00:00,12\n2016-04-01T02:00,11\n");
  EXPECT_EQ(sample_outdoor(w, 0.0), 10.0);
  EXPECT_EQ(sample_outdoor(w, 3600.0), 12.0);
  EXPECT_DOUBLE_EQ(sample_outdoor(w, 1800.0), 11.0);
  EXPECT_DOUBLE_EQ(sample_outdoor(w, 3600.0 + 900.0), 11.75);
  EXPECT_EQ(sample_outdoor(w, 7200.0), 11.0);
}

TEST(Weather, OutOfRangeIsDomainError) {
  auto w = flat_weather(5.0, 3);
  EXPECT_THROW(sample_outdoor(w, -1.0), DomainError);
  EXPECT_THROW(sample_outdoor(w, 3 * 3600.0 + 1.0), DomainError);
}

TEST(Weather, MalformedRowReportsLineNumber) {
  const std::string text = "datetime,temp_c\n2016-04-01T00:00:00,10\n2016-04-01T01:00:00,warm\n";
  try {
    parse_weather_csv(text, "w.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("w.csv:3"), std::string::npos);
  }
  try {
    parse_weather_csv("datetime,temp_c\n2016-04-01T00:00:00,10\n\n2016-13-01T01:00:00,3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_weather_csv("time,temp\n"), ParseError);
  EXPECT_THROW(parse_weather_csv("datetime,temp_c\n2016-04-01T00:00:00\n"), ParseError);
}

TEST(Weather, NonHourlySpacingRejected) {
  EXPECT_THROW(parse_weather_csv("datetime,temp_c\n2016-04-01T00:00:00,1\n2016-04-01T00:30:00,2\n"), ConfigError);
  EXPECT_THROW(parse_weather_csv("datetime,temp_c\n2016-04-01T01:00:00,1\n2016-04-01T00:00:00,2\n"), ParseError);
}

TEST(Weather, EpwImport) {
  std::string text;
  for (int i = 0; i < 8; ++i) text += "HEADER,line," + std::to_string(i) + "\n";
  text += "1999,4,1,1,60,xx,7.5,0\n";
  text += "1999,4,1,2,60,xx,8.5,0\n";
  text += "1999,4,1,24,60,xx,3.0,0\n";
  EXPECT_THROW(parse_epw(text), ConfigError);  // gap between 01:00 and 23:00
  text = text.substr(0, text.rfind("1999,4,1,24"));
  text += "2004,4,1,3,60,xx,9.0,0\n";
  auto w = parse_epw(text);
  ASSERT_EQ(w.samples.size(), 3u);
  EXPECT_EQ(format_iso8601(w.start()), "1999-04-01T00:00:00Z");
  EXPECT_EQ(w.samples[2].temp_c, 9.0);
  EXPECT_EQ(w.samples[2].epoch_seconds - w.samples[0].epoch_seconds, 7200);
}

TEST(Weather, EpwBadRowReportsLine) {
  std::string text;
  for (int i = 0; i < 8; ++i) text += "H\n";
  text += "1999,4,1,1,60,xx,7.5\n1999,4,1,2,60,xx\n";
  try {
    parse_epw(text, "x.epw");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 10u);
  }
}

TEST(Weather, Iso8601RoundTrip) {
  EXPECT_EQ(parse_iso8601("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(parse_iso8601("2016-04-01 12:30"), 1459513800);
  EXPECT_EQ(format_iso8601(1459513800), "2016-04-01T12:30:00Z");
  EXPECT_THROW(parse_iso8601("2016-02-30T00:00"), std::invalid_argument);
  EXPECT_THROW(parse_iso8601("2016-04-01T00:00+02:00"), std::invalid_argument);
}

TEST(Plant, TwentyDaysOfHourlyWeatherGive28800Steps) {
  auto w = load_weather(kWeather);
  EXPECT_EQ(w.samples.size(), 481u);
  ThermalPlant plant({}, w, {{0.0, 23.0}}, 1.0, 23.0, 60.0, false);
  EXPECT_EQ(plant.horizon_steps(), 28800u);
}

TEST(Plant, ClosedLoopStaysBoundedWithoutChattering) {
  auto w = load_weather(kWeather);
  ThermalPlant plant({}, w, {{0.0, 23.0}}, 1.0, 23.0, 60.0, false);
  int switches = 0;
  bool prev = false;
  double min_on_run = 1e9;
  int run = 0;
  for (std::size_t i = 0; i < plant.horizon_steps(); ++i) {
    auto obs = plant.prepare();
    const bool on = obs[2] == 1.0;
    if (on != prev && i > 0) {
      ++switches;
      if (prev) min_on_run = std::min<double>(min_on_run, run);
      run = 0;
    }
    prev = on;
    ++run;
    // Bounded by the deadband plus one step of overshoot.
    ASSERT_LE(obs[1], 24.0 + 0.02);
    ASSERT_GE(obs[1], std::min(obs[0], 22.0) - 0.02);
    plant.advance();
  }
  EXPECT_GT(switches, 10);
  EXPECT_GT(min_on_run, 10.0);  // no step-to-step toggling
}

TEST(Plant, HalvingTheStepBarelyMovesTheTrajectory) {
  auto w = load_weather(kWeather);
  ThermalPlant coarse({}, w, {{0.0, 23.0}}, 1.0, 23.0, 60.0, false);
  ThermalPlant fine({}, w, {{0.0, 23.0}}, 1.0, 23.0, 30.0, false);
  double worst = 0.0;
  for (std::size_t i = 0; i < coarse.horizon_steps(); ++i) {
    coarse.prepare();
    coarse.advance();
    for (int k = 0; k < 2; ++k) {
      fine.prepare();
      fine.advance();
    }
    worst = std::max(worst, std::abs(coarse.state().t_in - fine.state().t_in));
  }
  EXPECT_LT(worst, 0.01);
}

TEST(Plant, SetpointScheduleAndOverride) {
  ThermalPlant plant({}, flat_weather(10.0, 48), {{0.0, 21.0}, {2.0, 19.0}}, 1.0, 21.0, 60.0, false);
  EXPECT_EQ(plant.prepare()[3], 21.0);
  for (int i = 0; i < 120; ++i) {
    plant.advance();
    plant.prepare();
  }
  EXPECT_EQ(plant.state().t_set, 19.0);
  plant.set_setpoint(25.0);
  EXPECT_EQ(plant.prepare()[3], 25.0);
  auto snap = plant.snapshot();
  ThermalPlant other({}, flat_weather(10.0, 48), {{0.0, 21.0}}, 1.0, 21.0, 60.0, false);
  other.restore(snap);
  EXPECT_EQ(other.state(), plant.state());
}

TEST(Plant, WrappingWeatherRunsPastTheEnd) {
  ThermalPlant plant({}, flat_weather(4.0, 2), {{0.0, 23.0}}, 1.0, 23.0, 60.0, true);
  EXPECT_EQ(plant.horizon_steps(), 0u);
  for (int i = 0; i < 500; ++i) {
    plant.prepare();
    plant.advance();
  }
  EXPECT_EQ(plant.state().t_out, 4.0);
}
