#include <gtest/gtest.h>

#include <string>

#include "nextmon/config.hpp"
#include "nextmon/errors.hpp"

using namespace nextmon;
using nlohmann::json;

namespace {

const std::filesystem::path kSource = NEXTMON_SOURCE_DIR;

json minimal_thermal() {
  return json::parse(R"({
    "schema_version": 1,
    "weather": "data/weather_berlin_april.csv",
    "coder": {"groups": [{"num_tilings": 4, "dims": [{"channel": "t_in", "lower": 16, "upper": 28, "tiles": 12}]}]},
    "horizons": [{"label": "50min", "tau": 50}]
  })");
}

}  // namespace

TEST(Config, ShippedConfigsLoad) {
  auto thermal = load_config(kSource / "config/thermal_april.json");
  EXPECT_EQ(thermal.plant, "thermal");
  ASSERT_EQ(thermal.horizons.size(), 1u);
  EXPECT_EQ(thermal.horizons[0].gamma, 0.98);
  EXPECT_TRUE(std::filesystem::exists(thermal.weather));

  auto tank = load_config(kSource / "config/watertank.json");
  EXPECT_EQ(tank.plant, "watertank");
  EXPECT_EQ(tank.horizons[0].gamma, 0.75);
  EXPECT_EQ(tank.horizons[1].gamma, 0.9375);
  EXPECT_EQ(tank.coder.history_depth, 4);
}

TEST(Config, ShippedThermalMatchesBuiltInDefault) {
  auto file = load_config(kSource / "config/thermal_april.json");
  auto builtin = thermal_default_config(file.weather);
  EXPECT_EQ(to_json(file)["coder"], to_json(builtin)["coder"]);
  EXPECT_EQ(to_json(file)["horizons"], to_json(builtin)["horizons"]);
  EXPECT_EQ(to_json(file)["house"], to_json(builtin)["house"]);
}

TEST(Config, RelativePathsResolveAgainstBaseDir) {
  auto c = parse_config(minimal_thermal(), kSource);
  EXPECT_EQ(c.weather, kSource / "data/weather_berlin_april.csv");
}

TEST(Config, RoundTripsThroughJson) {
  auto c = parse_config(minimal_thermal(), kSource);
  auto again = parse_config(to_json(c));
  EXPECT_EQ(to_json(again), to_json(c));
}

TEST(Config, ZeroHorizonsRejected) {
  auto doc = minimal_thermal();
  doc["horizons"] = json::array();
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
}

TEST(Config, HorizonNeedsExactlyOneOfTauOrGamma) {
  auto doc = minimal_thermal();
  doc["horizons"] = json::parse(R"([{"label": "x", "tau": 4, "gamma": 0.75}])");
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
  doc["horizons"] = json::parse(R"([{"label": "x"}])");
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
  doc["horizons"] = json::parse(R"([{"label": "x", "tau": 1}])");
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
  doc["horizons"] = json::parse(R"([{"label": "x", "gamma": 0.5}, {"label": "x", "gamma": 0.9}])");
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
}

TEST(Config, UnknownFieldsRejected) {
  auto doc = minimal_thermal();
  doc["alhpa"] = 0.1;
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
}

TEST(Config, MissingWeatherFileRejected) {
  auto doc = minimal_thermal();
  doc["weather"] = "data/nope.csv";
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
}

TEST(Config, UnsortedScheduleRejected) {
  auto doc = minimal_thermal();
  doc["setpoint_schedule"] = json::parse(R"([{"start_hour": 5, "setpoint": 20}, {"start_hour": 1, "setpoint": 22}])");
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
}

TEST(Config, CoderChannelMustExistOnPlant) {
  auto doc = minimal_thermal();
  doc["coder"]["groups"][0]["dims"][0]["channel"] = "humidity";
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
}

TEST(Config, WrongTypesAreConfigErrors) {
  auto doc = minimal_thermal();
  doc["lambda"] = "high";
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
  doc = minimal_thermal();
  doc["schema_version"] = 2;
  EXPECT_THROW(parse_config(doc, kSource), ConfigError);
  EXPECT_THROW(load_config(kSource / "config/does_not_exist.json"), ConfigError);
}

TEST(Config, RandomOffsetsFollowTheSeed) {
  auto doc = minimal_thermal();
  doc["offsets"] = "random";
  doc["seed"] = 42;
  auto a = parse_config(doc, kSource).resolved_coder();
  auto b = parse_config(doc, kSource).resolved_coder();
  EXPECT_EQ(a.groups[0].offsets, b.groups[0].offsets);
  EXPECT_EQ(a.groups[0].offsets.size(), 4u);
}
