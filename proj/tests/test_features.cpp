#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "nextmon/errors.hpp"
#include "nextmon/features.hpp"

using namespace nextmon;
using namespace nextmon::features;

namespace {

CoderConfig square_4x4() {
  TilingGroupSpec g;
  g.dims = {{"x", 0.0, 1.0, 4, false}, {"y", 0.0, 1.0, 4, false}};
  g.num_tilings = 1;
  return CoderConfig{{g}, 0};
}

CoderConfig line(int tiles, int tilings, int history = 0) {
  TilingGroupSpec g;
  g.dims = {{"x", 0.0, 1.0, tiles, false}};
  g.num_tilings = tilings;
  return CoderConfig{{g}, history};
}

CoderConfig room_like(int history) {
  TilingGroupSpec joint;
  joint.dims = {{"t_in", 16.0, 28.0, 48, false}, {"heater", 0.0, 2.0, 2, true}};
  joint.num_tilings = 8;
  TilingGroupSpec outdoor;
  outdoor.dims = {{"t_out", -10.0, 30.0, 10, false}};
  outdoor.num_tilings = 4;
  return CoderConfig{{joint, outdoor}, history};
}

}  // namespace

TEST(Encode, CornerInputHitsFirstTile) {
  auto phi = encode(square_4x4(), {{"x", 0.1}, {"y", 0.1}});
  EXPECT_EQ(phi.active, std::vector<std::uint32_t>{0});
  EXPECT_EQ(phi.total_features, 16u);
}

TEST(Encode, RowMajorLastDimensionFastest) {
  auto phi = encode(square_4x4(), {{"x", 0.3}, {"y", 0.8}});
  EXPECT_EQ(phi.active, std::vector<std::uint32_t>{1 * 4 + 3});
}

TEST(Encode, OutOfRangeValuesClampToEdgeTiles) {
  auto lo = encode(square_4x4(), {{"x", -5.0}, {"y", -5.0}});
  auto hi = encode(square_4x4(), {{"x", 7.0}, {"y", 1.0}});
  EXPECT_EQ(lo.active, std::vector<std::uint32_t>{0});
  EXPECT_EQ(hi.active, std::vector<std::uint32_t>{15});
}

TEST(Encode, TwoHalfOffsetTilingsResolveAnEighth) {
  // Width 0.25 split by two tilings: anything closer than 0.125 shares a tile.
  auto cfg = line(4, 2);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0), d(0.0, 0.1249);
  for (int i = 0; i < 2000; ++i) {
    double a = u(rng);
    double b = std::min(1.0, a + d(rng));
    EXPECT_GE(shared_count(encode(cfg, {{"x", a}}), encode(cfg, {{"x", b}})), 1u) << a << " " << b;
  }
  // And the resolution is no finer than that.
  EXPECT_EQ(shared_count(encode(cfg, {{"x", 0.26}}), encode(cfg, {{"x", 0.26 + 0.25}})), 0u);
}

TEST(Encode, DeterministicForSameInput) {
  auto cfg = room_like(0);
  Observation obs{{"t_in", 22.37}, {"heater", 1.0}, {"t_out", 4.2}};
  EXPECT_EQ(encode(cfg, obs), encode(cfg, obs));
}

TEST(Encode, MissingChannelIsConfigError) {
  EXPECT_THROW(encode(square_4x4(), {{"x", 0.5}}), ConfigError);
}

TEST(Encode, NonFiniteValueIsInputError) {
  EXPECT_THROW(encode(square_4x4(), {{"x", 0.5}, {"y", std::nan("")}}), InputError);
  EXPECT_THROW(encode(square_4x4(), {{"x", INFINITY}, {"y", 0.0}}), InputError);
}

TEST(Encode, DiscreteDimensionIgnoresOffsets) {
  TilingGroupSpec g;
  g.dims = {{"u", 0.0, 2.0, 2, true}};
  g.num_tilings = 4;
  CoderConfig cfg{{g}, 0};
  auto on = encode(cfg, {{"u", 1.0}});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(on.active[k], k * 2 + 1);
}

TEST(Config, ChannelInTwoGroupsRejected) {
  auto cfg = line(4, 1);
  cfg.groups.push_back(cfg.groups.front());
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, BadDimensionsRejected) {
  auto cfg = line(4, 1);
  cfg.groups[0].dims[0].upper = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = line(0, 1);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = line(4, 0);
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ExplicitOffsetTablesValidated) {
  auto cfg = line(4, 2);
  cfg.groups[0].offsets = {{0.0}, {1.5}};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.groups[0].offsets = {{0.3}, {0.5}};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.groups[0].offsets = {{0.0}};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, RandomOffsetsAreSeeded) {
  auto a = room_like(0), b = room_like(0), c = room_like(0);
  randomize_offsets(a, 5);
  randomize_offsets(b, 5);
  randomize_offsets(c, 6);
  EXPECT_EQ(a.groups[0].offsets, b.groups[0].offsets);
  EXPECT_NE(a.groups[0].offsets, c.groups[0].offsets);
  for (const auto& row : a.groups[0].offsets) EXPECT_EQ(row[1], 0.0);  // heater is discrete
  EXPECT_NO_THROW(a.validate());
}

TEST(History, DepthZeroMatchesStatelessEncode) {
  auto cfg = room_like(0);
  HistoryCoder coder(cfg, cfg.channels());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(15.0, 29.0), o(-12.0, 32.0);
  for (int i = 0; i < 200; ++i) {
    Observation obs{{"t_in", t(rng)}, {"heater", static_cast<double>(i % 2)}, {"t_out", o(rng)}};
    EXPECT_EQ(coder.encode(obs), encode(cfg, obs));
  }
}

TEST(History, WarmCardinalityIsSlotsTimesTilings) {
  auto cfg = line(10, 3, 4);
  HistoryCoder coder(cfg, {"x"});
  for (int i = 0; i < 4; ++i) EXPECT_EQ(coder.encode({{"x", 0.1 * i}}).size(), 3u * (i + 1));
  EXPECT_EQ(coder.encode({{"x", 0.9}}).size(), 15u);
  EXPECT_EQ(coder.encode({{"x", 0.2}}).size(), 15u);
  EXPECT_EQ(coder.total_features(), 5u * 30u);
}

TEST(History, SlotsAreShiftedCopiesOfEarlierEncodings) {
  auto cfg = line(10, 2, 2);
  HistoryCoder coder(cfg, {"x"});
  auto a = encode(cfg, {{"x", 0.15}}).active;
  auto b = encode(cfg, {{"x", 0.55}}).active;
  auto c = encode(cfg, {{"x", 0.95}}).active;
  coder.encode({{"x", 0.15}});
  coder.encode({{"x", 0.55}});
  auto phi = coder.encode({{"x", 0.95}});
  const std::uint32_t base = 20;
  std::vector<std::uint32_t> expected = c;
  for (auto i : b) expected.push_back(i + base);
  for (auto i : a) expected.push_back(i + 2 * base);
  EXPECT_EQ(phi.active, expected);
}

TEST(History, ResetForgetsThePast) {
  auto cfg = line(10, 2, 2);
  HistoryCoder coder(cfg, {"x"});
  coder.encode({{"x", 0.3}});
  coder.encode({{"x", 0.4}});
  coder.reset();
  EXPECT_EQ(coder.encode({{"x", 0.3}}).size(), 2u);
}

TEST(Properties, WarmCardinalityConstantAndIndicesSortedInRange) {
  auto cfg = room_like(4);
  HistoryCoder coder(cfg, cfg.channels());
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> t(-40.0, 60.0);
  const std::size_t expected = cfg.slots() * cfg.active_per_slot();
  for (int i = 0; i < 5000; ++i) {
    Observation obs{{"t_in", t(rng)}, {"heater", static_cast<double>(rng() % 2)}, {"t_out", t(rng)}};
    auto phi = coder.encode(obs);
    if (i >= cfg.history_depth) ASSERT_EQ(phi.size(), expected);
    ASSERT_TRUE(std::is_sorted(phi.active.begin(), phi.active.end()));
    ASSERT_TRUE(std::adjacent_find(phi.active.begin(), phi.active.end()) == phi.active.end());
    ASSERT_LT(phi.active.back(), phi.total_features);
  }
}

TEST(Properties, OverlapShrinksWithDistance) {
  // Uniform offsets: shared tiles never increase as two inputs move apart.
  auto cfg = line(8, 8);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int i = 0; i < 300; ++i) {
    double a = u(rng);
    std::size_t prev = cfg.active_per_slot();
    for (double d = 0.0; a + d <= 1.0; d += 0.01) {
      auto n = shared_count(encode(cfg, {{"x", a}}), encode(cfg, {{"x", a + d}}));
      ASSERT_LE(n, prev);
      prev = n;
    }
  }
}
