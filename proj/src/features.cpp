#include "nextmon/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "nextmon/errors.hpp"

namespace nextmon::features {

void TilingGroupSpec::validate() const {
  if (dims.empty()) throw ConfigError("tiling group has no dimensions");
  if (num_tilings < 1) throw ConfigError("num_tilings must be >= 1");
  for (const auto& d : dims) {
    if (d.channel.empty()) throw ConfigError("tiling dimension without channel name");
    if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.upper > d.lower))
      throw ConfigError("channel '" + d.channel + "': upper bound must exceed lower bound");
    if (d.tiles < 1) throw ConfigError("channel '" + d.channel + "': tiles must be >= 1");
  }
  if (!offsets.empty()) {
    if (offsets.size() != static_cast<std::size_t>(num_tilings))
      throw ConfigError("offset table needs one row per tiling");
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (offsets[k].size() != dims.size()) throw ConfigError("offset row needs one entry per dimension");
      for (double o : offsets[k]) {
        if (!(o >= 0.0 && o < 1.0)) throw ConfigError("offsets must lie in [0,1)");
        if (k == 0 && o != 0.0) throw ConfigError("tiling 0 must have zero offset");
      }
    }
  }
  std::size_t count = 1;
  for (const auto& d : dims) {
    if (count > std::numeric_limits<std::uint32_t>::max() / static_cast<std::size_t>(d.tiles))
      throw ConfigError("tiling group too large");
    count *= static_cast<std::size_t>(d.tiles);
  }
}

std::size_t TilingGroupSpec::tiles_per_tiling() const {
  std::size_t count = 1;
  for (const auto& d : dims) count *= static_cast<std::size_t>(d.tiles);
  return count;
}

double TilingGroupSpec::offset(int tiling, std::size_t dim) const {
  if (dims[dim].discrete) return 0.0;
  if (!offsets.empty()) return offsets[static_cast<std::size_t>(tiling)][dim];
  return static_cast<double>(tiling) / num_tilings;
}

void CoderConfig::validate() const {
  if (groups.empty()) throw ConfigError("coder needs at least one tiling group");
  if (history_depth < 0) throw ConfigError("history_depth must be >= 0");
  std::set<std::string> seen;
  for (const auto& g : groups) {
    g.validate();
    for (const auto& d : g.dims)
      if (!seen.insert(d.channel).second)
        throw ConfigError("channel '" + d.channel + "' appears in more than one tiling group");
  }
  if (total_features() > std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("feature space exceeds 32-bit index range");
}

std::vector<std::string> CoderConfig::channels() const {
  std::vector<std::string> out;
  for (const auto& g : groups)
    for (const auto& d : g.dims) out.push_back(d.channel);
  return out;
}

std::size_t CoderConfig::base_feature_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.feature_count();
  return n;
}

std::size_t CoderConfig::total_features() const { return slots() * base_feature_count(); }

std::size_t CoderConfig::active_per_slot() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += static_cast<std::size_t>(g.num_tilings);
  return n;
}

std::size_t shared_count(const FeatureVector& a, const FeatureVector& b) {
  std::size_t n = 0;
  auto i = a.active.begin();
  auto j = b.active.begin();
  while (i != a.active.end() && j != b.active.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

void randomize_offsets(CoderConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // 53-bit mantissa draw; std::uniform_real_distribution is not portable.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (auto& g : config.groups) {
    if (!g.offsets.empty()) continue;
    g.offsets.assign(static_cast<std::size_t>(g.num_tilings), std::vector<double>(g.dims.size(), 0.0));
    for (std::size_t k = 1; k < g.offsets.size(); ++k)
      for (std::size_t d = 0; d < g.dims.size(); ++d)
        if (!g.dims[d].discrete) g.offsets[k][d] = unit();
  }
}

TileCoder::TileCoder(CoderConfig config, std::vector<std::string> layout)
    : config_(std::move(config)), layout_(std::move(layout)) {
  config_.validate();
  std::size_t base = 0;
  for (const auto& g : config_.groups) {
    BoundGroup bound;
    bound.base = base;
    bound.block = g.tiles_per_tiling();
    // Row-major: the last dimension varies fastest.
    std::size_t stride = 1;
    bound.dims.resize(g.dims.size());
    for (std::size_t d = g.dims.size(); d-- > 0;) {
      const auto& spec = g.dims[d];
      auto it = std::find(layout_.begin(), layout_.end(), spec.channel);
      if (it == layout_.end()) throw ConfigError("missing channel '" + spec.channel + "'");
      bound.dims[d] = BoundDim{static_cast<std::size_t>(it - layout_.begin()), spec.lower, spec.tile_width(),
                               spec.tiles, stride};
      stride *= static_cast<std::size_t>(spec.tiles);
    }
    bound.offsets.resize(static_cast<std::size_t>(g.num_tilings));
    for (int k = 0; k < g.num_tilings; ++k)
      for (std::size_t d = 0; d < g.dims.size(); ++d) bound.offsets[static_cast<std::size_t>(k)].push_back(g.offset(k, d));
    base += g.feature_count();
    groups_.push_back(std::move(bound));
  }
}

std::vector<std::uint32_t> TileCoder::encode_base(std::span<const double> values) const {
  if (values.size() != layout_.size())
    throw ConfigError("observation has " + std::to_string(values.size()) + " values, layout expects " +
                      std::to_string(layout_.size()));
  for (std::size_t c = 0; c < values.size(); ++c)
    if (!std::isfinite(values[c])) throw InputError("non-finite value for channel '" + layout_[c] + "'");

  std::vector<std::uint32_t> out;
  out.reserve(config_.active_per_slot());
  for (const auto& g : groups_) {
    for (std::size_t k = 0; k < g.offsets.size(); ++k) {
      std::size_t local = 0;
      for (std::size_t d = 0; d < g.dims.size(); ++d) {
        const auto& dim = g.dims[d];
        double scaled = (values[dim.channel] - dim.lower) / dim.width - g.offsets[k][d];
        double cell = std::floor(scaled);
        int tile = cell < 0.0 ? 0 : (cell >= dim.tiles - 1 ? dim.tiles - 1 : static_cast<int>(cell));
        local += static_cast<std::size_t>(tile) * dim.stride;
      }
      out.push_back(static_cast<std::uint32_t>(g.base + k * g.block + local));
    }
  }
  return out;
}

namespace {

std::vector<double> values_in_layout(const std::vector<std::string>& layout, const Observation& observation) {
  std::vector<double> values;
  values.reserve(layout.size());
  for (const auto& name : layout) {
    auto it = observation.find(name);
    if (it == observation.end()) throw ConfigError("missing channel '" + name + "'");
    values.push_back(it->second);
  }
  return values;
}

}  // namespace

FeatureVector encode(const CoderConfig& config, const Observation& observation) {
  auto layout = config.channels();
  TileCoder coder(config, layout);
  auto values = values_in_layout(layout, observation);
  return FeatureVector{coder.encode_base(values), config.total_features()};
}

HistoryCoder::HistoryCoder(CoderConfig config, std::vector<std::string> layout)
    : coder_(std::move(config), std::move(layout)) {}

FeatureVector HistoryCoder::encode(std::span<const double> values) {
  auto current = coder_.encode_base(values);
  const std::size_t base = coder_.config().base_feature_count();
  FeatureVector phi;
  phi.total_features = total_features();
  phi.active.reserve(current.size() * (history_.size() + 1));
  phi.active.insert(phi.active.end(), current.begin(), current.end());
  std::size_t slot = 1;
  for (const auto& past : history_) {
    for (auto idx : past) phi.active.push_back(static_cast<std::uint32_t>(idx + slot * base));
    ++slot;
  }
  const auto depth = static_cast<std::size_t>(coder_.config().history_depth);
  if (depth > 0) {
    history_.push_front(std::move(current));
    if (history_.size() > depth) history_.pop_back();
  }
  return phi;
}

FeatureVector HistoryCoder::encode(const Observation& observation) {
  return encode(values_in_layout(coder_.layout(), observation));
}

void HistoryCoder::restore_history(std::deque<std::vector<std::uint32_t>> history) {
  const auto depth = static_cast<std::size_t>(coder_.config().history_depth);
  if (history.size() > depth) throw ConfigError("history longer than history_depth");
  const std::size_t base = coder_.config().base_feature_count();
  for (const auto& h : history)
    for (auto idx : h)
      if (idx >= base) throw ConfigError("history index out of range");
  history_ = std::move(history);
}

}  // namespace nextmon::features
