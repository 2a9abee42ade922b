#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nextmon::features {

/// One input dimension of a tiling group: a named channel covering
/// [lower, upper) with `tiles` equally wide tiles.
///
/// A discrete dimension (e.g. heater on/off) is never displaced by the
/// tiling offsets, so every tiling maps a level to the same tile.
struct DimensionSpec {
  std::string channel;
  double lower = 0.0;
  double upper = 1.0;
  int tiles = 1;
  bool discrete = false;

  double tile_width() const { return (upper - lower) / tiles; }
};

/// A joint tile-coding group: `num_tilings` overlapping grids over the
/// cartesian product of `dims`.
///
/// `offsets[k][d]` is the displacement of tiling k along dimension d in units
/// of one tile width. An empty table means the uniform schedule k/num_tilings.
struct TilingGroupSpec {
  std::vector<DimensionSpec> dims;
  int num_tilings = 1;
  std::vector<std::vector<double>> offsets;

  void validate() const;
  std::size_t tiles_per_tiling() const;
  std::size_t feature_count() const { return tiles_per_tiling() * static_cast<std::size_t>(num_tilings); }
  double offset(int tiling, std::size_t dim) const;
};

struct CoderConfig {
  std::vector<TilingGroupSpec> groups;
  int history_depth = 0;

  void validate() const;
  /// Channels in group order; each appears exactly once.
  std::vector<std::string> channels() const;
  /// Features of one history slot.
  std::size_t base_feature_count() const;
  std::size_t total_features() const;
  /// Active indices contributed by one history slot (sum of num_tilings).
  std::size_t active_per_slot() const;
  std::size_t slots() const { return static_cast<std::size_t>(history_depth) + 1; }
};

/// Sparse binary feature vector. `active` is strictly increasing and every
/// entry is below `total_features`.
struct FeatureVector {
  std::vector<std::uint32_t> active;
  std::size_t total_features = 0;

  std::size_t size() const { return active.size(); }
  bool operator==(const FeatureVector&) const = default;
};

/// Overlap count of two sorted index lists.
std::size_t shared_count(const FeatureVector& a, const FeatureVector& b);

/// Replaces empty offset tables with `num_tilings` pseudo-random rows drawn
/// from a seeded mt19937_64. Tiling 0 stays at zero; discrete dims stay at zero.
void randomize_offsets(CoderConfig& config, std::uint64_t seed);

/// Tile coder bound to a fixed channel layout. Encoding is pure.
class TileCoder {
 public:
  /// Throws ConfigError when a grouped channel is absent from `layout`.
  TileCoder(CoderConfig config, std::vector<std::string> layout);

  const CoderConfig& config() const { return config_; }
  const std::vector<std::string>& layout() const { return layout_; }

  /// Base (history slot 0) indices for values given in layout order.
  /// Throws InputError on non-finite values.
  std::vector<std::uint32_t> encode_base(std::span<const double> values) const;

 private:
  struct BoundDim {
    std::size_t channel;
    double lower;
    double width;
    int tiles;
    std::size_t stride;
  };
  struct BoundGroup {
    std::vector<BoundDim> dims;
    std::vector<std::vector<double>> offsets;  // [tiling][dim]
    std::size_t base;
    std::size_t block;
  };

  CoderConfig config_;
  std::vector<std::string> layout_;
  std::vector<BoundGroup> groups_;
};

using Observation = std::map<std::string, double>;

/// Stateless encoding of a single observation into history slot 0.
/// Missing channels raise ConfigError; non-finite values raise InputError.
FeatureVector encode(const CoderConfig& config, const Observation& observation);

/// Tile coder with a ring buffer of the last `history_depth` base encodings.
/// Slot h holds the h-th most recent encoding shifted by h * base_feature_count.
class HistoryCoder {
 public:
  HistoryCoder(CoderConfig config, std::vector<std::string> layout);

  FeatureVector encode(std::span<const double> values);
  FeatureVector encode(const Observation& observation);
  void reset() { history_.clear(); }

  const TileCoder& coder() const { return coder_; }
  std::size_t total_features() const { return coder_.config().total_features(); }

  /// Most recent first.
  const std::deque<std::vector<std::uint32_t>>& history() const { return history_; }
  void restore_history(std::deque<std::vector<std::uint32_t>> history);

 private:
  TileCoder coder_;
  std::deque<std::vector<std::uint32_t>> history_;
};

}  // namespace nextmon::features
