#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace nextmon::oracle {

/// Offline ideal predictions G_t = sum_{k<K} gamma^k R_{t+k+1}.
struct ReturnSeries {
  double gamma = 0.0;
  std::vector<double> values;
  /// Truncation window K.
  std::size_t truncation = 0;
  /// max|R| * gamma^K / (1 - gamma): worst-case distance to the untruncated return.
  double tail_bound = 0.0;
  /// Steps [complete, size) lacked K future samples and are flagged partial.
  std::size_t complete = 0;

  bool partial(std::size_t t) const { return t >= complete; }
  /// values * (1 - gamma).
  std::vector<double> normalized() const;
};

/// Smallest K with max|R| gamma^K / (1-gamma) <= epsilon (at least 1).
std::size_t truncation_window(double gamma, double max_abs, double epsilon);

/// Throws DomainError unless 0 <= gamma < 1 and epsilon > 0.
ReturnSeries ideal_prediction(std::span<const double> signal, double gamma, double epsilon = 1e-6);

/// Root mean squared error over t in [begin, end). Throws DomainError on an
/// empty window or unequal lengths.
double rmse(std::span<const double> predicted, std::span<const double> reference, std::size_t begin,
            std::size_t end = std::numeric_limits<std::size_t>::max());

/// RMSE against ideal predictions from `burn_in` on, excluding partial steps.
/// `normalized` compares on the signal scale (both sides times 1 - gamma).
double rmse(std::span<const double> predicted, const ReturnSeries& reference, std::size_t burn_in,
            bool normalized = false);

}  // namespace nextmon::oracle
