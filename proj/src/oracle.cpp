#include "nextmon/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "nextmon/errors.hpp"

namespace nextmon::oracle {

std::vector<double> ReturnSeries::normalized() const {
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out[t] = values[t] * (1.0 - gamma);
  return out;
}

std::size_t truncation_window(double gamma, double max_abs, double epsilon) {
  if (gamma == 0.0 || max_abs == 0.0) return 1;
  const double ratio = epsilon * (1.0 - gamma) / max_abs;
  if (ratio >= 1.0) return 1;
  const double k = std::ceil(std::log(ratio) / std::log(gamma));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

ReturnSeries ideal_prediction(std::span<const double> signal, double gamma, double epsilon) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("ideal_prediction: gamma must lie in [0,1)");
  if (!(epsilon > 0.0)) throw DomainError("ideal_prediction: epsilon must be > 0");
  double max_abs = 0.0;
  for (double r : signal) {
    if (!std::isfinite(r)) throw DomainError("ideal_prediction: non-finite signal");
    max_abs = std::max(max_abs, std::abs(r));
  }

  ReturnSeries out;
  out.gamma = gamma;
  const std::size_t n = signal.size();
  const std::size_t K = truncation_window(gamma, max_abs, epsilon);
  out.truncation = K;
  out.tail_bound = max_abs * std::pow(gamma, static_cast<double>(K)) / (1.0 - gamma);
  out.complete = n > K ? n - K : 0;
  out.values.assign(n, 0.0);
  if (n == 0) return out;

  // Untruncated tail sums H_t = R_{t+1} + gamma H_{t+1}, then drop everything
  // past the window: G_t = H_t - gamma^K H_{t+K}.
  std::vector<double> tail(n, 0.0);
  for (std::size_t t = n - 1; t-- > 0;) tail[t] = signal[t + 1] + gamma * tail[t + 1];
  const double gk = std::pow(gamma, static_cast<double>(K));
  for (std::size_t t = 0; t < n; ++t) out.values[t] = t + K < n ? tail[t] - gk * tail[t + K] : tail[t];
  return out;
}

double rmse(std::span<const double> predicted, std::span<const double> reference, std::size_t begin,
            std::size_t end) {
  if (predicted.size() != reference.size()) throw DomainError("rmse: series lengths differ");
  end = std::min(end, predicted.size());
  if (begin >= end) throw DomainError("rmse: empty comparison window");
  double sum = 0.0;
  for (std::size_t t = begin; t < end; ++t) {
    const double d = predicted[t] - reference[t];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(end - begin));
}

double rmse(std::span<const double> predicted, const ReturnSeries& reference, std::size_t burn_in, bool normalized) {
  if (normalized) {
    auto ref = reference.normalized();
    return rmse(predicted, ref, burn_in, reference.complete);
  }
  return rmse(predicted, reference.values, burn_in, reference.complete);
}

}  // namespace nextmon::oracle
