#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nextmon/features.hpp"

namespace nextmon {

/// Discount for a timescale of `tau` steps: 1 - 1/tau. Requires tau > 1.
double gamma_from_tau(double tau);

/// One prediction timescale.
struct Horizon {
  std::string label;
  double gamma = 0.0;

  static Horizon from_tau(double tau, std::string label);
  static Horizon from_gamma(double gamma, std::string label);
  /// Number of steps 1/(1-gamma) the prediction nominally looks ahead.
  double timescale() const { return 1.0 / (1.0 - gamma); }
};

/// Linear TD(lambda) learners, one per horizon, sharing a feature vector.
/// Weights start at zero and traces are all-zero at construction.
class PredictorBank {
 public:
  PredictorBank(std::vector<Horizon> horizons, std::size_t num_features, double alpha, double lambda);

  const std::vector<Horizon>& horizons() const { return horizons_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t size() const { return horizons_.size(); }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }

  double predict(std::size_t horizon, const features::FeatureVector& phi) const;
  std::vector<double> predict(const features::FeatureVector& phi) const;

  /// One TD(lambda) step per horizon with accumulating traces:
  ///   delta = R' + gamma * phi'.theta - phi.theta
  ///   z     = gamma * lambda * z + phi
  ///   theta = theta + alpha * delta * z
  /// Returns delta per horizon.
  std::vector<double> update(const features::FeatureVector& phi_t, double reward_next,
                             const features::FeatureVector& phi_next);

  std::span<const double> weights(std::size_t horizon) const { return weights_[horizon]; }
  std::span<const double> traces(std::size_t horizon) const { return traces_[horizon]; }
  void set_weights(std::size_t horizon, std::vector<double> w);
  void set_traces(std::size_t horizon, std::vector<double> z);
  void reset();

 private:
  void check(const features::FeatureVector& phi) const;

  std::vector<Horizon> horizons_;
  std::size_t num_features_;
  double alpha_;
  double lambda_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> traces_;
};

/// Default step size: 0.1 spread over the active features of a warm vector.
double default_alpha(std::size_t active_features);

struct PredictionRecord {
  std::size_t step = 0;
  double reward = 0.0;
  /// Raw return-scale predictions V_t.
  std::vector<double> predictions;
  /// V_t * (1 - gamma), on the scale of the signal itself.
  std::vector<double> normalized;
  /// TD error of the update applied when this observation arrived; 0 on the first step.
  std::vector<double> td_errors;

  bool operator==(const PredictionRecord&) const = default;
};

/// Streaming encode -> update -> predict loop over a single pseudo-reward channel.
class Nexter {
 public:
  Nexter(features::CoderConfig coder, std::vector<std::string> layout, std::vector<Horizon> horizons,
         std::optional<double> alpha, double lambda, const std::string& reward_channel);

  /// Consumes observation x_t (layout order). When a previous feature vector
  /// exists, applies the update for t-1 -> t with R_t, then predicts from phi_t.
  PredictionRecord step(std::span<const double> observation);
  void reset();

  const PredictorBank& bank() const { return bank_; }
  PredictorBank& bank() { return bank_; }
  const features::HistoryCoder& coder() const { return coder_; }
  features::HistoryCoder& coder() { return coder_; }
  std::size_t steps_seen() const { return steps_; }
  const std::optional<features::FeatureVector>& previous() const { return previous_; }
  std::size_t reward_index() const { return reward_index_; }

  void restore(std::size_t steps, std::optional<features::FeatureVector> previous);

 private:
  features::HistoryCoder coder_;
  PredictorBank bank_;
  std::size_t reward_index_;
  std::size_t steps_ = 0;
  std::optional<features::FeatureVector> previous_;
};

}  // namespace nextmon
