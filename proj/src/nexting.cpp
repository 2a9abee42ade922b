#include "nextmon/nexting.hpp"

#include <algorithm>
#include <cmath>

#include "nextmon/errors.hpp"

namespace nextmon {

double gamma_from_tau(double tau) {
  if (!std::isfinite(tau) || !(tau > 1.0)) throw DomainError("timescale tau must be > 1");
  return 1.0 - 1.0 / tau;
}

Horizon Horizon::from_tau(double tau, std::string label) { return Horizon{std::move(label), gamma_from_tau(tau)}; }

Horizon Horizon::from_gamma(double gamma, std::string label) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discount gamma must lie in [0,1)");
  return Horizon{std::move(label), gamma};
}

double default_alpha(std::size_t active_features) {
  if (active_features == 0) throw ConfigError("cannot derive a step size without active features");
  return 0.1 / static_cast<double>(active_features);
}

PredictorBank::PredictorBank(std::vector<Horizon> horizons, std::size_t num_features, double alpha, double lambda)
    : horizons_(std::move(horizons)), num_features_(num_features), alpha_(alpha), lambda_(lambda) {
  if (horizons_.empty()) throw ConfigError("predictor bank needs at least one horizon");
  for (const auto& h : horizons_)
    if (!(h.gamma >= 0.0 && h.gamma < 1.0)) throw ConfigError("horizon '" + h.label + "': gamma must lie in [0,1)");
  if (num_features_ == 0) throw ConfigError("predictor bank needs a non-empty feature space");
  if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) throw ConfigError("step size alpha must be finite and >= 0");
  if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) throw ConfigError("trace decay lambda must lie in [0,1]");
  weights_.assign(horizons_.size(), std::vector<double>(num_features_, 0.0));
  traces_.assign(horizons_.size(), std::vector<double>(num_features_, 0.0));
}

void PredictorBank::check(const features::FeatureVector& phi) const {
  if (phi.total_features != num_features_)
    throw ConfigError("feature vector length " + std::to_string(phi.total_features) + " does not match bank size " +
                      std::to_string(num_features_));
  if (!phi.active.empty() && phi.active.back() >= num_features_) throw ConfigError("feature index out of range");
}

double PredictorBank::predict(std::size_t horizon, const features::FeatureVector& phi) const {
  check(phi);
  const auto& w = weights_[horizon];
  double v = 0.0;
  for (auto j : phi.active) v += w[j];
  return v;
}

std::vector<double> PredictorBank::predict(const features::FeatureVector& phi) const {
  std::vector<double> out(horizons_.size());
  for (std::size_t i = 0; i < horizons_.size(); ++i) out[i] = predict(i, phi);
  return out;
}

std::vector<double> PredictorBank::update(const features::FeatureVector& phi_t, double reward_next,
                                          const features::FeatureVector& phi_next) {
  check(phi_t);
  check(phi_next);
  if (!std::isfinite(reward_next)) throw InputError("non-finite pseudo reward");

  std::vector<double> deltas(horizons_.size());
  for (std::size_t i = 0; i < horizons_.size(); ++i) {
    const double gamma = horizons_[i].gamma;
    auto& w = weights_[i];
    auto& z = traces_[i];

    const double delta = reward_next + gamma * predict(i, phi_next) - predict(i, phi_t);
    deltas[i] = delta;

    const double decay = gamma * lambda_;
    for (auto& e : z) e *= decay;
    for (auto j : phi_t.active) z[j] += 1.0;

    const double scale = alpha_ * delta;
    if (scale != 0.0)
      for (std::size_t j = 0; j < num_features_; ++j) w[j] += scale * z[j];
  }
  return deltas;
}

void PredictorBank::set_weights(std::size_t horizon, std::vector<double> w) {
  if (w.size() != num_features_) throw ConfigError("weight vector length mismatch");
  weights_.at(horizon) = std::move(w);
}

void PredictorBank::set_traces(std::size_t horizon, std::vector<double> z) {
  if (z.size() != num_features_) throw ConfigError("trace vector length mismatch");
  traces_.at(horizon) = std::move(z);
}

void PredictorBank::reset() {
  for (auto& w : weights_) std::fill(w.begin(), w.end(), 0.0);
  for (auto& z : traces_) std::fill(z.begin(), z.end(), 0.0);
}

namespace {

std::size_t index_of(const std::vector<std::string>& layout, const std::string& channel) {
  auto it = std::find(layout.begin(), layout.end(), channel);
  if (it == layout.end()) throw ConfigError("reward channel '" + channel + "' not in observation layout");
  return static_cast<std::size_t>(it - layout.begin());
}

double resolve_alpha(std::optional<double> alpha, const features::CoderConfig& coder) {
  if (alpha) return *alpha;
  return default_alpha(coder.active_per_slot() * coder.slots());
}

}  // namespace

Nexter::Nexter(features::CoderConfig coder, std::vector<std::string> layout, std::vector<Horizon> horizons,
               std::optional<double> alpha, double lambda, const std::string& reward_channel)
    : coder_(coder, layout),
      bank_(std::move(horizons), coder.total_features(), resolve_alpha(alpha, coder), lambda),
      reward_index_(index_of(layout, reward_channel)) {}

PredictionRecord Nexter::step(std::span<const double> observation) {
  auto phi = coder_.encode(observation);
  const double reward = observation[reward_index_];

  PredictionRecord rec;
  rec.step = steps_;
  rec.reward = reward;
  if (previous_)
    rec.td_errors = bank_.update(*previous_, reward, phi);
  else
    rec.td_errors.assign(bank_.size(), 0.0);

  rec.predictions = bank_.predict(phi);
  rec.normalized.resize(rec.predictions.size());
  for (std::size_t i = 0; i < rec.predictions.size(); ++i)
    rec.normalized[i] = rec.predictions[i] * (1.0 - bank_.horizons()[i].gamma);

  previous_ = std::move(phi);
  ++steps_;
  return rec;
}

void Nexter::reset() {
  coder_.reset();
  bank_.reset();
  previous_.reset();
  steps_ = 0;
}

void Nexter::restore(std::size_t steps, std::optional<features::FeatureVector> previous) {
  if (previous && previous->total_features != bank_.num_features())
    throw ConfigError("restored feature vector length mismatch");
  steps_ = steps;
  previous_ = std::move(previous);
}

}  // namespace nextmon
