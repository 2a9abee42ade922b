#pragma once

// Small Markov reward chains with exactly known values, shared by the unit
// and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nextmon/nexting.hpp"

namespace nextmon::chains {

// Transition probabilities are counts / quanta so a sweep can visit every
// transition in exact proportion to its probability.
struct Chain {
  std::vector<std::vector<int>> counts;
  int quanta = 4;
  std::vector<std::vector<double>> reward;  // reward[s][s'] on the transition s -> s'
  double gamma = 0.5;

  std::size_t states() const { return counts.size(); }
  double prob(std::size_t s, std::size_t t) const { return static_cast<double>(counts[s][t]) / quanta; }
};

inline Chain random_chain(std::uint64_t seed, std::size_t max_states = 6) {
  std::mt19937_64 rng(seed);
  Chain c;
  const std::size_t n = 2 + rng() % (max_states - 1);
  const double gammas[] = {0.0, 0.5, 0.75, 0.9};
  c.gamma = gammas[rng() % 4];
  c.counts.assign(n, std::vector<int>(n, 0));
  c.reward.assign(n, std::vector<double>(n, 0.0));
  std::uniform_real_distribution<double> r(-1.0, 1.0);
  for (std::size_t s = 0; s < n; ++s) {
    // Keep the chain irreducible: always allow s -> s+1.
    c.counts[s][(s + 1) % n] += 1;
    for (int q = 1; q < c.quanta; ++q) c.counts[s][rng() % n] += 1;
    for (std::size_t t = 0; t < n; ++t) c.reward[s][t] = r(rng);
  }
  return c;
}

// Brute-force oracle: value iteration V = sum_t P(s,t) (r(s,t) + gamma V(t))
// in long double until it stops changing.
inline std::vector<double> expected_returns(const Chain& c) {
  const std::size_t n = c.states();
  std::vector<long double> v(n, 0.0L), next(n);
  for (int it = 0; it < 100000; ++it) {
    long double change = 0.0L;
    for (std::size_t s = 0; s < n; ++s) {
      long double acc = 0.0L;
      for (std::size_t t = 0; t < n; ++t)
        acc += static_cast<long double>(c.prob(s, t)) * (c.reward[s][t] + static_cast<long double>(c.gamma) * v[t]);
      next[s] = acc;
      change = std::max(change, std::fabs(acc - v[s]));
    }
    v.swap(next);
    if (change < 1e-16L) break;
  }
  return {v.begin(), v.end()};
}

inline features::FeatureVector one_hot(std::size_t s, std::size_t n) {
  return features::FeatureVector{{static_cast<std::uint32_t>(s)}, n};
}

struct TabularResult {
  std::vector<double> weights;
  std::size_t updates = 0;
};

// Tabular TD(0) through the production PredictorBank, without sampling noise.
//
// Features [0, n) are the states being learned; features [n, 2n) hold a copy
// of the weights frozen at the start of each sweep and serve as bootstrap
// targets (lambda = 0 never touches them). Within a sweep the k-th visit of a
// state uses alpha = 1/k, so each state ends the sweep at the probability
// weighted mean of its TD targets. A sweep is therefore one expected TD
// backup, and sweeps repeat until the weights stop moving or the update
// budget runs out.
inline TabularResult learn_tabular(const Chain& c, std::size_t max_updates) {
  const std::size_t n = c.states();
  const std::size_t per_sweep = n * static_cast<std::size_t>(c.quanta);
  std::vector<double> w(2 * n, 0.0);
  TabularResult out;
  while (out.updates + per_sweep <= max_updates) {
    std::copy(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n), w.begin() + static_cast<std::ptrdiff_t>(n));
    const std::vector<double> before(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t s = 0; s < n; ++s) {
      int visit = 0;
      for (std::size_t t = 0; t < n; ++t)
        for (int k = 0; k < c.counts[s][t]; ++k) {
          PredictorBank bank({Horizon::from_gamma(c.gamma, "chain")}, 2 * n, 1.0 / ++visit, 0.0);
          bank.set_weights(0, w);
          bank.update(one_hot(s, 2 * n), c.reward[s][t], one_hot(n + t, 2 * n));
          w.assign(bank.weights(0).begin(), bank.weights(0).end());
          ++out.updates;
        }
    }
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) change = std::max(change, std::abs(w[s] - before[s]));
    if (change == 0.0) break;
  }
  out.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

// One sampled trajectory of `steps` transitions starting in state 0.
inline std::vector<std::size_t> sample_path(const Chain& c, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> path{0};
  for (std::size_t i = 0; i < steps; ++i) {
    int ticket = static_cast<int>(rng() % static_cast<std::uint64_t>(c.quanta));
    std::size_t s = path.back(), t = 0;
    while (ticket >= c.counts[s][t]) ticket -= c.counts[s][t++];
    path.push_back(t);
  }
  return path;
}

}  // namespace nextmon::chains
