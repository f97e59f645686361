#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "expertsim/detstream.hpp"

namespace expertsim {

// Multiplicative weights update over cumulative (possibly estimated) losses.
// Weights are kept as cumulative sums and exponentiated lazily at sampling
// time, which is immune to underflow over long horizons.

/// sqrt(ln(n) / (rho * T)); the rate that balances ln(n)/eta against
/// eta * rho * T in the regret analysis. Requires rho > 0, T >= 1, n >= 2.
double learning_rate(double rho, std::int64_t horizon, int experts);

struct WeightState {
  std::vector<double> w;  // cumulative losses fed so far
  double eta = 0.0;
  std::int64_t t = 0;

  static WeightState make(int experts, double eta);

  // w_i += estimates_i; rejects negative or non-finite entries.
  void update(std::span<const double> estimates);

  // Sampling distribution proportional to exp(-eta * w_i), stabilized by
  // subtracting min_i w_i before exponentiation (exact shift invariance).
  std::vector<double> sampling_distribution() const;

  // Draw an expert; deterministic given (seed, key).
  int sample(std::uint64_t seed, const StreamKey& key) const;
};

}  // namespace expertsim
