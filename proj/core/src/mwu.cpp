#include "expertsim/mwu.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace expertsim {

double learning_rate(double rho, std::int64_t horizon, int experts) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument("learning_rate: rho must be positive and finite");
  }
  if (horizon < 1) throw std::invalid_argument("learning_rate: horizon must be >= 1");
  if (experts < 2) throw std::invalid_argument("learning_rate: needs at least 2 experts");
  return std::sqrt(std::log(static_cast<double>(experts)) /
                   (rho * static_cast<double>(horizon)));
}

WeightState WeightState::make(int experts, double eta) {
  if (experts < 1) throw std::invalid_argument("WeightState: needs at least 1 expert");
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("WeightState: eta must be finite and nonnegative");
  }
  WeightState st;
  st.w.assign(static_cast<std::size_t>(experts), 0.0);
  st.eta = eta;
  return st;
}

void WeightState::update(std::span<const double> estimates) {
  if (estimates.size() != w.size()) {
    throw std::invalid_argument("WeightState::update: estimate count mismatch");
  }
  for (double v : estimates) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("WeightState::update: estimates must be finite and >= 0");
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += estimates[i];
  ++t;
}

std::vector<double> WeightState::sampling_distribution() const {
  const double shift = *std::min_element(w.begin(), w.end());
  std::vector<double> probs(w.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    probs[i] = std::exp(-eta * (w[i] - shift));
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

int WeightState::sample(std::uint64_t seed, const StreamKey& key) const {
  const std::vector<double> probs = sampling_distribution();
  const double u = uniform01(seed, key);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace expertsim
