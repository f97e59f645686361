#pragma once

#include <optional>
#include <span>

#include "expertsim/detstream.hpp"

namespace expertsim {

// Geometric-mean estimator for lp norms under max-stable exponential
// scalings. With e_1..e_B independent rate-1 exponentials, the estimator
// variable is Z = prod_b e_b^{-1/(Bp)}. Its moments have closed forms:
//   E[Z]   = Gamma(1 - 1/(Bp))^B   (the normalization constant C)
//   E[Z^2] = Gamma(1 - 2/(Bp))^B
// so dividing by C restores unbiasedness while keeping the second moment
// finite whenever Bp > 2.

/// Default copy count B = ceil(3/p); guarantees Bp >= 3.
int default_copies(double p);

/// E[Z] = Gamma(1 - 1/(Bp))^B. Throws std::domain_error unless Bp > 1.
double geo_constant(int copies, double p);

/// E[Z^2] = Gamma(1 - 2/(Bp))^B. Throws std::domain_error unless Bp > 2.
double geo_second_moment(int copies, double p);

/// loss / (c * e^{1/p}). Throws std::domain_error if e <= 0.
double scaled_loss(double loss, double e, double p, double c);

/// (prod values)^{1/len}, computed in log space. Returns nullopt if any
/// value is zero (the "no estimate" sentinel of the protocols).
std::optional<double> geometric_mean(std::span<const double> values);

// Everything the estimator math needs in one value.
struct EstimatorParams {
  double p = 2.0;
  int copies = 2;              // B
  double norm = 1.0;           // C = E[Z]
  double second_moment = 1.0;  // E[Z^2]

  // Default rule: B = ceil(3/p).
  static EstimatorParams for_exponent(double p);
  // Explicit copy count; requires copies * p > 2.
  static EstimatorParams with_copies(int copies, double p);
};

}  // namespace expertsim
