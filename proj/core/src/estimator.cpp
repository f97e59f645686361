#include "expertsim/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace expertsim {

int default_copies(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("default_copies: p must be positive and finite");
  }
  return static_cast<int>(std::ceil(3.0 / p));
}

double geo_constant(int copies, double p) {
  if (copies < 1) throw std::invalid_argument("geo_constant: copies must be >= 1");
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("geo_constant: p must be positive and finite");
  }
  const double bp = copies * p;
  if (!(bp > 1.0)) {
    throw std::domain_error("geo_constant: requires copies * p > 1 (expectation diverges)");
  }
  return std::exp(copies * std::lgamma(1.0 - 1.0 / bp));
}

double geo_second_moment(int copies, double p) {
  if (copies < 1) throw std::invalid_argument("geo_second_moment: copies must be >= 1");
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("geo_second_moment: p must be positive and finite");
  }
  const double bp = copies * p;
  if (!(bp > 2.0)) {
    throw std::domain_error("geo_second_moment: requires copies * p > 2 (second moment diverges)");
  }
  return std::exp(copies * std::lgamma(1.0 - 2.0 / bp));
}

double scaled_loss(double loss, double e, double p, double c) {
  if (!(loss >= 0.0) || !std::isfinite(loss)) {
    throw std::invalid_argument("scaled_loss: loss must be finite and nonnegative");
  }
  if (!(e > 0.0)) throw std::domain_error("scaled_loss: exponential draw must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("scaled_loss: p must be >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("scaled_loss: c must be positive");
  return loss / (c * std::pow(e, 1.0 / p));
}

std::optional<double> geometric_mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("geometric_mean: empty input");
  double log_sum = 0.0;
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw std::invalid_argument("geometric_mean: values must be finite and nonnegative");
    }
    if (v == 0.0) return std::nullopt;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

EstimatorParams EstimatorParams::for_exponent(double p) {
  return with_copies(default_copies(p), p);
}

EstimatorParams EstimatorParams::with_copies(int copies, double p) {
  EstimatorParams out;
  out.p = p;
  out.copies = copies;
  out.norm = geo_constant(copies, p);
  out.second_moment = geo_second_moment(copies, p);
  return out;
}

}  // namespace expertsim
