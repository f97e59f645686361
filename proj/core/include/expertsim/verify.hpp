#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace expertsim {

// Fixed-seed statistical verification of the estimator math and the
// end-to-end pipelines. Each check reports its statistic and the interval it
// must land in; failures are verdicts, not errors.

inline constexpr std::uint64_t kVerifyDefaultSeed = 1;

struct CheckResult {
  std::string name;
  double statistic = 0.0;
  double lo = 0.0;  // inclusive
  double hi = 0.0;  // inclusive
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool pass() const;
};

// Monte Carlo E[Z] against the Gamma closed form, 0.5% relative, plus the
// C <= 2^B ceiling, for (B, p) in {(3,1), (2,2), (1,4)}.
SuiteReport verify_constants(std::uint64_t seed, std::int64_t draws = 10'000'000);

// Monte Carlo E[Z^2] against the Gamma closed form, 2% relative, plus the
// 3^B ceiling, same (B, p) set.
SuiteReport verify_moments(std::uint64_t seed, std::int64_t draws = 10'000'000);

// Sup-norm distance between the empirical CDF of max_j f_j / e_j^{1/p} and
// exp(-|f|_p^p t^{-p}) for f = (3, 4), p = 2; bound 0.01.
SuiteReport verify_maxstability(std::uint64_t seed, std::int64_t trials = 1'000'000);

// Pr[1/e in (x, 2x]] within the analytic bracket [1/(4x), 1/(2x)] for
// x in {4, 8, 16}.
SuiteReport verify_middle(std::uint64_t seed, std::int64_t draws = 10'000'000);

// End-to-end unbiasedness of applied increments (5%), second-moment
// ceilings, and sentinel rates for SIMPLE, TRADEOFF and FULL.
SuiteReport verify_pipeline(std::uint64_t seed, std::int64_t trials = 1'000'000);

// Dispatch by suite name (constants | moments | maxstability | middle |
// pipeline); nullopt for an unknown name.
std::optional<SuiteReport> run_verify_suite(std::string_view name, std::uint64_t seed);

void print_suite(const SuiteReport& report, std::ostream& out);

}  // namespace expertsim
