#include "expertsim/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "expertsim/detstream.hpp"
#include "expertsim/estimator.hpp"
#include "expertsim/protocols.hpp"
#include "expertsim/text.hpp"

namespace expertsim {

bool SuiteReport::pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.pass; });
}

namespace {

struct Combo {
  int copies;
  double p;
};
constexpr std::array<Combo, 3> kCombos{{{3, 1.0}, {2, 2.0}, {1, 4.0}}};

CheckResult interval_check(std::string name, double statistic, double lo, double hi) {
  CheckResult c;
  c.name = std::move(name);
  c.statistic = statistic;
  c.lo = lo;
  c.hi = hi;
  c.pass = statistic >= lo && statistic <= hi;
  return c;
}

// Geometric-mean estimator draw: Z = prod_b e_b^{-1/(Bp)}.
double draw_z(std::uint64_t seed, std::uint64_t combo, std::int64_t k, int copies, double p) {
  double log_sum = 0.0;
  for (int b = 1; b <= copies; ++b) {
    const double e = sample_exponential(seed, StreamKey{StreamRole::kVerify,
                                                        static_cast<std::uint64_t>(k), combo, 0,
                                                        static_cast<std::uint64_t>(b)});
    log_sum += std::log(e);
  }
  return std::exp(-log_sum / (copies * p));
}

std::string combo_tag(const Combo& c) {
  return "B=" + std::to_string(c.copies) + ",p=" + format_double(c.p);
}

}  // namespace

SuiteReport verify_constants(std::uint64_t seed, std::int64_t draws) {
  SuiteReport report;
  report.suite = "constants";
  for (std::size_t idx = 0; idx < kCombos.size(); ++idx) {
    const Combo combo = kCombos[idx];
    const double c_exact = geo_constant(combo.copies, combo.p);
    double sum = 0.0;
    for (std::int64_t k = 0; k < draws; ++k) {
      sum += draw_z(seed, idx, k, combo.copies, combo.p);
    }
    const double mean = sum / static_cast<double>(draws);
    report.checks.push_back(interval_check("E[Z] rel err (" + combo_tag(combo) + ")",
                                           std::abs(mean / c_exact - 1.0), 0.0, 0.005));
    report.checks.push_back(interval_check("C <= 2^B (" + combo_tag(combo) + ")", c_exact, 0.0,
                                           std::ldexp(1.0, combo.copies)));
  }
  return report;
}

SuiteReport verify_moments(std::uint64_t seed, std::int64_t draws) {
  SuiteReport report;
  report.suite = "moments";
  for (std::size_t idx = 0; idx < kCombos.size(); ++idx) {
    const Combo combo = kCombos[idx];
    const double m2_exact = geo_second_moment(combo.copies, combo.p);
    double sum_sq = 0.0;
    for (std::int64_t k = 0; k < draws; ++k) {
      const double z = draw_z(seed, idx + 16, k, combo.copies, combo.p);
      sum_sq += z * z;
    }
    const double mean_sq = sum_sq / static_cast<double>(draws);
    const double ceiling = std::pow(3.0, combo.copies);
    report.checks.push_back(interval_check("E[Z^2] rel err (" + combo_tag(combo) + ")",
                                           std::abs(mean_sq / m2_exact - 1.0), 0.0, 0.02));
    report.checks.push_back(
        interval_check("Gamma E[Z^2] <= 3^B (" + combo_tag(combo) + ")", m2_exact, 0.0, ceiling));
    report.checks.push_back(
        interval_check("MC E[Z^2] <= 3^B (" + combo_tag(combo) + ")", mean_sq, 0.0, ceiling));
  }
  return report;
}

SuiteReport verify_maxstability(std::uint64_t seed, std::int64_t trials) {
  SuiteReport report;
  report.suite = "maxstability";
  const std::array<double, 2> f{3.0, 4.0};
  const double p = 2.0;
  double norm_pp = 0.0;  // |f|_p^p
  for (double v : f) norm_pp += std::pow(v, p);

  std::vector<double> samples(static_cast<std::size_t>(trials));
  for (std::int64_t k = 0; k < trials; ++k) {
    double best = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double e = sample_exponential(
          seed, StreamKey{StreamRole::kVerify, static_cast<std::uint64_t>(k), 32, j});
      best = std::max(best, f[j] / std::pow(e, 1.0 / p));
    }
    samples[static_cast<std::size_t>(k)] = best;
  }
  std::sort(samples.begin(), samples.end());
  double sup = 0.0;
  const double n = static_cast<double>(trials);
  for (std::int64_t k = 0; k < trials; ++k) {
    const double x = samples[static_cast<std::size_t>(k)];
    const double cdf = std::exp(-norm_pp * std::pow(x, -p));
    sup = std::max(sup, std::abs(static_cast<double>(k + 1) / n - cdf));
    sup = std::max(sup, std::abs(static_cast<double>(k) / n - cdf));
  }
  report.checks.push_back(interval_check("sup |ECDF - exp(-25/t^2)| (f=(3,4), p=2)", sup, 0.0, 0.01));
  return report;
}

SuiteReport verify_middle(std::uint64_t seed, std::int64_t draws) {
  SuiteReport report;
  report.suite = "middle";
  const std::array<double, 3> xs{4.0, 8.0, 16.0};
  for (std::size_t idx = 0; idx < xs.size(); ++idx) {
    const double x = xs[idx];
    std::int64_t hits = 0;
    for (std::int64_t k = 0; k < draws; ++k) {
      const double e = sample_exponential(
          seed, StreamKey{StreamRole::kVerify, static_cast<std::uint64_t>(k), 64 + idx});
      const double inv = 1.0 / e;
      if (inv > x && inv <= 2.0 * x) ++hits;
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(draws);
    report.checks.push_back(interval_check("Pr[1/e in (x,2x]] at x=" + format_double(x), frac,
                                           1.0 / (4.0 * x), 1.0 / (2.0 * x)));
  }
  return report;
}

SuiteReport verify_pipeline(std::uint64_t seed, std::int64_t trials) {
  SuiteReport report;
  report.suite = "pipeline";
  // Activity 1/4 for the sampled variants; R chosen so rho = 1/(R^2 T) = 1/4.
  const double sampled_r = 2.0 / std::sqrt(static_cast<double>(trials));

  struct Fixture {
    Variant variant;
    RegimeTag regime;
    std::vector<double> losses;
    double target_regret;
  };
  const std::vector<Fixture> fixtures{
      {Variant::kSimple, RegimeTag::range(1.0, 5.0), {3.0, 3.0, 3.0, 3.0}, 0.0},
      {Variant::kTradeoff, RegimeTag::range(1.0, 5.0), {3.0, 3.0, 3.0, 3.0}, sampled_r},
      {Variant::kFull, RegimeTag::unit(), {1.0, 1.0, 1.0, 1.0}, sampled_r},
  };
  for (const Fixture& fx : fixtures) {
    ProtocolConfig cfg;
    cfg.variant = fx.variant;
    cfg.p = 2.0;
    cfg.target_regret = fx.target_regret;
    const PipelineStats stats =
        pipeline_trials(cfg, fx.losses, fx.regime, trials, seed + static_cast<int>(fx.variant));
    const std::string tag = variant_name(fx.variant);
    report.checks.push_back(interval_check("mean increment / L (" + tag + ")",
                                           stats.mean_increment / stats.target, 0.95, 1.05));
    report.checks.push_back(interval_check("E[inc^2] / rho_eta (" + tag + ")",
                                           stats.mean_sq_increment / stats.rho_bound, 0.0, 1.0));
    report.checks.push_back(
        interval_check("no-estimate rate (" + tag + ")", stats.no_estimate_rate, 0.0, 1e-3));
  }
  return report;
}

std::optional<SuiteReport> run_verify_suite(std::string_view name, std::uint64_t seed) {
  if (name == "constants") return verify_constants(seed);
  if (name == "moments") return verify_moments(seed);
  if (name == "maxstability") return verify_maxstability(seed);
  if (name == "middle") return verify_middle(seed);
  if (name == "pipeline") return verify_pipeline(seed);
  return std::nullopt;
}

void print_suite(const SuiteReport& report, std::ostream& out) {
  for (const CheckResult& c : report.checks) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << report.suite << "/" << c.name
        << ": stat=" << format_double(c.statistic) << " bounds=[" << format_double(c.lo) << ", "
        << format_double(c.hi) << "]\n";
  }
  out << (report.pass() ? "[PASS] " : "[FAIL] ") << "suite " << report.suite << "\n";
}

}  // namespace expertsim
