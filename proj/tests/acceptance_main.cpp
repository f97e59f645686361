// Acceptance suite: one pass/fail line per release criterion. Statistical
// checks run with frozen seeds so the outcome is reproducible bit for bit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "expertsim/detstream.hpp"
#include "expertsim/estimator.hpp"
#include "expertsim/experiment.hpp"
#include "expertsim/loss_model.hpp"
#include "expertsim/mwu.hpp"
#include "expertsim/netsim.hpp"
#include "expertsim/protocols.hpp"
#include "expertsim/text.hpp"
#include "expertsim/verify.hpp"

namespace {

using namespace expertsim;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Harness {
 public:
  void criterion(int id, const std::string& name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL", id,
                name.c_str(), outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++failures_;
  }

  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string fmt(double v) { return format_double(v); }

Outcome from_suites(const std::vector<SuiteReport>& suites) {
  Outcome out;
  out.pass = true;
  for (const SuiteReport& suite : suites) {
    double worst = 0.0;
    for (const CheckResult& c : suite.checks) {
      if (!c.pass) {
        out.pass = false;
        out.detail += " [" + c.name + " stat=" + fmt(c.statistic) + "]";
      }
      if (c.hi > 0.0) worst = std::max(worst, c.statistic / c.hi);
    }
    out.detail += suite.suite + " worst stat/bound=" + fmt(worst) + "; ";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria 5-7 share the gap instance n=16, s=4, p=2, T=20000, RANGE(1,5).

struct GapRuns {
  std::vector<RunReport> baseline;
  std::vector<RunReport> simple;
};

constexpr int kGapExperts = 16;
constexpr int kGapServers = 4;
constexpr std::int64_t kGapHorizon = 20'000;
constexpr double kGapP = 2.0;
constexpr int kSeeds = 20;

GapRuns run_gap_instances() {
  GapRuns runs;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const auto tensor =
        gen_range_instance(kGapExperts, kGapServers, kGapHorizon, 1.0, 5.0, 0.5, seed);
    runs.baseline.push_back(run_baseline(tensor, kGapP, seed));
    runs.simple.push_back(run_simple(tensor, kGapP, seed));
  }
  return runs;
}

double mean_regret(const std::vector<RunReport>& reports) {
  double sum = 0.0;
  for (const RunReport& r : reports) sum += r.regret_amortized;
  return sum / static_cast<double>(reports.size());
}

// ---------------------------------------------------------------------------
// Criterion 9 helpers.

struct Mutation {
  std::int64_t round = -1;
  int expert = -1;
  int server = -1;
  double new_value = 0.0;
};

// True when raising expert `i`'s loss at round `t` cannot disturb scoring:
// the round's choice differs from i, and i is never a prefix argmin from t on.
bool scoring_safe(const RunReport& report, const AggregatedLosses& agg, std::int64_t t, int i) {
  if (report.choices[static_cast<std::size_t>(t)] == i) return false;
  std::vector<double> totals(static_cast<std::size_t>(agg.experts), 0.0);
  for (std::int64_t u = 0; u < agg.horizon; ++u) {
    for (int x = 0; x < agg.experts; ++x) totals[static_cast<std::size_t>(x)] += agg.at(x, u);
    if (u >= t && std::min_element(totals.begin(), totals.end()) - totals.begin() == i) {
      return false;
    }
  }
  return true;
}

bool reports_identical(const RunReport& a, const RunReport& b) {
  return a.choices == b.choices && a.true_loss == b.true_loss && a.estimate == b.estimate &&
         a.cum_bits == b.cum_bits && a.cum_regret == b.cum_regret && a.alg_loss == b.alg_loss &&
         a.best_loss == b.best_loss && a.regret_amortized == b.regret_amortized &&
         a.total_bits == b.total_bits &&
         format_run_report_csv(a, "x") == format_run_report_csv(b, "x");
}

// SIMPLE with a threshold that actually bites: find an entry none of whose
// copies were reported, raise it while keeping every copy strictly below the
// threshold, and demand a bit-identical report.
Outcome info_barrier_simple() {
  const int n = 8;
  const int s = 3;
  const std::int64_t horizon = 300;
  const std::uint64_t seed = 71;
  const auto tensor = gen_range_instance(n, s, horizon, 1.0, 5.0, 0.3, 4);
  ProtocolConfig cfg;
  cfg.variant = Variant::kSimple;
  cfg.p = kGapP;
  cfg.threshold_const = 0.2;  // desk-scale nsT is tiny; raise tau so it suppresses values

  RunOptions opts;
  opts.keep_transcripts = true;
  const RunResult base = run_protocol(cfg, tensor, seed, opts);
  const auto agg = lp_aggregate(tensor, cfg.p);
  const DerivedParams d = derive_params(cfg, n, s, horizon, tensor.regime().hi);

  std::set<std::tuple<std::int64_t, int, int>> reported;
  for (const RoundTranscript& tr : base.transcripts) {
    for (const Message& m : tr.messages) {
      if (m.kind == MessageKind::kValueReport) reported.insert({tr.round, m.expert, m.sender});
    }
  }

  Mutation mut;
  for (std::int64_t t = horizon / 4; t < horizon && mut.round < 0; ++t) {
    for (int i = n - 1; i >= 1 && mut.round < 0; --i) {
      if (!scoring_safe(base.report, agg, t, i)) continue;
      for (int j = 1; j <= s; ++j) {
        if (reported.count({t, i, j}) > 0) continue;
        double min_root = std::numeric_limits<double>::infinity();
        for (int b = 1; b <= d.est.copies; ++b) {
          const double e = sample_exponential(
              seed, StreamKey{StreamRole::kServerExp, static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                              static_cast<std::uint64_t>(b)});
          min_root = std::min(min_root, std::pow(e, 1.0 / cfg.p));
        }
        const double ceiling =
            std::min(tensor.regime().hi, 0.999 * d.threshold_base * d.est.norm * min_root);
        const double old_value = tensor.at(i, j - 1, t);
        if (ceiling > old_value * (1.0 + 1e-9)) {
          mut = {t, i, j, ceiling};
          break;
        }
      }
    }
  }
  if (mut.round < 0) return {false, "no mutation candidate found"};

  LossTensor mutated = tensor;
  mutated.set(mut.expert, mut.server - 1, mut.round, mut.new_value);
  const RunResult after = run_protocol(cfg, mutated, seed, opts);
  const bool same = reports_identical(base.report, after.report);
  return {same, same ? "simple: mutated unreported entry (t=" + std::to_string(mut.round) +
                           "), report bit-identical"
                     : "simple report changed after unreported mutation"};
}

// FULL: corrupt an entry inside an inactive round.
Outcome info_barrier_full() {
  const int n = 4;
  const int s = 3;
  const std::int64_t horizon = 400;
  const std::uint64_t seed = 7;
  const auto tensor = gen_unit_instance(n, s, horizon, 1.0, 0.3, 41);
  ProtocolConfig cfg;
  cfg.variant = Variant::kFull;
  cfg.p = kGapP;
  cfg.target_regret = 0.1;  // rho = 1/4

  const RunResult base = run_protocol(cfg, tensor, seed);
  const auto agg = lp_aggregate(tensor, cfg.p);
  const DerivedParams d = derive_params(cfg, n, s, horizon, tensor.regime().hi);

  Mutation mut;
  for (std::int64_t t = horizon / 4; t < horizon && mut.round < 0; ++t) {
    if (round_activity(seed, t, d.activity, d.level_cap).active) continue;
    for (int i = n - 1; i >= 1; --i) {
      if (!scoring_safe(base.report, agg, t, i)) continue;
      const double old_value = tensor.at(i, 0, t);
      const double bumped = std::min(1.0, old_value + 0.37 * (1.0 - old_value) + 1e-3);
      if (bumped > old_value) {
        mut = {t, i, 1, bumped};
        break;
      }
    }
  }
  if (mut.round < 0) return {false, "no inactive-round candidate found"};

  LossTensor mutated = tensor;
  mutated.set(mut.expert, mut.server - 1, mut.round, mut.new_value);
  const RunResult after = run_protocol(cfg, mutated, seed);
  const bool same = reports_identical(base.report, after.report);
  return {same, same ? "full: mutated entry in inactive round (t=" + std::to_string(mut.round) +
                           "), report bit-identical"
                     : "full report changed after inactive-round mutation"};
}

Outcome rerun_byte_identical() {
  const fs::path root = fs::temp_directory_path() / "expertsim_acceptance";
  fs::remove_all(root);
  ExperimentConfig cfg;
  cfg.instance = "range";
  cfg.n = 4;
  cfg.s = 2;
  cfg.horizon = 200;
  cfg.range_lo = 1.0;
  cfg.range_hi = 5.0;
  cfg.gap = 0.5;
  cfg.variants = {"baseline", "simple"};
  cfg.p_list = {2.0};
  cfg.seeds = {1, 2};
  cfg.out_dir = (root / "a").string();
  cmd_run(cfg);
  cfg.out_dir = (root / "b").string();
  cmd_run(cfg);

  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto name = entry.path().filename();
    if (name == "summary.csv") continue;  // its comment embeds out_dir via the config hash
    ++compared;
    if (read_file(entry.path()) != read_file(root / "b" / name)) {
      return {false, "file " + name.string() + " differs between reruns"};
    }
  }
  // Same out dir twice must also be byte-stable, summary included.
  const std::string first = read_file(root / "b" / "summary.csv");
  cmd_run(cfg);
  if (read_file(root / "b" / "summary.csv") != first) {
    return {false, "summary.csv not stable across reruns"};
  }
  return {compared > 0, "compared " + std::to_string(compared) + " report files"};
}

// ---------------------------------------------------------------------------
// Criterion 10: double-loop references.

double lp_reference(const LossTensor& tensor, double p, int i, std::int64_t t) {
  double acc = 0.0;
  for (int j = 0; j < tensor.servers(); ++j) acc += std::pow(tensor.at(i, j, t), p);
  return std::pow(acc, 1.0 / p);
}

double regret_reference(const LossTensor& tensor, double p, const std::vector<int>& choices) {
  double alg = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t < tensor.horizon(); ++t) {
    alg += lp_reference(tensor, p, choices[static_cast<std::size_t>(t)], t);
  }
  for (int i = 0; i < tensor.experts(); ++i) {
    double total = 0.0;
    for (std::int64_t t = 0; t < tensor.horizon(); ++t) total += lp_reference(tensor, p, i, t);
    best = std::min(best, total);
  }
  return (alg - best) / static_cast<double>(tensor.horizon());
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

Outcome brute_force_equivalence() {
  std::int64_t checks = 0;
  for (int n = 1; n <= 4; ++n) {
    for (int s = 1; s <= 4; ++s) {
      for (std::int64_t horizon = 1; horizon <= 4; ++horizon) {
        const std::uint64_t seed = static_cast<std::uint64_t>(n * 100 + s * 10) +
                                   static_cast<std::uint64_t>(horizon);
        const auto range_tensor = gen_range_instance(n, s, horizon, 1.0, 5.0, 0.25, seed);
        const auto unit_tensor = gen_unit_instance(n, s, horizon, 0.8, 0.25, seed);
        for (double p : {1.0, 2.0, 3.5}) {
          for (const LossTensor* tensor : {&range_tensor, &unit_tensor}) {
            const auto agg = lp_aggregate(*tensor, p);
            for (int i = 0; i < n; ++i) {
              for (std::int64_t t = 0; t < horizon; ++t) {
                if (!close_rel(agg.at(i, t), lp_reference(*tensor, p, i, t), 1e-12)) {
                  return {false, "lp mismatch"};
                }
                ++checks;
              }
            }
            std::vector<int> choices(static_cast<std::size_t>(horizon));
            for (std::int64_t t = 0; t < horizon; ++t) {
              choices[static_cast<std::size_t>(t)] = static_cast<int>(
                  stream_word(seed, StreamKey{StreamRole::kVerify,
                                              static_cast<std::uint64_t>(t)}) %
                  static_cast<std::uint64_t>(n));
            }
            if (!close_rel(regret(choices, agg), regret_reference(*tensor, p, choices), 1e-12)) {
              return {false, "regret mismatch"};
            }
            ++checks;
          }

          // SIMPLE threshold predicate against a plain re-evaluation.
          {
            ProtocolConfig cfg;
            cfg.variant = Variant::kSimple;
            cfg.p = p;
            RunOptions opts;
            opts.keep_transcripts = true;
            const RunResult run = run_protocol(cfg, range_tensor, seed, opts);
            std::set<std::tuple<std::int64_t, int, int, int>> actual;
            for (const RoundTranscript& tr : run.transcripts) {
              for (const Message& m : tr.messages) {
                if (m.kind == MessageKind::kValueReport) {
                  actual.insert({tr.round, m.expert, m.sender, m.copy});
                }
              }
            }
            const int copies = default_copies(p);
            const double c_norm = std::exp(copies * std::lgamma(1.0 - 1.0 / (copies * p)));
            const double tau = std::pow(double(s), 1.0 / p) /
                               (100.0 * std::log(double(n) * double(s) * double(horizon)));
            for (std::int64_t t = 0; t < horizon; ++t) {
              for (int i = 0; i < n; ++i) {
                for (int j = 1; j <= s; ++j) {
                  for (int b = 1; b <= copies; ++b) {
                    const double e = sample_exponential(
                        seed, StreamKey{StreamRole::kServerExp, static_cast<std::uint64_t>(t),
                                        static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(j),
                                        static_cast<std::uint64_t>(b)});
                    const double q =
                        range_tensor.at(i, j - 1, t) / (c_norm * std::pow(e, 1.0 / p));
                    const bool predicted = q >= tau;
                    const bool sent = actual.count({t, i, j, b}) > 0;
                    if (std::abs(q - tau) > 1e-9 * std::max(q, tau) && predicted != sent) {
                      return {false, "simple predicate mismatch"};
                    }
                    ++checks;
                  }
                }
              }
            }
          }

          // FULL per-level threshold predicate.
          {
            ProtocolConfig cfg;
            cfg.variant = Variant::kFull;
            cfg.p = p;
            cfg.target_regret = 1.0 / std::sqrt(static_cast<double>(horizon));
            RunOptions opts;
            opts.keep_transcripts = true;
            const RunResult run = run_protocol(cfg, unit_tensor, seed, opts);
            const DerivedParams d =
                derive_params(cfg, n, s, horizon, unit_tensor.regime().hi);
            std::set<std::tuple<std::int64_t, int, int, int>> actual;
            for (const RoundTranscript& tr : run.transcripts) {
              for (const Message& m : tr.messages) {
                if (m.kind == MessageKind::kValueReport) {
                  actual.insert({tr.round, m.expert, m.sender, m.copy});
                }
              }
            }
            const int copies = default_copies(p);
            for (std::int64_t t = 0; t < horizon; ++t) {
              const RoundActivity act = round_activity(seed, t, d.activity, d.level_cap);
              for (int i = 0; i < n; ++i) {
                for (int j = 1; j <= s; ++j) {
                  for (int b = 1; b <= copies; ++b) {
                    bool predicted = false;
                    double q = 0.0;
                    double tau_a = 0.0;
                    if (act.active) {
                      const double e = sample_exponential(
                          seed,
                          StreamKey{StreamRole::kServerExp, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                                    static_cast<std::uint64_t>(b)});
                      q = unit_tensor.at(i, j - 1, t) / std::pow(e, 1.0 / p);
                      tau_a = std::pow(double(s), 1.0 / p) /
                              (100.0 * std::pow(2.0, act.level / p) *
                               std::log(double(n) * double(s) * double(horizon)));
                      predicted = q >= tau_a && q > 0.0;
                    }
                    const bool sent = actual.count({t, i, j, b}) > 0;
                    if (std::abs(q - tau_a) > 1e-9 * std::max(q, tau_a) && predicted != sent) {
                      return {false, "full predicate mismatch"};
                    }
                    ++checks;
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return {true, std::to_string(checks) + " reference comparisons agree to 1e-12"};
}

}  // namespace

int main() {
  Harness h;

  h.criterion(1, "estimator constants (E[Z], E[Z^2] vs Gamma closed forms, 1e7 draws)", [] {
    return from_suites({verify_constants(kVerifyDefaultSeed, 10'000'000),
                        verify_moments(kVerifyDefaultSeed, 10'000'000)});
  });

  h.criterion(2, "max stability of exponential scalings (f=(3,4), p=2, 1e6 trials)", [] {
    return from_suites({verify_maxstability(kVerifyDefaultSeed, 1'000'000)});
  });

  h.criterion(3, "Pr[1/e in (x,2x]] inside the analytic bracket (1e7 draws)", [] {
    return from_suites({verify_middle(kVerifyDefaultSeed, 10'000'000)});
  });

  h.criterion(4, "pipeline unbiasedness within 5% for simple/tradeoff/full (1e6 trials)", [] {
    return from_suites({verify_pipeline(kVerifyDefaultSeed, 1'000'000)});
  });

  const GapRuns gap = run_gap_instances();

  h.criterion(5, "regret comparability on the gap instance (20 seeds)", [&gap] {
    const double base = mean_regret(gap.baseline);
    const double simple = mean_regret(gap.simple);
    const double base_bound =
        3.0 * std::pow(double(kGapServers), 1.0 / kGapP) *
        std::sqrt(std::log(double(kGapExperts)) / double(kGapHorizon));
    const bool pass = base <= base_bound && simple <= 3.0 * base;
    return Outcome{pass, "baseline=" + fmt(base) + " (bound " + fmt(base_bound) + "), simple=" +
                             fmt(simple) + " (bound " + fmt(3.0 * base) + ")"};
  });

  h.criterion(6, "communication ceilings (baseline exact, simple bounded)", [&gap] {
    const std::uint64_t base_expected =
        static_cast<std::uint64_t>(kGapHorizon) *
        (2 * kGapServers + kGapExperts * (ceil_log2(kGapExperts) + 32));
    for (const RunReport& r : gap.baseline) {
      if (r.total_bits != base_expected) {
        return Outcome{false, "baseline bits " + std::to_string(r.total_bits) + " != " +
                                  std::to_string(base_expected)};
      }
    }
    const int copies = default_copies(kGapP);
    const double w = ceil_log2(kGapExperts) + ceil_log2(copies) + 32;
    const double log_nst =
        std::log(double(kGapExperts) * double(kGapServers) * double(kGapHorizon));
    const double ceiling =
        4.0 * (2.0 * kGapServers * kGapHorizon +
               double(kGapExperts) * double(kGapHorizon) * std::pow(log_nst, kGapP + 1.0) * w);
    double worst = 0.0;
    for (const RunReport& r : gap.simple) {
      worst = std::max(worst, static_cast<double>(r.total_bits));
      if (static_cast<double>(r.total_bits) > ceiling) {
        return Outcome{false, "simple bits exceed ceiling"};
      }
    }
    return Outcome{true, "baseline exactly " + std::to_string(base_expected) +
                             " bits; simple max " + fmt(worst) + " <= ceiling " + fmt(ceiling)};
  });

  std::vector<std::vector<RunReport>> tradeoff_runs;  // per R, per seed

  h.criterion(7, "tradeoff scaling: bits ratio ~4 between consecutive R (20 seeds)", [&] {
    const std::vector<double> r_values{0.05, 0.1, 0.2};
    std::vector<double> mean_bits;
    for (double r : r_values) {
      std::vector<RunReport> runs;
      double sum = 0.0;
      for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const auto tensor =
            gen_range_instance(kGapExperts, kGapServers, kGapHorizon, 1.0, 5.0, 0.5, seed);
        runs.push_back(run_tradeoff(tensor, kGapP, r, seed));
        sum += static_cast<double>(runs.back().total_bits);
      }
      mean_bits.push_back(sum / kSeeds);
      tradeoff_runs.push_back(std::move(runs));
    }
    const double ratio1 = mean_bits[0] / mean_bits[1];
    const double ratio2 = mean_bits[1] / mean_bits[2];
    const bool pass = ratio1 >= 4.0 / 1.3 && ratio1 <= 4.0 * 1.3 && ratio2 >= 4.0 / 1.3 &&
                      ratio2 <= 4.0 * 1.3;
    return Outcome{pass, "ratios " + fmt(ratio1) + ", " + fmt(ratio2) + " (bounds [" +
                             fmt(4.0 / 1.3) + ", " + fmt(4.0 * 1.3) + "])"};
  });

  h.criterion(8, "activity and level laws", [&] {
    // Tradeoff activity: total active rounds across the R=0.05 runs.
    const double rho = 1.0 / (0.05 * 0.05 * double(kGapHorizon));  // 0.02
    std::int64_t active = 0;
    for (const RunReport& r : tradeoff_runs.at(0)) active += r.active_rounds;
    const double expected = kSeeds * double(kGapHorizon) * rho;
    const double sigma = std::sqrt(kSeeds * double(kGapHorizon) * rho * (1.0 - rho));
    const bool activity_ok = std::abs(active - expected) <= 3.0 * sigma;

    // Full level law: conditional Pr[a=1]/Pr[a=2] over 1e5 active rounds.
    const int cap = static_cast<int>(
        std::ceil(10.0 * std::log(double(kGapExperts) * kGapServers * kGapHorizon)));
    std::int64_t level1 = 0;
    std::int64_t level2 = 0;
    std::int64_t actives = 0;
    for (std::int64_t t = 0; actives < 100'000; ++t) {
      const RoundActivity act = round_activity(kVerifyDefaultSeed, t, 0.5, cap);
      if (!act.active) continue;
      ++actives;
      if (act.level == 1) ++level1;
      if (act.level == 2) ++level2;
    }
    const double ratio = static_cast<double>(level1) / static_cast<double>(level2);
    const bool level_ok = ratio >= 1.8 && ratio <= 2.2;
    return Outcome{activity_ok && level_ok,
                   "active=" + std::to_string(active) + " vs " + fmt(expected) + " (3sigma " +
                       fmt(3.0 * sigma) + "); level ratio=" + fmt(ratio)};
  });

  h.criterion(9, "information barrier and byte-identical replay", [] {
    const Outcome simple = info_barrier_simple();
    if (!simple.pass) return simple;
    const Outcome full = info_barrier_full();
    if (!full.pass) return full;
    const Outcome rerun = rerun_byte_identical();
    if (!rerun.pass) return rerun;
    return Outcome{true, simple.detail + "; " + full.detail + "; " + rerun.detail};
  });

  h.criterion(10, "brute-force equivalence on all n,s,T <= 4", brute_force_equivalence);

  if (h.failures() == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", h.failures());
  return 1;
}
