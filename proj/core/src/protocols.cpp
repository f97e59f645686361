#include "expertsim/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "expertsim/detstream.hpp"
#include "expertsim/mwu.hpp"
#include "expertsim/text.hpp"

namespace expertsim {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kBaseline:
      return "baseline";
    case Variant::kSimple:
      return "simple";
    case Variant::kTradeoff:
      return "tradeoff";
    case Variant::kFull:
      return "full";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "simple") return Variant::kSimple;
  if (name == "tradeoff") return Variant::kTradeoff;
  if (name == "full") return Variant::kFull;
  return std::nullopt;
}

DerivedParams derive_params(const ProtocolConfig& cfg, int experts, int servers,
                            std::int64_t horizon, double regime_hi) {
  if (!(cfg.p >= 1.0) || !std::isfinite(cfg.p)) {
    throw std::invalid_argument("derive_params: p must be finite and >= 1");
  }
  if (!(cfg.threshold_const > 0.0)) {
    throw std::invalid_argument("derive_params: threshold_const must be positive");
  }
  if (experts < 1 || servers < 1 || horizon < 1) {
    throw std::invalid_argument("derive_params: dimensions must be positive");
  }

  DerivedParams d;
  d.est = EstimatorParams::for_exponent(cfg.p);
  d.regime_hi = regime_hi;
  d.s_inv_p = std::pow(static_cast<double>(servers), 1.0 / cfg.p);

  const double nst = static_cast<double>(experts) * static_cast<double>(servers) *
                     static_cast<double>(horizon);
  const double log_nst = std::log(nst);  // natural log throughout
  d.threshold_base = d.s_inv_p / (cfg.threshold_const * log_nst);  // +inf when nst == 1

  const bool sampled = cfg.variant == Variant::kTradeoff || cfg.variant == Variant::kFull;
  if (sampled) {
    const double r = cfg.target_regret;
    const double r_min = 1.0 / std::sqrt(static_cast<double>(horizon));
    if (!(r >= r_min)) {
      throw std::invalid_argument("derive_params: target regret must be >= 1/sqrt(T)");
    }
    double rho = 1.0 / (r * r * static_cast<double>(horizon));
    if (cfg.variant == Variant::kFull) {
      rho *= std::max(std::pow(static_cast<double>(servers), 1.0 - 2.0 / cfg.p), 1.0);
    }
    d.activity = std::min(rho, 1.0);
    if (!(d.activity > 0.0)) throw std::invalid_argument("derive_params: activity underflow");
  }
  if (cfg.variant == Variant::kFull) {
    d.level_cap = std::max(1, static_cast<int>(std::ceil(10.0 * log_nst)));
  }

  // Second-moment scales behind eta = sqrt(ln n / (rho T)). The estimator
  // variants use the exact moment bound of the geometric-mean estimate,
  // halved per the e^{-y} <= 1 - y + y^2/2 step of the regret analysis; the
  // exact-loss baseline uses the Hoeffding-lemma constant M^2/8 for losses
  // in (0, M].
  const double max_loss = regime_hi * d.s_inv_p;
  const double moment_ratio = d.est.second_moment / (d.est.norm * d.est.norm);
  switch (cfg.variant) {
    case Variant::kBaseline:
      d.rho_mwu = max_loss * max_loss / 8.0;
      break;
    case Variant::kSimple:
      d.rho_mwu = moment_ratio * max_loss * max_loss / 2.0;
      break;
    case Variant::kTradeoff:
      d.rho_mwu = moment_ratio * max_loss * max_loss / (2.0 * d.activity);
      break;
    case Variant::kFull:
      d.rho_mwu = (1.0 + moment_ratio) * d.s_inv_p * d.s_inv_p / d.activity;
      break;
  }
  d.eta = experts >= 2 ? learning_rate(d.rho_mwu, horizon, experts) : 0.0;
  return d;
}

RoundActivity round_activity(std::uint64_t seed, std::int64_t t, double rho, int level_cap) {
  const double u = uniform01(seed, StreamKey{StreamRole::kPublicCoin,
                                             static_cast<std::uint64_t>(t)});
  if (!(u < rho)) return {false, 0};
  if (level_cap <= 0) return {true, 0};
  const double v = u / rho;  // uniform on [0, 1) given active
  int level = static_cast<int>(std::ceil(-std::log2(1.0 - v)));
  level = std::clamp(level, 1, level_cap);  // tail mass beyond A folds into A
  return {true, level};
}

int magnitude_bucket(double shat, int servers, double p) {
  if (!(shat > 0.0)) throw std::invalid_argument("magnitude_bucket: estimate must be positive");
  int a = 0;
  while (shat < std::pow(static_cast<double>(servers) / std::ldexp(1.0, a), 1.0 / p)) {
    ++a;
    if (a > 4096) return a;  // deeper buckets can never pass a level gate
  }
  return a;
}

namespace {

// Per-round pipeline shared by full runs and the trial harness. Server-side
// code is the only part that touches the loss tensor; the coordinator sees
// messages and public randomness alone.
struct RoundOutcome {
  RoundTranscript transcript;
  std::vector<double> increments;
  std::vector<std::optional<double>> estimates;
  bool active = false;
  int level = 0;
};

class RoundEngine {
 public:
  RoundEngine(const ProtocolConfig& cfg, const LossTensor& tensor, const DerivedParams& d,
              std::uint64_t seed)
      : cfg_(cfg),
        tensor_(tensor),
        d_(d),
        seed_(seed),
        cost_{cfg.value_bits},
        quant_(cfg.value_bits, cfg.quantizer_log_range) {}

  RoundOutcome run(std::int64_t stream_t, std::int64_t tensor_t) const {
    const int n = tensor_.experts();
    RoundOutcome out;
    out.increments.assign(static_cast<std::size_t>(n), 0.0);
    out.estimates.assign(static_cast<std::size_t>(n), std::nullopt);

    switch (cfg_.variant) {
      case Variant::kBaseline:
        out.active = true;
        break;
      case Variant::kSimple:
        out.active = true;
        break;
      case Variant::kTradeoff: {
        out.active = round_activity(seed_, stream_t, d_.activity, 0).active;
        break;
      }
      case Variant::kFull: {
        const RoundActivity act = round_activity(seed_, stream_t, d_.activity, d_.level_cap);
        out.active = act.active;
        out.level = act.level;
        break;
      }
    }
    if (!out.active) {
      out.transcript.round = stream_t;
      return out;
    }

    if (cfg_.variant == Variant::kBaseline) {
      run_baseline_round(stream_t, tensor_t, out);
    } else {
      run_estimator_round(stream_t, tensor_t, out);
    }
    return out;
  }

 private:
  void run_baseline_round(std::int64_t stream_t, std::int64_t tensor_t, RoundOutcome& out) const {
    const int n = tensor_.experts();
    const int s = tensor_.servers();
    // Oracle reference: each aggregated loss enters the transcript once per
    // round, attributed to server 1.
    auto source = [&](int server) {
      std::vector<ReportPayload> reports;
      if (server == 1) {
        reports.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) reports.push_back({i, 0, aggregated_row(tensor_t, i)});
      }
      return reports;
    };
    out.transcript = run_round(stream_t, true, s, n, d_.est.copies, source, cost_, quant_, false);
    for (const Message& m : out.transcript.messages) {
      if (m.kind != MessageKind::kValueReport) continue;
      out.estimates[static_cast<std::size_t>(m.expert)] = m.value;
      out.increments[static_cast<std::size_t>(m.expert)] = m.value;
    }
  }

  void run_estimator_round(std::int64_t stream_t, std::int64_t tensor_t, RoundOutcome& out) const {
    const int n = tensor_.experts();
    const int s = tensor_.servers();
    const int copies = d_.est.copies;
    const bool raw_values = cfg_.variant == Variant::kFull;  // 1/C applied at the coordinator
    const double server_norm = raw_values ? 1.0 : d_.est.norm;
    const double threshold =
        raw_values ? d_.threshold_base / std::pow(2.0, out.level / cfg_.p) : d_.threshold_base;

    auto source = [&](int server) {
      std::vector<ReportPayload> reports;
      for (int i = 0; i < n; ++i) {
        for (int b = 1; b <= copies; ++b) {
          const double e = sample_exponential(
              seed_, StreamKey{StreamRole::kServerExp, static_cast<std::uint64_t>(stream_t),
                               static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(server),
                               static_cast<std::uint64_t>(b)});
          const double q =
              scaled_loss(tensor_.at(i, server - 1, tensor_t), e, cfg_.p, server_norm);
          if (q >= threshold && q > 0.0) reports.push_back({i, b, q});
        }
      }
      return reports;
    };
    out.transcript = run_round(stream_t, true, s, n, copies, source, cost_, quant_, true);

    // Coordinator side: per-(expert, copy) maxima over received values only.
    std::vector<double> max_value(static_cast<std::size_t>(n) * copies, 0.0);
    for (const Message& m : out.transcript.messages) {
      if (m.kind != MessageKind::kValueReport) continue;
      double& slot = max_value[static_cast<std::size_t>(m.expert) * copies + (m.copy - 1)];
      slot = std::max(slot, m.value);
    }

    for (int i = 0; i < n; ++i) {
      std::span<double> row(max_value.data() + static_cast<std::size_t>(i) * copies,
                            static_cast<std::size_t>(copies));
      if (cfg_.variant == Variant::kFull) {
        for (double& v : row) v /= d_.est.norm;
        const std::optional<double> geo = geometric_mean(row);
        if (!geo) continue;  // a missing copy zeroes the whole estimate
        const double shat = *geo;
        out.estimates[static_cast<std::size_t>(i)] = shat;
        const int bucket = magnitude_bucket(shat, s, cfg_.p);
        if (bucket <= out.level) {
          const int scale_exp =
              cfg_.literal_full_increment ? bucket : std::max(bucket, 1) - 1;
          out.increments[static_cast<std::size_t>(i)] =
              std::ldexp(1.0, scale_exp) / d_.activity * shat;
        }
      } else {
        const std::optional<double> geo = geometric_mean(row);
        if (!geo) continue;  // NO_ESTIMATE sentinel: increment stays 0
        const double shat =
            cfg_.variant == Variant::kTradeoff ? *geo / d_.activity : *geo;
        out.estimates[static_cast<std::size_t>(i)] = shat;
        out.increments[static_cast<std::size_t>(i)] = shat;
      }
    }
  }

  double aggregated_row(std::int64_t t, int expert) const {
    const int s = tensor_.servers();
    double row_max = 0.0;
    for (int j = 0; j < s; ++j) row_max = std::max(row_max, tensor_.at(expert, j, t));
    if (row_max <= 0.0) return 0.0;
    double acc = 0.0;
    for (int j = 0; j < s; ++j) acc += std::pow(tensor_.at(expert, j, t) / row_max, cfg_.p);
    return row_max * std::pow(acc, 1.0 / cfg_.p);
  }

  const ProtocolConfig& cfg_;
  const LossTensor& tensor_;
  const DerivedParams& d_;
  std::uint64_t seed_;
  CostModel cost_;
  LogQuantizer quant_;
};

void check_regime_for_variant(const ProtocolConfig& cfg, const LossTensor& tensor) {
  const Regime kind = tensor.regime().kind;
  if ((cfg.variant == Variant::kSimple || cfg.variant == Variant::kTradeoff) &&
      kind != Regime::kRange) {
    throw std::invalid_argument(variant_name(cfg.variant) +
                                " requires a RANGE(a,b) instance");
  }
  if (cfg.variant == Variant::kFull && kind != Regime::kUnit) {
    throw std::invalid_argument("full requires a UNIT instance");
  }
}

}  // namespace

RunResult run_protocol(const ProtocolConfig& cfg, const LossTensor& tensor, std::uint64_t seed,
                       const RunOptions& opts) {
  check_regime_for_variant(cfg, tensor);
  const int n = tensor.experts();
  const std::int64_t horizon = tensor.horizon();
  const DerivedParams d =
      derive_params(cfg, n, tensor.servers(), horizon, tensor.regime().hi);
  const AggregatedLosses agg = lp_aggregate(tensor, cfg.p);
  const RoundEngine engine(cfg, tensor, d, seed);

  RunResult result;
  RunReport& report = result.report;
  report.variant = variant_name(cfg.variant);
  report.p = cfg.p;
  report.target_regret =
      (cfg.variant == Variant::kTradeoff || cfg.variant == Variant::kFull) ? cfg.target_regret
                                                                           : 0.0;
  report.seed = seed;
  report.choices.reserve(static_cast<std::size_t>(horizon));
  report.true_loss.reserve(static_cast<std::size_t>(horizon));
  report.estimate.reserve(static_cast<std::size_t>(horizon));
  report.cum_bits.reserve(static_cast<std::size_t>(horizon));
  report.cum_regret.reserve(static_cast<std::size_t>(horizon));
  if (cfg.variant == Variant::kFull) {
    result.level_counts.assign(static_cast<std::size_t>(d.level_cap) + 1, 0);
  }

  WeightState state = WeightState::make(n, d.eta);
  std::vector<double> expert_totals(static_cast<std::size_t>(n), 0.0);
  double alg = 0.0;

  for (std::int64_t t = 0; t < horizon; ++t) {
    // The choice is made from weights accumulated strictly before round t.
    const int choice =
        n > 1 ? state.sample(seed, StreamKey{StreamRole::kMwuChoice,
                                             static_cast<std::uint64_t>(t)})
              : 0;
    RoundOutcome outcome = engine.run(t, t);
    if (outcome.active) {
      state.update(outcome.increments);
      ++report.active_rounds;
      report.estimate_opportunities += n;
      for (const auto& est : outcome.estimates) {
        if (!est.has_value()) ++report.no_estimate_count;
      }
      if (cfg.variant == Variant::kFull) {
        ++result.level_counts[static_cast<std::size_t>(outcome.level)];
      }
    }
    result.ledger.record(outcome.transcript);
    if (opts.transcript_sink != nullptr) dump_transcript(outcome.transcript, *opts.transcript_sink);

    const double chosen_loss = agg.at(choice, t);
    alg += chosen_loss;
    double best_prefix = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      expert_totals[static_cast<std::size_t>(i)] += agg.at(i, t);
      best_prefix = std::min(best_prefix, expert_totals[static_cast<std::size_t>(i)]);
    }

    report.choices.push_back(choice);
    report.true_loss.push_back(chosen_loss);
    report.estimate.push_back(outcome.active ? outcome.estimates[static_cast<std::size_t>(choice)]
                                             : std::nullopt);
    report.cum_bits.push_back(result.ledger.total_bits());
    report.cum_regret.push_back((alg - best_prefix) / static_cast<double>(t + 1));
    if (opts.keep_transcripts) result.transcripts.push_back(std::move(outcome.transcript));
  }

  report.alg_loss = alg;
  report.best_loss = *std::min_element(expert_totals.begin(), expert_totals.end());
  report.regret_amortized = (report.alg_loss - report.best_loss) / static_cast<double>(horizon);
  report.total_bits = result.ledger.total_bits();
  return result;
}

RunReport run_baseline(const LossTensor& tensor, double p, std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.variant = Variant::kBaseline;
  cfg.p = p;
  return run_protocol(cfg, tensor, seed).report;
}

RunReport run_simple(const LossTensor& tensor, double p, std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.variant = Variant::kSimple;
  cfg.p = p;
  return run_protocol(cfg, tensor, seed).report;
}

RunReport run_tradeoff(const LossTensor& tensor, double p, double target_regret,
                       std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.variant = Variant::kTradeoff;
  cfg.p = p;
  cfg.target_regret = target_regret;
  return run_protocol(cfg, tensor, seed).report;
}

RunReport run_full(const LossTensor& tensor, double p, double target_regret, std::uint64_t seed) {
  ProtocolConfig cfg;
  cfg.variant = Variant::kFull;
  cfg.p = p;
  cfg.target_regret = target_regret;
  return run_protocol(cfg, tensor, seed).report;
}

PipelineStats pipeline_trials(const ProtocolConfig& cfg, std::span<const double> server_losses,
                              const RegimeTag& regime, std::int64_t trials, std::uint64_t seed) {
  if (server_losses.empty()) throw std::invalid_argument("pipeline_trials: empty loss row");
  if (trials < 1) throw std::invalid_argument("pipeline_trials: trials must be >= 1");
  const int s = static_cast<int>(server_losses.size());
  LossTensor fixture(1, s, 1, regime,
                     std::vector<double>(server_losses.begin(), server_losses.end()));
  // Thresholds and activity use the trial count as the nominal horizon.
  const DerivedParams d = derive_params(cfg, 1, s, trials, regime.hi);
  const RoundEngine engine(cfg, fixture, d, seed);
  const AggregatedLosses agg = lp_aggregate(fixture, cfg.p);

  PipelineStats stats;
  stats.target = agg.at(0, 0);
  stats.trials = trials;
  stats.rho_bound = d.rho_mwu;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t active = 0;
  std::int64_t missing = 0;
  for (std::int64_t k = 0; k < trials; ++k) {
    const RoundOutcome outcome = engine.run(k, 0);
    if (!outcome.active) continue;
    ++active;
    if (!outcome.estimates[0].has_value()) ++missing;
    const double inc = outcome.increments[0];
    sum += inc;
    sum_sq += inc * inc;
  }
  stats.mean_increment = sum / static_cast<double>(trials);
  stats.mean_sq_increment = sum_sq / static_cast<double>(trials);
  stats.active_rate = static_cast<double>(active) / static_cast<double>(trials);
  stats.no_estimate_rate =
      active > 0 ? static_cast<double>(missing) / static_cast<double>(active) : 0.0;
  return stats;
}

std::string format_run_report_csv(const RunReport& report, std::string_view provenance) {
  std::string out;
  if (!provenance.empty()) {
    out += "# ";
    out += provenance;
    out += '\n';
  }
  out += "time,choice,true_loss,estimate,cum_bits,cum_regret\n";
  const std::size_t horizon = report.choices.size();
  for (std::size_t t = 0; t < horizon; ++t) {
    out += std::to_string(t + 1);
    out += ',';
    out += std::to_string(report.choices[t] + 1);
    out += ',';
    out += format_double(report.true_loss[t]);
    out += ',';
    if (report.estimate[t].has_value()) out += format_double(*report.estimate[t]);
    out += ',';
    out += std::to_string(report.cum_bits[t]);
    out += ',';
    out += format_double(report.cum_regret[t]);
    out += '\n';
  }
  return out;
}

}  // namespace expertsim
