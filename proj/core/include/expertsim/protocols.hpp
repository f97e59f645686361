#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "expertsim/estimator.hpp"
#include "expertsim/loss_model.hpp"
#include "expertsim/netsim.hpp"

namespace expertsim {

// The distributed protocols. All of them play one expert per round and pay
// for communication through netsim:
//
//   BASELINE  oracle reference: every aggregated loss L_i(t) is shipped to
//             the coordinator once per round (exact losses, no estimator).
//   SIMPLE    every round active; servers report scaled losses
//             q = l / (C e^{1/p}) above a fixed threshold; the coordinator
//             feeds the geometric mean of per-copy maxima to MWU.
//   TRADEOFF  SIMPLE gated by a public activity coin with probability
//             rho = 1/(R^2 T); estimates are scaled by 1/rho.
//   FULL      unit-loss protocol: activity plus a geometric level draw
//             loosens the report threshold; increments apply only when the
//             estimate's magnitude bucket a* is within the drawn level.

enum class Variant { kBaseline, kSimple, kTradeoff, kFull };

std::string variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

struct ProtocolConfig {
  Variant variant = Variant::kBaseline;
  double p = 2.0;
  double target_regret = 0.0;     // R; required for TRADEOFF and FULL
  double threshold_const = 100.0;
  int value_bits = 32;            // V, width of a quantized value report
  double quantizer_log_range = 64.0;
  // Use the literal 2^{a*} increment scale in FULL instead of the exact
  // inverse-probability weight (kept for comparison; biased upward).
  bool literal_full_increment = false;
};

// Everything derived from (config, instance shape) before a run starts.
struct DerivedParams {
  EstimatorParams est;
  double regime_hi = 1.0;       // upper bound on a single server loss
  double s_inv_p = 1.0;         // s^{1/p}
  double activity = 1.0;        // rho, clamped to (0, 1]
  int level_cap = 0;            // A (FULL only)
  double threshold_base = 0.0;  // s^{1/p} / (threshold_const * ln(n s T))
  double rho_mwu = 1.0;         // second-moment scale fed to learning_rate
  double eta = 0.0;
};

DerivedParams derive_params(const ProtocolConfig& cfg, int experts, int servers,
                            std::int64_t horizon, double regime_hi);

struct RoundActivity {
  bool active = false;
  int level = 0;  // 1..A for FULL active rounds, else 0
};

// Public-randomness draw for round t: derived from the master seed alone, so
// coordinator and servers agree without communication and inactive rounds
// genuinely cost zero bits.
RoundActivity round_activity(std::uint64_t seed, std::int64_t t, double rho, int level_cap);

// Smallest nonnegative integer a with shat >= (servers / 2^a)^{1/p}.
int magnitude_bucket(double shat, int servers, double p);

struct RunOptions {
  bool keep_transcripts = false;
  std::ostream* transcript_sink = nullptr;
};

struct RunResult {
  RunReport report;
  CommLedger ledger;
  std::vector<RoundTranscript> transcripts;  // populated when keep_transcripts
  std::vector<std::int64_t> level_counts;    // FULL: histogram over 1..A
};

RunResult run_protocol(const ProtocolConfig& cfg, const LossTensor& tensor, std::uint64_t seed,
                       const RunOptions& opts = {});

RunReport run_baseline(const LossTensor& tensor, double p, std::uint64_t seed);
RunReport run_simple(const LossTensor& tensor, double p, std::uint64_t seed);
RunReport run_tradeoff(const LossTensor& tensor, double p, double target_regret,
                       std::uint64_t seed);
RunReport run_full(const LossTensor& tensor, double p, double target_regret, std::uint64_t seed);

// Replays the single-round estimator pipeline (thresholds, messages,
// quantization, gating, scaling) on a fixed one-expert loss row, without
// MWU. Trial k uses the same substreams round k of a real run would.
struct PipelineStats {
  double target = 0.0;            // exact L of the fixture row
  double mean_increment = 0.0;    // over all trials, inactive counted as 0
  double mean_sq_increment = 0.0;
  double rho_bound = 0.0;         // the variant's rho used for eta
  double no_estimate_rate = 0.0;  // among active trials
  double active_rate = 0.0;
  std::int64_t trials = 0;
};

PipelineStats pipeline_trials(const ProtocolConfig& cfg, std::span<const double> server_losses,
                              const RegimeTag& regime, std::int64_t trials, std::uint64_t seed);

// CSV body: time,choice,true_loss,estimate,cum_bits,cum_regret (1-based time
// and choice, empty estimate field when the round produced none). A nonempty
// provenance string is emitted first as a `# ...` comment line.
std::string format_run_report_csv(const RunReport& report, std::string_view provenance);

}  // namespace expertsim
