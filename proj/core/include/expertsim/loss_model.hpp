#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace expertsim {

// Ground-truth losses l_i(j,t), their lp aggregation across servers, regret
// accounting, synthetic instance generators and trace ingestion.

enum class Regime { kRange, kUnit };

struct RegimeTag {
  Regime kind = Regime::kUnit;
  double lo = 0.0;  // RANGE: 0 < lo < hi
  double hi = 1.0;  // upper bound on every entry (1 for UNIT)

  static RegimeTag range(double lo, double hi);
  static RegimeTag unit();
  std::string describe() const;
};

class LossTensor {
 public:
  // values indexed (expert, server, time); every entry must be finite,
  // nonnegative and satisfy the regime tag.
  LossTensor(int experts, int servers, std::int64_t horizon, RegimeTag regime,
             std::vector<double> values);

  int experts() const { return n_; }
  int servers() const { return s_; }
  std::int64_t horizon() const { return horizon_; }
  const RegimeTag& regime() const { return regime_; }

  double at(int expert, int server, std::int64_t t) const {
    return values_[index(expert, server, t)];
  }
  // Regime-checked mutation (used by corruption tests).
  void set(int expert, int server, std::int64_t t, double v);

  std::span<const double> raw() const { return values_; }

 private:
  std::size_t index(int expert, int server, std::int64_t t) const {
    return static_cast<std::size_t>((t * n_ + expert) * s_ + server);
  }

  int n_ = 0;
  int s_ = 0;
  std::int64_t horizon_ = 0;
  RegimeTag regime_;
  std::vector<double> values_;
};

struct AggregatedLosses {
  int experts = 0;
  std::int64_t horizon = 0;
  std::vector<double> values;  // index t * experts + i

  double at(int expert, std::int64_t t) const {
    return values[static_cast<std::size_t>(t) * experts + expert];
  }
};

// L_i(t) = (sum_j l_i(j,t)^p)^{1/p}, row max factored out for stability.
AggregatedLosses lp_aggregate(const LossTensor& tensor, double p);

// Time-amortized excess loss over the best fixed expert. May be negative;
// never clamped.
double regret(std::span<const int> choices, const AggregatedLosses& agg);

// Synthetic instances. Expert 0 is the designated good expert: its draws are
// shifted downward by gap * (hi - lo) (gap * 1 for UNIT) so regret has a
// detectable target.
LossTensor gen_range_instance(int experts, int servers, std::int64_t horizon, double lo,
                              double hi, double gap, std::uint64_t seed);
LossTensor gen_unit_instance(int experts, int servers, std::int64_t horizon, double sparsity,
                             double gap, std::uint64_t seed);

// Trace file: header `n s T RANGE a b` or `n s T UNIT`, then n*T lines of s
// whitespace-separated decimal values, expert-major then time.
enum class TraceErrorKind {
  kMalformedHeader,
  kMalformedValue,
  kDimensionMismatch,
  kRegimeViolation,
};

class TraceError : public std::runtime_error {
 public:
  TraceError(TraceErrorKind kind, std::int64_t line, int column, const std::string& message)
      : std::runtime_error(message), kind_(kind), line_(line), column_(column) {}
  TraceErrorKind kind() const { return kind_; }
  std::int64_t line() const { return line_; }  // 1-based, 0 = whole file
  int column() const { return column_; }       // 1-based value index, 0 = whole line

 private:
  TraceErrorKind kind_;
  std::int64_t line_;
  int column_;
};

struct IngestedTrace {
  LossTensor tensor;
  double shift = 0.0;  // amount added to raise negative values to zero
};

IngestedTrace ingest_trace(const std::filesystem::path& path);
IngestedTrace ingest_trace_text(const std::string& text);
std::string format_trace(const LossTensor& tensor);
void export_trace(const LossTensor& tensor, const std::filesystem::path& path);

// CSV with header expert,time,loss (both indices 1-based).
std::string format_aggregated_csv(const AggregatedLosses& agg);

// Outcome of one protocol run.
struct RunReport {
  std::string variant;
  double p = 2.0;
  double target_regret = 0.0;  // 0 when the variant has no R parameter
  std::uint64_t seed = 0;

  std::vector<int> choices;                      // 0-based expert per round
  std::vector<double> true_loss;                 // L_{choice}(t)
  std::vector<std::optional<double>> estimate;   // chosen expert's estimate, if any
  std::vector<std::uint64_t> cum_bits;           // cumulative after round t
  std::vector<double> cum_regret;                // prefix-amortized regret

  double alg_loss = 0.0;
  double best_loss = 0.0;
  double regret_amortized = 0.0;  // (alg_loss - best_loss) / T
  std::uint64_t total_bits = 0;

  std::int64_t active_rounds = 0;
  std::int64_t no_estimate_count = 0;   // (expert, active round) pairs with no estimate
  std::int64_t estimate_opportunities = 0;
};

}  // namespace expertsim
