#include "expertsim/loss_model.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <sstream>

#include "expertsim/detstream.hpp"
#include "expertsim/text.hpp"

namespace expertsim {

RegimeTag RegimeTag::range(double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("RegimeTag::range: requires 0 < lo < hi");
  }
  return RegimeTag{Regime::kRange, lo, hi};
}

RegimeTag RegimeTag::unit() { return RegimeTag{Regime::kUnit, 0.0, 1.0}; }

std::string RegimeTag::describe() const {
  if (kind == Regime::kUnit) return "UNIT";
  return "RANGE " + format_double(lo) + " " + format_double(hi);
}

namespace {

void check_regime(const RegimeTag& tag, double v, std::int64_t line, int column) {
  if (!std::isfinite(v) || v < 0.0) {
    throw TraceError(TraceErrorKind::kRegimeViolation, line, column,
                     "loss value must be finite and nonnegative");
  }
  if (tag.kind == Regime::kRange) {
    if (v < tag.lo || v > tag.hi) {
      throw TraceError(TraceErrorKind::kRegimeViolation, line, column,
                       "value " + format_double(v) + " outside RANGE [" + format_double(tag.lo) +
                           ", " + format_double(tag.hi) + "]");
    }
  } else if (v > tag.hi) {
    throw TraceError(TraceErrorKind::kRegimeViolation, line, column,
                     "value " + format_double(v) + " exceeds UNIT bound 1");
  }
}

}  // namespace

LossTensor::LossTensor(int experts, int servers, std::int64_t horizon, RegimeTag regime,
                       std::vector<double> values)
    : n_(experts), s_(servers), horizon_(horizon), regime_(regime), values_(std::move(values)) {
  if (n_ <= 0 || s_ <= 0 || horizon_ <= 0) {
    throw std::invalid_argument("LossTensor: dimensions must be strictly positive");
  }
  const std::size_t want =
      static_cast<std::size_t>(n_) * static_cast<std::size_t>(s_) * static_cast<std::size_t>(horizon_);
  if (values_.size() != want) {
    throw std::invalid_argument("LossTensor: value count does not match dimensions");
  }
  for (double v : values_) check_regime(regime_, v, 0, 0);
}

void LossTensor::set(int expert, int server, std::int64_t t, double v) {
  check_regime(regime_, v, 0, 0);
  values_[index(expert, server, t)] = v;
}

AggregatedLosses lp_aggregate(const LossTensor& tensor, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("lp_aggregate: p must be finite and >= 1");
  }
  const int n = tensor.experts();
  const int s = tensor.servers();
  const std::int64_t horizon = tensor.horizon();
  AggregatedLosses out;
  out.experts = n;
  out.horizon = horizon;
  out.values.resize(static_cast<std::size_t>(n) * horizon);
  for (std::int64_t t = 0; t < horizon; ++t) {
    for (int i = 0; i < n; ++i) {
      double row_max = 0.0;
      for (int j = 0; j < s; ++j) row_max = std::max(row_max, tensor.at(i, j, t));
      double value = 0.0;
      if (row_max > 0.0) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += std::pow(tensor.at(i, j, t) / row_max, p);
        value = row_max * std::pow(acc, 1.0 / p);
      }
      out.values[static_cast<std::size_t>(t) * n + i] = value;
    }
  }
  return out;
}

double regret(std::span<const int> choices, const AggregatedLosses& agg) {
  if (static_cast<std::int64_t>(choices.size()) != agg.horizon) {
    throw std::invalid_argument("regret: choices length must equal the horizon");
  }
  double alg = 0.0;
  std::vector<double> totals(agg.experts, 0.0);
  for (std::int64_t t = 0; t < agg.horizon; ++t) {
    const int c = choices[static_cast<std::size_t>(t)];
    if (c < 0 || c >= agg.experts) throw std::invalid_argument("regret: choice out of range");
    alg += agg.at(c, t);
    for (int i = 0; i < agg.experts; ++i) totals[i] += agg.at(i, t);
  }
  const double best = *std::min_element(totals.begin(), totals.end());
  return (alg - best) / static_cast<double>(agg.horizon);
}

LossTensor gen_range_instance(int experts, int servers, std::int64_t horizon, double lo, double hi,
                              double gap, std::uint64_t seed) {
  if (!(lo > 0.0)) throw std::invalid_argument("gen_range_instance: requires lo > 0");
  if (!(hi > lo)) throw std::invalid_argument("gen_range_instance: requires hi > lo");
  if (!(gap >= 0.0) || !(gap < 1.0)) {
    throw std::invalid_argument("gen_range_instance: gap must lie in [0, 1)");
  }
  std::vector<double> values(static_cast<std::size_t>(experts) * servers * horizon);
  for (std::int64_t t = 0; t < horizon; ++t) {
    for (int i = 0; i < experts; ++i) {
      const double top = (i == 0) ? hi - gap * (hi - lo) : hi;
      for (int j = 0; j < servers; ++j) {
        const double u = uniform01(seed, StreamKey{StreamRole::kInstance,
                                                   static_cast<std::uint64_t>(t),
                                                   static_cast<std::uint64_t>(i),
                                                   static_cast<std::uint64_t>(j)});
        values[static_cast<std::size_t>((t * experts + i)) * servers + j] = lo + u * (top - lo);
      }
    }
  }
  return LossTensor(experts, servers, horizon, RegimeTag::range(lo, hi), std::move(values));
}

LossTensor gen_unit_instance(int experts, int servers, std::int64_t horizon, double sparsity,
                             double gap, std::uint64_t seed) {
  if (!(sparsity > 0.0) || !(sparsity <= 1.0)) {
    throw std::invalid_argument("gen_unit_instance: sparsity must lie in (0, 1]");
  }
  if (!(gap >= 0.0) || !(gap < 1.0)) {
    throw std::invalid_argument("gen_unit_instance: gap must lie in [0, 1)");
  }
  std::vector<double> values(static_cast<std::size_t>(experts) * servers * horizon, 0.0);
  for (std::int64_t t = 0; t < horizon; ++t) {
    for (int i = 0; i < experts; ++i) {
      const double top = (i == 0) ? 1.0 - gap : 1.0;
      for (int j = 0; j < servers; ++j) {
        StreamKey key{StreamRole::kInstance, static_cast<std::uint64_t>(t),
                      static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), 1};
        const bool nonzero = sparsity >= 1.0 || uniform01(seed, key) < sparsity;
        if (nonzero) {
          key.b = 2;
          values[static_cast<std::size_t>((t * experts + i)) * servers + j] =
              uniform01(seed, key) * top;
        }
      }
    }
  }
  return LossTensor(experts, servers, horizon, RegimeTag::unit(), std::move(values));
}

namespace {

double parse_value(const std::string& token, TraceErrorKind kind, std::int64_t line, int column) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw TraceError(kind, line, column, "cannot parse decimal value '" + token + "'");
  }
  return v;
}

std::vector<std::string> tokens_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

IngestedTrace ingest_trace_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw TraceError(TraceErrorKind::kMalformedHeader, 1, 0, "empty trace file");
  }
  const auto head = tokens_of(line);
  if (head.size() != 4 && head.size() != 6) {
    throw TraceError(TraceErrorKind::kMalformedHeader, 1, 0,
                     "header must be `n s T RANGE a b` or `n s T UNIT`");
  }
  long long n = 0, s = 0, horizon = 0;
  try {
    n = std::stoll(head[0]);
    s = std::stoll(head[1]);
    horizon = std::stoll(head[2]);
  } catch (const std::exception&) {
    throw TraceError(TraceErrorKind::kMalformedHeader, 1, 0, "non-integer dimension in header");
  }
  if (n <= 0 || s <= 0 || horizon <= 0) {
    throw TraceError(TraceErrorKind::kMalformedHeader, 1, 0, "dimensions must be positive");
  }
  RegimeTag tag;
  if (head[3] == "UNIT" && head.size() == 4) {
    tag = RegimeTag::unit();
  } else if (head[3] == "RANGE" && head.size() == 6) {
    const double lo = parse_value(head[4], TraceErrorKind::kMalformedHeader, 1, 5);
    const double hi = parse_value(head[5], TraceErrorKind::kMalformedHeader, 1, 6);
    try {
      tag = RegimeTag::range(lo, hi);
    } catch (const std::invalid_argument& e) {
      throw TraceError(TraceErrorKind::kMalformedHeader, 1, 0, e.what());
    }
  } else {
    throw TraceError(TraceErrorKind::kMalformedHeader, 1, 0,
                     "unknown regime tag '" + head[3] + "'");
  }

  std::vector<double> values;
  std::vector<std::int64_t> row_lines;
  values.reserve(static_cast<std::size_t>(n) * s * horizon);
  std::int64_t lineno = 1;
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto toks = tokens_of(line);
    if (static_cast<long long>(toks.size()) != s) {
      throw TraceError(TraceErrorKind::kDimensionMismatch, lineno, 0,
                       "expected " + std::to_string(s) + " values, found " +
                           std::to_string(toks.size()));
    }
    for (std::size_t c = 0; c < toks.size(); ++c) {
      values.push_back(
          parse_value(toks[c], TraceErrorKind::kMalformedValue, lineno, static_cast<int>(c + 1)));
    }
    row_lines.push_back(lineno);
    ++rows;
  }
  if (rows != n * horizon) {
    throw TraceError(TraceErrorKind::kDimensionMismatch, lineno, 0,
                     "expected " + std::to_string(n * horizon) + " value rows, found " +
                         std::to_string(rows));
  }

  // Negative traces (e.g. negated accuracies) are shifted up before the
  // regime check; the shift is reported back to the caller.
  double shift = 0.0;
  const double min_value = *std::min_element(values.begin(), values.end());
  if (min_value < 0.0) {
    shift = -min_value;
    for (double& v : values) v += shift;
  }

  // Input rows are expert-major: row (i * T + t) holds the servers of (i, t).
  std::vector<double> reordered(values.size());
  for (long long i = 0; i < n; ++i) {
    for (long long t = 0; t < horizon; ++t) {
      for (long long j = 0; j < s; ++j) {
        const std::size_t row = static_cast<std::size_t>(i * horizon + t);
        const std::size_t src = row * s + static_cast<std::size_t>(j);
        const std::size_t dst = static_cast<std::size_t>((t * n + i) * s + j);
        check_regime(tag, values[src], row_lines[row], static_cast<int>(j + 1));
        reordered[dst] = values[src];
      }
    }
  }
  return IngestedTrace{LossTensor(static_cast<int>(n), static_cast<int>(s), horizon, tag,
                                  std::move(reordered)),
                       shift};
}

IngestedTrace ingest_trace(const std::filesystem::path& path) {
  return ingest_trace_text(read_file(path));
}

std::string format_trace(const LossTensor& tensor) {
  std::string out;
  out += std::to_string(tensor.experts()) + " " + std::to_string(tensor.servers()) + " " +
         std::to_string(tensor.horizon()) + " " + tensor.regime().describe() + "\n";
  for (int i = 0; i < tensor.experts(); ++i) {
    for (std::int64_t t = 0; t < tensor.horizon(); ++t) {
      for (int j = 0; j < tensor.servers(); ++j) {
        if (j > 0) out += ' ';
        out += format_double(tensor.at(i, j, t));
      }
      out += '\n';
    }
  }
  return out;
}

void export_trace(const LossTensor& tensor, const std::filesystem::path& path) {
  write_file_atomic(path, format_trace(tensor));
}

std::string format_aggregated_csv(const AggregatedLosses& agg) {
  std::string out = "expert,time,loss\n";
  for (int i = 0; i < agg.experts; ++i) {
    for (std::int64_t t = 0; t < agg.horizon; ++t) {
      out += std::to_string(i + 1) + "," + std::to_string(t + 1) + "," +
             format_double(agg.at(i, t)) + "\n";
    }
  }
  return out;
}

}  // namespace expertsim
