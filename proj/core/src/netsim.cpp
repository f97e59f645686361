#include "expertsim/netsim.hpp"

#include <cmath>
#include <stdexcept>

namespace expertsim {

int ceil_log2(std::int64_t x) {
  if (x < 1) throw std::invalid_argument("ceil_log2: x must be >= 1");
  int r = 0;
  while ((std::int64_t{1} << r) < x) ++r;
  return r;
}

LogQuantizer::LogQuantizer(int bits, double log_range) : log_range_(log_range) {
  if (bits < 1 || bits > 62) throw std::invalid_argument("LogQuantizer: bits must be in [1, 62]");
  if (!(log_range > 0.0)) throw std::invalid_argument("LogQuantizer: log_range must be positive");
  levels_ = std::uint64_t{1} << bits;
  step_ = 2.0 * log_range_ / static_cast<double>(levels_);
}

double LogQuantizer::apply(double v) const {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument("LogQuantizer::apply: value must be positive and finite");
  }
  double lg = std::log(v);
  if (lg < -log_range_) lg = -log_range_;
  if (lg > log_range_) lg = log_range_;
  double code = std::floor((lg + log_range_) / step_ + 0.5);
  if (code >= static_cast<double>(levels_)) code = static_cast<double>(levels_ - 1);
  return std::exp(code * step_ - log_range_);
}

void CommLedger::record(const RoundTranscript& tr) {
  round_bits_.push_back(tr.bits);
  total_ += tr.bits;
  for (const Message& m : tr.messages) ++counts_[static_cast<int>(m.kind)];
}

std::uint64_t ledger_total(const CommLedger& ledger) { return ledger.total_bits(); }

std::uint64_t audit_total(std::span<const RoundTranscript> transcripts) {
  std::uint64_t total = 0;
  for (const RoundTranscript& tr : transcripts) {
    std::uint64_t round_total = 0;
    for (const Message& m : tr.messages) round_total += m.bits;
    if (round_total != tr.bits) {
      throw std::logic_error("audit_total: transcript bit count disagrees with its messages");
    }
    total += round_total;
  }
  return total;
}

RoundTranscript run_round(std::int64_t round, bool active, int servers, int experts, int copies,
                          const std::function<std::vector<ReportPayload>(int)>& reports_for,
                          const CostModel& cost, const LogQuantizer& quant, bool with_copy_index) {
  RoundTranscript tr;
  tr.round = round;
  tr.active = active;
  if (!active) return tr;

  for (int j = 1; j <= servers; ++j) {
    Message probe;
    probe.kind = MessageKind::kSyncProbe;
    probe.sender = kCoordinator;
    probe.receiver = j;
    probe.bits = CostModel::kSyncBits;
    tr.messages.push_back(probe);
    tr.bits += probe.bits;

    for (const ReportPayload& payload : reports_for(j)) {
      Message report;
      report.kind = MessageKind::kValueReport;
      report.sender = j;
      report.receiver = kCoordinator;
      report.expert = payload.expert;
      report.copy = payload.copy;
      report.value = quant.apply(payload.value);
      report.bits = cost.report_bits(experts, copies, with_copy_index);
      tr.messages.push_back(report);
      tr.bits += report.bits;
    }

    Message ack;
    ack.kind = MessageKind::kSyncAck;
    ack.sender = j;
    ack.receiver = kCoordinator;
    ack.bits = CostModel::kSyncBits;
    tr.messages.push_back(ack);
    tr.bits += ack.bits;
  }
  return tr;
}

std::string message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kValueReport:
      return "VALUE_REPORT";
    case MessageKind::kSyncProbe:
      return "SYNC_PROBE";
    case MessageKind::kSyncAck:
      return "SYNC_ACK";
  }
  return "UNKNOWN";
}

void dump_transcript(const RoundTranscript& tr, std::ostream& out) {
  for (const Message& m : tr.messages) {
    out << tr.round + 1 << ' ' << message_kind_name(m.kind) << ' ' << m.sender << ' '
        << m.receiver << ' ' << m.expert + 1 << ' ' << m.copy << ' ' << m.bits << '\n';
  }
}

}  // namespace expertsim
