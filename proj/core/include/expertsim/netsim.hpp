#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace expertsim {

// Deterministic simulation of the coordinator model: sequential rounds,
// self-delimiting server replies, and a bit-exact communication ledger.
//
// Cost model: SYNC_PROBE and SYNC_ACK cost 1 bit each; a VALUE_REPORT costs
// ceil(log2 n) + ceil(log2 B) + V bits (the copy-index term only when the
// payload carries one), with V the configured quantized-value width.

enum class MessageKind { kValueReport, kSyncProbe, kSyncAck };

inline constexpr int kCoordinator = 0;  // servers are 1..s

struct Message {
  MessageKind kind = MessageKind::kSyncProbe;
  int sender = 0;
  int receiver = 0;
  int expert = -1;     // 0-based; -1 when absent
  int copy = 0;        // 1-based copy index; 0 when absent
  double value = 0.0;  // decoded quantized value
  std::uint64_t bits = 0;
};

int ceil_log2(std::int64_t x);  // bits to address x items; 0 for x == 1

struct CostModel {
  int value_bits = 32;

  std::uint64_t report_bits(int experts, int copies, bool with_copy) const {
    return static_cast<std::uint64_t>(ceil_log2(experts)) +
           (with_copy ? static_cast<std::uint64_t>(ceil_log2(copies)) : 0) +
           static_cast<std::uint64_t>(value_bits);
  }
  static constexpr std::uint64_t kSyncBits = 1;
};

// Fixed-point quantizer of ln(value) over [-log_range, log_range]. Values
// outside the dynamic range clamp to its ends.
class LogQuantizer {
 public:
  explicit LogQuantizer(int bits = 32, double log_range = 64.0);
  double apply(double v) const;  // v must be > 0
  double relative_step() const { return step_; }

 private:
  double log_range_;
  double step_;
  std::uint64_t levels_;
};

struct ReportPayload {
  int expert = 0;
  int copy = 0;  // 0 = no copy index
  double value = 0.0;
};

struct RoundTranscript {
  std::int64_t round = 0;
  bool active = false;
  std::vector<Message> messages;
  std::uint64_t bits = 0;
};

class CommLedger {
 public:
  void record(const RoundTranscript& tr);

  std::int64_t rounds() const { return static_cast<std::int64_t>(round_bits_.size()); }
  std::uint64_t total_bits() const { return total_; }
  std::uint64_t round_bits(std::int64_t r) const { return round_bits_[static_cast<std::size_t>(r)]; }
  const std::vector<std::uint64_t>& per_round() const { return round_bits_; }
  std::uint64_t count(MessageKind kind) const { return counts_[static_cast<int>(kind)]; }

 private:
  std::vector<std::uint64_t> round_bits_;
  std::uint64_t total_ = 0;
  std::uint64_t counts_[3] = {0, 0, 0};
};

std::uint64_t ledger_total(const CommLedger& ledger);

// Independent double-entry recount from retained transcripts.
std::uint64_t audit_total(std::span<const RoundTranscript> transcripts);

// One active round: for each server j = 1..s in fixed order, the coordinator
// sends a probe, the server replies with its VALUE_REPORTs (values quantized
// before costing and delivery) and closes with an ack. An inactive round
// produces no messages and zero bits.
RoundTranscript run_round(std::int64_t round, bool active, int servers, int experts, int copies,
                          const std::function<std::vector<ReportPayload>(int)>& reports_for,
                          const CostModel& cost, const LogQuantizer& quant, bool with_copy_index);

std::string message_kind_name(MessageKind kind);
void dump_transcript(const RoundTranscript& tr, std::ostream& out);

}  // namespace expertsim
