#pragma once

#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "tschsim/asn.hpp"
#include "tschsim/packet.hpp"

namespace tschsim {

/// Per-run result. Ratios and latency statistics are empty when undefined
/// (no generated packets, no delivered packets).
struct MetricsReport {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t droppedQueueFull = 0;
  std::uint64_t droppedMaxRetries = 0;
  std::uint64_t droppedNoRoute = 0;
  std::uint64_t inFlightAtEnd = 0;

  std::optional<double> perTotal;
  std::optional<double> perQueueFull;
  std::optional<double> perMaxRetries;
  std::optional<double> perNoRoute;

  std::optional<double> latencyMeanS;
  std::optional<double> latencyP50S;
  std::optional<double> latencyP99S;
  std::optional<double> latencyMaxS;

  std::uint32_t maxTreeDepth = 0;
  Asn warmupEndAsn;
  std::uint64_t latencyFloorViolations = 0;
  std::uint64_t cellSaturationEvents = 0;

  std::uint64_t configHash = 0;
  std::uint64_t masterSeed = 0;

  bool operator==(const MetricsReport&) const = default;
};

/// Nearest-rank percentile of an ascending sample (q in (0, 1]).
double nearest_rank_percentile(const std::vector<double>& sorted, double q);

class MetricsCollector {
 public:
  explicit MetricsCollector(SlotDuration slotDuration = kDefaultSlotDuration)
      : slotDuration_(slotDuration) {}

  void set_warmup_end(Asn asn) { warmupEnd_ = asn; }
  Asn warmup_end() const { return warmupEnd_; }

  /// Counts a generated packet; packets created before warm-up end are ignored.
  void record_generated(const Packet& packet);

  /// Classifies a packet's terminal state exactly once. Recording the same
  /// packet twice throws std::logic_error.
  void record_terminal(const Packet& packet, TerminalState state);

  std::uint64_t generated() const { return generated_; }
  const std::vector<double>& latencies() const { return latencies_; }

  struct Provenance {
    std::uint32_t maxTreeDepth = 0;
    std::uint64_t cellSaturationEvents = 0;
    std::uint64_t configHash = 0;
    std::uint64_t masterSeed = 0;
  };

  /// Everything generated but not yet terminal is reported in flight.
  MetricsReport finalize(const Provenance& provenance) const;

 private:
  bool counts(const Packet& packet) const { return packet.createdAsn >= warmupEnd_; }

  SlotDuration slotDuration_;
  Asn warmupEnd_{};
  std::uint64_t generated_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t queueFull_ = 0;
  std::uint64_t maxRetries_ = 0;
  std::uint64_t noRoute_ = 0;
  std::uint64_t floorViolations_ = 0;
  std::vector<double> latencies_;
  std::unordered_set<PacketId> recorded_;
};

}  // namespace tschsim
