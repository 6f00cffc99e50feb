#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "tschsim/asn.hpp"
#include "tschsim/types.hpp"

namespace tschsim {

/// Intra-slot ordering. Every transmit decision of a slot is taken before the
/// medium is resolved, and receptions are delivered only after resolution.
enum class Phase : std::uint8_t {
  SlotStart,
  TxDecision,
  MediumResolve,
  RxDeliver,
  SlotEnd,
  AppArrival,
  RoutingTimer,
};

struct Event {
  Asn asn;
  Phase phase = Phase::SlotStart;
  std::uint64_t seq = 0;
  NodeId node = kBroadcast;  // owner for AppArrival / RoutingTimer, unused otherwise
};

/// Strict total order on (asn, phase, seq).
constexpr bool precedes(const Event& a, const Event& b) {
  if (a.asn != b.asn) return a.asn < b.asn;
  if (a.phase != b.phase) return a.phase < b.phase;
  return a.seq < b.seq;
}

/// Deterministic future-event list clocked in ASNs.
class EventQueue {
 public:
  /// Throws std::logic_error if asn lies before the current ASN.
  std::uint64_t schedule(Asn asn, Phase phase, NodeId node = kBroadcast);

  /// Removes and returns the minimum event, advancing now() to its ASN.
  std::optional<Event> pop_next();

  std::optional<Event> peek() const;

  Asn now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

  std::uint64_t scheduled_count() const { return next_seq_; }
  std::uint64_t popped_count() const { return popped_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return precedes(b, a); }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  Asn now_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t popped_ = 0;
};

}  // namespace tschsim
