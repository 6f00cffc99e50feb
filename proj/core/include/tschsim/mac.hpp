#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "tschsim/asn.hpp"
#include "tschsim/radio.hpp"
#include "tschsim/random.hpp"
#include "tschsim/types.hpp"

namespace tschsim {

struct MacConfig {
  std::uint32_t slotframeLength = 101;
  SlotDuration slotDuration = kDefaultSlotDuration;
  std::uint32_t queueCapacity = 10;
  std::uint32_t maxRetries = 2;  // retransmissions after the first attempt
  std::uint32_t minBackoffExponent = 1;
  std::uint32_t maxBackoffExponent = 5;
  std::uint32_t ebPeriodSlotframes = 1;
  /// Upper bound on the per-opportunity broadcast probability on the minimal cell.
  double ebProbability = 1.0 / 3.0;
  std::vector<std::uint32_t> hoppingSequence = {0, 1, 2, 3, 4, 5, 6, 7};
  double msfHighUtilization = 0.75;
  double msfLowUtilization = 0.25;
  /// Consecutive failed transmissions on one dedicated cell before it is moved to
  /// a random offset. 0 keeps cells where they are.
  std::uint32_t relocationFailures = 0;

  std::uint32_t channel_count() const { return static_cast<std::uint32_t>(hoppingSequence.size()); }
  double slotframe_seconds() const { return slots_to_seconds(slotframeLength, slotDuration); }

  void validate() const;
};

/// Channel for a cell at this ASN: hoppingSequence[(asn + channelOffset) mod C].
std::uint32_t hopping_channel(Asn asn, std::uint32_t channelOffset, const MacConfig& cfg);

enum class CellKind : std::uint8_t { SharedMinimal, TxDedicated, RxDedicated };

struct Cell {
  std::uint32_t slotOffset = 0;
  std::uint32_t channelOffset = 0;
  CellKind kind = CellKind::SharedMinimal;
  NodeId peer = kBroadcast;

  bool operator==(const Cell&) const = default;
};

inline constexpr Cell kMinimalCell{0, 0, CellKind::SharedMinimal, kBroadcast};

/// A node's slotframe schedule. At most one cell per slotOffset.
class Schedule {
 public:
  Schedule() { cells_.emplace(0u, kMinimalCell); }

  /// Returns false (and leaves the schedule unchanged) if the offset is taken.
  bool add(const Cell& cell);
  bool remove(std::uint32_t slotOffset);
  const Cell* at(std::uint32_t slotOffset) const;
  bool is_free(std::uint32_t slotOffset) const { return !cells_.contains(slotOffset); }

  std::vector<Cell> tx_cells_to(NodeId peer) const;
  std::size_t tx_cell_count() const;
  std::size_t size() const { return cells_.size(); }
  const std::map<std::uint32_t, Cell>& cells() const { return cells_; }

 private:
  std::map<std::uint32_t, Cell> cells_;
};

struct QueueEntry {
  PacketId packet = 0;
  std::uint32_t hopRetries = 0;
  Asn enqueuedAsn;
};

enum class EnqueueResult : std::uint8_t { Accepted, DroppedQueueFull };

/// Bounded FIFO. Tail drop: an arrival that finds the queue full is rejected.
class TransmitQueue {
 public:
  explicit TransmitQueue(std::uint32_t capacity = 10) : capacity_(capacity) {}

  EnqueueResult enqueue(const QueueEntry& entry);
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  std::uint32_t capacity() const { return capacity_; }
  bool full() const { return entries_.size() >= capacity_; }

  QueueEntry& head() { return entries_.front(); }
  const QueueEntry& head() const { return entries_.front(); }
  QueueEntry pop_head();

  const std::deque<QueueEntry>& entries() const { return entries_; }

 private:
  std::uint32_t capacity_;
  std::deque<QueueEntry> entries_;
};

struct BackoffState {
  std::uint32_t exponent = 0;
  std::uint32_t window = 0;
  std::uint32_t consecutiveFailures = 0;
};

/// Draws the shared-cell backoff after a failed shared transmission.
/// BE = min(minBE + failures - 1, maxBE); window ~ U{0, 2^BE - 1}.
std::uint32_t backoff_window(BackoffState& state, RandomSource& rng, const MacConfig& cfg);
void reset_backoff(BackoffState& state, const MacConfig& cfg);

struct MsfState {
  std::uint32_t cellsElapsed = 0;
  std::uint32_t cellsUsed = 0;
  std::uint32_t saturationEvents = 0;
  std::map<std::uint32_t, std::uint32_t> cellFailures;  // slotOffset -> consecutive failures
  std::vector<std::uint32_t> addOrder;                  // dedicated tx offsets, oldest first
};

struct MacCounters {
  std::uint64_t txAttempts = 0;
  std::uint64_t txAcked = 0;
  std::uint64_t droppedQueueFull = 0;
  std::uint64_t droppedMaxRetries = 0;
  std::uint64_t ebSent = 0;
  std::uint64_t dioSent = 0;
};

struct MacState {
  explicit MacState(NodeId nodeId = 0, std::uint32_t queueCapacity = 10)
      : id(nodeId), queue(queueCapacity) {}

  NodeId id;
  bool synchronized = false;
  TransmitQueue queue;
  Schedule schedule;
  BackoffState backoff;
  MsfState msf;
  MacCounters counters;
  bool nextBroadcastIsDio = false;
};

/// Offers a packet to the node's queue, counting a queue-full loss on rejection.
EnqueueResult enqueue(MacState& node, const QueueEntry& entry);

/// Transmit decision for a cell owned by the node. nextHop is the routing
/// next hop of the head-of-line packet (none if unrouted).
std::optional<SlotTransmission> on_tx_slot(MacState& node, const Cell& cell, Asn asn,
                                           std::optional<NodeId> nextHop, const MacConfig& cfg);

enum class TxOutcome : std::uint8_t { Delivered, Requeued, DroppedMaxRetries };

struct TxResult {
  TxOutcome outcome = TxOutcome::Requeued;
  QueueEntry entry;
};

/// Applies the ACK outcome of the head-of-line transmission. Shared-cell
/// failures draw a new backoff window from backoffRng.
TxResult on_tx_result(MacState& node, bool ackReceived, bool sharedCell, RandomSource& backoffRng,
                      const MacConfig& cfg);

// --- joining ---

/// True if the minimal cell at this ASN is an EB opportunity.
bool is_eb_opportunity(Asn asn, const MacConfig& cfg);

/// Per-opportunity broadcast probability for a node that hears
/// `audibleRoutedNeighbours` other routed nodes: min(ebProbability, 1 / (n + 1)).
double broadcast_probability(std::size_t audibleRoutedNeighbours, const MacConfig& cfg);

enum class JoinTransition : std::uint8_t { None, Synchronized };

/// An unsynchronized node that hears an EB becomes synchronized.
JoinTransition process_eb(MacState& node);

// --- MSF-lite ---

std::uint32_t hashed_slot_offset(NodeId node, std::uint32_t slotframeLength);
std::uint32_t hashed_channel_offset(NodeId node, std::uint32_t channelCount);

/// First offset in 1..T-1, probing linearly (with wrap) from `start`, that is
/// free in the schedule.
std::optional<std::uint32_t> find_free_offset(const Schedule& schedule, std::uint32_t start,
                                              std::uint32_t slotframeLength);

enum class MsfAction : std::uint8_t { None, AddCell, RemoveCell };

/// Add above the high watermark, remove below the low one (never the last cell).
MsfAction msf_lite_adapt(std::size_t dedicatedCells, double utilization, const MacConfig& cfg);

/// Installs a TxDedicated cell towards `parentId`, probing linearly from
/// `probeStart` for an offset that is free in the child's schedule and where
/// the parent does not transmit. With `shareWithSiblings` the cell may land on
/// an offset where the parent already receives from a sibling, and then takes
/// that cell's channel offset; otherwise the offset must be free at both ends.
/// Returns the offset used, or none (and counts a saturation event).
std::optional<std::uint32_t> install_dedicated_cell(MacState& child, const Schedule& parent,
                                                    NodeId parentId, std::uint32_t probeStart,
                                                    std::uint32_t channelOffset,
                                                    bool shareWithSiblings, const MacConfig& cfg);

/// Removes the child's TxDedicated cell at slotOffset.
void remove_dedicated_cell(MacState& child, std::uint32_t slotOffset);

/// Rebuilds a parent's RxDedicated cells from the Tx cells its children hold
/// towards it (`incoming`, one entry per child cell with peer = child id).
/// An offset the parent already uses for one of its own cells stays deaf to
/// the child. Children sharing an offset share one Rx cell, tuned to the
/// channel of the lowest child id.
void sync_rx_cells(Schedule& parent, std::vector<Cell> incoming);

}  // namespace tschsim
