#include "tschsim/mac.hpp"

#include <algorithm>
#include <stdexcept>

namespace tschsim {

void MacConfig::validate() const {
  if (slotframeLength < 1) throw std::invalid_argument("slotframe length must be >= 1");
  if (slotDuration.count() <= 0) throw std::invalid_argument("slot duration must be positive");
  if (queueCapacity < 1) throw std::invalid_argument("queue capacity must be >= 1");
  if (minBackoffExponent > maxBackoffExponent) {
    throw std::invalid_argument("min backoff exponent exceeds max");
  }
  if (maxBackoffExponent > 31) throw std::invalid_argument("max backoff exponent too large");
  if (ebPeriodSlotframes < 1) throw std::invalid_argument("eb period must be >= 1 slotframe");
  if (!(ebProbability > 0.0 && ebProbability <= 1.0)) {
    throw std::invalid_argument("eb probability must lie in (0, 1]");
  }
  if (hoppingSequence.empty()) throw std::invalid_argument("hopping sequence is empty");
  std::vector<std::uint32_t> sorted = hoppingSequence;
  std::sort(sorted.begin(), sorted.end());
  for (std::uint32_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != i) throw std::invalid_argument("hopping sequence is not a permutation of 0..C-1");
  }
  if (!(msfLowUtilization >= 0.0 && msfLowUtilization < msfHighUtilization &&
        msfHighUtilization <= 1.0)) {
    throw std::invalid_argument("msf thresholds must satisfy 0 <= low < high <= 1");
  }
  }

std::uint32_t hopping_channel(Asn asn, std::uint32_t channelOffset, const MacConfig& cfg) {
  const std::uint64_t c = cfg.hoppingSequence.size();
  return cfg.hoppingSequence[(asn.value + channelOffset) % c];
}

bool Schedule::add(const Cell& cell) { return cells_.emplace(cell.slotOffset, cell).second; }

bool Schedule::remove(std::uint32_t slotOffset) {
  if (slotOffset == 0) return false;  // the minimal cell is permanent
  return cells_.erase(slotOffset) > 0;
}

const Cell* Schedule::at(std::uint32_t slotOffset) const {
  auto it = cells_.find(slotOffset);
  return it == cells_.end() ? nullptr : &it->second;
}

std::vector<Cell> Schedule::tx_cells_to(NodeId peer) const {
  std::vector<Cell> out;
  for (const auto& [offset, cell] : cells_) {
    if (cell.kind == CellKind::TxDedicated && cell.peer == peer) out.push_back(cell);
  }
  return out;
}

std::size_t Schedule::tx_cell_count() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& kv) {
    return kv.second.kind == CellKind::TxDedicated;
  }));
}

EnqueueResult TransmitQueue::enqueue(const QueueEntry& entry) {
  if (full()) return EnqueueResult::DroppedQueueFull;
  entries_.push_back(entry);
  return EnqueueResult::Accepted;
}

QueueEntry TransmitQueue::pop_head() {
  QueueEntry e = entries_.front();
  entries_.pop_front();
  return e;
}

std::uint32_t backoff_window(BackoffState& state, RandomSource& rng, const MacConfig& cfg) {
  ++state.consecutiveFailures;
  state.exponent = std::min(cfg.minBackoffExponent + state.consecutiveFailures - 1,
                            cfg.maxBackoffExponent);
  const std::int64_t upper = (std::int64_t{1} << state.exponent) - 1;
  state.window = static_cast<std::uint32_t>(rng.uniform_int(0, upper));
  return state.window;
}

void reset_backoff(BackoffState& state, const MacConfig& cfg) {
  state.exponent = cfg.minBackoffExponent;
  state.window = 0;
  state.consecutiveFailures = 0;
}

EnqueueResult enqueue(MacState& node, const QueueEntry& entry) {
  const EnqueueResult r = node.queue.enqueue(entry);
  if (r == EnqueueResult::DroppedQueueFull) ++node.counters.droppedQueueFull;
  return r;
}

std::optional<SlotTransmission> on_tx_slot(MacState& node, const Cell& cell, Asn asn,
                                           std::optional<NodeId> nextHop, const MacConfig& cfg) {
  if (cell.slotOffset != asn.value % cfg.slotframeLength) {
    throw std::logic_error("on_tx_slot: cell does not belong to this timeslot");
  }
  if (cell.kind == CellKind::RxDedicated) return std::nullopt;
  if (node.queue.empty() || !nextHop) return std::nullopt;

  if (cell.kind == CellKind::TxDedicated) {
    if (cell.peer != *nextHop) return std::nullopt;
  } else if (node.backoff.window > 0) {
    --node.backoff.window;
    return std::nullopt;
  }
  ++node.counters.txAttempts;
  return SlotTransmission{node.id, *nextHop, hopping_channel(asn, cell.channelOffset, cfg),
                          FrameKind::Data};
}

TxResult on_tx_result(MacState& node, bool ackReceived, bool sharedCell, RandomSource& backoffRng,
                      const MacConfig& cfg) {
  if (node.queue.empty()) throw std::logic_error("on_tx_result: empty queue");
  if (ackReceived) {
    ++node.counters.txAcked;
    if (sharedCell) reset_backoff(node.backoff, cfg);
    return {TxOutcome::Delivered, node.queue.pop_head()};
  }
  QueueEntry& head = node.queue.head();
  if (head.hopRetries < cfg.maxRetries) {
    ++head.hopRetries;
    if (sharedCell) backoff_window(node.backoff, backoffRng, cfg);
    return {TxOutcome::Requeued, head};
  }
  ++node.counters.droppedMaxRetries;
  if (sharedCell) reset_backoff(node.backoff, cfg);
  return {TxOutcome::DroppedMaxRetries, node.queue.pop_head()};
}

bool is_eb_opportunity(Asn asn, const MacConfig& cfg) {
  if (asn.value % cfg.slotframeLength != 0) return false;
  return (asn.value / cfg.slotframeLength) % cfg.ebPeriodSlotframes == 0;
}

double broadcast_probability(std::size_t audibleRoutedNeighbours, const MacConfig& cfg) {
  return std::min(cfg.ebProbability, 1.0 / static_cast<double>(audibleRoutedNeighbours + 1));
}

JoinTransition process_eb(MacState& node) {
  if (node.synchronized) return JoinTransition::None;
  node.synchronized = true;
  return JoinTransition::Synchronized;
}

std::uint32_t hashed_slot_offset(NodeId node, std::uint32_t slotframeLength) {
  if (slotframeLength < 2) return 0;
  return 1 + static_cast<std::uint32_t>(splitmix64(node) % (slotframeLength - 1));
}

std::uint32_t hashed_channel_offset(NodeId node, std::uint32_t channelCount) {
  return static_cast<std::uint32_t>(splitmix64(node) % channelCount);
}

std::optional<std::uint32_t> find_free_offset(const Schedule& schedule, std::uint32_t start,
                                              std::uint32_t slotframeLength) {
  if (slotframeLength < 2) return std::nullopt;
  const std::uint32_t usable = slotframeLength - 1;
  const std::uint32_t base = (std::max(start, 1u) - 1) % usable;
  for (std::uint32_t i = 0; i < usable; ++i) {
    const std::uint32_t offset = 1 + (base + i) % usable;
    if (schedule.is_free(offset)) return offset;
  }
  return std::nullopt;
}

MsfAction msf_lite_adapt(std::size_t dedicatedCells, double utilization, const MacConfig& cfg) {
  if (utilization > cfg.msfHighUtilization) return MsfAction::AddCell;
  if (utilization < cfg.msfLowUtilization && dedicatedCells > 1) return MsfAction::RemoveCell;
  return MsfAction::None;
}

std::optional<std::uint32_t> install_dedicated_cell(MacState& child, const Schedule& parent,
                                                    NodeId parentId, std::uint32_t probeStart,
                                                    std::uint32_t channelOffset,
                                                    bool shareWithSiblings, const MacConfig& cfg) {
  const std::uint32_t T = cfg.slotframeLength;
  if (T >= 2) {
    const std::uint32_t usable = T - 1;
    const std::uint32_t base = (std::max(probeStart, 1u) - 1) % usable;
    for (std::uint32_t i = 0; i < usable; ++i) {
      const std::uint32_t offset = 1 + (base + i) % usable;
      if (!child.schedule.is_free(offset)) continue;
      std::uint32_t channel = channelOffset;
      if (const Cell* p = parent.at(offset)) {
        if (!shareWithSiblings || p->kind != CellKind::RxDedicated) continue;
        channel = p->channelOffset;
      }
      child.schedule.add(Cell{offset, channel, CellKind::TxDedicated, parentId});
      child.msf.addOrder.push_back(offset);
      return offset;
    }
  }
  ++child.msf.saturationEvents;
  return std::nullopt;
}

void remove_dedicated_cell(MacState& child, std::uint32_t slotOffset) {
  const Cell* cell = child.schedule.at(slotOffset);
  if (!cell || cell->kind != CellKind::TxDedicated) return;
  child.schedule.remove(slotOffset);
  child.msf.cellFailures.erase(slotOffset);
  std::erase(child.msf.addOrder, slotOffset);
}

void sync_rx_cells(Schedule& parent, std::vector<Cell> incoming) {
  std::vector<std::uint32_t> stale;
  for (const auto& [offset, cell] : parent.cells()) {
    if (cell.kind == CellKind::RxDedicated) stale.push_back(offset);
  }
  for (std::uint32_t offset : stale) parent.remove(offset);
  std::sort(incoming.begin(), incoming.end(), [](const Cell& a, const Cell& b) {
    return a.slotOffset != b.slotOffset ? a.slotOffset < b.slotOffset : a.peer < b.peer;
  });
  for (const Cell& c : incoming) {
    parent.add(Cell{c.slotOffset, c.channelOffset, CellKind::RxDedicated, c.peer});
  }
}

}  // namespace tschsim
