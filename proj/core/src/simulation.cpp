#include "tschsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace tschsim {

namespace {

std::string describe_unjoined(const std::vector<NodeId>& nodes) {
  std::ostringstream os;
  os << "warm-up did not complete; " << nodes.size() << " node(s) without a route:";
  for (std::size_t i = 0; i < nodes.size() && i < 20; ++i) os << ' ' << nodes[i];
  if (nodes.size() > 20) os << " ...";
  return os.str();
}

std::uint64_t seconds_to_slots(double seconds, SlotDuration slot) {
  return static_cast<std::uint64_t>(std::llround(seconds * 1e6 / static_cast<double>(slot.count())));
}

}  // namespace

DisconnectedError::DisconnectedError(std::vector<NodeId> unjoined)
    : std::runtime_error(describe_unjoined(unjoined)), unjoined_(std::move(unjoined)) {}

std::vector<Position> place_nodes(const ScenarioConfig& cfg, std::uint64_t masterSeed) {
  const double side = cfg.area_side_m();
  std::vector<Position> out;
  out.reserve(cfg.nodeCount + 1);
  out.push_back({side / 2.0, side / 2.0});
  if (!cfg.fixedPositions.empty()) {
    out.insert(out.end(), cfg.fixedPositions.begin(), cfg.fixedPositions.end());
    return out;
  }
  for (NodeId i = 1; i <= cfg.nodeCount; ++i) {
    RandomSource rng(masterSeed, {StreamPurpose::Placement, i, 0});
    const double x = rng.uniform_real(0.0, side);
    const double y = rng.uniform_real(0.0, side);
    out.push_back({x, y});
  }
  return out;
}

NodeState::NodeState(NodeId nodeId, Position pos, std::uint32_t queueCapacity, std::uint64_t seed)
    : id(nodeId),
      position(pos),
      mac(nodeId, queueCapacity),
      trafficRng(seed, {StreamPurpose::Traffic, nodeId, 0}),
      backoffRng(seed, {StreamPurpose::Backoff, nodeId, 0}),
      jitterRng(seed, {StreamPurpose::Jitter, nodeId, 0}),
      cellsRng(seed, {StreamPurpose::Cells, nodeId, 0}) {}

Simulation::Simulation(const ScenarioConfig& cfg, SimOptions options)
    : cfg_(cfg), options_(options), collector_(cfg.mac.slotDuration) {
  cfg_.validate();
  const std::uint64_t seed = cfg_.masterSeed;
  const auto positions = place_nodes(cfg_, seed);
  links_ = LinkTable::build(positions, cfg_.radio, seed);

  nodes_.reserve(positions.size());
  linkStreams_.reserve(positions.size());
  for (NodeId i = 0; i < positions.size(); ++i) {
    nodes_.emplace_back(i, positions[i], cfg_.mac.queueCapacity, seed);
    linkStreams_.emplace_back(seed, StreamId{StreamPurpose::Link, i, 0});
    reset_backoff(nodes_.back().mac.backoff, cfg_.mac);
  }
  NodeState& root = nodes_[kRootId];
  root.rpl = RplState::root(cfg_.rpl);
  root.mac.synchronized = true;
  root.dioTimerArmed = true;

  offsetUse_.assign(cfg_.mac.slotframeLength, 0);
  warmupMaxAsn_ = Asn{seconds_to_slots(cfg_.warmupMaxS, cfg_.mac.slotDuration)};
  horizonSlots_ = seconds_to_slots(cfg_.simHorizonS, cfg_.mac.slotDuration);

  const std::uint64_t dioPeriod =
      std::uint64_t{cfg_.rpl.dioPeriodSlotframes} * cfg_.mac.slotframeLength;
  queue_.schedule(Asn{0}, Phase::SlotStart);
  queue_.schedule(Asn{0}, Phase::TxDecision);
  queue_.schedule(Asn{static_cast<std::uint64_t>(
                      root.jitterRng.uniform_int(0, static_cast<std::int64_t>(dioPeriod) - 1))},
                  Phase::RoutingTimer, kRootId);
}

void Simulation::override_link(NodeId a, NodeId b, double rssiDbm) {
  links_.set(a, b, rssiDbm, cfg_.radio);
}

std::vector<std::optional<NodeId>> Simulation::parents() const {
  std::vector<std::optional<NodeId>> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.rpl.preferredParent);
  return out;
}

bool Simulation::step(std::optional<Asn> limit) {
  const auto next = queue_.peek();
  if (!next) return false;
  if (limit && next->asn >= *limit) return false;
  if (!warmupDone_ && next->asn >= warmupMaxAsn_) {
    std::vector<NodeId> unjoined;
    for (const auto& n : nodes_) {
      if (!n.routed()) unjoined.push_back(n.id);
    }
    throw DisconnectedError(std::move(unjoined));
  }
  dispatch(*queue_.pop_next());
  return true;
}

void Simulation::run_warmup() {
  while (!warmupDone_) {
    if (!step(std::nullopt)) throw std::logic_error("event queue drained during warm-up");
  }
}

void Simulation::run_for_slots(std::uint64_t slots) {
  const Asn limit = queue_.now() + slots;
  while (step(limit)) {
  }
}

MetricsReport Simulation::run() {
  run_warmup();
  while (step(endAsn_)) {
  }
  return finalize();
}

MetricsReport Simulation::finalize() const {
  MetricsCollector::Provenance prov;
  if (warmupDone_) {
    const auto ps = parents();
    prov.maxTreeDepth = tree_depth(ps, kRootId);
  }
  for (const auto& n : nodes_) prov.cellSaturationEvents += n.mac.msf.saturationEvents;
  prov.configHash = config_hash(cfg_);
  prov.masterSeed = cfg_.masterSeed;
  return collector_.finalize(prov);
}

std::optional<PacketId> Simulation::inject_packet(NodeId source) {
  NodeState& n = nodes_.at(source);
  if (n.rpl.isRoot) throw std::invalid_argument("the root does not generate traffic");
  const GenerationResult g = generate_packet(packets_, n.mac, n.rpl, queue_.now());
  if (!g.packet) return std::nullopt;
  Packet& p = packets_[*g.packet];
  collector_.record_generated(p);
  if (observer_) observer_->on_generated(p);
  if (g.outcome == Generation::DroppedNoRoute) record_terminal(p, TerminalState::NoRoute);
  if (g.outcome == Generation::DroppedQueueFull) record_terminal(p, TerminalState::QueueFull);
  return g.packet;
}

void Simulation::dispatch(const Event& ev) {
  switch (ev.phase) {
    case Phase::SlotStart: on_slot_start(ev.asn); break;
    case Phase::TxDecision: on_tx_decision(ev.asn); break;
    case Phase::MediumResolve: on_medium_resolve(ev.asn); break;
    case Phase::RxDeliver: on_rx_deliver(ev.asn); break;
    case Phase::SlotEnd: on_slot_end(ev.asn); break;
    case Phase::AppArrival: on_app_arrival(ev.asn, ev.node); break;
    case Phase::RoutingTimer: on_routing_timer(ev.asn, ev.node); break;
  }
}

void Simulation::on_slot_start(Asn asn) {
  for (auto& n : nodes_) evaluate_msf(n);
  queue_.schedule(asn + cfg_.mac.slotframeLength, Phase::SlotStart);
}

void Simulation::evaluate_msf(NodeState& n) {
  MsfState& msf = n.mac.msf;
  const std::uint32_t elapsed = std::exchange(msf.cellsElapsed, 0);
  const std::uint32_t used = std::exchange(msf.cellsUsed, 0);
  if (n.rpl.isRoot || !n.rpl.preferredParent || elapsed == 0) return;
  const double utilization = static_cast<double>(used) / static_cast<double>(elapsed);
  switch (msf_lite_adapt(n.mac.schedule.tx_cell_count(), utilization, cfg_.mac)) {
    case MsfAction::AddCell:
      add_cell(n, hashed_slot_offset(n.id, cfg_.mac.slotframeLength),
               hashed_channel_offset(n.id, cfg_.mac.channel_count()), false);
      break;
    case MsfAction::RemoveCell:
      if (!msf.addOrder.empty()) drop_cell(n, msf.addOrder.back());
      break;
    case MsfAction::None: break;
  }
}

void Simulation::on_tx_decision(Asn asn) {
  txs_.clear();
  txMeta_.clear();
  listeners_.clear();
  const auto offset = static_cast<std::uint32_t>(asn.value % cfg_.mac.slotframeLength);
  if (offset == 0) {
    decide_minimal_cell(asn);
  } else {
    decide_dedicated_cells(asn, offset);
  }
  queue_.schedule(asn, Phase::MediumResolve);
}

void Simulation::emit(const SlotTransmission& tx, const TxMeta& meta, Asn asn) {
  txs_.push_back(tx);
  txMeta_.push_back(meta);
  if (observer_) observer_->on_transmission(asn, tx, meta.packet);
}

void Simulation::decide_minimal_cell(Asn asn) {
  const bool ebOpportunity = is_eb_opportunity(asn, cfg_.mac);
  const std::uint32_t channel = hopping_channel(asn, kMinimalCell.channelOffset, cfg_.mac);

  for (auto& n : nodes_) {
    if (n.routed() && n.mac.synchronized) {
      std::size_t audibleRouted = 0;
      for (const auto& m : nodes_) {
        if (m.id != n.id && m.routed() && links_.audible(n.id, m.id, cfg_.radio)) ++audibleRouted;
      }
      if (n.jitterRng.bernoulli(broadcast_probability(audibleRouted, cfg_.mac))) {
        std::optional<FrameKind> kind;
        if (n.dioPending && (n.mac.nextBroadcastIsDio || !ebOpportunity)) {
          kind = FrameKind::DIO;
        } else if (ebOpportunity) {
          kind = FrameKind::EB;
        }
        if (kind) {
          TxMeta meta;
          meta.shared = true;
          meta.advertisedRank = n.rpl.rank;
          if (*kind == FrameKind::DIO) {
            n.dioPending = false;
            n.mac.nextBroadcastIsDio = false;
            ++n.mac.counters.dioSent;
          } else {
            n.mac.nextBroadcastIsDio = true;
            ++n.mac.counters.ebSent;
          }
          emit(SlotTransmission{n.id, kBroadcast, channel, *kind}, meta, asn);
          continue;
        }
      }
    }

    if (!n.rpl.isRoot && n.rpl.preferredParent && !n.mac.queue.empty() &&
        n.mac.schedule.tx_cells_to(*n.rpl.preferredParent).empty()) {
      if (auto tx = on_tx_slot(n.mac, kMinimalCell, asn, next_hop(n.rpl), cfg_.mac)) {
        TxMeta meta;
        meta.packet = n.mac.queue.head().packet;
        meta.shared = true;
        emit(*tx, meta, asn);
        continue;
      }
    }
    listeners_.push_back({n.id, channel});
  }
}

void Simulation::decide_dedicated_cells(Asn asn, std::uint32_t offset) {
  if (offsetUse_[offset] == 0) return;
  for (auto& n : nodes_) {
    const Cell* cell = n.mac.schedule.at(offset);
    if (!cell) continue;
    if (cell->kind == CellKind::RxDedicated) {
      listeners_.push_back({n.id, hopping_channel(asn, cell->channelOffset, cfg_.mac)});
      continue;
    }
    if (cell->kind != CellKind::TxDedicated) continue;
    ++n.mac.msf.cellsElapsed;
    if (auto tx = on_tx_slot(n.mac, *cell, asn, next_hop(n.rpl), cfg_.mac)) {
      ++n.mac.msf.cellsUsed;
      TxMeta meta;
      meta.packet = n.mac.queue.head().packet;
      meta.slotOffset = offset;
      emit(*tx, meta, asn);
    }
  }
}

void Simulation::on_medium_resolve(Asn asn) {
  receptions_ = resolve_slot(txs_, listeners_, links_, cfg_.radio, linkStreams_);
  queue_.schedule(asn, Phase::RxDeliver);
}

void Simulation::on_rx_deliver(Asn asn) {
  std::vector<char> acked(txs_.size(), 0);
  for (const Reception& rx : receptions_) {
    if (rx.outcome != RxOutcome::Delivered) continue;
    const std::size_t i = *rx.transmission;
    const SlotTransmission& tx = txs_[i];
    NodeState& listener = nodes_[rx.listener];
    switch (tx.kind) {
      case FrameKind::EB:
        process_eb(listener.mac);
        break;
      case FrameKind::DIO: {
        if (!listener.mac.synchronized || listener.rpl.isRoot) break;
        const double pdr = links_.at(tx.sender, listener.id).pdr;
        const ParentDecision d =
            process_dio(listener.rpl, Dio{tx.sender, txMeta_[i].advertisedRank}, pdr, cfg_.rpl);
        handle_parent_change(listener, d, asn);
        break;
      }
      case FrameKind::Data:
        if (tx.receiver != listener.id) break;
        receive_data(tx, txMeta_[i], asn);
        acked[i] = linkStreams_[tx.sender].bernoulli(links_.at(listener.id, tx.sender).pdr) ? 1 : 0;
        break;
      case FrameKind::Ack: break;
    }
  }
  for (std::size_t i = 0; i < txs_.size(); ++i) {
    if (txs_[i].kind == FrameKind::Data) apply_tx_result(txs_[i], txMeta_[i], acked[i] != 0);
  }
  if (!warmupDone_ && routedCount_ == nodes_.size()) {
    bool allSynced = std::all_of(nodes_.begin(), nodes_.end(),
                                 [](const NodeState& n) { return n.mac.synchronized; });
    if (allSynced) complete_warmup(asn);
  }
  queue_.schedule(asn, Phase::SlotEnd);
}

void Simulation::receive_data(const SlotTransmission& tx, const TxMeta& meta, Asn asn) {
  Packet& p = packets_[*meta.packet];
  if (p.holder != tx.sender || p.terminal()) return;  // duplicate of a frame already forwarded
  p.holder = tx.receiver;
  ++p.hopCount;
  NodeState& r = nodes_[tx.receiver];
  if (r.rpl.isRoot) {
    p.deliveredAsn = asn;
    record_terminal(p, TerminalState::Delivered);
    return;
  }
  if (!next_hop(r.rpl)) {
    p.dropCause = DropCause::NoRoute;
    record_terminal(p, TerminalState::NoRoute);
    return;
  }
  if (enqueue(r.mac, QueueEntry{p.id, 0, asn}) == EnqueueResult::DroppedQueueFull) {
    p.dropCause = DropCause::QueueFull;
    record_terminal(p, TerminalState::QueueFull);
  }
}

void Simulation::apply_tx_result(const SlotTransmission& tx, const TxMeta& meta, bool acked) {
  NodeState& s = nodes_[tx.sender];
  const TxResult r = on_tx_result(s.mac, acked, meta.shared, s.backoffRng, cfg_.mac);
  if (!meta.shared) {
    auto& failures = s.mac.msf.cellFailures[meta.slotOffset];
    failures = acked ? 0 : failures + 1;
    if (cfg_.mac.relocationFailures > 0 && failures >= cfg_.mac.relocationFailures) {
      relocate_cell(s, meta.slotOffset);
    }
  }
  if (r.outcome == TxOutcome::DroppedMaxRetries) {
    Packet& p = packets_[r.entry.packet];
    if (p.holder == s.id && !p.terminal()) {
      p.dropCause = DropCause::MaxRetries;
      record_terminal(p, TerminalState::MaxRetries);
    }
  }
}

void Simulation::handle_parent_change(NodeState& n, const ParentDecision& d, Asn asn) {
  if (!d.changed) return;
  std::size_t cellCount = 1;
  if (d.previousParent) {
    const auto cells = n.mac.schedule.tx_cells_to(*d.previousParent);
    cellCount = std::max<std::size_t>(1, cells.size());
    for (const Cell& c : cells) drop_cell(n, c.slotOffset);
  }
  if (d.parent) {
    for (std::size_t i = 0; i < cellCount; ++i) {
      add_cell(n, hashed_slot_offset(n.id, cfg_.mac.slotframeLength),
               hashed_channel_offset(n.id, cfg_.mac.channel_count()), i == 0);
    }
  }
  if (!d.previousParent && d.parent) {
    ++routedCount_;
  } else if (d.previousParent && !d.parent) {
    --routedCount_;
  }
  if (d.parent && !n.dioTimerArmed) {
    n.dioTimerArmed = true;
    const std::int64_t period =
        std::int64_t{cfg_.rpl.dioPeriodSlotframes} * cfg_.mac.slotframeLength;
    queue_.schedule(asn + static_cast<std::uint64_t>(n.jitterRng.uniform_int(1, period)),
                    Phase::RoutingTimer, n.id);
  }
}

void Simulation::count_cells(const NodeState& n, int sign) {
  for (const auto& [offset, cell] : n.mac.schedule.cells()) {
    if (offset != 0) offsetUse_[offset] += sign;
  }
}

void Simulation::sync_rx(NodeId parentId) {
  std::vector<Cell> incoming;
  for (const auto& n : nodes_) {
    if (n.id == parentId) continue;
    for (const auto& [offset, cell] : n.mac.schedule.cells()) {
      if (cell.kind == CellKind::TxDedicated && cell.peer == parentId) {
        incoming.push_back(Cell{offset, cell.channelOffset, CellKind::RxDedicated, n.id});
      }
    }
  }
  NodeState& parent = nodes_[parentId];
  count_cells(parent, -1);
  sync_rx_cells(parent.mac.schedule, std::move(incoming));
  count_cells(parent, +1);
}

bool Simulation::add_cell(NodeState& child, std::uint32_t probeStart, std::uint32_t channelOffset,
                          bool shareWithSiblings) {
  const NodeId parent = *child.rpl.preferredParent;
  const auto offset = install_dedicated_cell(child.mac, nodes_[parent].mac.schedule, parent, probeStart,
                                             channelOffset, shareWithSiblings, cfg_.mac);
  if (!offset) return false;
  ++offsetUse_[*offset];
  sync_rx(parent);
  return true;
}

void Simulation::drop_cell(NodeState& child, std::uint32_t slotOffset) {
  const Cell* cell = child.mac.schedule.at(slotOffset);
  if (!cell || cell->kind != CellKind::TxDedicated) return;
  const NodeId parent = cell->peer;
  remove_dedicated_cell(child.mac, slotOffset);
  --offsetUse_[slotOffset];
  sync_rx(child.id);
  sync_rx(parent);
}

void Simulation::relocate_cell(NodeState& child, std::uint32_t slotOffset) {
  const Cell* cell = child.mac.schedule.at(slotOffset);
  if (!cell || !child.rpl.preferredParent) return;
  const NodeId parent = cell->peer;
  drop_cell(child, slotOffset);
  if (parent != *child.rpl.preferredParent) return;
  const std::uint32_t T = cfg_.mac.slotframeLength;
  const auto start = static_cast<std::uint32_t>(child.cellsRng.uniform_int(1, T - 1));
  const auto channel =
      static_cast<std::uint32_t>(child.cellsRng.uniform_int(0, cfg_.mac.channel_count() - 1));
  add_cell(child, start, channel, false);
}

void Simulation::on_slot_end(Asn asn) {
  if (options_.checkInvariants) check_invariants(asn);
  if (observer_) observer_->on_slot_end(asn, *this);
  queue_.schedule(next_active_asn(asn + 1), Phase::TxDecision);
}

Asn Simulation::next_active_asn(Asn from) const {
  const std::uint32_t T = cfg_.mac.slotframeLength;
  Asn a = from;
  for (std::uint32_t i = 0; i < T; ++i, a = a + 1) {
    const auto offset = static_cast<std::uint32_t>(a.value % T);
    if (offset == 0 || offsetUse_[offset] > 0) return a;
  }
  return a;
}

void Simulation::check_invariants(Asn asn) const {
  std::vector<std::int64_t> use(cfg_.mac.slotframeLength, 0);
  for (const auto& n : nodes_) {
    if (n.mac.queue.size() > n.mac.queue.capacity()) {
      throw std::logic_error("queue bound exceeded at node " + std::to_string(n.id) + " asn " +
                             std::to_string(asn.value));
    }
    for (const auto& [offset, cell] : n.mac.schedule.cells()) {
      if (offset != 0) ++use[offset];
      if (cell.kind == CellKind::RxDedicated) {
        const Cell* tx = nodes_.at(cell.peer).mac.schedule.at(offset);
        if (!tx || tx->kind != CellKind::TxDedicated || tx->peer != n.id) {
          throw std::logic_error("rx cell without a matching child cell at node " + std::to_string(n.id));
        }
      }
    }
  }
  for (std::uint32_t o = 1; o < use.size(); ++o) {
    if (use[o] != offsetUse_[o]) throw std::logic_error("slot occupancy bookkeeping diverged");
  }
}

void Simulation::on_app_arrival(Asn asn, NodeId node) {
  NodeState& n = nodes_[node];
  inject_packet(node);
  n.nextArrivalOffsetS += sample_interarrival(n.trafficRng, cfg_.traffic);
  const Asn next = arrival_asn(warmup_end(), n.nextArrivalOffsetS, cfg_.mac.slotDuration);
  if (next < endAsn_) queue_.schedule(std::max(next, asn), Phase::AppArrival, node);
}

void Simulation::on_routing_timer(Asn asn, NodeId node) {
  NodeState& n = nodes_[node];
  if (!n.routed()) {
    n.dioTimerArmed = false;  // re-armed when the node rejoins
    return;
  }
  n.dioPending = true;
  queue_.schedule(asn + std::uint64_t{cfg_.rpl.dioPeriodSlotframes} * cfg_.mac.slotframeLength,
                  Phase::RoutingTimer, node);
}

void Simulation::complete_warmup(Asn asn) {
  warmupDone_ = true;
  const Asn end = asn + 1;
  collector_.set_warmup_end(end);
  endAsn_ = end + horizonSlots_;
  for (auto& n : nodes_) {
    if (n.rpl.isRoot) continue;
    n.nextArrivalOffsetS = sample_interarrival(n.trafficRng, cfg_.traffic);
    const Asn first = arrival_asn(end, n.nextArrivalOffsetS, cfg_.mac.slotDuration);
    if (first < endAsn_) queue_.schedule(first, Phase::AppArrival, n.id);
  }
}

void Simulation::record_terminal(Packet& p, TerminalState state) {
  collector_.record_terminal(p, state);
  if (observer_) observer_->on_terminal(p, state);
}

MetricsReport run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace tschsim
