#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tschsim/config.hpp"
#include "tschsim/event_queue.hpp"
#include "tschsim/mac.hpp"
#include "tschsim/metrics.hpp"
#include "tschsim/packet.hpp"
#include "tschsim/radio.hpp"
#include "tschsim/random.hpp"
#include "tschsim/rpl.hpp"

namespace tschsim {

/// Warm-up did not finish within warmupMaxS.
class DisconnectedError : public std::runtime_error {
 public:
  explicit DisconnectedError(std::vector<NodeId> unjoined);
  const std::vector<NodeId>& unjoined() const { return unjoined_; }

 private:
  std::vector<NodeId> unjoined_;
};

/// Root at the centre of the square, nodes 1..N uniform over it (or at the
/// configured fixed positions). Index 0 is the root.
std::vector<Position> place_nodes(const ScenarioConfig& cfg, std::uint64_t masterSeed);

struct NodeState {
  NodeState(NodeId id, Position pos, std::uint32_t queueCapacity, std::uint64_t seed);

  NodeId id;
  Position position;
  MacState mac;
  RplState rpl;
  bool dioPending = false;
  bool dioTimerArmed = false;
  double nextArrivalOffsetS = 0.0;  // seconds after warm-up end
  RandomSource trafficRng;
  RandomSource backoffRng;
  RandomSource jitterRng;
  RandomSource cellsRng;

  bool routed() const { return rpl.isRoot || rpl.preferredParent.has_value(); }
};

class Simulation;

/// Optional hooks for tests and tracing. All callbacks run on the engine thread.
class SimObserver {
 public:
  virtual ~SimObserver() = default;
  virtual void on_transmission(Asn, const SlotTransmission&, std::optional<PacketId>) {}
  virtual void on_generated(const Packet&) {}
  virtual void on_terminal(const Packet&, TerminalState) {}
  virtual void on_slot_end(Asn, const Simulation&) {}
};

struct SimOptions {
  /// Asserts the queue bound and slot exclusivity at the end of every slot.
  bool checkInvariants = false;
};

/// One deterministic run: topology, TSCH MAC, RPL, traffic and metrics,
/// driven by a single-threaded event queue.
class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg, SimOptions options = {});

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void set_observer(SimObserver* observer) { observer_ = observer; }

  /// Replaces the realized RSSI of a link (both directions).
  void override_link(NodeId a, NodeId b, double rssiDbm);

  /// Runs until every node is synchronized and routed. Throws DisconnectedError.
  void run_warmup();

  /// Processes every event in the next `slots` timeslots.
  void run_for_slots(std::uint64_t slots);

  /// Warm-up, then simHorizonS of traffic, then finalize().
  MetricsReport run();

  MetricsReport finalize() const;

  /// Generates an application packet at `source` now, as an arrival would.
  std::optional<PacketId> inject_packet(NodeId source);

  const ScenarioConfig& config() const { return cfg_; }
  const std::vector<NodeState>& nodes() const { return nodes_; }
  const NodeState& node(NodeId id) const { return nodes_.at(id); }
  const LinkTable& links() const { return links_; }
  const PacketTable& packets() const { return packets_; }
  const MetricsCollector& collector() const { return collector_; }
  const EventQueue& events() const { return queue_; }
  Asn now() const { return queue_.now(); }
  bool warmup_complete() const { return warmupDone_; }
  Asn warmup_end() const { return collector_.warmup_end(); }
  Asn horizon_end() const { return endAsn_; }
  std::vector<std::optional<NodeId>> parents() const;

 private:
  struct TxMeta {
    std::optional<PacketId> packet;
    bool shared = false;
    std::uint32_t slotOffset = 0;
    std::uint32_t advertisedRank = kInfiniteRank;
  };

  bool step(std::optional<Asn> limit);
  void dispatch(const Event& ev);

  void on_slot_start(Asn asn);
  void on_tx_decision(Asn asn);
  void on_medium_resolve(Asn asn);
  void on_rx_deliver(Asn asn);
  void on_slot_end(Asn asn);
  void on_app_arrival(Asn asn, NodeId node);
  void on_routing_timer(Asn asn, NodeId node);

  void decide_minimal_cell(Asn asn);
  void decide_dedicated_cells(Asn asn, std::uint32_t offset);
  void emit(const SlotTransmission& tx, const TxMeta& meta, Asn asn);

  void receive_data(const SlotTransmission& tx, const TxMeta& meta, Asn asn);
  void apply_tx_result(const SlotTransmission& tx, const TxMeta& meta, bool acked);
  void handle_parent_change(NodeState& n, const ParentDecision& d, Asn asn);
  bool add_cell(NodeState& child, std::uint32_t probeStart, std::uint32_t channelOffset,
                bool shareWithSiblings);
  void drop_cell(NodeState& child, std::uint32_t slotOffset);
  void count_cells(const NodeState& n, int sign);
  void sync_rx(NodeId parent);
  void relocate_cell(NodeState& child, std::uint32_t slotOffset);
  void evaluate_msf(NodeState& n);

  void complete_warmup(Asn asn);
  void record_terminal(Packet& p, TerminalState state);
  Asn next_active_asn(Asn from) const;
  void check_invariants(Asn asn) const;

  ScenarioConfig cfg_;
  SimOptions options_;
  SimObserver* observer_ = nullptr;

  std::vector<NodeState> nodes_;
  std::vector<RandomSource> linkStreams_;
  LinkTable links_;
  PacketTable packets_;
  MetricsCollector collector_;
  EventQueue queue_;

  std::vector<std::int64_t> offsetUse_;
  std::vector<SlotTransmission> txs_;
  std::vector<TxMeta> txMeta_;
  std::vector<Listener> listeners_;
  std::vector<Reception> receptions_;

  std::size_t routedCount_ = 1;
  bool warmupDone_ = false;
  Asn warmupMaxAsn_;
  Asn endAsn_;
  std::uint64_t horizonSlots_ = 0;
};

/// Builds the topology, warms up, simulates simHorizonS and reports.
/// Throws DisconnectedError when warm-up exceeds warmupMaxS.
MetricsReport run_scenario(const ScenarioConfig& cfg);

}  // namespace tschsim
