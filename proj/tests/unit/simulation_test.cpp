#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "test_support.hpp"
#include "tschsim/simulation.hpp"

using namespace tschsim;

namespace {

class TxCounter : public SimObserver {
 public:
  void on_transmission(Asn, const SlotTransmission& tx, std::optional<PacketId> packet) override {
    if (packet) ++perPacket[*packet];
    if (tx.kind == FrameKind::Data && !packet) ++untagged;
  }
  void on_terminal(const Packet& p, TerminalState s) override { terminal[p.id] = s; }

  std::map<PacketId, int> perPacket;
  std::map<PacketId, TerminalState> terminal;
  int untagged = 0;
};

class InvariantWatcher : public SimObserver {
 public:
  void on_slot_end(Asn asn, const Simulation& sim) override {
    EXPECT_GE(asn, last);
    last = asn;
    const auto& q = sim.events();
    EXPECT_EQ(q.scheduled_count(), q.popped_count() + q.size());
    if (sim.warmup_complete()) {
      // Throws on a cycle or a dangling parent.
      EXPECT_NO_THROW(tree_depth(sim.parents()));
    }
    ++slots;
  }
  Asn last;
  std::uint64_t slots = 0;
};

ScenarioConfig fixed(std::vector<Position> positions) {
  ScenarioConfig cfg = testutil::small_scenario(static_cast<std::uint32_t>(positions.size()), 7);
  cfg.fixedPositions = std::move(positions);
  return cfg;
}

}  // namespace

TEST(PlaceNodes, RootCentredAndUniform) {
  ScenarioConfig cfg;
  cfg.nodeCount = 10;
  double sx = 0.0;
  double sy = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= 10000; ++seed) {
    const auto pos = place_nodes(cfg, seed);
    ASSERT_EQ(pos.size(), 11u);
    ASSERT_EQ(pos[0], (Position{1000.0, 1000.0}));
    for (std::size_t i = 1; i < pos.size(); ++i) {
      ASSERT_GE(pos[i].x, 0.0);
      ASSERT_LE(pos[i].x, 2000.0);
      ASSERT_GE(pos[i].y, 0.0);
      ASSERT_LE(pos[i].y, 2000.0);
      sx += pos[i].x;
      sy += pos[i].y;
      ++count;
    }
  }
  EXPECT_NEAR(sx / count, 1000.0, 10.0);
  EXPECT_NEAR(sy / count, 1000.0, 10.0);
}

TEST(PlaceNodes, SeedChangesLayoutFixedPositionsDoNot) {
  ScenarioConfig cfg;
  cfg.nodeCount = 5;
  EXPECT_NE(place_nodes(cfg, 1), place_nodes(cfg, 2));
  EXPECT_EQ(place_nodes(cfg, 1), place_nodes(cfg, 1));
  cfg.fixedPositions = {{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}};
  EXPECT_EQ(place_nodes(cfg, 1), place_nodes(cfg, 2));
}

TEST(Simulation, SingleNodeNextToRootLosesNothing) {
  ScenarioConfig cfg = fixed({{1000.0, 1010.0}});
  cfg.simHorizonS = 1800.0;
  Simulation sim(cfg, {.checkInvariants = true});
  sim.override_link(0, 1, -60.0);
  const auto r = sim.run();
  ASSERT_GT(r.generated, 10u);
  EXPECT_EQ(*r.perTotal, 0.0);
  EXPECT_EQ(r.latencyFloorViolations, 0u);
  const auto lat = sim.collector().latencies();
  EXPECT_GE(*std::min_element(lat.begin(), lat.end()), 0.04);
  EXPECT_EQ(r.maxTreeDepth, 1u);
}

TEST(Simulation, SaturatedQueueDropsArrivals) {
  ScenarioConfig cfg = fixed({{1000.0, 1010.0}});
  cfg.mac.queueCapacity = 1;
  cfg.traffic.meanInterarrivalS = 0.1;
  Simulation sim(cfg, {.checkInvariants = true});
  sim.override_link(0, 1, -60.0);
  const auto r = sim.run();
  EXPECT_GT(r.droppedQueueFull, 0u);
  EXPECT_GT(r.delivered, 0u);
  EXPECT_EQ(r.generated, r.delivered + r.droppedQueueFull + r.droppedMaxRetries + r.droppedNoRoute +
                             r.inFlightAtEnd);
}

class RetryBound : public ::testing::TestWithParam<std::uint32_t> {};

TEST_P(RetryBound, DeadLinkSeesExactlyRPlusOneAttempts) {
  ScenarioConfig cfg = fixed({{1000.0, 1010.0}});
  cfg.mac.maxRetries = GetParam();
  cfg.traffic.meanInterarrivalS = 1e7;
  Simulation sim(cfg);
  sim.override_link(0, 1, -60.0);
  sim.run_warmup();
  sim.override_link(0, 1, -120.0);
  TxCounter counter;
  sim.set_observer(&counter);
  const auto id = sim.inject_packet(1);
  ASSERT_TRUE(id);
  sim.run_for_slots(2000ull * cfg.mac.slotframeLength);
  EXPECT_EQ(counter.perPacket[*id], static_cast<int>(GetParam()) + 1);
  ASSERT_TRUE(counter.terminal.contains(*id));
  EXPECT_EQ(counter.terminal[*id], TerminalState::MaxRetries);
  EXPECT_EQ(counter.untagged, 0);
}

INSTANTIATE_TEST_SUITE_P(Simulation, RetryBound, ::testing::Values(0u, 2u, 5u));

TEST(Simulation, ChainReachesRootInTwoHops) {
  Simulation sim(fixed({{1000.0, 1100.0}, {1000.0, 1200.0}}), {.checkInvariants = true});
  sim.override_link(0, 1, -60.0);
  sim.override_link(1, 2, -60.0);
  sim.override_link(0, 2, -130.0);
  sim.run_warmup();
  EXPECT_EQ(sim.node(2).rpl.preferredParent, NodeId{1});
  EXPECT_EQ(sim.node(1).rpl.preferredParent, NodeId{0});
  EXPECT_EQ(tree_depth(sim.parents()), 2u);
  TxCounter counter;
  sim.set_observer(&counter);
  const auto id = sim.inject_packet(2);
  sim.run_for_slots(200ull * sim.config().mac.slotframeLength);
  ASSERT_EQ(counter.terminal[*id], TerminalState::Delivered);
  EXPECT_EQ(sim.packets()[*id].hopCount, 2u);
  EXPECT_GE(*sim.packets()[*id].deliveredAsn - sim.packets()[*id].createdAsn, 2u);
}

TEST(Simulation, UnreachableNodeIsReported) {
  ScenarioConfig cfg = fixed({{1000.0, 1100.0}, {1000.0, 1200.0}});
  cfg.warmupMaxS = 200.0;
  Simulation sim(cfg);
  sim.override_link(0, 1, -60.0);
  sim.override_link(0, 2, -140.0);
  sim.override_link(1, 2, -140.0);
  try {
    sim.run_warmup();
    FAIL() << "warm-up should not complete";
  } catch (const DisconnectedError& e) {
    EXPECT_EQ(e.unjoined(), std::vector<NodeId>{2});
  }
}

TEST(Simulation, ReplayIsBitIdentical) {
  ScenarioConfig cfg = testutil::small_scenario(25, 4);
  const auto a = run_scenario(cfg);
  const auto b = run_scenario(cfg);
  EXPECT_EQ(a, b);
  cfg.masterSeed = 5;
  EXPECT_NE(run_scenario(cfg).configHash, a.configHash);
}

TEST(Simulation, InvariantsHoldOverRandomScenarios) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 12; ++trial) {
    ScenarioConfig cfg = testutil::small_scenario(5 + static_cast<std::uint32_t>(gen() % 20), gen());
    cfg.mac.slotframeLength = (gen() % 2) ? 101 : 31;
    cfg.mac.queueCapacity = 1 + gen() % 12;
    cfg.mac.maxRetries = gen() % 4;
    cfg.traffic.meanInterarrivalS = 2.0 + static_cast<double>(gen() % 60);
    cfg.areaSideKm = 0.5;
    Simulation sim(cfg, {.checkInvariants = true});
    InvariantWatcher watcher;
    sim.set_observer(&watcher);
    MetricsReport r;
    ASSERT_NO_THROW(r = sim.run()) << serialize_config(cfg);
    EXPECT_GT(watcher.slots, 0u);
    EXPECT_EQ(r.generated, r.delivered + r.droppedQueueFull + r.droppedMaxRetries + r.droppedNoRoute +
                               r.inFlightAtEnd);
    EXPECT_EQ(r.latencyFloorViolations, 0u);
    if (r.perTotal) {
      EXPECT_EQ(*r.perTotal, *r.perQueueFull + *r.perMaxRetries + *r.perNoRoute);
    }
    for (std::size_t i = 0; i < sim.nodes().size(); ++i) {
      EXPECT_LE(sim.nodes()[i].mac.queue.size(), cfg.mac.queueCapacity);
    }
  }
}

TEST(Simulation, HorizonMatchesConfiguredLength) {
  ScenarioConfig cfg = testutil::small_scenario(10, 3);
  cfg.simHorizonS = 404.0;
  Simulation sim(cfg);
  sim.run();
  EXPECT_EQ(sim.horizon_end() - sim.warmup_end(), 10100u);
}
