#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>

#include "tschsim/types.hpp"

namespace tschsim {

struct RplParams {
  std::uint32_t minHopRankIncrease = 256;
  std::uint32_t maxStepOfRank = 9;
  /// A parent switch must improve the path cost by at least this many
  /// minHopRankIncrease units.
  double parentSwitchHysteresis = 1.5;
  std::uint32_t dioPeriodSlotframes = 4;

  void validate() const;
};

inline constexpr std::uint32_t kInfiniteRank = 0xFFFF;

struct Candidate {
  std::uint32_t advertisedRank = kInfiniteRank;
  double linkPdr = 0.0;
};

struct RplState {
  bool isRoot = false;
  std::uint32_t rank = kInfiniteRank;
  std::optional<NodeId> preferredParent;
  std::map<NodeId, Candidate> candidateSet;
  std::uint64_t parentChanges = 0;

  static RplState root(const RplParams& params);
};

struct Dio {
  NodeId sender = 0;
  std::uint32_t advertisedRank = kInfiniteRank;
};

/// OF0 rank increase: clamp(round(1 / pdr), 1, maxStep) * minHopRankIncrease.
/// A zero-PDR link has no finite increase.
std::optional<std::uint32_t> of0_rank_increase(double linkPdr, const RplParams& params);

/// Minimum-cost eligible candidate (advertised rank + OF0 increase), lower id
/// on ties, together with that cost.
std::optional<std::pair<NodeId, std::uint32_t>> best_candidate(const RplState& node,
                                                               const RplParams& params);

struct ParentDecision {
  std::optional<NodeId> previousParent;
  std::optional<NodeId> parent;
  bool changed = false;
};

/// Updates the candidate set with a received DIO and re-runs parent selection.
/// Candidates advertising a rank at or above the node's own are not eligible.
ParentDecision process_dio(RplState& node, const Dio& dio, double linkPdr, const RplParams& params);

/// Next hop toward the root, or none when the node has no route.
std::optional<NodeId> next_hop(const RplState& node);

/// Longest preferred-parent chain to the root. parents[i] is node i's parent.
/// Throws std::logic_error on a cycle or a dangling chain.
std::uint32_t tree_depth(std::span<const std::optional<NodeId>> parents, NodeId root = kRootId);

}  // namespace tschsim
