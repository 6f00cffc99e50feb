#include "tschsim/rpl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tschsim {

void RplParams::validate() const {
  if (minHopRankIncrease < 1) throw std::invalid_argument("minHopRankIncrease must be >= 1");
  if (maxStepOfRank < 1) throw std::invalid_argument("max step of rank must be >= 1");
  if (!(parentSwitchHysteresis >= 0.0)) throw std::invalid_argument("hysteresis must be >= 0");
  if (dioPeriodSlotframes < 1) throw std::invalid_argument("dio period must be >= 1 slotframe");
}

RplState RplState::root(const RplParams& params) {
  RplState s;
  s.isRoot = true;
  s.rank = params.minHopRankIncrease;
  return s;
}

std::optional<std::uint32_t> of0_rank_increase(double linkPdr, const RplParams& params) {
  if (!(linkPdr > 0.0)) return std::nullopt;
  const double step = std::clamp(std::round(1.0 / linkPdr), 1.0,
                                 static_cast<double>(params.maxStepOfRank));
  return static_cast<std::uint32_t>(step) * params.minHopRankIncrease;
}

namespace {

std::optional<std::uint32_t> path_cost(const Candidate& c, const RplParams& params) {
  const auto inc = of0_rank_increase(c.linkPdr, params);
  if (!inc) return std::nullopt;
  return c.advertisedRank + *inc;
}

}  // namespace

std::optional<std::pair<NodeId, std::uint32_t>> best_candidate(const RplState& node,
                                                               const RplParams& params) {
  std::optional<std::pair<NodeId, std::uint32_t>> best;
  for (const auto& [id, c] : node.candidateSet) {
    // Loop guard: a parent must sit strictly closer to the root than we do.
    if (c.advertisedRank >= node.rank && node.preferredParent != id) continue;
    const auto cost = path_cost(c, params);
    if (!cost || *cost >= kInfiniteRank) continue;
    // Candidates iterate by ascending id, so a strict comparison keeps the lower id on ties.
    if (!best || *cost < best->second) best = std::pair{id, *cost};
  }
  return best;
}

ParentDecision process_dio(RplState& node, const Dio& dio, double linkPdr, const RplParams& params) {
  ParentDecision d{node.preferredParent, node.preferredParent, false};
  if (node.isRoot) return d;

  if (linkPdr > 0.0) {
    node.candidateSet[dio.sender] = Candidate{dio.advertisedRank, linkPdr};
  } else {
    node.candidateSet.erase(dio.sender);
  }

  std::optional<NodeId> best;
  std::uint32_t bestCost = kInfiniteRank;
  if (const auto b = best_candidate(node, params)) {
    best = b->first;
    bestCost = b->second;
  }

  std::optional<std::uint32_t> currentCost;
  if (node.preferredParent) {
    auto it = node.candidateSet.find(*node.preferredParent);
    if (it != node.candidateSet.end()) currentCost = path_cost(it->second, params);
  }

  if (!best) {
    if (!currentCost) {
      node.preferredParent.reset();
      node.rank = kInfiniteRank;
    }
  } else if (!currentCost) {
    node.preferredParent = best;
    node.rank = bestCost;
  } else if (*best != *node.preferredParent) {
    const double threshold = params.parentSwitchHysteresis * params.minHopRankIncrease;
    if (static_cast<double>(*currentCost) - static_cast<double>(bestCost) >= threshold) {
      node.preferredParent = best;
      node.rank = bestCost;
    } else {
      node.rank = *currentCost;
    }
  } else {
    node.rank = *currentCost;
  }

  d.parent = node.preferredParent;
  d.changed = d.parent != d.previousParent;
  if (d.changed) ++node.parentChanges;
  return d;
}

std::optional<NodeId> next_hop(const RplState& node) { return node.preferredParent; }

std::uint32_t tree_depth(std::span<const std::optional<NodeId>> parents, NodeId root) {
  std::uint32_t deepest = 0;
  std::vector<std::int64_t> depth(parents.size(), -1);
  if (root < parents.size()) depth[root] = 0;
  std::vector<NodeId> path;
  for (NodeId start = 0; start < parents.size(); ++start) {
    path.clear();
    NodeId cur = start;
    while (depth[cur] < 0) {
      if (std::find(path.begin(), path.end(), cur) != path.end()) {
        throw std::logic_error("tree_depth: routing loop through node " + std::to_string(cur));
      }
      path.push_back(cur);
      if (!parents[cur] || *parents[cur] >= parents.size()) {
        throw std::logic_error("tree_depth: node " + std::to_string(cur) + " has no route");
      }
      cur = *parents[cur];
    }
    std::int64_t d = depth[cur];
    for (auto it = path.rbegin(); it != path.rend(); ++it) depth[*it] = ++d;
    deepest = std::max<std::uint32_t>(deepest, static_cast<std::uint32_t>(depth[start]));
  }
  return deepest;
}

}  // namespace tschsim
