#include "tschsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tschsim {

const char* to_string(TerminalState s) {
  switch (s) {
    case TerminalState::Delivered: return "delivered";
    case TerminalState::QueueFull: return "queue_full";
    case TerminalState::MaxRetries: return "max_retries";
    case TerminalState::NoRoute: return "no_route";
    case TerminalState::InFlightAtEnd: return "in_flight";
  }
  return "unknown";
}

double nearest_rank_percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

void MetricsCollector::record_generated(const Packet& packet) {
  if (counts(packet)) ++generated_;
}

void MetricsCollector::record_terminal(const Packet& packet, TerminalState state) {
  if (!counts(packet)) return;
  if (!recorded_.insert(packet.id).second) {
    throw std::logic_error("packet " + std::to_string(packet.id) + " recorded twice");
  }
  switch (state) {
    case TerminalState::Delivered: {
      ++delivered_;
      const std::uint64_t slots = *packet.deliveredAsn - packet.createdAsn;
      if (slots < packet.hopCount) ++floorViolations_;
      latencies_.push_back(slots_to_seconds(slots, slotDuration_));
      break;
    }
    case TerminalState::QueueFull: ++queueFull_; break;
    case TerminalState::MaxRetries: ++maxRetries_; break;
    case TerminalState::NoRoute: ++noRoute_; break;
    case TerminalState::InFlightAtEnd:
      throw std::logic_error("in-flight is derived at finalize, not recorded");
  }
}

MetricsReport MetricsCollector::finalize(const Provenance& provenance) const {
  MetricsReport r;
  r.generated = generated_;
  r.delivered = delivered_;
  r.droppedQueueFull = queueFull_;
  r.droppedMaxRetries = maxRetries_;
  r.droppedNoRoute = noRoute_;
  const std::uint64_t terminal = delivered_ + queueFull_ + maxRetries_ + noRoute_;
  if (terminal > generated_) throw std::logic_error("more terminal packets than generated");
  r.inFlightAtEnd = generated_ - terminal;

  if (terminal > 0) {
    const double denom = static_cast<double>(terminal);
    r.perQueueFull = static_cast<double>(queueFull_) / denom;
    r.perMaxRetries = static_cast<double>(maxRetries_) / denom;
    r.perNoRoute = static_cast<double>(noRoute_) / denom;
    // Summing the cause ratios keeps the decomposition identity bit-exact.
    r.perTotal = (*r.perQueueFull + *r.perMaxRetries) + *r.perNoRoute;
  }

  if (!latencies_.empty()) {
    std::vector<double> sorted = latencies_;
    std::sort(sorted.begin(), sorted.end());
    r.latencyMeanS = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                     static_cast<double>(sorted.size());
    r.latencyP50S = nearest_rank_percentile(sorted, 0.50);
    r.latencyP99S = nearest_rank_percentile(sorted, 0.99);
    r.latencyMaxS = sorted.back();
  }

  r.maxTreeDepth = provenance.maxTreeDepth;
  r.warmupEndAsn = warmupEnd_;
  r.latencyFloorViolations = floorViolations_;
  r.cellSaturationEvents = provenance.cellSaturationEvents;
  r.configHash = provenance.configHash;
  r.masterSeed = provenance.masterSeed;
  return r;
}

}  // namespace tschsim
