#include "tschsim/traffic.hpp"

#include <cmath>
#include <stdexcept>

namespace tschsim {

void TrafficConfig::validate() const {
  if (!(meanInterarrivalS > 0.0) || !std::isfinite(meanInterarrivalS)) {
    throw std::invalid_argument("mean inter-arrival must be positive");
  }
}

double sample_interarrival(RandomSource& rng, const TrafficConfig& cfg) {
  return rng.exponential(cfg.meanInterarrivalS);
}

Asn arrival_asn(Asn origin, double offsetS, SlotDuration slotDuration) {
  const double slots = std::floor(offsetS * 1e6 / static_cast<double>(slotDuration.count()));
  return origin + static_cast<std::uint64_t>(slots);
}

GenerationResult generate_packet(PacketTable& packets, MacState& mac, const RplState& rpl, Asn asn) {
  if (!mac.synchronized) return {};
  Packet& p = packets.create(mac.id, asn);
  if (!next_hop(rpl)) {
    p.dropCause = DropCause::NoRoute;
    return {Generation::DroppedNoRoute, p.id};
  }
  if (enqueue(mac, QueueEntry{p.id, 0, asn}) == EnqueueResult::DroppedQueueFull) {
    p.dropCause = DropCause::QueueFull;
    return {Generation::DroppedQueueFull, p.id};
  }
  return {Generation::Queued, p.id};
}

}  // namespace tschsim
