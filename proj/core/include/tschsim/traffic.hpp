#pragma once

#include <optional>

#include "tschsim/asn.hpp"
#include "tschsim/mac.hpp"
#include "tschsim/packet.hpp"
#include "tschsim/random.hpp"
#include "tschsim/rpl.hpp"

namespace tschsim {

struct TrafficConfig {
  double meanInterarrivalS = 60.0;
  bool startAfterWarmup = true;

  void validate() const;
};

/// Exponential inter-arrival time in seconds (Poisson arrivals).
double sample_interarrival(RandomSource& rng, const TrafficConfig& cfg);

/// ASN of the slot containing an instant `offsetS` seconds after `origin`.
Asn arrival_asn(Asn origin, double offsetS, SlotDuration slotDuration);

enum class Generation : std::uint8_t { Suppressed, Queued, DroppedQueueFull, DroppedNoRoute };

struct GenerationResult {
  Generation outcome = Generation::Suppressed;
  std::optional<PacketId> packet;
};

/// Creates a root-bound packet at an application arrival and offers it to the
/// MAC queue. Unsynchronized nodes generate nothing.
GenerationResult generate_packet(PacketTable& packets, MacState& mac, const RplState& rpl, Asn asn);

}  // namespace tschsim
