#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tschsim/random.hpp"
#include "tschsim/types.hpp"

namespace tschsim {

inline constexpr double kSpeedOfLight = 299'792'458.0;

struct RadioConfig {
  double ptDbm = 14.0;
  double centerFrequencyHz = 915e6;
  double channelSpacingHz = 200e3;
  std::uint32_t channelCount = 8;
  double antennaGainProduct = 1.0;  // Gt * Gr / L
  double sensitivityDbm = -120.0;   // PDR is 0 below this RSSI
  double saturationDbm = -105.0;    // PDR is 1 at or above this RSSI
  double pisterHackMaxDb = 40.0;    // upper bound of the uniform long-term loss

  double wavelength() const { return kSpeedOfLight / centerFrequencyHz; }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct Position {
  double x = 0.0;  // metres
  double y = 0.0;

  bool operator==(const Position&) const = default;
};

double distance(Position a, Position b);

/// Free-space received power in dBm. Rejects distance <= 0.
double friis_rx_power(double distanceM, const RadioConfig& cfg);

/// Subtracts a Uniform(0, maxDb) long-term loss from a Friis value.
double pister_hack_rssi(double friisDbm, RandomSource& rng, double maxDb = 40.0);

/// Piecewise-linear RSSI to packet delivery ratio mapping.
double rssi_to_pdr(double rssiDbm, const RadioConfig& cfg);

struct LinkRealization {
  double rssiDbm = 0.0;
  double pdr = 0.0;
};

/// Symmetric link realizations for every node pair, drawn once per run.
class LinkTable {
 public:
  LinkTable() = default;
  explicit LinkTable(std::size_t nodeCount);

  /// Friis + one Pister-Hack draw per unordered pair, keyed on the pair.
  static LinkTable build(std::span<const Position> positions, const RadioConfig& cfg,
                         std::uint64_t masterSeed);

  std::size_t size() const { return n_; }
  const LinkRealization& at(NodeId a, NodeId b) const { return links_[a * n_ + b]; }

  /// Sets both directions of a link; pdr is derived from the RSSI.
  void set(NodeId a, NodeId b, double rssiDbm, const RadioConfig& cfg);

  bool audible(NodeId a, NodeId b, const RadioConfig& cfg) const {
    return a != b && at(a, b).rssiDbm >= cfg.sensitivityDbm;
  }

 private:
  std::size_t n_ = 0;
  std::vector<LinkRealization> links_;
};

enum class FrameKind : std::uint8_t { Data, Ack, EB, DIO };

struct SlotTransmission {
  NodeId sender = 0;
  NodeId receiver = kBroadcast;
  std::uint32_t channel = 0;
  FrameKind kind = FrameKind::Data;
};

struct Listener {
  NodeId node = 0;
  std::uint32_t channel = 0;
};

enum class RxOutcome : std::uint8_t { Idle, Delivered, Collision, FadedLoss };

struct Reception {
  NodeId listener = 0;
  RxOutcome outcome = RxOutcome::Idle;
  /// Index into the transmission list of the frame heard (Delivered / FadedLoss).
  std::optional<std::size_t> transmission;
};

/// Arbitrates one timeslot. For every listener: two or more audible frames on
/// its channel collide (no capture); exactly one is delivered with the link
/// PDR, drawn from streams[listener]; none leaves the listener idle. A node
/// that transmits in the slot never receives in it.
std::vector<Reception> resolve_slot(std::span<const SlotTransmission> transmissions,
                                    std::span<const Listener> listeners,
                                    const LinkTable& links, const RadioConfig& cfg,
                                    std::span<RandomSource> streams);

}  // namespace tschsim
