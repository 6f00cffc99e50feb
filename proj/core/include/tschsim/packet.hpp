#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tschsim/asn.hpp"
#include "tschsim/types.hpp"

namespace tschsim {

enum class DropCause : std::uint8_t { None, QueueFull, MaxRetries, NoRoute };

enum class TerminalState : std::uint8_t { Delivered, QueueFull, MaxRetries, NoRoute, InFlightAtEnd };

const char* to_string(TerminalState s);

/// Application packet tracked from generation to delivery or drop.
///
/// `holder` is the node currently responsible for the packet. A sender whose
/// ACK was lost keeps a stale copy in its queue; only the holder's fate counts.
struct Packet {
  PacketId id = 0;
  NodeId source = 0;
  NodeId destination = kRootId;
  Asn createdAsn;
  NodeId holder = 0;
  std::uint32_t hopCount = 0;
  std::optional<Asn> deliveredAsn;
  DropCause dropCause = DropCause::None;

  bool terminal() const { return deliveredAsn.has_value() || dropCause != DropCause::None; }
};

class PacketTable {
 public:
  Packet& create(NodeId source, Asn createdAsn) {
    const PacketId id = packets_.size();
    packets_.push_back(Packet{id, source, kRootId, createdAsn, source, 0, std::nullopt, DropCause::None});
    return packets_.back();
  }
  Packet& operator[](PacketId id) { return packets_[id]; }
  const Packet& operator[](PacketId id) const { return packets_[id]; }
  std::size_t size() const { return packets_.size(); }
  const std::vector<Packet>& all() const { return packets_; }

 private:
  std::vector<Packet> packets_;
};

}  // namespace tschsim
