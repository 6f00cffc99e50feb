#pragma once

#include <cstdint>
#include <limits>

namespace tschsim {

using NodeId = std::uint32_t;
using PacketId = std::uint64_t;

/// The DODAG root is always node 0 and sits at the centre of the deployment area.
inline constexpr NodeId kRootId = 0;
inline constexpr NodeId kBroadcast = std::numeric_limits<NodeId>::max();

}  // namespace tschsim
