#pragma once

#include <chrono>
#include <compare>
#include <cstdint>

namespace tschsim {

/// Absolute Slot Number: timeslots elapsed since the simulation started.
/// All scheduling is done on this integer clock; seconds are derived.
struct Asn {
  std::uint64_t value = 0;

  constexpr auto operator<=>(const Asn&) const = default;

  constexpr Asn operator+(std::uint64_t slots) const { return Asn{value + slots}; }
  constexpr std::uint64_t operator-(Asn other) const { return value - other.value; }
};

/// Slot durations are held in whole microseconds so that asn * duration is an
/// exact integer before the final conversion to seconds.
using SlotDuration = std::chrono::microseconds;

inline constexpr SlotDuration kDefaultSlotDuration{40'000};

constexpr double slots_to_seconds(std::uint64_t slots, SlotDuration slotDuration) {
  return static_cast<double>(slots * static_cast<std::uint64_t>(slotDuration.count())) / 1e6;
}

constexpr double asn_to_seconds(Asn asn, SlotDuration slotDuration) {
  return slots_to_seconds(asn.value, slotDuration);
}

/// Converts a duration in seconds to a slot duration, rounding to the nearest microsecond.
SlotDuration slot_duration_from_seconds(double seconds);

}  // namespace tschsim
