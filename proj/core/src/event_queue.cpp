#include "tschsim/event_queue.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tschsim {

SlotDuration slot_duration_from_seconds(double seconds) {
  if (!(seconds > 0.0) || !std::isfinite(seconds)) {
    throw std::invalid_argument("slot duration must be positive");
  }
  const auto micros = std::llround(seconds * 1e6);
  if (micros <= 0) throw std::invalid_argument("slot duration below 1 us");
  return SlotDuration{micros};
}

std::uint64_t EventQueue::schedule(Asn asn, Phase phase, NodeId node) {
  if (asn < now_) {
    throw std::logic_error("event scheduled in the past: asn " + std::to_string(asn.value) +
                           " < now " + std::to_string(now_.value));
  }
  const std::uint64_t seq = next_seq_++;
  heap_.push(Event{asn, phase, seq, node});
  return seq;
}

std::optional<Event> EventQueue::pop_next() {
  if (heap_.empty()) return std::nullopt;
  Event ev = heap_.top();
  heap_.pop();
  now_ = ev.asn;
  ++popped_;
  return ev;
}

std::optional<Event> EventQueue::peek() const {
  if (heap_.empty()) return std::nullopt;
  return heap_.top();
}

}  // namespace tschsim
