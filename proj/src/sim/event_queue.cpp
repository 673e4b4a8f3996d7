#include "dgsim/sim/event_queue.hpp"

namespace dgsim::sim {

void EventQueue::push(double time, int target, int tag, std::int64_t payload) {
  if (time < 0.0) {
    throw std::invalid_argument("event time must be nonnegative");
  }
  heap_.push(SimEvent{time, target, tag, payload, nextSeq_++});
}

std::optional<SimEvent> EventQueue::pop() {
  if (heap_.empty()) {
    return std::nullopt;
  }
  SimEvent e = heap_.top();
  heap_.pop();
  return e;
}

const SimEvent* EventQueue::peek() const {
  return heap_.empty() ? nullptr : &heap_.top();
}

void EventQueue::clear() {
  heap_ = {};
  nextSeq_ = 0;
}

}  // namespace dgsim::sim
