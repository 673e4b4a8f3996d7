#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace dgsim::sim {

struct SimEvent {
  double time = 0.0;
  int target = 0;
  int tag = 0;
  std::int64_t payload = 0;
  std::uint64_t seq = 0;  // insertion order, breaks timestamp ties
};

/// Future event list: events dequeue in nondecreasing timestamp order,
/// ties in insertion order.
class EventQueue {
 public:
  void push(double time, int target, int tag, std::int64_t payload = 0);
  std::optional<SimEvent> pop();
  const SimEvent* peek() const;
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  void clear();

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.time != b.time) {
        return a.time > b.time;
      }
      return a.seq > b.seq;
    }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t nextSeq_ = 0;
};

}  // namespace dgsim::sim
