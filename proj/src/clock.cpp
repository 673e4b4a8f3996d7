#include "dgsim/clock.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace dgsim {

double SystemClock::now() const {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

bool SystemClock::sleepFor(double seconds, const std::atomic<bool>& stop) {
  using namespace std::chrono;
  auto deadline = steady_clock::now() + duration_cast<steady_clock::duration>(
                                            duration<double>(seconds));
  while (steady_clock::now() < deadline) {
    if (stop.load(std::memory_order_relaxed)) {
      return false;
    }
    std::this_thread::sleep_for(milliseconds(2));
  }
  return !stop.load(std::memory_order_relaxed);
}

double VirtualClock::now() const {
  std::lock_guard<std::mutex> lk(mu_);
  return now_;
}

void VirtualClock::advance(double seconds) {
  std::lock_guard<std::mutex> lk(mu_);
  now_ += seconds;
  cv_.notify_all();
}

void VirtualClock::advanceTo(double t) {
  std::lock_guard<std::mutex> lk(mu_);
  now_ = std::max(now_, t);
  cv_.notify_all();
}

void VirtualClock::registerActor() {
  std::lock_guard<std::mutex> lk(mu_);
  ++actors_;
}

void VirtualClock::unregisterActor() {
  std::unique_lock<std::mutex> lk(mu_);
  --actors_;
  autoAdvanceLocked(lk);
}

void VirtualClock::interruptAll() {
  std::lock_guard<std::mutex> lk(mu_);
  ++wakeEpoch_;
  cv_.notify_all();
}

void VirtualClock::autoAdvanceLocked(std::unique_lock<std::mutex>&) {
  if (!autoAdvance_ || actors_ == 0 || sleeping_ < actors_ || deadlines_.empty()) {
    return;
  }
  double next = *std::min_element(deadlines_.begin(), deadlines_.end());
  if (next > now_) {
    now_ = next;
    cv_.notify_all();
  }
}

bool VirtualClock::sleepFor(double seconds, const std::atomic<bool>& stop) {
  std::unique_lock<std::mutex> lk(mu_);
  if (seconds <= 0.0) {
    return !stop.load(std::memory_order_relaxed);
  }
  const double deadline = now_ + seconds;
  deadlines_.push_back(deadline);
  ++sleeping_;
  autoAdvanceLocked(lk);
  while (now_ < deadline && !stop.load(std::memory_order_relaxed)) {
    cv_.wait(lk);
  }
  --sleeping_;
  deadlines_.erase(std::find(deadlines_.begin(), deadlines_.end(), deadline));
  return now_ >= deadline;
}

}  // namespace dgsim
