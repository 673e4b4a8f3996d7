#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace dgsim {

/// Injectable time source for the control loops. Production code uses the
/// wall clock; tests and the scaling demo run against a virtual clock so
/// hysteresis windows can be checked exactly.
///
/// Time is carried as seconds since an arbitrary epoch.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual double now() const = 0;

  /// Blocks for `seconds`, or less if the caller's stop flag is raised.
  /// Returns false when the wait was interrupted by a stop request.
  virtual bool sleepFor(double seconds, const std::atomic<bool>& stop) = 0;
};

/// Wall clock backed by std::chrono::steady_clock. Stop requests are
/// honored within a short polling interval.
class SystemClock final : public Clock {
 public:
  double now() const override;
  bool sleepFor(double seconds, const std::atomic<bool>& stop) override;
};

/// Manually driven clock. sleepFor() blocks until advance() has moved time
/// past the deadline. With actor accounting enabled (registerActor), the
/// clock can auto-advance: whenever every registered actor is blocked in
/// sleepFor, time jumps to the earliest pending deadline. That turns the
/// scaling loops into a deterministic discrete-event execution.
class VirtualClock final : public Clock {
 public:
  VirtualClock() = default;

  double now() const override;
  bool sleepFor(double seconds, const std::atomic<bool>& stop) override;

  void advance(double seconds);
  void advanceTo(double t);

  /// Declares that one more actor thread will be calling sleepFor.
  void registerActor();
  void unregisterActor();

  /// Enables jump-to-next-deadline behavior when all actors sleep.
  void enableAutoAdvance(bool on) { autoAdvance_ = on; }

  /// Wakes sleepers so they can observe their stop flags.
  void interruptAll();

 private:
  void autoAdvanceLocked(std::unique_lock<std::mutex>& lk);

  mutable std::mutex mu_;
  std::condition_variable cv_;
  double now_ = 0.0;
  int actors_ = 0;
  int sleeping_ = 0;
  std::uint64_t wakeEpoch_ = 0;
  bool autoAdvance_ = false;
  // Deadlines of current sleepers, as a simple multiset substitute.
  std::vector<double> deadlines_;
};

}  // namespace dgsim
