#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <optional>

#include "dgsim/clock.hpp"
#include "dgsim/scale/board.hpp"

namespace dgsim::scale {

struct ScalingEvent {
  double timestamp = 0.0;
  std::string tenant;
  std::string action;  // "scale-out" | "scale-in"
  std::string actorMember;
  std::size_t memberCountAfter = 0;
};

class ScalingEventLog {
 public:
  void append(ScalingEvent event);
  std::vector<ScalingEvent> snapshot() const;
  /// CSV: timestamp,tenant,action,actor_member,member_count_after
  std::string toCsv() const;

 private:
  mutable std::mutex mu_;
  std::vector<ScalingEvent> events_;
};

enum class InstanceState { Running, ShuttingDown, Stopped };

struct InstanceHandle {
  std::string tenant;
  std::uint32_t memberOrdinal = 0;
  double spawnedAt = 0.0;
  InstanceState state = InstanceState::Stopped;
};

/// Per-node budget of at most one spawned worker instance, with the spawn
/// and shutdown mechanics injected by the embedder (joining and leaving the
/// tenant's simulation cluster).
class WorkerSlot {
 public:
  using SpawnFn = std::function<std::optional<std::uint32_t>(const std::string& tenant)>;
  using ShutdownFn = std::function<void(const InstanceHandle&)>;

  WorkerSlot(std::string tenant, SpawnFn spawn, ShutdownFn shutdown, Clock& clock);

  bool hasInstance() const;
  /// Spawns unless the budget is already used or the spawn callback fails.
  bool spawn();
  /// Stops the local instance; no-op when none is running.
  bool shutdown();
  std::optional<InstanceHandle> handle() const;

 private:
  mutable std::mutex mu_;
  std::string tenant_;
  SpawnFn spawnFn_;
  ShutdownFn shutdownFn_;
  Clock* clock_;
  std::optional<InstanceHandle> handle_;
};

/// One claim on one published scaling decision, broken into its atomic
/// steps so interleavings can be tested exhaustively. The production loop
/// drives the same machine, with the act step bound to a WorkerSlot.
///
/// Step order: observe the flag, exchange the key, and only while holding
/// the key re-verify and lower the flag, then act. Clearing the flag under
/// key ownership is what makes the actor unique: a claimant that wins the
/// key after the decision was served finds the flag already down and backs
/// off. Lowering the flag before the claim (the naive order) double-spawns
/// whenever the second claimant's exchange lands after the first actor
/// released the key.
class ScaleDecision {
 public:
  enum class Direction { Out, In };
  enum class Phase {
    ReadFlag,
    ClaimKey,
    VerifyFlag,
    ClearFlag,
    Act,
    RaiseFlagAfterFailure,
    ReleaseKey,
    Done,
  };
  enum class Outcome { Pending, NotRequested, Lost, Stale, Acted, SpawnFailed };

  /// `act` performs the spawn or shutdown and reports success.
  ScaleDecision(ScalingBoard& board, std::string tenant, Direction direction,
                std::function<bool()> act);
  ScaleDecision(ScalingBoard& board, std::string tenant, Direction direction,
                WorkerSlot& slot);

  Phase phase() const { return phase_; }
  Outcome outcome() const { return outcome_; }
  bool done() const { return phase_ == Phase::Done; }

  /// Performs exactly one board operation; returns false once done.
  bool advance();

 private:
  ScalingBoard* board_;
  std::string tenant_;
  Direction direction_;
  std::function<bool()> act_;
  Phase phase_ = Phase::ReadFlag;
  Outcome outcome_ = Outcome::Pending;
};

/// Health-driven scaling loop. Each pass samples the monitor; above the
/// high threshold (and under the instance budget) it requests a scale-out
/// and then holds off for the decision interval; below the low threshold it
/// requests a scale-in; otherwise it waits one health-check period.
/// Returns when stopped or when the health source is exhausted.
struct ScalingActuator {
  std::function<void()> scaleOut;
  std::function<void()> scaleIn;
};

void dynamicScalingLoop(const ScalingPolicy& policy, HealthSource& health,
                        const std::function<std::uint32_t()>& spawnedInstances,
                        const ScalingActuator& actuator, Clock& clock,
                        std::atomic<bool>& stop);

/// Publishes locally requested decisions to the shared board, raising one
/// flag and lowering the other, then resetting the local request.
void probePublishLoop(ScalingBoard& board, const std::string& tenant,
                      LocalRequests& requests, double periodS, Clock& clock,
                      std::atomic<bool>& stop);

/// Per-node arbitration loop. Nodes without a worker instance watch for
/// scale-out; nodes with one watch for scale-in. A key value of
/// kTerminateAll shuts the local worker down, and the shutdown that brings
/// the tenant's worker count to zero clears the tenant's board state.
class IasNode {
 public:
  IasNode(ScalingBoard& board, std::string tenant, WorkerSlot& slot, ScalingPolicy policy,
          Clock& clock, std::string label, ScalingEventLog* log = nullptr,
          std::function<std::size_t()> memberCount = nullptr);

  enum class StepResult { Idle, Acted, Lost, Terminated };

  /// One loop iteration (after the wait). Split out for tests.
  StepResult step(std::atomic<bool>& stop);

  void runLoop(std::atomic<bool>& stop);

  const std::string& label() const { return label_; }

 private:
  void logAction(const char* action);

  ScalingBoard* board_;
  std::string tenant_;
  WorkerSlot* slot_;
  ScalingPolicy policy_;
  Clock* clock_;
  std::string label_;
  ScalingEventLog* log_;
  std::function<std::size_t()> memberCount_;
};

}  // namespace dgsim::scale
