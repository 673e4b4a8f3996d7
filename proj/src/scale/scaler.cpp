#include "dgsim/scale/scaler.hpp"

#include <cstdio>

namespace dgsim::scale {

void ScalingEventLog::append(ScalingEvent event) {
  std::lock_guard<std::mutex> lk(mu_);
  events_.push_back(std::move(event));
}

std::vector<ScalingEvent> ScalingEventLog::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return events_;
}

std::string ScalingEventLog::toCsv() const {
  std::string out = "timestamp,tenant,action,actor_member,member_count_after\n";
  char line[256];
  for (const auto& e : snapshot()) {
    std::snprintf(line, sizeof(line), "%.3f,%s,%s,%s,%zu\n", e.timestamp,
                  e.tenant.c_str(), e.action.c_str(), e.actorMember.c_str(),
                  e.memberCountAfter);
    out += line;
  }
  return out;
}

WorkerSlot::WorkerSlot(std::string tenant, SpawnFn spawn, ShutdownFn shutdown, Clock& clock)
    : tenant_(std::move(tenant)),
      spawnFn_(std::move(spawn)),
      shutdownFn_(std::move(shutdown)),
      clock_(&clock) {}

bool WorkerSlot::hasInstance() const {
  std::lock_guard<std::mutex> lk(mu_);
  return handle_.has_value() && handle_->state == InstanceState::Running;
}

bool WorkerSlot::spawn() {
  std::lock_guard<std::mutex> lk(mu_);
  if (handle_ && handle_->state == InstanceState::Running) {
    return false;  // budget: one worker instance per node
  }
  auto ordinal = spawnFn_(tenant_);
  if (!ordinal) {
    return false;
  }
  handle_ = InstanceHandle{tenant_, *ordinal, clock_->now(), InstanceState::Running};
  return true;
}

bool WorkerSlot::shutdown() {
  std::lock_guard<std::mutex> lk(mu_);
  if (!handle_ || handle_->state != InstanceState::Running) {
    return false;  // idempotent
  }
  handle_->state = InstanceState::ShuttingDown;
  shutdownFn_(*handle_);
  handle_->state = InstanceState::Stopped;
  return true;
}

std::optional<InstanceHandle> WorkerSlot::handle() const {
  std::lock_guard<std::mutex> lk(mu_);
  return handle_;
}

ScaleDecision::ScaleDecision(ScalingBoard& board, std::string tenant, Direction direction,
                             std::function<bool()> act)
    : board_(&board), tenant_(std::move(tenant)), direction_(direction), act_(std::move(act)) {}

ScaleDecision::ScaleDecision(ScalingBoard& board, std::string tenant, Direction direction,
                             WorkerSlot& slot)
    : ScaleDecision(board, std::move(tenant), direction,
                    direction == Direction::Out ? std::function<bool()>([&slot] { return slot.spawn(); })
                                                : std::function<bool()>([&slot] { return slot.shutdown(); })) {}

bool ScaleDecision::advance() {
  auto flagRaised = [this](const ScalingBoard::Flags& f) {
    return direction_ == Direction::Out ? f.toScaleOut : f.toScaleIn;
  };
  switch (phase_) {
    case Phase::ReadFlag: {
      if (!flagRaised(board_->flags(tenant_))) {
        outcome_ = Outcome::NotRequested;
        phase_ = Phase::Done;
        return false;
      }
      phase_ = Phase::ClaimKey;
      return true;
    }
    case Phase::ClaimKey: {
      std::int64_t claim = direction_ == Direction::Out ? 1 : -1;
      std::int64_t witnessed = board_->exchangeKey(tenant_, claim);
      if (witnessed != 0) {
        // Someone scaled recently or is scaling; the claim is abandoned.
        outcome_ = Outcome::Lost;
        phase_ = Phase::Done;
        return false;
      }
      phase_ = Phase::VerifyFlag;
      return true;
    }
    case Phase::VerifyFlag: {
      if (!flagRaised(board_->flags(tenant_))) {
        // The decision was served while we raced for the key.
        outcome_ = Outcome::Stale;
        phase_ = Phase::ReleaseKey;
        return true;
      }
      phase_ = Phase::ClearFlag;
      return true;
    }
    case Phase::ClearFlag: {
      if (direction_ == Direction::Out) {
        board_->setScaleOut(tenant_, false);
      } else {
        board_->setScaleIn(tenant_, false);
      }
      phase_ = Phase::Act;
      return true;
    }
    case Phase::Act: {
      if (act_()) {
        outcome_ = Outcome::Acted;
        phase_ = Phase::ReleaseKey;
        return true;
      }
      // Failed spawn: re-raise the flag so another node can pick the
      // decision up, then free the key.
      outcome_ = Outcome::SpawnFailed;
      phase_ = Phase::RaiseFlagAfterFailure;
      return true;
    }
    case Phase::RaiseFlagAfterFailure: {
      if (direction_ == Direction::Out) {
        board_->setScaleOut(tenant_, true);
      } else {
        board_->setScaleIn(tenant_, true);
      }
      phase_ = Phase::ReleaseKey;
      return true;
    }
    case Phase::ReleaseKey: {
      board_->setKey(tenant_, 0);
      phase_ = Phase::Done;
      return false;
    }
    case Phase::Done:
      return false;
  }
  return false;
}

void dynamicScalingLoop(const ScalingPolicy& policy, HealthSource& health,
                        const std::function<std::uint32_t()>& spawnedInstances,
                        const ScalingActuator& actuator, Clock& clock,
                        std::atomic<bool>& stop) {
  policy.validate();
  while (!stop.load(std::memory_order_relaxed)) {
    auto snapshot = health.sample(clock);
    if (!snapshot) {
      return;  // scripted trace exhausted
    }
    double load = metricValue(*snapshot, policy.metric);
    if (load >= policy.maxThreshold && spawnedInstances() < policy.maxInstancesToBeSpawned) {
      actuator.scaleOut();
      if (!clock.sleepFor(policy.timeBetweenScalingDecisionsS, stop)) {
        return;
      }
    } else if (load <= policy.minThreshold) {
      actuator.scaleIn();
      if (!clock.sleepFor(policy.timeBetweenScalingDecisionsS, stop)) {
        return;
      }
    } else {
      if (!clock.sleepFor(policy.timeBetweenHealthChecksS, stop)) {
        return;
      }
    }
  }
}

void probePublishLoop(ScalingBoard& board, const std::string& tenant,
                      LocalRequests& requests, double periodS, Clock& clock,
                      std::atomic<bool>& stop) {
  board.initTenant(tenant);
  while (!stop.load(std::memory_order_relaxed)) {
    if (!clock.sleepFor(periodS, stop)) {
      return;
    }
    ScalingBoard::Flags local = requests.consume();
    if (local.toScaleOut) {
      board.publish(tenant, {true, false});
    } else if (local.toScaleIn) {
      board.publish(tenant, {false, true});
    }
  }
}

IasNode::IasNode(ScalingBoard& board, std::string tenant, WorkerSlot& slot,
                 ScalingPolicy policy, Clock& clock, std::string label,
                 ScalingEventLog* log, std::function<std::size_t()> memberCount)
    : board_(&board),
      tenant_(std::move(tenant)),
      slot_(&slot),
      policy_(policy),
      clock_(&clock),
      label_(std::move(label)),
      log_(log),
      memberCount_(std::move(memberCount)) {}

void IasNode::logAction(const char* action) {
  if (log_ == nullptr) {
    return;
  }
  ScalingEvent e;
  e.timestamp = clock_->now();
  e.tenant = tenant_;
  e.action = action;
  e.actorMember = label_;
  e.memberCountAfter = memberCount_ ? memberCount_() : 0;
  log_->append(e);
}

IasNode::StepResult IasNode::step(std::atomic<bool>& stop) {
  if (board_->key(tenant_) == ScalingBoard::kTerminateAll) {
    if (slot_->shutdown()) {
      std::int64_t remaining = board_->addWorker(tenant_, -1);
      if (remaining <= 0) {
        // Last worker out cleans the tenant's shared state, leaving the
        // terminate order in place for stragglers.
        board_->clearTenant(tenant_);
        board_->setKey(tenant_, ScalingBoard::kTerminateAll);
      }
    }
    return StepResult::Terminated;
  }

  ScaleDecision::Direction direction = slot_->hasInstance()
                                           ? ScaleDecision::Direction::In
                                           : ScaleDecision::Direction::Out;
  ScaleDecision decision(*board_, tenant_, direction, *slot_);
  while (decision.advance()) {
    if (decision.phase() == ScaleDecision::Phase::ReleaseKey &&
        decision.outcome() == ScaleDecision::Outcome::Acted) {
      // Hold the key through the quiet period so the cluster does not
      // scale again immediately.
      if (direction == ScaleDecision::Direction::Out) {
        board_->addWorker(tenant_, 1);
        logAction("scale-out");
      } else {
        board_->addWorker(tenant_, -1);
        logAction("scale-in");
      }
      clock_->sleepFor(policy_.timeBetweenScalingDecisionsS, stop);
    }
  }
  switch (decision.outcome()) {
    case ScaleDecision::Outcome::Acted:
      return StepResult::Acted;
    case ScaleDecision::Outcome::Lost:
      return StepResult::Lost;
    default:
      return StepResult::Idle;
  }
}

void IasNode::runLoop(std::atomic<bool>& stop) {
  while (!stop.load(std::memory_order_relaxed)) {
    if (!clock_->sleepFor(policy_.timeBetweenHealthChecksS, stop)) {
      return;
    }
    if (step(stop) == StepResult::Terminated) {
      return;
    }
  }
}

}  // namespace dgsim::scale
