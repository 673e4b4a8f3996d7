#include "dgsim/scale/board.hpp"

namespace dgsim::scale {

namespace {
constexpr std::uint8_t kTagFlags = 40;
constexpr const char* kBoardMap = "scaling/board";

Bytes encodeFlags(ScalingBoard::Flags f) {
  Writer w = recordWriter(kTagFlags);
  w.boolean(f.toScaleOut);
  w.boolean(f.toScaleIn);
  return w.take();
}

ScalingBoard::Flags decodeFlags(const Bytes& record) {
  Reader r = recordReader(record, kTagFlags);
  ScalingBoard::Flags f;
  f.toScaleOut = r.boolean();
  f.toScaleIn = r.boolean();
  return f;
}
}  // namespace

std::string toString(ScalingMode mode) {
  return mode == ScalingMode::Auto ? "auto" : "adaptive";
}

ScalingMode scalingModeFromName(const std::string& name) {
  if (name == "auto") return ScalingMode::Auto;
  if (name == "adaptive") return ScalingMode::Adaptive;
  throw HealthError("unknown scaling mode '" + name + "'");
}

void ScalingPolicy::validate() const {
  if (minThreshold >= maxThreshold) {
    throw HealthError("minThreshold must stay below maxThreshold");
  }
  if (maxInstancesToBeSpawned == 0) {
    throw HealthError("maxInstancesToBeSpawned must be positive");
  }
  if (timeBetweenHealthChecksS <= 0.0 || timeBetweenScalingDecisionsS <= 0.0) {
    throw HealthError("scaling intervals must be positive");
  }
}

ScalingBoard::ScalingBoard(grid::Fabric& fabric) : fabric_(&fabric) {}

std::string ScalingBoard::cellName(const std::string& tenant) const {
  return "scaling/key/" + tenant;
}

std::string ScalingBoard::workerCellName(const std::string& tenant) const {
  return "scaling/workers/" + tenant;
}

void ScalingBoard::initTenant(const std::string& tenant) {
  if (!fabric_->mapGet(kBoardMap, toBytes(tenant))) {
    fabric_->mapPut(kBoardMap, toBytes(tenant), encodeFlags({}));
  }
}

ScalingBoard::Flags ScalingBoard::flags(const std::string& tenant) {
  auto raw = fabric_->mapGet(kBoardMap, toBytes(tenant));
  if (!raw) {
    return {};
  }
  return decodeFlags(*raw);
}

void ScalingBoard::publish(const std::string& tenant, Flags f) {
  fabric_->mapPut(kBoardMap, toBytes(tenant), encodeFlags(f));
}

void ScalingBoard::setScaleOut(const std::string& tenant, bool value) {
  Flags f = flags(tenant);
  f.toScaleOut = value;
  publish(tenant, f);
}

void ScalingBoard::setScaleIn(const std::string& tenant, bool value) {
  Flags f = flags(tenant);
  f.toScaleIn = value;
  publish(tenant, f);
}

std::int64_t ScalingBoard::key(const std::string& tenant) {
  return fabric_->cellGet(cellName(tenant));
}

void ScalingBoard::setKey(const std::string& tenant, std::int64_t value) {
  fabric_->cellSet(cellName(tenant), value);
}

std::int64_t ScalingBoard::exchangeKey(const std::string& tenant, std::int64_t value) {
  return fabric_->cellExchange(cellName(tenant), value);
}

std::int64_t ScalingBoard::workerCount(const std::string& tenant) {
  return fabric_->cellGet(workerCellName(tenant));
}

std::int64_t ScalingBoard::addWorker(const std::string& tenant, std::int64_t delta) {
  // get-then-set under the cell's linearizability: emulate add via CAS loop.
  for (;;) {
    std::int64_t cur = fabric_->cellGet(workerCellName(tenant));
    auto r = fabric_->cellCompareExchange(workerCellName(tenant), cur, cur + delta);
    if (r.swapped) {
      return cur + delta;
    }
  }
}

void ScalingBoard::clearTenant(const std::string& tenant) {
  fabric_->mapRemove(kBoardMap, toBytes(tenant));
  fabric_->cellSet(cellName(tenant), 0);
  fabric_->cellSet(workerCellName(tenant), 0);
}

void LocalRequests::requestScaleOut() {
  std::lock_guard<std::mutex> lk(mu_);
  out_ = true;
}

void LocalRequests::requestScaleIn() {
  std::lock_guard<std::mutex> lk(mu_);
  in_ = true;
}

ScalingBoard::Flags LocalRequests::consume() {
  std::lock_guard<std::mutex> lk(mu_);
  ScalingBoard::Flags f{out_, in_};
  out_ = false;
  in_ = false;
  return f;
}

ScalingBoard::Flags LocalRequests::peek() const {
  std::lock_guard<std::mutex> lk(mu_);
  return {out_, in_};
}

}  // namespace dgsim::scale
