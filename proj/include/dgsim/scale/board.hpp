#pragma once

#include <mutex>
#include <string>

#include "dgsim/grid/fabric.hpp"
#include "dgsim/scale/health.hpp"

namespace dgsim::scale {

enum class ScalingMode { Auto, Adaptive };

std::string toString(ScalingMode mode);
ScalingMode scalingModeFromName(const std::string& name);

struct ScalingPolicy {
  Metric metric = Metric::ProcessCpuLoad;
  double maxThreshold = 0.15;
  double minThreshold = 0.02;
  std::uint32_t maxInstancesToBeSpawned = 3;
  double timeBetweenHealthChecksS = 10.0;
  double timeBetweenScalingDecisionsS = 60.0;
  ScalingMode mode = ScalingMode::Adaptive;

  /// The gap between thresholds is the jitter guard; a policy with
  /// minThreshold >= maxThreshold is rejected.
  void validate() const;
};

/// Shared decision state on the coordination cluster: per-tenant scale
/// flags in a grid map plus one arbitration key (an atomic cell) per
/// tenant. The key is 0 when the tenant may scale, +-1 while a scaling
/// action is in flight, and kTerminateAll to order all workers down.
class ScalingBoard {
 public:
  static constexpr std::int64_t kTerminateAll = -999;

  explicit ScalingBoard(grid::Fabric& fabric);

  struct Flags {
    bool toScaleOut = false;
    bool toScaleIn = false;
  };

  /// Ensures the tenant's entry exists with both flags down.
  void initTenant(const std::string& tenant);

  Flags flags(const std::string& tenant);
  /// Publishes raising one flag and dropping the other in a single write.
  void publish(const std::string& tenant, Flags flags);
  void setScaleOut(const std::string& tenant, bool value);
  void setScaleIn(const std::string& tenant, bool value);

  std::int64_t key(const std::string& tenant);
  void setKey(const std::string& tenant, std::int64_t value);
  std::int64_t exchangeKey(const std::string& tenant, std::int64_t value);

  /// Worker-instance count per tenant; the shutdown that drives it to zero
  /// is the one that cleans the tenant's board state.
  std::int64_t workerCount(const std::string& tenant);
  std::int64_t addWorker(const std::string& tenant, std::int64_t delta);

  void clearTenant(const std::string& tenant);

  grid::Fabric& fabric() { return *fabric_; }

 private:
  std::string cellName(const std::string& tenant) const;
  std::string workerCellName(const std::string& tenant) const;

  grid::Fabric* fabric_;
};

/// Master-local scale request flags, shared between the health-driven loop
/// that raises them and the probe that publishes them to the board.
class LocalRequests {
 public:
  void requestScaleOut();
  void requestScaleIn();
  ScalingBoard::Flags consume();
  ScalingBoard::Flags peek() const;

 private:
  mutable std::mutex mu_;
  bool out_ = false;
  bool in_ = false;
};

}  // namespace dgsim::scale
