#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgsim/clock.hpp"

namespace dgsim::scale {

class HealthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HealthSnapshot {
  double processCpuLoad = 0.0;      // [0,1]
  double systemCpuLoad = 0.0;       // [0,1]
  double loadAverage = 0.0;         // >= 0
  double memoryUsedFraction = 0.0;  // [0,1]
  double sampledAt = 0.0;

  void validate() const;
};

enum class Metric {
  ProcessCpuLoad,
  SystemCpuLoad,
  LoadAverage,
  MemoryUsedFraction,
};

double metricValue(const HealthSnapshot& snapshot, Metric metric);
std::string toString(Metric metric);
Metric metricFromName(const std::string& name);

class HealthSource {
 public:
  virtual ~HealthSource() = default;
  /// One snapshot, stamped with the clock. nullopt once the source has
  /// nothing more to give (scripted traces end; live probes never do).
  virtual std::optional<HealthSnapshot> sample(Clock& clock) = 0;
};

/// All-zero readings, never exhausted. Also the fallback when the OS probe
/// is unavailable.
class ZeroHealthSource final : public HealthSource {
 public:
  std::optional<HealthSnapshot> sample(Clock& clock) override;
};

/// Replays a scripted processCpuLoad trace exactly, one value per sample.
class SyntheticHealthSource final : public HealthSource {
 public:
  explicit SyntheticHealthSource(std::vector<double> processLoads, bool holdLast = false);
  std::optional<HealthSnapshot> sample(Clock& clock) override;
  std::size_t consumed() const { return next_; }

 private:
  std::vector<double> trace_;
  std::size_t next_ = 0;
  bool holdLast_ = false;
};

/// Live readings from /proc. Construction probes availability; when the
/// files cannot be read the source degrades to zero readings and flags it.
class OsHealthSource final : public HealthSource {
 public:
  OsHealthSource();
  std::optional<HealthSnapshot> sample(Clock& clock) override;
  bool degraded() const { return degraded_; }

 private:
  bool degraded_ = false;
  long clockTicks_ = 100;
  double lastProcessCpuSeconds_ = 0.0;
  double lastSystemBusy_ = 0.0;
  double lastSystemTotal_ = 0.0;
  double lastSampleWall_ = 0.0;
};

}  // namespace dgsim::scale
