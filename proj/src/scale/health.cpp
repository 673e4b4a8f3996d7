#include "dgsim/scale/health.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace dgsim::scale {

void HealthSnapshot::validate() const {
  auto inUnit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!inUnit(processCpuLoad) || !inUnit(systemCpuLoad) || !inUnit(memoryUsedFraction)) {
    throw HealthError("fractional health fields must lie in [0,1]");
  }
  if (loadAverage < 0.0) {
    throw HealthError("load average must be nonnegative");
  }
}

double metricValue(const HealthSnapshot& snapshot, Metric metric) {
  switch (metric) {
    case Metric::ProcessCpuLoad:
      return snapshot.processCpuLoad;
    case Metric::SystemCpuLoad:
      return snapshot.systemCpuLoad;
    case Metric::LoadAverage:
      return snapshot.loadAverage;
    case Metric::MemoryUsedFraction:
      return snapshot.memoryUsedFraction;
  }
  return 0.0;
}

std::string toString(Metric metric) {
  switch (metric) {
    case Metric::ProcessCpuLoad:
      return "processCpuLoad";
    case Metric::SystemCpuLoad:
      return "systemCpuLoad";
    case Metric::LoadAverage:
      return "loadAverage";
    case Metric::MemoryUsedFraction:
      return "memoryUsedFraction";
  }
  return "unknown";
}

Metric metricFromName(const std::string& name) {
  if (name == "processCpuLoad") return Metric::ProcessCpuLoad;
  if (name == "systemCpuLoad") return Metric::SystemCpuLoad;
  if (name == "loadAverage") return Metric::LoadAverage;
  if (name == "memoryUsedFraction") return Metric::MemoryUsedFraction;
  throw HealthError("unknown health metric '" + name + "'");
}

std::optional<HealthSnapshot> ZeroHealthSource::sample(Clock& clock) {
  HealthSnapshot s;
  s.sampledAt = clock.now();
  return s;
}

SyntheticHealthSource::SyntheticHealthSource(std::vector<double> processLoads, bool holdLast)
    : trace_(std::move(processLoads)), holdLast_(holdLast) {}

std::optional<HealthSnapshot> SyntheticHealthSource::sample(Clock& clock) {
  if (next_ >= trace_.size()) {
    if (!holdLast_ || trace_.empty()) {
      return std::nullopt;
    }
    HealthSnapshot s;
    s.processCpuLoad = trace_.back();
    s.sampledAt = clock.now();
    s.validate();
    return s;
  }
  HealthSnapshot s;
  s.processCpuLoad = trace_[next_++];
  s.sampledAt = clock.now();
  s.validate();
  return s;
}

namespace {

// utime + stime of this process, in seconds.
std::optional<double> processCpuSeconds(long ticks) {
  std::ifstream in("/proc/self/stat");
  if (!in) {
    return std::nullopt;
  }
  std::string content;
  std::getline(in, content);
  // Field 2 (comm) may contain spaces; skip past the closing paren.
  auto paren = content.rfind(')');
  if (paren == std::string::npos) {
    return std::nullopt;
  }
  std::istringstream rest(content.substr(paren + 1));
  std::string field;
  // utime is field 14 overall; after comm we are at field 3.
  for (int i = 3; i <= 13; ++i) {
    rest >> field;
  }
  unsigned long long utime = 0, stime = 0;
  rest >> utime >> stime;
  if (!rest) {
    return std::nullopt;
  }
  return static_cast<double>(utime + stime) / ticks;
}

std::optional<std::pair<double, double>> systemBusyTotal() {
  std::ifstream in("/proc/stat");
  if (!in) {
    return std::nullopt;
  }
  std::string cpu;
  in >> cpu;
  if (cpu != "cpu") {
    return std::nullopt;
  }
  double total = 0.0;
  double idle = 0.0;
  double v;
  int field = 0;
  while (in >> v && field < 10) {
    total += v;
    if (field == 3 || field == 4) {  // idle + iowait
      idle += v;
    }
    ++field;
  }
  return std::make_pair(total - idle, total);
}

std::optional<double> loadAvg() {
  std::ifstream in("/proc/loadavg");
  double v;
  if (in >> v) {
    return v;
  }
  return std::nullopt;
}

std::optional<double> memoryFraction() {
  std::ifstream meminfo("/proc/meminfo");
  std::string key;
  long long totalKb = 0;
  while (meminfo >> key) {
    if (key == "MemTotal:") {
      meminfo >> totalKb;
      break;
    }
    std::string skip;
    std::getline(meminfo, skip);
  }
  if (totalKb <= 0) {
    return std::nullopt;
  }
  std::ifstream statm("/proc/self/statm");
  long long pagesTotal = 0, pagesResident = 0;
  if (!(statm >> pagesTotal >> pagesResident)) {
    return std::nullopt;
  }
  double rssKb = static_cast<double>(pagesResident) * sysconf(_SC_PAGESIZE) / 1024.0;
  return std::clamp(rssKb / static_cast<double>(totalKb), 0.0, 1.0);
}

}  // namespace

OsHealthSource::OsHealthSource() {
  clockTicks_ = sysconf(_SC_CLK_TCK);
  if (clockTicks_ <= 0) {
    clockTicks_ = 100;
  }
  auto proc = processCpuSeconds(clockTicks_);
  auto sys = systemBusyTotal();
  if (!proc || !sys) {
    degraded_ = true;
    std::fprintf(stderr, "warning: OS health probe unavailable, reporting zeros\n");
    return;
  }
  lastProcessCpuSeconds_ = *proc;
  lastSystemBusy_ = sys->first;
  lastSystemTotal_ = sys->second;
  lastSampleWall_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
          .count();
}

std::optional<HealthSnapshot> OsHealthSource::sample(Clock& clock) {
  HealthSnapshot s;
  s.sampledAt = clock.now();
  if (degraded_) {
    return s;
  }
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
          .count();
  double elapsed = std::max(1e-6, wall - lastSampleWall_);
  long cores = std::max(1L, sysconf(_SC_NPROCESSORS_ONLN));

  if (auto proc = processCpuSeconds(clockTicks_)) {
    s.processCpuLoad =
        std::clamp((*proc - lastProcessCpuSeconds_) / elapsed / cores, 0.0, 1.0);
    lastProcessCpuSeconds_ = *proc;
  }
  if (auto sys = systemBusyTotal()) {
    double busy = sys->first - lastSystemBusy_;
    double total = sys->second - lastSystemTotal_;
    if (total > 0.0) {
      s.systemCpuLoad = std::clamp(busy / total, 0.0, 1.0);
    }
    lastSystemBusy_ = sys->first;
    lastSystemTotal_ = sys->second;
  }
  if (auto la = loadAvg()) {
    s.loadAverage = *la;
  }
  if (auto mem = memoryFraction()) {
    s.memoryUsedFraction = *mem;
  }
  lastSampleWall_ = wall;
  s.validate();
  return s;
}

}  // namespace dgsim::scale
