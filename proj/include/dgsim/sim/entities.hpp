#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgsim/codec.hpp"

namespace dgsim::sim {

/// Processing element (one core), rated in million instructions per second.
/// Status codes follow the conventional 1/2/3 encoding.
enum class PeStatus : int { Free = 1, Busy = 2, Failed = 3 };

struct Pe {
  int id = 0;
  double mips = 0.0;
  PeStatus status = PeStatus::Free;
};

struct Host {
  int id = 0;
  std::vector<Pe> peList;
  int ramMb = 0;
  int bwMbps = 0;
  int storageMb = 0;
  std::set<int> vmIds;

  int peCount() const { return static_cast<int>(peList.size()); }
};

enum class SchedulerKind : int { TimeShared = 0, SpaceShared = 1 };

struct Vm {
  int id = 0;
  int userId = 0;
  double mips = 0.0;
  int numberOfPes = 1;
  int ramMb = 0;
  int bwMbps = 0;
  int sizeMb = 0;
  std::string vmmName;
  SchedulerKind schedulerKind = SchedulerKind::TimeShared;

  bool operator==(const Vm&) const = default;
};

enum class CloudletStatus : int { Created = 0, Submitted = 1, Running = 2, Finished = 3 };

/// A unit of application work, sized in million instructions.
struct Cloudlet {
  int id = 0;
  int userId = 0;
  double lengthMi = 0.0;
  int pesRequired = 1;
  std::optional<int> boundVmId;
  bool withWorkload = false;
  CloudletStatus status = CloudletStatus::Created;

  bool operator==(const Cloudlet&) const = default;
};

struct Datacenter {
  int id = 0;
  std::vector<Host> hostList;
  double costPerSec = 0.0;
};

// Neutral-format codecs, one per distributed domain type.
Bytes encodeVm(const Vm& vm);
Vm decodeVm(std::span<const std::uint8_t> record);
Bytes encodeCloudlet(const Cloudlet& c);
Cloudlet decodeCloudlet(std::span<const std::uint8_t> record);

/// Deterministic entity attributes, derived from ids alone so that reports
/// stay identical regardless of which member created an entity.
Vm vmFromId(int id, int numUsers);
Cloudlet cloudletFromId(int id, int numUsers, bool withWorkload);
Host hostFromId(int dcId, int hostIndex, int hostsPerDc);
Datacenter datacenterFromId(int id, int hostsPerDc);

}  // namespace dgsim::sim
