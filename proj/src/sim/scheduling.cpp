#include "dgsim/sim/scheduling.hpp"

#include <algorithm>

namespace dgsim::sim {

Assignment scheduleRoundRobin(const std::vector<int>& cloudletIds,
                              const std::vector<int>& vmIds) {
  if (vmIds.empty()) {
    throw SchedulingError("round robin needs at least one VM");
  }
  if (cloudletIds.empty()) {
    throw SchedulingError("round robin needs at least one cloudlet");
  }
  Assignment a;
  for (std::size_t i = 0; i < cloudletIds.size(); ++i) {
    a.cloudletToVm[cloudletIds[i]] = vmIds[i % vmIds.size()];
  }
  return a;
}

MatchmakingCursor::MatchmakingCursor(std::vector<Vm> vms, MatchmakingParams params)
    : vms_(std::move(vms)), params_(params) {
  if (vms_.empty()) {
    throw SchedulingError("matchmaking needs at least one VM");
  }
  if (params_.fairnessFactor < 1.0) {
    throw SchedulingError("fairnessFactor must be >= 1");
  }
  if (params_.referenceSeconds <= 0.0) {
    throw SchedulingError("referenceSeconds must be positive");
  }
  std::sort(vms_.begin(), vms_.end(), [](const Vm& a, const Vm& b) {
    if (a.mips != b.mips) {
      return a.mips < b.mips;
    }
    return a.id < b.id;
  });
}

std::vector<int> MatchmakingCursor::candidatesFor(double requiredMips) const {
  std::vector<int> ids;
  for (const Vm& vm : vms_) {
    if (vm.mips >= requiredMips && vm.mips <= params_.fairnessFactor * requiredMips) {
      ids.push_back(vm.id);
    }
  }
  return ids;
}

std::optional<int> MatchmakingCursor::assign(const Cloudlet& cloudlet) {
  double requiredMips = cloudlet.lengthMi / params_.referenceSeconds;
  std::vector<int> candidates = candidatesFor(requiredMips);
  if (candidates.empty()) {
    // Fall back to the smallest VM that still satisfies the requirement.
    for (const Vm& vm : vms_) {
      if (vm.mips >= requiredMips) {
        return vm.id;
      }
    }
    return std::nullopt;
  }
  std::size_t& turn = rotation_[candidates];
  int chosen = candidates[turn % candidates.size()];
  ++turn;
  return chosen;
}

Assignment scheduleMatchmaking(const std::vector<Cloudlet>& cloudlets,
                               const std::vector<Vm>& vms, MatchmakingParams params) {
  MatchmakingCursor cursor(vms, params);
  std::vector<Cloudlet> ordered = cloudlets;
  std::sort(ordered.begin(), ordered.end(),
            [](const Cloudlet& a, const Cloudlet& b) { return a.id < b.id; });
  Assignment a;
  for (const Cloudlet& c : ordered) {
    if (auto vm = cursor.assign(c)) {
      a.cloudletToVm[c.id] = *vm;
    } else {
      a.unbound.push_back(c.id);
    }
  }
  return a;
}

std::map<int, int> allocateVmsToHosts(const std::vector<Vm>& vms,
                                      std::vector<Host>& hosts,
                                      std::vector<int>* unplaceable) {
  std::sort(hosts.begin(), hosts.end(),
            [](const Host& a, const Host& b) { return a.id < b.id; });
  std::vector<Vm> ordered = vms;
  std::sort(ordered.begin(), ordered.end(),
            [](const Vm& a, const Vm& b) { return a.id < b.id; });

  std::map<int, int> placement;
  std::vector<int> usedRam(hosts.size(), 0);
  std::vector<int> usedPes(hosts.size(), 0);
  for (const Vm& vm : ordered) {
    bool placed = false;
    for (std::size_t h = 0; h < hosts.size(); ++h) {
      if (usedRam[h] + vm.ramMb <= hosts[h].ramMb &&
          usedPes[h] + vm.numberOfPes <= hosts[h].peCount()) {
        usedRam[h] += vm.ramMb;
        int firstPe = usedPes[h];
        usedPes[h] += vm.numberOfPes;
        for (int pe = firstPe; pe < usedPes[h]; ++pe) {
          hosts[h].peList[pe].status = PeStatus::Busy;
        }
        hosts[h].vmIds.insert(vm.id);
        placement[vm.id] = hosts[h].id;
        placed = true;
        break;
      }
    }
    if (!placed && unplaceable != nullptr) {
      unplaceable->push_back(vm.id);
    }
  }
  return placement;
}

}  // namespace dgsim::sim
