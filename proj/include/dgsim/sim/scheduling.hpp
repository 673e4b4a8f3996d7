#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dgsim/sim/entities.hpp"

namespace dgsim::sim {

class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Assignment {
  std::map<int, int> cloudletToVm;
  std::vector<int> unbound;  // infeasible cloudlets, reported not fatal
};

/// Cloudlet at position i binds to the VM at position i mod |vms|.
Assignment scheduleRoundRobin(const std::vector<int>& cloudletIds,
                              const std::vector<int>& vmIds);

struct MatchmakingParams {
  double referenceSeconds = 2.0;
  double fairnessFactor = 2.0;
};

/// Fair matchmaking, processed one cloudlet at a time in ascending id
/// order. A cloudlet needs requiredMips = lengthMi / referenceSeconds.
/// Candidates are the VMs with requiredMips <= mips <= fairnessFactor *
/// requiredMips; when the window is empty, the smallest VM that still fits
/// is used. Cloudlets sharing the same candidate set rotate through it
/// round-robin. The cursor form exists so distributed runs can replay the
/// prefix of earlier ids and continue from any range boundary with results
/// identical to a sequential pass.
class MatchmakingCursor {
 public:
  MatchmakingCursor(std::vector<Vm> vms, MatchmakingParams params);

  /// Feed cloudlets strictly in ascending id order. Returns the chosen VM
  /// id, or nullopt when no VM can serve the cloudlet.
  std::optional<int> assign(const Cloudlet& cloudlet);

 private:
  std::vector<int> candidatesFor(double requiredMips) const;

  std::vector<Vm> vms_;  // sorted by (mips, id)
  MatchmakingParams params_;
  std::map<std::vector<int>, std::size_t> rotation_;
};

Assignment scheduleMatchmaking(const std::vector<Cloudlet>& cloudlets,
                               const std::vector<Vm>& vms, MatchmakingParams params);

/// Deterministic first-fit placement by ascending host id under RAM and PE
/// capacity. Returns the placement map; VMs that fit nowhere are absent
/// from it and listed in `unplaceable`.
std::map<int, int> allocateVmsToHosts(const std::vector<Vm>& vms,
                                      std::vector<Host>& hosts,
                                      std::vector<int>* unplaceable = nullptr);

}  // namespace dgsim::sim
