#pragma once

#include <functional>
#include <string>

#include "dgsim/grid/fabric.hpp"
#include "dgsim/sim/entities.hpp"
#include "dgsim/sim/event_queue.hpp"
#include "dgsim/sim/scheduling.hpp"

namespace dgsim::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a member failure dropped grid entries that had no replica.
class DataLossError : public SimError {
 public:
  using SimError::SimError;
};

/// Raised when two members disagree about an entity id (overlapping ranges).
class ConsistencyError : public SimError {
 public:
  using SimError::SimError;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SchedulerChoice { RoundRobin, Matchmaking };

std::string toString(SchedulerChoice s);

struct SimConfig {
  int numUsers = 200;
  std::string clusterGroup = "main";
  bool traceFlag = false;
  int numDatacenters = 15;
  int hostsPerDatacenter = 20;
  int numVms = 200;
  int numCloudlets = 400;
  bool withWorkload = false;
  std::uint64_t workloadItersPerMi = 3500;
  SchedulerChoice scheduler = SchedulerChoice::RoundRobin;
  MatchmakingParams matchmaking;
};

struct CloudletRecord {
  int cloudletId = 0;
  int vmId = -1;  // -1: unbound
  double startTime = 0.0;
  double finishTime = 0.0;
  std::optional<std::int64_t> checksum;
};

struct SimulationReport {
  std::vector<CloudletRecord> records;  // sorted by cloudletId, one per cloudlet
  double wallClockSeconds = 0.0;
  std::uint32_t memberCount = 0;
  int finishedCount = 0;
  std::vector<int> unbound;
  std::string scheduler;

  /// Canonical dump: header `cloudlet_id,vm_id,start_time,finish_time,checksum`,
  /// times with 6 decimals, rows by cloudlet id, LF endings. Byte-exact
  /// across runs and member counts for a fixed config.
  std::string toCsv() const;
};

/// Handle to one simulation's distributed object space, scoped under its
/// cluster group name. Owns the master-side clock and future event list.
class SimulationContext {
 public:
  SimulationContext(grid::Fabric& master, SimConfig config);

  grid::Fabric& fabric() { return *fabric_; }
  const SimConfig& config() const { return config_; }
  EventQueue& queue() { return queue_; }
  double clock() const { return clock_; }
  void advanceClock(double t);

  std::string vmMapName() const { return config_.clusterGroup + "/vms"; }
  std::string cloudletMapName() const { return config_.clusterGroup + "/cloudlets"; }

  grid::GridMap vmMap() { return {*fabric_, vmMapName()}; }
  grid::GridMap cloudletMap() { return {*fabric_, cloudletMapName()}; }

  /// Drops every distributed object of this simulation.
  void clearDistributedObjects();

 private:
  grid::Fabric* fabric_;
  SimConfig config_;
  EventQueue queue_;
  double clock_ = 0.0;
};

/// Validates the configuration and opens a fresh object space. Refuses to
/// start without at least one cloud user.
SimulationContext initSimulation(grid::Fabric& master, const SimConfig& config);

/// Builds datacenters concurrently; the result is identical to sequential
/// construction since all attributes derive from ids.
std::vector<Datacenter> createDatacenters(int count, int hostsPerDc,
                                          SimulationContext& ctx);

struct CreatedCounts {
  std::uint64_t vms = 0;
  std::uint64_t cloudlets = 0;
};

/// Member-side piece of distributed entity creation: writes the VMs and
/// cloudlets whose ids fall in this member's range into the grid maps.
/// Re-putting an identical record is idempotent; a conflicting record for
/// an existing id aborts.
CreatedCounts createEntityRange(grid::Fabric& self, const SimConfig& config,
                                std::uint32_t offset, std::uint32_t parallelCount);

/// Drives entity creation on every live member and waits for completion.
CreatedCounts createAndSubmitEntities(SimulationContext& ctx);

/// Reads entities back and runs the configured scheduler. Matchmaking
/// searches are spread across members by cloudlet range; round robin is a
/// master-side index rule. Either way the assignment matches a one-member
/// run exactly.
Assignment runScheduling(SimulationContext& ctx);

/// First-fit VM placement over the datacenters' hosts.
std::map<int, int> placeVms(SimulationContext& ctx, std::vector<Datacenter>& datacenters,
                            std::vector<int>* unplaceable = nullptr);

/// Executes cloudlet workloads across members, drains the event queue on
/// the master and assembles the report. Clears the distributed objects at
/// the end.
SimulationReport startSimulation(SimulationContext& ctx, const Assignment& assignment);

/// Registers the task handlers used by the distributed phases. Must be
/// called once per cluster before running simulations on it.
void registerSimTasks(grid::TaskRegistry& registry);

struct SimulationHooks {
  std::function<void()> afterEntityCreation;
  std::function<void()> afterScheduling;
};

/// The whole flow: init, datacenters, entities, placement, scheduling,
/// simulation. Hooks exist for fault-injection tests.
SimulationReport runDistributedSimulation(grid::Fabric& master, const SimConfig& config,
                                          const SimulationHooks* hooks = nullptr);

}  // namespace dgsim::sim
