#include "dgsim/sim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>
#include <map>
#include <set>

#include "dgsim/partition.hpp"
#include "dgsim/sim/workload.hpp"

namespace dgsim::sim {

namespace {

constexpr std::uint8_t kTagRangeReq = 30;
constexpr std::uint8_t kTagCreateResp = 31;
constexpr std::uint8_t kTagMatchResp = 33;
constexpr std::uint8_t kTagWorkResp = 35;

constexpr const char* kCreateTask = "sim/create-entities";
constexpr const char* kMatchTask = "sim/matchmake-range";
constexpr const char* kWorkTask = "sim/run-workloads";

struct RangeRequest {
  SimConfig config;
  std::vector<std::uint32_t> ordinals;  // membership snapshot at dispatch

  Bytes encode() const {
    Writer w = recordWriter(kTagRangeReq);
    w.str(config.clusterGroup);
    w.u32(static_cast<std::uint32_t>(config.numUsers));
    w.u64(static_cast<std::uint64_t>(config.numVms));
    w.u64(static_cast<std::uint64_t>(config.numCloudlets));
    w.boolean(config.withWorkload);
    w.u64(config.workloadItersPerMi);
    w.f64(config.matchmaking.referenceSeconds);
    w.f64(config.matchmaking.fairnessFactor);
    w.u32(static_cast<std::uint32_t>(ordinals.size()));
    for (std::uint32_t o : ordinals) {
      w.u32(o);
    }
    return w.take();
  }

  static RangeRequest decode(const Bytes& payload) {
    Reader r = recordReader(payload, kTagRangeReq);
    RangeRequest req;
    req.config.clusterGroup = r.str();
    req.config.numUsers = static_cast<int>(r.u32());
    req.config.numVms = static_cast<int>(r.u64());
    req.config.numCloudlets = static_cast<int>(r.u64());
    req.config.withWorkload = r.boolean();
    req.config.workloadItersPerMi = r.u64();
    req.config.matchmaking.referenceSeconds = r.f64();
    req.config.matchmaking.fairnessFactor = r.f64();
    std::uint32_t count = r.u32();
    req.ordinals.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      req.ordinals.push_back(r.u32());
    }
    return req;
  }

  /// Rank of `ordinal` in the snapshot, or nullopt for late joiners.
  std::optional<std::uint32_t> offsetOf(std::uint32_t ordinal) const {
    auto it = std::find(ordinals.begin(), ordinals.end(), ordinal);
    if (it == ordinals.end()) {
      return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - ordinals.begin());
  }
};

std::vector<std::uint32_t> liveOrdinals(grid::Fabric& fabric) {
  std::vector<std::uint32_t> out;
  for (const auto& m : fabric.members()) {
    out.push_back(m.ordinal);
  }
  return out;
}

Vm readVm(grid::Fabric& fabric, const std::string& mapName, int id) {
  auto raw = fabric.mapGet(mapName, encodeI64(id));
  if (!raw) {
    throw DataLossError("VM " + std::to_string(id) + " missing from the grid");
  }
  return decodeVm(*raw);
}

Cloudlet readCloudlet(grid::Fabric& fabric, const std::string& mapName, int id) {
  auto raw = fabric.mapGet(mapName, encodeI64(id));
  if (!raw) {
    throw DataLossError("cloudlet " + std::to_string(id) + " missing from the grid");
  }
  return decodeCloudlet(*raw);
}

/// Matchmaking for cloudlet ids [rangeInit, rangeFinal), replaying the
/// prefix [0, rangeInit) first so rotation counters match a sequential run.
std::vector<std::pair<int, std::optional<int>>> matchmakeRange(
    grid::Fabric& fabric, const SimConfig& config, std::uint64_t rangeInit,
    std::uint64_t rangeFinal) {
  std::string vmMap = config.clusterGroup + "/vms";
  std::string clMap = config.clusterGroup + "/cloudlets";
  std::vector<Vm> vms;
  vms.reserve(config.numVms);
  for (const auto& [key, value] : fabric.mapEntries(vmMap)) {
    vms.push_back(decodeVm(value));
  }
  MatchmakingCursor cursor(vms, config.matchmaking);
  std::vector<std::pair<int, std::optional<int>>> out;
  for (std::uint64_t id = 0; id < rangeFinal; ++id) {
    Cloudlet c = readCloudlet(fabric, clMap, static_cast<int>(id));
    auto vm = cursor.assign(c);
    if (id >= rangeInit) {
      out.emplace_back(static_cast<int>(id), vm);
    }
  }
  return out;
}

std::vector<std::pair<int, std::int64_t>> workloadRange(grid::Fabric& fabric,
                                                        const SimConfig& config,
                                                        std::uint64_t rangeInit,
                                                        std::uint64_t rangeFinal) {
  std::string clMap = config.clusterGroup + "/cloudlets";
  std::vector<std::pair<int, std::int64_t>> out;
  for (std::uint64_t id = rangeInit; id < rangeFinal; ++id) {
    Cloudlet c = readCloudlet(fabric, clMap, static_cast<int>(id));
    if (c.withWorkload) {
      out.emplace_back(static_cast<int>(id),
                       runCloudletWorkload(c, config.workloadItersPerMi).checksum);
    }
  }
  return out;
}

}  // namespace

std::string toString(SchedulerChoice s) {
  return s == SchedulerChoice::RoundRobin ? "roundRobin" : "matchmaking";
}

SimulationContext::SimulationContext(grid::Fabric& master, SimConfig config)
    : fabric_(&master), config_(std::move(config)) {}

void SimulationContext::advanceClock(double t) {
  if (t < clock_) {
    throw SimError("simulation clock may not move backwards");
  }
  clock_ = t;
}

void SimulationContext::clearDistributedObjects() {
  fabric_->mapClear(vmMapName());
  fabric_->mapClear(cloudletMapName());
  fabric_->mapClear(config_.clusterGroup + "/deploymentList");
}

SimulationContext initSimulation(grid::Fabric& master, const SimConfig& config) {
  if (config.numUsers < 1) {
    throw ConfigError("at least one cloud user must be present");
  }
  if (config.clusterGroup.empty()) {
    throw ConfigError("cluster group name must be nonempty");
  }
  if (config.numVms < 1 || config.numCloudlets < 1) {
    throw ConfigError("simulation needs at least one VM and one cloudlet");
  }
  SimulationContext ctx(master, config);
  ctx.clearDistributedObjects();
  return ctx;
}

std::vector<Datacenter> createDatacenters(int count, int hostsPerDc,
                                          SimulationContext& ctx) {
  if (count < 1 || hostsPerDc < 1) {
    throw ConfigError("datacenter and host counts must be positive");
  }
  std::vector<std::future<Datacenter>> futures;
  futures.reserve(count);
  for (int i = 0; i < count; ++i) {
    futures.push_back(
        std::async(std::launch::async, [i, hostsPerDc] { return datacenterFromId(i, hostsPerDc); }));
  }
  std::vector<Datacenter> dcs;
  dcs.reserve(count);
  for (auto& f : futures) {
    dcs.push_back(f.get());
  }
  (void)ctx;
  return dcs;
}

CreatedCounts createEntityRange(grid::Fabric& self, const SimConfig& config,
                                std::uint32_t offset, std::uint32_t parallelCount) {
  CreatedCounts counts;
  std::string vmMap = config.clusterGroup + "/vms";
  std::string clMap = config.clusterGroup + "/cloudlets";

  auto putChecked = [&](const std::string& map, int id, Bytes record) {
    auto prev = self.mapPut(map, encodeI64(id), record);
    if (prev && *prev != record) {
      throw ConsistencyError("conflicting record for id " + std::to_string(id) +
                             " in " + map);
    }
  };

  auto vmRange = part::partitionRange(config.numVms, offset, parallelCount);
  for (std::uint64_t id = vmRange.init; id < vmRange.final; ++id) {
    putChecked(vmMap, static_cast<int>(id), encodeVm(vmFromId(static_cast<int>(id), config.numUsers)));
    ++counts.vms;
  }
  auto clRange = part::partitionRange(config.numCloudlets, offset, parallelCount);
  for (std::uint64_t id = clRange.init; id < clRange.final; ++id) {
    Cloudlet c = cloudletFromId(static_cast<int>(id), config.numUsers, config.withWorkload);
    c.status = CloudletStatus::Submitted;
    putChecked(clMap, static_cast<int>(id), encodeCloudlet(c));
    ++counts.cloudlets;
  }
  return counts;
}

void registerSimTasks(grid::TaskRegistry& registry) {
  registry.add(kCreateTask, [](grid::TaskContext& ctx, const Bytes& payload) {
    RangeRequest req = RangeRequest::decode(payload);
    Writer w = recordWriter(kTagCreateResp);
    auto offset = req.offsetOf(ctx.self.self().ordinal);
    if (!offset) {
      w.u64(0);
      w.u64(0);
      return w.take();
    }
    CreatedCounts counts = createEntityRange(
        ctx.self, req.config, *offset, static_cast<std::uint32_t>(req.ordinals.size()));
    w.u64(counts.vms);
    w.u64(counts.cloudlets);
    return w.take();
  });

  registry.add(kMatchTask, [](grid::TaskContext& ctx, const Bytes& payload) {
    RangeRequest req = RangeRequest::decode(payload);
    Writer w = recordWriter(kTagMatchResp);
    auto offset = req.offsetOf(ctx.self.self().ordinal);
    if (!offset) {
      w.u32(0);
      return w.take();
    }
    auto range = part::partitionRange(req.config.numCloudlets, *offset,
                                      static_cast<std::uint32_t>(req.ordinals.size()));
    auto matches = matchmakeRange(ctx.self, req.config, range.init, range.final);
    w.u32(static_cast<std::uint32_t>(matches.size()));
    for (const auto& [id, vm] : matches) {
      w.u64(static_cast<std::uint64_t>(id));
      w.boolean(vm.has_value());
      w.u32(vm ? static_cast<std::uint32_t>(*vm) : 0);
    }
    return w.take();
  });

  registry.add(kWorkTask, [](grid::TaskContext& ctx, const Bytes& payload) {
    RangeRequest req = RangeRequest::decode(payload);
    Writer w = recordWriter(kTagWorkResp);
    auto offset = req.offsetOf(ctx.self.self().ordinal);
    if (!offset) {
      w.u32(0);
      return w.take();
    }
    auto range = part::partitionRange(req.config.numCloudlets, *offset,
                                      static_cast<std::uint32_t>(req.ordinals.size()));
    auto checksums = workloadRange(ctx.self, req.config, range.init, range.final);
    w.u32(static_cast<std::uint32_t>(checksums.size()));
    for (const auto& [id, sum] : checksums) {
      w.u64(static_cast<std::uint64_t>(id));
      w.i64(sum);
    }
    return w.take();
  });
}

CreatedCounts createAndSubmitEntities(SimulationContext& ctx) {
  RangeRequest req{ctx.config(), liveOrdinals(ctx.fabric())};
  // Track member offsets in the grid so any member can resolve its slice.
  part::DeploymentList deployment(req.ordinals);
  std::string deploymentMap = ctx.config().clusterGroup + "/deploymentList";
  ctx.fabric().mapClear(deploymentMap);
  for (std::uint32_t ordinal : deployment.ordinals()) {
    ctx.fabric().mapPut(deploymentMap, encodeI64(ordinal),
                        encodeI64(deployment.offsetOf(ordinal)));
  }
  auto results = ctx.fabric().execute(
      grid::TaskEnvelope::onAllMembers(kCreateTask, req.encode()));
  CreatedCounts total;
  for (const auto& r : results) {
    if (!r.ok) {
      throw SimError("entity creation failed on member " + std::to_string(r.ordinal) +
                     ": " + r.error);
    }
    Reader reader = recordReader(r.value, kTagCreateResp);
    total.vms += reader.u64();
    total.cloudlets += reader.u64();
  }
  if (total.vms != static_cast<std::uint64_t>(ctx.config().numVms) ||
      total.cloudlets != static_cast<std::uint64_t>(ctx.config().numCloudlets)) {
    throw SimError("entity creation incomplete");
  }
  return total;
}

std::map<int, int> placeVms(SimulationContext& ctx, std::vector<Datacenter>& datacenters,
                            std::vector<int>* unplaceable) {
  std::vector<Vm> vms;
  for (const auto& [key, value] : ctx.fabric().mapEntries(ctx.vmMapName())) {
    vms.push_back(decodeVm(value));
  }
  std::vector<Host> hosts;
  for (auto& dc : datacenters) {
    hosts.insert(hosts.end(), dc.hostList.begin(), dc.hostList.end());
  }
  auto placement = allocateVmsToHosts(vms, hosts, unplaceable);
  // Propagate the PE/vm bookkeeping back into the datacenter objects.
  std::map<int, const Host*> byId;
  for (const Host& h : hosts) {
    byId[h.id] = &h;
  }
  for (auto& dc : datacenters) {
    for (auto& h : dc.hostList) {
      h = *byId.at(h.id);
    }
  }
  return placement;
}

Assignment runScheduling(SimulationContext& ctx) {
  const SimConfig& config = ctx.config();
  if (config.scheduler == SchedulerChoice::RoundRobin) {
    std::vector<int> cloudletIds(config.numCloudlets);
    std::vector<int> vmIds(config.numVms);
    for (int i = 0; i < config.numCloudlets; ++i) {
      cloudletIds[i] = i;
    }
    for (int i = 0; i < config.numVms; ++i) {
      vmIds[i] = i;
    }
    return scheduleRoundRobin(cloudletIds, vmIds);
  }

  RangeRequest req{config, liveOrdinals(ctx.fabric())};
  auto results =
      ctx.fabric().execute(grid::TaskEnvelope::onAllMembers(kMatchTask, req.encode()));
  Assignment assignment;
  std::vector<std::uint32_t> failed;
  for (const auto& r : results) {
    if (!r.ok) {
      failed.push_back(r.ordinal);
      continue;
    }
    Reader reader = recordReader(r.value, kTagMatchResp);
    std::uint32_t count = reader.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      int id = static_cast<int>(reader.u64());
      bool bound = reader.boolean();
      std::uint32_t vm = reader.u32();
      if (bound) {
        assignment.cloudletToVm[id] = static_cast<int>(vm);
      } else {
        assignment.unbound.push_back(id);
      }
    }
  }
  // Members that died mid-search: the master reruns their ranges locally.
  for (std::uint32_t ordinal : failed) {
    auto offset = req.offsetOf(ordinal);
    if (!offset) {
      continue;
    }
    auto range = part::partitionRange(config.numCloudlets, *offset,
                                      static_cast<std::uint32_t>(req.ordinals.size()));
    for (const auto& [id, vm] : matchmakeRange(ctx.fabric(), config, range.init, range.final)) {
      if (vm) {
        assignment.cloudletToVm[id] = *vm;
      } else {
        assignment.unbound.push_back(id);
      }
    }
  }
  std::sort(assignment.unbound.begin(), assignment.unbound.end());
  return assignment;
}

namespace {

constexpr int kTagVmDeparture = 1;

struct VmRun {
  double mips = 0.0;
  SchedulerKind kind = SchedulerKind::TimeShared;
  // Sorted by (length, id): every resident starts at time 0 and the shorter
  // work finishes first under proportional sharing.
  std::vector<std::pair<double, int>> residents;
  std::size_t nextDone = 0;
  double doneLength = 0.0;  // work already completed per survivor
  double lastEventTime = 0.0;

  bool finished() const { return nextDone >= residents.size(); }

  double nextCompletionTime() const {
    if (kind == SchedulerKind::SpaceShared) {
      // FIFO at full speed.
      return lastEventTime + residents[nextDone].first / mips;
    }
    std::size_t alive = residents.size() - nextDone;
    return lastEventTime + (residents[nextDone].first - doneLength) * alive / mips;
  }
};

}  // namespace

SimulationReport startSimulation(SimulationContext& ctx, const Assignment& assignment) {
  auto startedAt = std::chrono::steady_clock::now();
  const SimConfig& config = ctx.config();
  grid::Fabric& fabric = ctx.fabric();
  SimulationReport report;
  report.memberCount = static_cast<std::uint32_t>(fabric.members().size());
  report.scheduler = toString(config.scheduler);

  // Phase 1: cloudlet workloads, spread over the members by range. A member
  // that fails mid-run gets its range rerun on the master.
  std::map<int, std::int64_t> checksums;
  if (config.withWorkload) {
    RangeRequest req{config, liveOrdinals(fabric)};
    auto results =
        fabric.execute(grid::TaskEnvelope::onAllMembers(kWorkTask, req.encode()));
    std::vector<std::uint32_t> failed;
    for (const auto& r : results) {
      if (!r.ok) {
        failed.push_back(r.ordinal);
        continue;
      }
      Reader reader = recordReader(r.value, kTagWorkResp);
      std::uint32_t count = reader.u32();
      for (std::uint32_t i = 0; i < count; ++i) {
        int id = static_cast<int>(reader.u64());
        checksums[id] = reader.i64();
      }
    }
    for (std::uint32_t ordinal : failed) {
      auto offset = req.offsetOf(ordinal);
      if (!offset) {
        continue;
      }
      auto range = part::partitionRange(config.numCloudlets, *offset,
                                        static_cast<std::uint32_t>(req.ordinals.size()));
      for (const auto& [id, sum] : workloadRange(fabric, config, range.init, range.final)) {
        checksums[id] = sum;
      }
    }
  }

  if (fabric.mapLostData(ctx.vmMapName()) || fabric.mapLostData(ctx.cloudletMapName())) {
    throw DataLossError("grid entries were lost without a backup; aborting simulation");
  }

  // Phase 2: the core event-driven service simulation, master only.
  std::map<int, VmRun> runs;
  for (const auto& [cloudletId, vmId] : assignment.cloudletToVm) {
    auto it = runs.find(vmId);
    if (it == runs.end()) {
      Vm vm = readVm(fabric, ctx.vmMapName(), vmId);
      VmRun run;
      run.mips = vm.mips;
      run.kind = vm.schedulerKind;
      it = runs.emplace(vmId, std::move(run)).first;
    }
    Cloudlet c = readCloudlet(fabric, ctx.cloudletMapName(), cloudletId);
    it->second.residents.emplace_back(c.lengthMi, cloudletId);
  }

  std::map<int, CloudletRecord> records;
  for (auto& [vmId, run] : runs) {
    std::sort(run.residents.begin(), run.residents.end());
    if (run.kind == SchedulerKind::SpaceShared) {
      // FIFO order is by cloudlet id, not length.
      std::sort(run.residents.begin(), run.residents.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
    }
    ctx.queue().push(run.nextCompletionTime(), vmId, kTagVmDeparture);
  }

  while (auto event = ctx.queue().pop()) {
    ctx.advanceClock(event->time);
    VmRun& run = runs.at(event->target);
    if (run.kind == SchedulerKind::SpaceShared) {
      auto [length, id] = run.residents[run.nextDone];
      CloudletRecord rec;
      rec.cloudletId = id;
      rec.vmId = event->target;
      rec.startTime = run.lastEventTime;
      rec.finishTime = event->time;
      records[id] = rec;
      run.lastEventTime = event->time;
      ++run.nextDone;
    } else {
      double finishedLength = run.residents[run.nextDone].first;
      while (!run.finished() && run.residents[run.nextDone].first == finishedLength) {
        auto [length, id] = run.residents[run.nextDone];
        CloudletRecord rec;
        rec.cloudletId = id;
        rec.vmId = event->target;
        rec.startTime = 0.0;
        rec.finishTime = event->time;
        records[id] = rec;
        ++run.nextDone;
      }
      run.doneLength = finishedLength;
      run.lastEventTime = event->time;
    }
    if (!run.finished()) {
      ctx.queue().push(run.nextCompletionTime(), event->target, kTagVmDeparture);
    }
  }

  // Assemble one record per submitted cloudlet.
  for (int id = 0; id < config.numCloudlets; ++id) {
    auto it = records.find(id);
    CloudletRecord rec;
    if (it != records.end()) {
      rec = it->second;
      ++report.finishedCount;
    } else {
      rec.cloudletId = id;
      rec.vmId = -1;
      report.unbound.push_back(id);
    }
    if (auto sum = checksums.find(id); sum != checksums.end()) {
      rec.checksum = sum->second;
    }
    report.records.push_back(rec);
  }

  ctx.clearDistributedObjects();
  report.wallClockSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - startedAt).count();
  return report;
}

std::string SimulationReport::toCsv() const {
  std::string out = "cloudlet_id,vm_id,start_time,finish_time,checksum\n";
  char line[160];
  for (const auto& rec : records) {
    std::string checksumText = rec.checksum ? std::to_string(*rec.checksum) : "";
    std::snprintf(line, sizeof(line), "%d,%d,%.6f,%.6f,%s\n", rec.cloudletId, rec.vmId,
                  rec.startTime, rec.finishTime, checksumText.c_str());
    out += line;
  }
  return out;
}

SimulationReport runDistributedSimulation(grid::Fabric& master, const SimConfig& config,
                                          const SimulationHooks* hooks) {
  SimulationContext ctx = initSimulation(master, config);
  std::vector<Datacenter> dcs =
      createDatacenters(config.numDatacenters, config.hostsPerDatacenter, ctx);
  createAndSubmitEntities(ctx);
  if (hooks != nullptr && hooks->afterEntityCreation) {
    hooks->afterEntityCreation();
  }
  placeVms(ctx, dcs);
  Assignment assignment = runScheduling(ctx);
  if (hooks != nullptr && hooks->afterScheduling) {
    hooks->afterScheduling();
  }
  return startSimulation(ctx, assignment);
}

}  // namespace dgsim::sim
