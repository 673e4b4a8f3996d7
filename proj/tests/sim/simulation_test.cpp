#include "dgsim/sim/simulation.hpp"

#include <set>

#include "dgsim/grid/local_cluster.hpp"
#include "dgsim/sim/workload.hpp"
#include "doctest.h"

using namespace dgsim;
using namespace dgsim::sim;

namespace {

SimConfig smallConfig() {
  SimConfig config;
  config.numUsers = 10;
  config.numDatacenters = 2;
  config.hostsPerDatacenter = 6;
  config.numVms = 16;
  config.numCloudlets = 40;
  config.withWorkload = false;
  return config;
}

SimulationReport runOn(std::uint32_t members, const SimConfig& config, int backupCount = 0,
                       const SimulationHooks* hooks = nullptr) {
  grid::LocalCluster::Options opts;
  opts.backupCount = backupCount;
  grid::LocalCluster cluster(opts);
  registerSimTasks(cluster.tasks());
  for (std::uint32_t i = 0; i < members; ++i) {
    cluster.join();
  }
  return runDistributedSimulation(cluster.master(), config, hooks);
}

}  // namespace

TEST_CASE("init refuses to start without users") {
  grid::LocalCluster cluster;
  cluster.join();
  SimConfig config = smallConfig();
  config.numUsers = 0;
  CHECK_THROWS_AS(initSimulation(cluster.master(), config), ConfigError);
}

TEST_CASE("init gives a clean clock and queue") {
  grid::LocalCluster cluster;
  cluster.join();
  SimulationContext ctx = initSimulation(cluster.master(), smallConfig());
  CHECK(ctx.clock() == 0.0);
  CHECK(ctx.queue().empty());
}

TEST_CASE("concurrent datacenter creation equals sequential construction") {
  grid::LocalCluster cluster;
  cluster.join();
  SimulationContext ctx = initSimulation(cluster.master(), smallConfig());
  auto dcs = createDatacenters(15, 20, ctx);
  REQUIRE(dcs.size() == 15);
  for (int i = 0; i < 15; ++i) {
    Datacenter expected = datacenterFromId(i, 20);
    CHECK(dcs[i].id == expected.id);
    REQUIRE(dcs[i].hostList.size() == expected.hostList.size());
    for (std::size_t h = 0; h < expected.hostList.size(); ++h) {
      CHECK(dcs[i].hostList[h].id == expected.hostList[h].id);
      CHECK(dcs[i].hostList[h].ramMb == expected.hostList[h].ramMb);
    }
  }
}

TEST_CASE("each member creates exactly its id slice") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  cluster.join();
  SimConfig config = smallConfig();
  config.numVms = 200;
  config.numCloudlets = 400;
  SimulationContext ctx = initSimulation(m0, config);

  // Offset 0 of 2 creates VM ids 0..99; offset 1 cloudlets 200..399.
  CreatedCounts c0 = createEntityRange(m0, config, 0, 2);
  CHECK(c0.vms == 100);
  CHECK(c0.cloudlets == 200);
  auto vm99 = ctx.vmMap().get(encodeI64(99));
  CHECK(vm99.has_value());
  CHECK_FALSE(ctx.vmMap().get(encodeI64(100)).has_value());

  CreatedCounts c1 = createEntityRange(m0, config, 1, 2);
  CHECK(c1.cloudlets == 200);
  CHECK(ctx.cloudletMap().get(encodeI64(399)).has_value());
  CHECK(ctx.vmMap().size() == 200);
  CHECK(ctx.cloudletMap().size() == 400);
}

TEST_CASE("single member creates the whole id space") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig config = smallConfig();
  SimulationContext ctx = initSimulation(m0, config);
  CreatedCounts counts = createAndSubmitEntities(ctx);
  CHECK(counts.vms == static_cast<std::uint64_t>(config.numVms));
  CHECK(counts.cloudlets == static_cast<std::uint64_t>(config.numCloudlets));
}

TEST_CASE("conflicting duplicate id aborts entity creation") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig config = smallConfig();
  SimulationContext ctx = initSimulation(m0, config);
  // Different payload under an entity id: a range overlap gone wrong.
  ctx.vmMap().put(encodeI64(0), toBytes("not a vm"));
  CHECK_THROWS_AS(createEntityRange(m0, config, 0, 1), ConsistencyError);
}

TEST_CASE("workload kernel is deterministic and scales with length") {
  Cloudlet c = cloudletFromId(3, 10, true);
  auto a = runCloudletWorkload(c, 100);
  auto b = runCloudletWorkload(c, 100);
  CHECK(a.checksum == b.checksum);
  CHECK(a.iterations == b.iterations);

  Cloudlet longer = c;
  longer.lengthMi = c.lengthMi * 2;
  auto d = runCloudletWorkload(longer, 100);
  CHECK(d.iterations == 2 * a.iterations);

  Cloudlet noWork = c;
  noWork.withWorkload = false;
  CHECK_THROWS_AS(runCloudletWorkload(noWork, 100), std::invalid_argument);
}

TEST_CASE("lone cloudlet finishes at length over mips") {
  // 1000 MI alone on a 500 MIPS VM takes 2 seconds.
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig config = smallConfig();
  config.numVms = 1;
  config.numCloudlets = 1;
  SimulationContext ctx = initSimulation(m0, config);
  Vm vm = vmFromId(0, config.numUsers);
  vm.mips = 500.0;
  ctx.vmMap().put(encodeI64(0), encodeVm(vm));
  Cloudlet c = cloudletFromId(0, config.numUsers, false);
  c.lengthMi = 1000.0;
  ctx.cloudletMap().put(encodeI64(0), encodeCloudlet(c));
  Assignment assignment;
  assignment.cloudletToVm[0] = 0;
  SimulationReport report = startSimulation(ctx, assignment);
  REQUIRE(report.records.size() == 1);
  CHECK(report.records[0].finishTime - report.records[0].startTime ==
        doctest::Approx(2.0));
}

TEST_CASE("two equal cloudlets time-shared each take twice the solo time") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig config = smallConfig();
  config.numVms = 1;
  config.numCloudlets = 2;
  SimulationContext ctx = initSimulation(m0, config);
  Vm vm = vmFromId(0, config.numUsers);
  vm.mips = 500.0;
  ctx.vmMap().put(encodeI64(0), encodeVm(vm));
  for (int id = 0; id < 2; ++id) {
    Cloudlet c = cloudletFromId(id, config.numUsers, false);
    c.lengthMi = 1000.0;
    ctx.cloudletMap().put(encodeI64(id), encodeCloudlet(c));
  }
  Assignment assignment;
  assignment.cloudletToVm[0] = 0;
  assignment.cloudletToVm[1] = 0;
  SimulationReport report = startSimulation(ctx, assignment);
  REQUIRE(report.records.size() == 2);
  CHECK(report.records[0].finishTime == doctest::Approx(4.0));
  CHECK(report.records[1].finishTime == doctest::Approx(4.0));
}

TEST_CASE("space-shared vm runs cloudlets one after the other") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig config = smallConfig();
  config.numVms = 1;
  config.numCloudlets = 2;
  SimulationContext ctx = initSimulation(m0, config);
  Vm vm = vmFromId(0, config.numUsers);
  vm.mips = 500.0;
  vm.schedulerKind = SchedulerKind::SpaceShared;
  ctx.vmMap().put(encodeI64(0), encodeVm(vm));
  for (int id = 0; id < 2; ++id) {
    Cloudlet c = cloudletFromId(id, config.numUsers, false);
    c.lengthMi = 1000.0;
    ctx.cloudletMap().put(encodeI64(id), encodeCloudlet(c));
  }
  Assignment assignment;
  assignment.cloudletToVm[0] = 0;
  assignment.cloudletToVm[1] = 0;
  SimulationReport report = startSimulation(ctx, assignment);
  CHECK(report.records[0].startTime == doctest::Approx(0.0));
  CHECK(report.records[0].finishTime == doctest::Approx(2.0));
  CHECK(report.records[1].startTime == doctest::Approx(2.0));
  CHECK(report.records[1].finishTime == doctest::Approx(4.0));
}

TEST_CASE("reports are identical across member counts") {
  for (auto scheduler : {SchedulerChoice::RoundRobin, SchedulerChoice::Matchmaking}) {
    SimConfig config = smallConfig();
    config.scheduler = scheduler;
    config.withWorkload = true;
    config.workloadItersPerMi = 20;
    std::string baseline = runOn(1, config).toCsv();
    for (std::uint32_t members : {2u, 3u}) {
      CHECK(runOn(members, config).toCsv() == baseline);
    }
  }
}

TEST_CASE("conservation: every cloudlet is finished or reported unbound") {
  SimConfig config = smallConfig();
  config.scheduler = SchedulerChoice::Matchmaking;
  SimulationReport report = runOn(2, config);
  CHECK(report.records.size() == static_cast<std::size_t>(config.numCloudlets));
  CHECK(report.finishedCount + static_cast<int>(report.unbound.size()) ==
        config.numCloudlets);
}

TEST_CASE("workload checksums appear exactly when enabled") {
  SimConfig config = smallConfig();
  config.withWorkload = false;
  SimulationReport without = runOn(1, config);
  for (const auto& rec : without.records) {
    CHECK_FALSE(rec.checksum.has_value());
  }
  config.withWorkload = true;
  config.workloadItersPerMi = 10;
  SimulationReport with = runOn(1, config);
  for (const auto& rec : with.records) {
    CHECK(rec.checksum.has_value());
  }
}

TEST_CASE("grid objects are cleared after the run") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig config = smallConfig();
  runDistributedSimulation(m0, config);
  CHECK(m0.mapSize(config.clusterGroup + "/vms") == 0);
  CHECK(m0.mapSize(config.clusterGroup + "/cloudlets") == 0);
}

TEST_CASE("killing a non-master member mid-run with backups keeps the oracle report") {
  SimConfig config = smallConfig();
  config.withWorkload = true;
  config.workloadItersPerMi = 20;
  std::string oracle = runOn(1, config).toCsv();

  grid::LocalCluster::Options opts;
  opts.backupCount = 1;
  grid::LocalCluster cluster(opts);
  registerSimTasks(cluster.tasks());
  for (int i = 0; i < 3; ++i) {
    cluster.join();
  }
  SimulationHooks hooks;
  hooks.afterEntityCreation = [&cluster] { cluster.kill(1); };
  SimulationReport report = runDistributedSimulation(cluster.master(), config, &hooks);
  CHECK(report.toCsv() == oracle);
  CHECK(cluster.memberCount() == 2);
}

TEST_CASE("killing a member without backups aborts with data loss") {
  SimConfig config = smallConfig();
  grid::LocalCluster cluster;  // backupCount = 0
  registerSimTasks(cluster.tasks());
  for (int i = 0; i < 3; ++i) {
    cluster.join();
  }
  SimulationHooks hooks;
  hooks.afterEntityCreation = [&cluster] { cluster.kill(2); };
  CHECK_THROWS_AS(runDistributedSimulation(cluster.master(), config, &hooks),
                  DataLossError);
}

TEST_CASE("event times never decrease over a run") {
  // Indirectly pinned by the clock guard in advanceClock; a run with many
  // vms and uneven lengths exercises it.
  SimConfig config = smallConfig();
  config.numCloudlets = 120;
  config.numVms = 7;
  CHECK_NOTHROW(runOn(2, config));
}

TEST_CASE("isolated cluster groups do not share entities") {
  grid::LocalCluster cluster;
  registerSimTasks(cluster.tasks());
  grid::Fabric& m0 = cluster.join();
  SimConfig a = smallConfig();
  a.clusterGroup = "main";
  SimConfig b = smallConfig();
  b.clusterGroup = "main2";
  SimulationContext ctxA = initSimulation(m0, a);
  SimulationContext ctxB = initSimulation(m0, b);
  createAndSubmitEntities(ctxA);
  CHECK(ctxA.vmMap().size() == static_cast<std::size_t>(a.numVms));
  CHECK(ctxB.vmMap().size() == 0);
}
