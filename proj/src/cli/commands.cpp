#include "dgsim/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "dgsim/clock.hpp"
#include "dgsim/grid/local_cluster.hpp"
#include "dgsim/grid/tcp_fabric.hpp"
#include "dgsim/mr/wordcount.hpp"
#include "dgsim/perf/classify.hpp"
#include "dgsim/perf/fit.hpp"
#include "dgsim/perf/model.hpp"
#include "dgsim/scale/scaler.hpp"
#include "dgsim/sim/simulation.hpp"

namespace dgsim::cli {

namespace testing {
const sim::SimulationHooks* cloudRunHooks = nullptr;
grid::LocalCluster* currentCluster = nullptr;
}  // namespace testing

namespace fs = std::filesystem;

namespace {

constexpr const char* kShutdownTask = "cli/await-shutdown";

sim::SimConfig simConfigFrom(const Config& config) {
  sim::SimConfig sc;
  sc.numUsers = config.noOfUsers;
  sc.clusterGroup = config.mainCluster;
  sc.numDatacenters = config.noOfDatacenters;
  sc.hostsPerDatacenter = config.noOfHosts;
  sc.numVms = config.noOfVms;
  sc.numCloudlets = config.noOfCloudlets;
  sc.withWorkload = config.withWorkload;
  sc.workloadItersPerMi = config.workloadItersPerMi;
  sc.scheduler = config.scheduler == "matchmaking" ? sim::SchedulerChoice::Matchmaking
                                                   : sim::SchedulerChoice::RoundRobin;
  sc.matchmaking.referenceSeconds = config.referenceSeconds;
  sc.matchmaking.fairnessFactor = config.fairnessFactor;
  return sc;
}

perf::CostParams modelParamsFrom(const Config& config) {
  perf::CostParams p;
  p.k = config.modelK;
  p.t1 = config.modelT1;
  p.s = config.modelS;
  p.d = config.modelD;
  p.w = config.modelW;
  p.nodes = config.modelNodes > 0 ? static_cast<std::uint32_t>(config.modelNodes) : 1;
  p.nodesTrackInstances = config.modelNodes == 0;
  p.f = config.modelF;
  p.sigma = config.modelSigma;
  p.c1 = config.modelC1;
  p.g = config.modelG;
  p.theta1 = config.modelTheta1;
  return p;
}

void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

sim::SimulationReport runInProcess(const Config& config, std::uint32_t members) {
  grid::LocalCluster::Options opts;
  opts.clusterName = config.mainCluster;
  opts.partitionCount = static_cast<std::uint32_t>(config.partitionCount);
  opts.backupCount = config.backupCount;
  opts.workersPerMember = static_cast<std::uint32_t>(config.workersPerMember);
  grid::LocalCluster cluster(opts);
  sim::registerSimTasks(cluster.tasks());
  for (std::uint32_t i = 0; i < members; ++i) {
    cluster.join();
  }
  testing::currentCluster = &cluster;
  struct Reset {
    ~Reset() { testing::currentCluster = nullptr; }
  } reset;
  return sim::runDistributedSimulation(cluster.master(), simConfigFrom(config),
                                       testing::cloudRunHooks);
}

int runCloudTcp(const Config& config, const GlobalArgs& args, std::ostream& out) {
  grid::TaskRegistry registry;
  sim::registerSimTasks(registry);
  std::atomic<bool> shutdown{false};
  registry.add(kShutdownTask, [&shutdown](grid::TaskContext&, const Bytes&) {
    shutdown = true;
    return Bytes{};
  });

  grid::TcpFabric::Options opts;
  opts.clusterName = config.mainCluster;
  opts.endpoints = args.tcpEndpoints;
  opts.partitionCount = static_cast<std::uint32_t>(config.partitionCount);
  opts.backupCount = config.backupCount;
  auto fabric = grid::TcpFabric::join(opts, registry);

  if (!fabric->awaitMembers(static_cast<std::size_t>(config.noOfExecutions), 60.0)) {
    std::fprintf(stderr, "join barrier timed out waiting for %d members\n",
                 config.noOfExecutions);
    return kExitError;
  }

  if (fabric->self().ordinal != 0) {
    // Worker process: serve tasks until the driver releases the cluster.
    while (!shutdown.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    fabric->leave();
    return kExitOk;
  }

  sim::SimulationReport report =
      sim::runDistributedSimulation(*fabric, simConfigFrom(config));
  fabric->execute(grid::TaskEnvelope::onAllMembers(kShutdownTask, {}));
  writeFile(fs::path(args.outDir) / "report.csv", report.toCsv());
  out << "members,wall_clock_s,scheduler,cloudlets,vms\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%u,%.6f,%s,%d,%d\n", report.memberCount,
                report.wallClockSeconds, report.scheduler.c_str(), config.noOfCloudlets,
                config.noOfVms);
  out << line;
  return kExitOk;
}

}  // namespace

int runCloud(const Config& config, const GlobalArgs& args, std::ostream& out) {
  try {
    validateCloudConfig(config);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
  try {
    if (!args.tcpEndpoints.empty()) {
      return runCloudTcp(config, args, out);
    }
    sim::SimulationReport report =
        runInProcess(config, static_cast<std::uint32_t>(config.noOfExecutions));
    writeFile(fs::path(args.outDir) / "report.csv", report.toCsv());
    out << "members,wall_clock_s,scheduler,cloudlets,vms\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%u,%.6f,%s,%d,%d\n", report.memberCount,
                  report.wallClockSeconds, report.scheduler.c_str(), config.noOfCloudlets,
                  config.noOfVms);
    out << line;
    return kExitOk;
  } catch (const sim::DataLossError& e) {
    std::fprintf(stderr, "data loss: %s\n", e.what());
    return kExitDataLoss;
  } catch (const sim::ConfigError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}

int runMapReduceCmd(const Config& config, const GlobalArgs& args, std::ostream& out) {
  mr::MRJobSpec spec;
  spec.loadFolder = config.loadFolder;
  spec.filesRead = config.filesRead;
  spec.mapReduceSize = config.mapReduceSize;
  spec.verbose = config.isVerbose;
  if (spec.mapReduceSize < 1) {
    std::fprintf(stderr, "validation error: mapReduceSize must be at least 1\n");
    return kExitValidation;
  }
  if (!fs::is_directory(spec.loadFolder)) {
    std::fprintf(stderr, "validation error: load folder '%s' does not exist\n",
                 spec.loadFolder.c_str());
    return kExitValidation;
  }
  try {
    grid::LocalCluster::Options opts;
    opts.clusterName = config.mainCluster;
    opts.partitionCount = static_cast<std::uint32_t>(config.partitionCount);
    grid::LocalCluster cluster(opts);
    mr::registerMapReduceTasks(cluster.tasks());
    for (int i = 0; i < std::max(1, config.noOfExecutions); ++i) {
      cluster.join();
    }
    mr::MRResult result = mr::runMapReduce(spec, cluster.master());
    writeFile(fs::path(args.outDir) / "counts.csv", result.toCsv());
    char line[160];
    std::snprintf(line, sizeof(line),
                  "map_invocations=%llu reduce_invocations=%llu elapsed_s=%.6f\n",
                  static_cast<unsigned long long>(result.mapInvocations),
                  static_cast<unsigned long long>(result.reduceInvocations),
                  result.elapsedSeconds);
    out << line;
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}

namespace {

std::vector<double> readTrace(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open trace file '" + path + "'");
  }
  std::vector<double> trace;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string t = line;
    t.erase(0, t.find_first_not_of(" \t\r"));
    if (!t.empty()) {
      t.erase(t.find_last_not_of(" \t\r") + 1);
    }
    if (t.empty() || t.front() == '#') {
      continue;
    }
    try {
      std::size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size() || v < 0.0 || v > 1.0) {
        throw std::invalid_argument(t);
      }
      trace.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("trace line " + std::to_string(lineNo) +
                            " is not a load fraction: '" + t + "'");
    }
  }
  return trace;
}

}  // namespace

int runScalingDemo(const Config& config, const GlobalArgs& args,
                   const std::string& tracePath, std::ostream& out) {
  std::vector<double> trace;
  try {
    validateScalingConfig(config);
    trace = readTrace(tracePath);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }

  scale::ScalingPolicy policy;
  policy.metric = scale::metricFromName(config.scalingMetric);
  policy.maxThreshold = config.highThresholdProcessCpuLoad;
  policy.minThreshold = config.lowThresholdProcessCpuLoad;
  policy.maxInstancesToBeSpawned =
      static_cast<std::uint32_t>(config.maxNumberOfInstancesToBeSpawned);
  policy.timeBetweenHealthChecksS = config.timeBetweenHealthChecks;
  policy.timeBetweenScalingDecisionsS = config.timeBetweenScalingDecisions;
  policy.mode = scale::scalingModeFromName(config.scalingMode);

  VirtualClock clock;
  clock.enableAutoAdvance(true);
  scale::ScalingEventLog log;

  // Tenant simulation cluster: the master joins up front; scaling grows and
  // shrinks the worker population. Backups stay on so scale-in loses nothing.
  grid::LocalCluster::Options tenantOpts;
  tenantOpts.clusterName = config.mainCluster;
  tenantOpts.backupCount = 1;
  grid::LocalCluster tenant(tenantOpts);
  tenant.join("master");

  const std::string tenantName = config.mainCluster;
  auto workerCount = [&tenant] {
    return static_cast<std::uint32_t>(tenant.memberCount() - 1);
  };

  scale::SyntheticHealthSource health(trace);
  scale::LocalRequests requests;
  std::atomic<bool> stop{false};

  if (policy.mode == scale::ScalingMode::Auto) {
    // Local spawning without arbitration.
    std::vector<std::uint32_t> spawned;
    scale::ScalingActuator actuator;
    actuator.scaleOut = [&] {
      if (workerCount() >= policy.maxInstancesToBeSpawned) {
        return;
      }
      grid::Fabric& f = tenant.join("auto-worker");
      spawned.push_back(f.self().ordinal);
      log.append({clock.now(), tenantName, "scale-out", "master", tenant.memberCount()});
    };
    actuator.scaleIn = [&] {
      if (spawned.empty()) {
        return;  // the master itself is never scaled in
      }
      std::uint32_t victim = spawned.back();
      spawned.pop_back();
      tenant.leave(victim);
      log.append({clock.now(), tenantName, "scale-in", "master", tenant.memberCount()});
    };
    clock.registerActor();
    std::thread dyn([&] {
      scale::dynamicScalingLoop(policy, health, workerCount, actuator, clock, stop);
      clock.unregisterActor();
    });
    dyn.join();
  } else {
    // Adaptive: probe + arbitration over the coordination cluster.
    grid::LocalCluster::Options subOpts;
    subOpts.clusterName = config.subCluster;
    grid::LocalCluster sub(subOpts);
    const std::size_t iasNodes = policy.maxInstancesToBeSpawned + 1;
    grid::Fabric& masterSubView = sub.join("master-sub");
    scale::ScalingBoard board(masterSubView);
    board.initTenant(tenantName);

    std::vector<std::unique_ptr<scale::ScalingBoard>> boards;
    std::vector<std::unique_ptr<scale::WorkerSlot>> slots;
    std::vector<std::unique_ptr<scale::IasNode>> nodes;
    for (std::size_t i = 0; i < iasNodes; ++i) {
      grid::Fabric& nodeView = sub.join("node-" + std::to_string(i));
      std::string label = "node-" + std::to_string(i);
      auto slot = std::make_unique<scale::WorkerSlot>(
          tenantName,
          [&tenant, label](const std::string&) -> std::optional<std::uint32_t> {
            return tenant.join("worker-" + label).self().ordinal;
          },
          [&tenant](const scale::InstanceHandle& h) { tenant.leave(h.memberOrdinal); },
          clock);
      boards.push_back(std::make_unique<scale::ScalingBoard>(nodeView));
      auto node = std::make_unique<scale::IasNode>(
          *boards.back(), tenantName, *slot, policy, clock, label, &log,
          [&tenant] { return tenant.memberCount(); });
      slots.push_back(std::move(slot));
      nodes.push_back(std::move(node));
    }

    std::vector<std::thread> threads;
    clock.registerActor();
    threads.emplace_back([&] {
      scale::dynamicScalingLoop(
          policy, health, workerCount,
          scale::ScalingActuator{[&] { requests.requestScaleOut(); },
                                 [&] { requests.requestScaleIn(); }},
          clock, stop);
      clock.unregisterActor();
    });
    std::atomic<bool> probeStop{false};
    clock.registerActor();
    threads.emplace_back([&] {
      scale::probePublishLoop(board, tenantName, requests, policy.timeBetweenHealthChecksS,
                              clock, probeStop);
      clock.unregisterActor();
    });
    std::vector<std::unique_ptr<std::atomic<bool>>> nodeStops;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodeStops.push_back(std::make_unique<std::atomic<bool>>(false));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      clock.registerActor();
      threads.emplace_back([&, i] {
        nodes[i]->runLoop(*nodeStops[i]);
        clock.unregisterActor();
      });
    }

    threads[0].join();  // the health loop ends with the trace

    // Order every worker down; the last one clears the tenant's state.
    board.setKey(tenantName, scale::ScalingBoard::kTerminateAll);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      threads[2 + i].join();
    }
    probeStop = true;
    clock.interruptAll();
    threads[1].join();
  }

  std::string csv = log.toCsv();
  writeFile(fs::path(args.outDir) / "scaling_events.csv", csv);
  out << csv;
  char line[96];
  std::snprintf(line, sizeof(line), "final_members=%zu events=%zu\n", tenant.memberCount(),
                log.snapshot().size());
  out << line;
  return kExitOk;
}

int runBenchSuite(const Config& config, const GlobalArgs& args, std::ostream& out) {
  try {
    validateCloudConfig(config);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
  try {
    std::vector<perf::Measurement> measured;
    std::string csv = "n,wall_clock_s\n";
    for (int n = 1; n <= config.noOfExecutions; ++n) {
      sim::SimulationReport report = runInProcess(config, static_cast<std::uint32_t>(n));
      measured.push_back({static_cast<std::uint32_t>(n), report.wallClockSeconds});
      char line[64];
      std::snprintf(line, sizeof(line), "%d,%.6f\n", n, report.wallClockSeconds);
      csv += line;
      out << line;
    }
    writeFile(fs::path(args.outDir) / "bench.csv", csv);

    perf::ScalePattern pattern = perf::classifyScalability(measured);
    out << "classification=" << perf::toString(pattern) << "\n";

    perf::FitFixed fixed;
    fixed.s = config.modelS;
    fixed.d = config.modelD;
    fixed.w = config.modelW;
    fixed.nodes = config.modelNodes > 0 ? static_cast<std::uint32_t>(config.modelNodes) : 0;
    fixed.f = config.modelF;
    perf::FitResult fit = perf::fitParams(measured, fixed);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "fit: k=%.6f sigma=%.6f c1=%.6f g=%.6f theta1=%.6f residual=%.6f%s\n",
                  fit.params.k, fit.params.sigma, fit.params.c1, fit.params.g,
                  fit.params.theta1, fit.residualNorm,
                  fit.degenerate ? " (degenerate)" : "");
    out << line;
    return kExitOk;
  } catch (const perf::DomainError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const sim::DataLossError& e) {
    std::fprintf(stderr, "data loss: %s\n", e.what());
    return kExitDataLoss;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}

int runPredict(const Config& config, const GlobalArgs&, std::ostream& out) {
  try {
    perf::CostParams params = modelParamsFrom(config);
    params.validate();
    int maxN = std::max(1, config.modelMaxInstances);
    out << "n,Tn,Sn,En,P\n";
    int bestN = 1;
    double bestEn = -1.0;
    for (int n = 1; n <= maxN; ++n) {
      perf::ModelResult r = perf::evaluate(params, static_cast<std::uint32_t>(n));
      char line[160];
      std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f\n", n, r.tn, r.sn, r.en,
                    r.p);
      out << line;
      if (r.en > bestEn) {
        bestEn = r.en;
        bestN = n;
      }
    }
    out << "efficiency_max_n=" << bestN << "\n";
    return kExitOk;
  } catch (const perf::DomainError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
}

int runFit(const Config& config, const GlobalArgs&, const std::string& dataPath,
           std::ostream& out) {
  std::vector<perf::Measurement> measured;
  try {
    std::ifstream in(dataPath);
    if (!in) {
      throw ValidationError("cannot open data file '" + dataPath + "'");
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || !std::isdigit(static_cast<unsigned char>(line[0]))) {
        continue;  // header or blank
      }
      std::istringstream row(line);
      std::string nText, tnText;
      if (!std::getline(row, nText, ',') || !std::getline(row, tnText)) {
        throw ValidationError("bad measurement row: '" + line + "'");
      }
      measured.push_back({static_cast<std::uint32_t>(std::stoul(nText)), std::stod(tnText)});
    }
    if (measured.empty()) {
      throw ValidationError("no measurements in '" + dataPath + "'");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
  try {
    perf::FitFixed fixed;
    // T1 comes from the n=1 measurement when present, otherwise from config.
    bool hasN1 = std::any_of(measured.begin(), measured.end(),
                             [](const perf::Measurement& m) { return m.n == 1; });
    fixed.t1 = hasN1 ? 0.0 : config.modelT1;
    fixed.s = config.modelS;
    fixed.d = config.modelD;
    fixed.w = config.modelW;
    fixed.nodes = config.modelNodes > 0 ? static_cast<std::uint32_t>(config.modelNodes) : 0;
    fixed.f = config.modelF;
    perf::FitResult fit = perf::fitParams(measured, fixed);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "k=%.6f sigma=%.6f c1=%.6f g=%.6f theta1=%.6f t1=%.6f%s\n", fit.params.k,
                  fit.params.sigma, fit.params.c1, fit.params.g, fit.params.theta1,
                  fit.params.t1, fit.degenerate ? " degenerate=true" : "");
    out << line;
    out << "n,measured,predicted,relative_residual\n";
    for (std::size_t i = 0; i < measured.size(); ++i) {
      double pred = perf::predictTime(fit.params, measured[i].n);
      std::snprintf(line, sizeof(line), "%u,%.6f,%.6f,%.6f\n", measured[i].n,
                    measured[i].tn, pred, fit.relativeResiduals[i]);
      out << line;
    }
    return kExitOk;
  } catch (const perf::DomainError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  }
}

}  // namespace dgsim::cli
