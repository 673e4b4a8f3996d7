#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dgsim/cli/config.hpp"
#include "dgsim/grid/local_cluster.hpp"
#include "dgsim/sim/simulation.hpp"

namespace dgsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDataLoss = 3;

struct GlobalArgs {
  std::vector<std::string> tcpEndpoints;  // empty: in-process members
  std::uint64_t seed = 0;                 // reserved for randomized harnesses
  std::string outDir = ".";
};

/// Runs the cloud simulation end to end on `noOfExecutions` members and
/// writes report.csv plus a run-summary line
/// `members,wall_clock_s,scheduler,cloudlets,vms`.
int runCloud(const Config& config, const GlobalArgs& args, std::ostream& out);

/// Word-count job over the configured load folder; prints
/// `map_invocations=.. reduce_invocations=.. elapsed_s=..` and writes
/// counts.csv.
int runMapReduceCmd(const Config& config, const GlobalArgs& args, std::ostream& out);

/// Drives the elastic control plane with a scripted health trace on a
/// virtual clock and writes scaling_events.csv.
int runScalingDemo(const Config& config, const GlobalArgs& args,
                   const std::string& tracePath, std::ostream& out);

/// Sweeps member counts 1..noOfExecutions, writes bench.csv, classifies the
/// scalability pattern and prints the fitted cost parameters.
int runBenchSuite(const Config& config, const GlobalArgs& args, std::ostream& out);

/// Prints the model table `n,Tn,Sn,En,P` for the configured parameters.
int runPredict(const Config& config, const GlobalArgs& args, std::ostream& out);

/// Fits the cost model to a CSV of `n,Tn` measurements.
int runFit(const Config& config, const GlobalArgs& args, const std::string& dataPath,
           std::ostream& out);

namespace testing {
/// Fault-injection seam for integration tests: when set, in-process cloud
/// runs receive these hooks (there is no CLI surface for killing members).
extern const sim::SimulationHooks* cloudRunHooks;
/// The in-process cluster of the current run, for hook bodies.
extern grid::LocalCluster* currentCluster;
}  // namespace testing

}  // namespace dgsim::cli
