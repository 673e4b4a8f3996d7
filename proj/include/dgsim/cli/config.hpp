#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgsim::cli {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation settings in the properties-file format: one `key=value` per
/// line, `#` comments, a single layer of surrounding double quotes
/// stripped. Unknown keys warn and are otherwise carried through.
struct Config {
  int noOfUsers = 200;
  int noOfDatacenters = 15;
  int noOfHosts = 20;  // per datacenter
  int noOfVms = 200;
  int noOfCloudlets = 400;
  int simultaneousInstances = 1;
  int noOfExecutions = 2;  // join barrier: members required before the run
  bool withWorkload = false;
  int mapReduceSize = 100000;
  bool isVerbose = false;
  std::string loadFolder = "conf/mapreduce/load";
  int filesRead = 0;  // 0 reads all files
  double timeBetweenHealthChecks = 10.0;
  double highThresholdProcessCpuLoad = 0.15;
  double lowThresholdProcessCpuLoad = 0.02;
  int maxNumberOfInstancesToBeSpawned = 3;
  double timeBetweenScalingDecisions = 60.0;
  std::string scalingMode = "adaptive";  // auto | adaptive
  std::string scalingMetric = "processCpuLoad";
  std::string mainCluster = "main";
  std::string subCluster = "sub";

  // Engine knobs beyond the properties file's classic set.
  std::string scheduler = "roundRobin";  // roundRobin | matchmaking
  int backupCount = 0;
  double referenceSeconds = 2.0;
  double fairnessFactor = 2.0;
  std::uint64_t workloadItersPerMi = 3500;
  int partitionCount = 271;
  int workersPerMember = 1;

  // Cost-model parameters for the predict/fit subcommands.
  double modelK = 0.9;
  double modelT1 = 100.0;
  double modelS = 0.0;
  double modelD = 0.0;
  double modelW = 1.0;
  int modelNodes = 0;  // 0: physical nodes track the instance count
  double modelF = 0.0;
  double modelSigma = 0.0;
  double modelC1 = 0.0;
  double modelG = 0.0;
  double modelTheta1 = 0.0;
  int modelMaxInstances = 8;

  std::vector<std::string> unknownKeys;

  /// Properties-format dump; parsing it back yields an identical Config.
  std::string toProperties() const;
};

/// Parses a properties file and applies `key=value` overrides on top.
/// Overrides win over file values. A line without '=' is a parse error
/// reported with its line number.
Config parseConfig(const std::string& path, const std::vector<std::string>& overrides = {});

/// Parses properties text directly (used by parseConfig and tests).
Config parseConfigText(const std::string& text, const std::vector<std::string>& overrides = {});

/// Fail-fast validation for the cloud-simulation subcommands.
void validateCloudConfig(const Config& config);
/// Validation for the scaling subcommands.
void validateScalingConfig(const Config& config);

}  // namespace dgsim::cli
