#include "dgsim/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dgsim::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

int parseInt(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ParseError("value for '" + key + "' is not an integer: '" + value + "'");
  }
}

double parseDouble(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ParseError("value for '" + key + "' is not a number: '" + value + "'");
  }
}

bool parseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("value for '" + key + "' is not a boolean: '" + value + "'");
}

std::uint64_t parseU64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ParseError("value for '" + key + "' is not an unsigned integer: '" + value + "'");
  }
}

void applyKeyValue(Config& config, const std::string& key, const std::string& rawValue) {
  const std::string value = unquote(rawValue);
  static const std::map<std::string, std::function<void(Config&, const std::string&,
                                                        const std::string&)>>
      setters = {
          {"noOfUsers", [](Config& c, auto& k, auto& v) { c.noOfUsers = parseInt(k, v); }},
          {"noOfDatacenters",
           [](Config& c, auto& k, auto& v) { c.noOfDatacenters = parseInt(k, v); }},
          {"noOfHosts", [](Config& c, auto& k, auto& v) { c.noOfHosts = parseInt(k, v); }},
          {"noOfVms", [](Config& c, auto& k, auto& v) { c.noOfVms = parseInt(k, v); }},
          {"noOfCloudlets",
           [](Config& c, auto& k, auto& v) { c.noOfCloudlets = parseInt(k, v); }},
          {"simultaneousInstances",
           [](Config& c, auto& k, auto& v) { c.simultaneousInstances = parseInt(k, v); }},
          {"noOfExecutions",
           [](Config& c, auto& k, auto& v) { c.noOfExecutions = parseInt(k, v); }},
          {"withWorkload",
           [](Config& c, auto& k, auto& v) { c.withWorkload = parseBool(k, v); }},
          {"mapReduceSize",
           [](Config& c, auto& k, auto& v) { c.mapReduceSize = parseInt(k, v); }},
          {"isVerbose", [](Config& c, auto& k, auto& v) { c.isVerbose = parseBool(k, v); }},
          {"loadFolder", [](Config& c, auto&, auto& v) { c.loadFolder = v; }},
          {"filesRead", [](Config& c, auto& k, auto& v) { c.filesRead = parseInt(k, v); }},
          {"timeBetweenHealthChecks",
           [](Config& c, auto& k, auto& v) { c.timeBetweenHealthChecks = parseDouble(k, v); }},
          {"highThresholdProcessCpuLoad",
           [](Config& c, auto& k, auto& v) {
             c.highThresholdProcessCpuLoad = parseDouble(k, v);
           }},
          {"lowThresholdProcessCpuLoad",
           [](Config& c, auto& k, auto& v) {
             c.lowThresholdProcessCpuLoad = parseDouble(k, v);
           }},
          {"maxNumberOfInstancesToBeSpawned",
           [](Config& c, auto& k, auto& v) {
             c.maxNumberOfInstancesToBeSpawned = parseInt(k, v);
           }},
          {"timeBetweenScalingDecisions",
           [](Config& c, auto& k, auto& v) {
             c.timeBetweenScalingDecisions = parseDouble(k, v);
           }},
          {"scalingMode", [](Config& c, auto&, auto& v) { c.scalingMode = v; }},
          {"scalingMetric", [](Config& c, auto&, auto& v) { c.scalingMetric = v; }},
          {"mainCluster", [](Config& c, auto&, auto& v) { c.mainCluster = v; }},
          {"subCluster", [](Config& c, auto&, auto& v) { c.subCluster = v; }},
          {"scheduler", [](Config& c, auto&, auto& v) { c.scheduler = v; }},
          {"backupCount",
           [](Config& c, auto& k, auto& v) { c.backupCount = parseInt(k, v); }},
          {"referenceSeconds",
           [](Config& c, auto& k, auto& v) { c.referenceSeconds = parseDouble(k, v); }},
          {"fairnessFactor",
           [](Config& c, auto& k, auto& v) { c.fairnessFactor = parseDouble(k, v); }},
          {"workloadItersPerMi",
           [](Config& c, auto& k, auto& v) { c.workloadItersPerMi = parseU64(k, v); }},
          {"partitionCount",
           [](Config& c, auto& k, auto& v) { c.partitionCount = parseInt(k, v); }},
          {"workersPerMember",
           [](Config& c, auto& k, auto& v) { c.workersPerMember = parseInt(k, v); }},
          {"modelK", [](Config& c, auto& k, auto& v) { c.modelK = parseDouble(k, v); }},
          {"modelT1", [](Config& c, auto& k, auto& v) { c.modelT1 = parseDouble(k, v); }},
          {"modelS", [](Config& c, auto& k, auto& v) { c.modelS = parseDouble(k, v); }},
          {"modelD", [](Config& c, auto& k, auto& v) { c.modelD = parseDouble(k, v); }},
          {"modelW", [](Config& c, auto& k, auto& v) { c.modelW = parseDouble(k, v); }},
          {"modelNodes", [](Config& c, auto& k, auto& v) { c.modelNodes = parseInt(k, v); }},
          {"modelF", [](Config& c, auto& k, auto& v) { c.modelF = parseDouble(k, v); }},
          {"modelSigma",
           [](Config& c, auto& k, auto& v) { c.modelSigma = parseDouble(k, v); }},
          {"modelC1", [](Config& c, auto& k, auto& v) { c.modelC1 = parseDouble(k, v); }},
          {"modelG", [](Config& c, auto& k, auto& v) { c.modelG = parseDouble(k, v); }},
          {"modelTheta1",
           [](Config& c, auto& k, auto& v) { c.modelTheta1 = parseDouble(k, v); }},
          {"modelMaxInstances",
           [](Config& c, auto& k, auto& v) { c.modelMaxInstances = parseInt(k, v); }},
      };
  auto it = setters.find(key);
  if (it == setters.end()) {
    std::fprintf(stderr, "warning: unknown configuration key '%s'\n", key.c_str());
    config.unknownKeys.push_back(key);
    return;
  }
  it->second(config, key, value);
}

}  // namespace

Config parseConfigText(const std::string& text, const std::vector<std::string>& overrides) {
  Config config;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineNo) + ": expected key=value, got '" +
                       t + "'");
    }
    applyKeyValue(config, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  for (const auto& o : overrides) {
    std::size_t eq = o.find('=');
    if (eq == std::string::npos) {
      throw ParseError("override '" + o + "' is not key=value");
    }
    applyKeyValue(config, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return config;
}

Config parseConfig(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open configuration file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseConfigText(buf.str(), overrides);
}

std::string Config::toProperties() const {
  std::ostringstream out;
  out << "noOfUsers=" << noOfUsers << "\n";
  out << "noOfDatacenters=" << noOfDatacenters << "\n";
  out << "noOfHosts=" << noOfHosts << "\n";
  out << "noOfVms=" << noOfVms << "\n";
  out << "noOfCloudlets=" << noOfCloudlets << "\n";
  out << "simultaneousInstances=" << simultaneousInstances << "\n";
  out << "noOfExecutions=" << noOfExecutions << "\n";
  out << "withWorkload=" << (withWorkload ? "true" : "false") << "\n";
  out << "mapReduceSize=" << mapReduceSize << "\n";
  out << "isVerbose=" << (isVerbose ? "true" : "false") << "\n";
  out << "loadFolder=" << loadFolder << "\n";
  out << "filesRead=" << filesRead << "\n";
  out << "timeBetweenHealthChecks=" << timeBetweenHealthChecks << "\n";
  out << "highThresholdProcessCpuLoad=" << highThresholdProcessCpuLoad << "\n";
  out << "lowThresholdProcessCpuLoad=" << lowThresholdProcessCpuLoad << "\n";
  out << "maxNumberOfInstancesToBeSpawned=" << maxNumberOfInstancesToBeSpawned << "\n";
  out << "timeBetweenScalingDecisions=" << timeBetweenScalingDecisions << "\n";
  out << "scalingMode=" << scalingMode << "\n";
  out << "scalingMetric=" << scalingMetric << "\n";
  out << "mainCluster=" << mainCluster << "\n";
  out << "subCluster=" << subCluster << "\n";
  out << "scheduler=" << scheduler << "\n";
  out << "backupCount=" << backupCount << "\n";
  out << "referenceSeconds=" << referenceSeconds << "\n";
  out << "fairnessFactor=" << fairnessFactor << "\n";
  out << "workloadItersPerMi=" << workloadItersPerMi << "\n";
  out << "partitionCount=" << partitionCount << "\n";
  out << "workersPerMember=" << workersPerMember << "\n";
  out << "modelK=" << modelK << "\n";
  out << "modelT1=" << modelT1 << "\n";
  out << "modelS=" << modelS << "\n";
  out << "modelD=" << modelD << "\n";
  out << "modelW=" << modelW << "\n";
  out << "modelNodes=" << modelNodes << "\n";
  out << "modelF=" << modelF << "\n";
  out << "modelSigma=" << modelSigma << "\n";
  out << "modelC1=" << modelC1 << "\n";
  out << "modelG=" << modelG << "\n";
  out << "modelTheta1=" << modelTheta1 << "\n";
  out << "modelMaxInstances=" << modelMaxInstances << "\n";
  return out.str();
}

void validateCloudConfig(const Config& config) {
  if (config.noOfUsers < 1) {
    throw ValidationError("noOfUsers must be at least 1");
  }
  if (config.noOfDatacenters < 1 || config.noOfHosts < 1) {
    throw ValidationError("datacenter and host counts must be positive");
  }
  if (config.noOfVms < 1 || config.noOfCloudlets < 1) {
    throw ValidationError("noOfVms and noOfCloudlets must be positive");
  }
  if (config.noOfExecutions < 1) {
    throw ValidationError("noOfExecutions must be at least 1");
  }
  if (config.scheduler != "roundRobin" && config.scheduler != "matchmaking") {
    throw ValidationError("scheduler must be roundRobin or matchmaking");
  }
  if (config.backupCount < 0 || config.backupCount > 1) {
    throw ValidationError("backupCount must be 0 or 1");
  }
  if (config.mainCluster.empty()) {
    throw ValidationError("mainCluster must be nonempty");
  }
  if (config.referenceSeconds <= 0.0 || config.fairnessFactor < 1.0) {
    throw ValidationError("referenceSeconds must be positive and fairnessFactor >= 1");
  }
  if (config.partitionCount < 1 || config.workersPerMember < 1) {
    throw ValidationError("partitionCount and workersPerMember must be positive");
  }
}

void validateScalingConfig(const Config& config) {
  if (config.scalingMode != "auto" && config.scalingMode != "adaptive") {
    throw ValidationError("scalingMode must be auto or adaptive");
  }
  if (config.lowThresholdProcessCpuLoad >= config.highThresholdProcessCpuLoad) {
    throw ValidationError("low threshold must stay below the high threshold");
  }
  if (config.maxNumberOfInstancesToBeSpawned < 1) {
    throw ValidationError("maxNumberOfInstancesToBeSpawned must be at least 1");
  }
  if (config.timeBetweenHealthChecks <= 0.0 || config.timeBetweenScalingDecisions <= 0.0) {
    throw ValidationError("scaling intervals must be positive");
  }
  if (config.subCluster.empty()) {
    throw ValidationError("subCluster must be nonempty");
  }
}

}  // namespace dgsim::cli
