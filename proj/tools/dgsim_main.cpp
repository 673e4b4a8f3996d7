#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dgsim/cli/commands.hpp"
#include "dgsim/cli/config.hpp"

namespace {

std::vector<std::string> splitEndpoints(const std::string& list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string::npos) {
      if (start < list.size()) {
        out.push_back(list.substr(start));
      }
      break;
    }
    if (comma > start) {
      out.push_back(list.substr(start, comma - start));
    }
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed cloud and MapReduce simulation framework"};
  app.require_subcommand(1);

  std::string configPath;
  std::vector<std::string> sets;
  std::string tcpList;
  dgsim::cli::GlobalArgs global;

  app.add_option("--config", configPath, "Properties configuration file");
  app.add_option("--set", sets, "Override, key=value (repeatable)")->take_all();
  app.add_option("--tcp", tcpList, "Static endpoint list host:port,... for multi-process runs");
  app.add_option("--seed", global.seed, "Seed for randomized harness utilities");
  app.add_option("--out", global.outDir, "Directory for CSV outputs");

  auto* cloud = app.add_subcommand("run-cloud", "Run the cloud scheduling simulation");
  auto* mapreduce = app.add_subcommand("run-mapreduce", "Run the word-count MapReduce job");
  auto* scaling = app.add_subcommand("run-scaling-demo",
                                     "Drive the elastic scaler with a health trace");
  std::string tracePath;
  scaling->add_option("--trace", tracePath, "Health trace file, one load per line")
      ->required();
  auto* bench = app.add_subcommand("bench", "Sweep member counts and classify scalability");
  auto* predict = app.add_subcommand("predict", "Print the cost-model table");
  auto* fit = app.add_subcommand("fit", "Fit the cost model to n,Tn measurements");
  std::string dataPath;
  fit->add_option("--data", dataPath, "CSV of n,Tn measurements")->required();

  CLI11_PARSE(app, argc, argv);

  dgsim::cli::Config config;
  try {
    if (!configPath.empty()) {
      config = dgsim::cli::parseConfig(configPath, sets);
    } else {
      config = dgsim::cli::parseConfigText("", sets);
    }
  } catch (const dgsim::cli::ParseError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return dgsim::cli::kExitValidation;
  }
  global.tcpEndpoints = splitEndpoints(tcpList);

  if (cloud->parsed()) {
    return dgsim::cli::runCloud(config, global, std::cout);
  }
  if (mapreduce->parsed()) {
    return dgsim::cli::runMapReduceCmd(config, global, std::cout);
  }
  if (scaling->parsed()) {
    return dgsim::cli::runScalingDemo(config, global, tracePath, std::cout);
  }
  if (bench->parsed()) {
    return dgsim::cli::runBenchSuite(config, global, std::cout);
  }
  if (predict->parsed()) {
    return dgsim::cli::runPredict(config, global, std::cout);
  }
  if (fit->parsed()) {
    return dgsim::cli::runFit(config, global, dataPath, std::cout);
  }
  return dgsim::cli::kExitError;
}
