#include "dgsim/cli/commands.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

using namespace dgsim::cli;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    static int counter = 0;
    dir = fs::temp_directory_path() /
          ("dgsim-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Config smallCloudConfig() {
  Config c;
  c.noOfUsers = 10;
  c.noOfDatacenters = 2;
  c.noOfHosts = 6;
  c.noOfVms = 16;
  c.noOfCloudlets = 40;
  c.noOfExecutions = 2;
  c.withWorkload = false;
  return c;
}

}  // namespace

TEST_CASE("run-cloud writes a report and a summary line") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  std::ostringstream out;
  int rc = runCloud(smallCloudConfig(), args, out);
  CHECK(rc == kExitOk);
  std::string report = slurp(tmp.dir / "report.csv");
  CHECK(report.rfind("cloudlet_id,vm_id,start_time,finish_time,checksum\n", 0) == 0);
  CHECK(out.str().find("members,wall_clock_s,scheduler,cloudlets,vms") !=
        std::string::npos);
  CHECK(out.str().find("2,") != std::string::npos);
}

TEST_CASE("run-cloud report is identical for one and four members") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c = smallCloudConfig();
  std::ostringstream out;
  c.noOfExecutions = 1;
  REQUIRE(runCloud(c, args, out) == kExitOk);
  std::string one = slurp(tmp.dir / "report.csv");
  c.noOfExecutions = 4;
  REQUIRE(runCloud(c, args, out) == kExitOk);
  std::string four = slurp(tmp.dir / "report.csv");
  CHECK(one == four);
}

TEST_CASE("run-cloud maps unrecovered data loss to exit 3") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c = smallCloudConfig();
  c.noOfExecutions = 3;
  c.backupCount = 0;
  dgsim::sim::SimulationHooks hooks;
  hooks.afterEntityCreation = [] { dgsim::cli::testing::currentCluster->kill(1); };
  dgsim::cli::testing::cloudRunHooks = &hooks;
  std::ostringstream out;
  int rc = runCloud(c, args, out);
  dgsim::cli::testing::cloudRunHooks = nullptr;
  CHECK(rc == kExitDataLoss);
}

TEST_CASE("run-cloud survives a member kill when backups are on") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c = smallCloudConfig();
  c.noOfExecutions = 3;
  c.backupCount = 1;
  dgsim::sim::SimulationHooks hooks;
  hooks.afterEntityCreation = [] { dgsim::cli::testing::currentCluster->kill(1); };
  dgsim::cli::testing::cloudRunHooks = &hooks;
  std::ostringstream out;
  int rc = runCloud(c, args, out);
  dgsim::cli::testing::cloudRunHooks = nullptr;
  CHECK(rc == kExitOk);
}

TEST_CASE("run-cloud rejects zero users with exit 2") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c = smallCloudConfig();
  c.noOfUsers = 0;
  std::ostringstream out;
  CHECK(runCloud(c, args, out) == kExitValidation);
}

TEST_CASE("run-mapreduce prints counters and writes counts") {
  TempDir tmp;
  TempDir corpus;
  std::ofstream(corpus.dir / "a.txt") << "alpha beta\nbeta gamma\n";
  std::ofstream(corpus.dir / "b.txt") << "gamma delta\n";
  std::ofstream(corpus.dir / "c.txt") << "epsilon\n";
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;
  c.loadFolder = corpus.dir.string();
  c.filesRead = 3;
  c.mapReduceSize = 100;
  c.noOfExecutions = 2;
  std::ostringstream out;
  CHECK(runMapReduceCmd(c, args, out) == kExitOk);
  CHECK(out.str().find("map_invocations=3") != std::string::npos);
  std::string counts = slurp(tmp.dir / "counts.csv");
  CHECK(counts.find("beta,2") != std::string::npos);
}

TEST_CASE("run-mapreduce on a missing folder exits 2") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;
  c.loadFolder = "/definitely/not/here";
  std::ostringstream out;
  CHECK(runMapReduceCmd(c, args, out) == kExitValidation);
}

TEST_CASE("scaling demo with a persistent 0.20 trace spawns exactly three workers") {
  TempDir tmp;
  fs::path trace = tmp.dir / "trace.txt";
  {
    std::ofstream out(trace);
    for (int i = 0; i < 60; ++i) {
      out << "0.20\n";
    }
  }
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;  // thresholds 0.15/0.02, max 3, adaptive
  std::ostringstream out;
  CHECK(runScalingDemo(c, args, trace.string(), out) == kExitOk);
  std::string log = slurp(tmp.dir / "scaling_events.csv");
  int spawnEvents = 0;
  std::istringstream lines(log);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find(",scale-out,") != std::string::npos) {
      ++spawnEvents;
    }
  }
  CHECK(spawnEvents == 3);
}

TEST_CASE("scaling demo scales back in on a low tail and floors at the master") {
  TempDir tmp;
  fs::path trace = tmp.dir / "trace.txt";
  {
    std::ofstream out(trace);
    for (int i = 0; i < 40; ++i) {
      out << "0.20\n";
    }
    for (int i = 0; i < 80; ++i) {
      out << "0.01\n";
    }
  }
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;
  std::ostringstream out;
  CHECK(runScalingDemo(c, args, trace.string(), out) == kExitOk);
  CHECK(out.str().find("final_members=1") != std::string::npos);
}

TEST_CASE("empty trace leaves no events and exits 0") {
  TempDir tmp;
  fs::path trace = tmp.dir / "trace.txt";
  std::ofstream(trace) << "";
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;
  std::ostringstream out;
  CHECK(runScalingDemo(c, args, trace.string(), out) == kExitOk);
  CHECK(out.str().find("events=0") != std::string::npos);
}

TEST_CASE("auto mode spawns locally without arbitration") {
  TempDir tmp;
  fs::path trace = tmp.dir / "trace.txt";
  {
    std::ofstream out(trace);
    for (int i = 0; i < 30; ++i) {
      out << "0.30\n";
    }
  }
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;
  c.scalingMode = "auto";
  std::ostringstream out;
  CHECK(runScalingDemo(c, args, trace.string(), out) == kExitOk);
  std::string log = slurp(tmp.dir / "scaling_events.csv");
  CHECK(log.find("scale-out,master") != std::string::npos);
  CHECK(out.str().find("final_members=4") != std::string::npos);  // master + 3
}

TEST_CASE("bad trace exits 2") {
  TempDir tmp;
  fs::path trace = tmp.dir / "trace.txt";
  std::ofstream(trace) << "0.2\nnot-a-number\n";
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c;
  std::ostringstream out;
  CHECK(runScalingDemo(c, args, trace.string(), out) == kExitValidation);
}

TEST_CASE("bench writes the sweep and classifies it") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c = smallCloudConfig();
  c.noOfExecutions = 3;
  std::ostringstream out;
  CHECK(runBenchSuite(c, args, out) == kExitOk);
  CHECK(out.str().find("classification=") != std::string::npos);
  CHECK(out.str().find("fit:") != std::string::npos);
  std::string csv = slurp(tmp.dir / "bench.csv");
  CHECK(csv.rfind("n,wall_clock_s\n", 0) == 0);
}

TEST_CASE("bench with a single member cannot classify and exits 2") {
  TempDir tmp;
  GlobalArgs args;
  args.outDir = tmp.dir.string();
  Config c = smallCloudConfig();
  c.noOfExecutions = 1;
  std::ostringstream out;
  CHECK(runBenchSuite(c, args, out) == kExitValidation);
}

TEST_CASE("predict prints the table and the efficiency-best n") {
  GlobalArgs args;
  Config c;
  c.modelK = 1.0;
  c.modelT1 = 10.0;
  c.modelMaxInstances = 4;
  std::ostringstream out;
  CHECK(runPredict(c, args, out) == kExitOk);
  std::string text = out.str();
  CHECK(text.find("n,Tn,Sn,En,P\n") != std::string::npos);
  CHECK(text.find("1,10.000000,1.000000,1.000000,0.000000") != std::string::npos);
  CHECK(text.find("2,5.000000,2.000000,1.000000") != std::string::npos);
  CHECK(text.find("efficiency_max_n=") != std::string::npos);
}

TEST_CASE("fit reads measurements and reports residuals") {
  TempDir tmp;
  fs::path data = tmp.dir / "meas.csv";
  std::ofstream(data) << "n,Tn\n1,100.0\n2,52.0\n4,28.0\n8,16.0\n";
  GlobalArgs args;
  Config c;
  std::ostringstream out;
  CHECK(runFit(c, args, data.string(), out) == kExitOk);
  CHECK(out.str().find("k=") != std::string::npos);
  CHECK(out.str().find("relative_residual") != std::string::npos);
}

TEST_CASE("fit with an unreadable file exits 2") {
  GlobalArgs args;
  Config c;
  std::ostringstream out;
  CHECK(runFit(c, args, "/no/such/file.csv", out) == kExitValidation);
}

#ifdef DGSIM_BINARY
TEST_CASE("two OS processes complete a cloud run over tcp") {
  TempDir tmp;
  std::string endpoints = "127.0.0.1:39240,127.0.0.1:39241";
  std::string common = std::string(DGSIM_BINARY) +
                       " --set noOfUsers=10 --set noOfDatacenters=2 --set noOfHosts=6"
                       " --set noOfVms=12 --set noOfCloudlets=24 --set noOfExecutions=2"
                       " --tcp " + endpoints + " --out " + tmp.dir.string() +
                       " run-cloud";
  // The first process to bind the seed endpoint drives; start the worker
  // in the background and the driver in the foreground.
  std::string worker = common + " > " + (tmp.dir / "worker.log").string() + " 2>&1 &";
  REQUIRE(std::system(worker.c_str()) == 0);
  int rc = std::system((common + " > " + (tmp.dir / "driver.log").string() + " 2>&1").c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  // One of the two became the driver and wrote the report.
  std::string report = slurp(tmp.dir / "report.csv");
  CHECK(report.rfind("cloudlet_id,", 0) == 0);
  std::string summary = slurp(tmp.dir / "driver.log") + slurp(tmp.dir / "worker.log");
  CHECK(summary.find("members,wall_clock_s,scheduler,cloudlets,vms") != std::string::npos);
}
#endif
