#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dgsim/grid/fabric.hpp"

namespace dgsim::mr {

class MrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MRJobSpec {
  std::string loadFolder;
  int filesRead = 0;       // 0: all files, lexicographic filename order
  int mapReduceSize = 1;   // line limit per file
  bool verbose = false;
};

struct Document {
  std::string name;
  std::vector<std::string> lines;
};

struct MRResult {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t mapInvocations = 0;     // one per document processed
  std::uint64_t reduceInvocations = 0;  // one per distinct word
  double elapsedSeconds = 0.0;

  /// CSV `word,count`, sorted by word, for oracle diffing.
  std::string toCsv() const;
};

/// Splits on whitespace, folds to lowercase, trims non-alphanumeric edges.
/// Both the engine and the sequential oracle share this definition.
std::vector<std::string> tokenize(const std::string& line);

/// Reads the first `filesRead` files of the folder (all when 0), each
/// truncated to `mapReduceSize` lines. Unreadable files are skipped with a
/// warning; a missing folder is a configuration error.
std::vector<Document> loadCorpus(const MRJobSpec& spec);

/// Single-pass sequential word count over already-loaded documents. This is
/// the oracle the distributed engine is checked against.
MRResult sequentialWordCount(const std::vector<Document>& documents);

/// Distributed word count: map tasks spread round-robin over the members
/// that were live at job start (late joiners neither crash the job nor
/// change its result), per-member combining, then one reduce invocation per
/// distinct word on the driver.
MRResult runMapReduce(const MRJobSpec& spec, grid::Fabric& cluster);
MRResult runMapReduce(const std::vector<Document>& documents, grid::Fabric& cluster,
                      bool verbose = false);

/// Registers the map-task handler; call once per cluster.
void registerMapReduceTasks(grid::TaskRegistry& registry);

struct CurvePoint {
  int size = 0;
  std::uint64_t mapInvocations = 0;
  std::uint64_t reduceInvocations = 0;
  double elapsedSeconds = 0.0;
};

/// Runs the job at each line limit in `sizes` (nondecreasing) and tabulates
/// the invocation counts.
std::vector<CurvePoint> invocationCurve(const MRJobSpec& specTemplate,
                                        const std::vector<int>& sizes,
                                        grid::Fabric& cluster);

}  // namespace dgsim::mr
