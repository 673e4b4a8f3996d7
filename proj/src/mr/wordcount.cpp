#include "dgsim/mr/wordcount.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <fstream>

namespace dgsim::mr {

namespace fs = std::filesystem;

namespace {
constexpr std::uint8_t kTagMapReq = 50;
constexpr std::uint8_t kTagMapResp = 51;
constexpr const char* kMapTask = "mr/map-documents";
}  // namespace

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    if (start == i) {
      continue;
    }
    std::size_t lo = start;
    std::size_t hi = i;  // exclusive
    while (lo < hi && !std::isalnum(static_cast<unsigned char>(line[lo]))) {
      ++lo;
    }
    while (hi > lo && !std::isalnum(static_cast<unsigned char>(line[hi - 1]))) {
      --hi;
    }
    if (lo == hi) {
      continue;
    }
    std::string word;
    word.reserve(hi - lo);
    for (std::size_t j = lo; j < hi; ++j) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(line[j]))));
    }
    words.push_back(std::move(word));
  }
  return words;
}

std::vector<Document> loadCorpus(const MRJobSpec& spec) {
  if (spec.mapReduceSize < 1) {
    throw MrError("mapReduceSize must be at least 1");
  }
  if (!fs::is_directory(spec.loadFolder)) {
    throw MrError("load folder '" + spec.loadFolder + "' does not exist");
  }
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(spec.loadFolder)) {
    if (entry.is_regular_file()) {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  if (spec.filesRead > 0 && static_cast<std::size_t>(spec.filesRead) < paths.size()) {
    paths.resize(spec.filesRead);
  }
  std::vector<Document> docs;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) {
      std::fprintf(stderr, "warning: skipping unreadable file %s\n", path.c_str());
      continue;
    }
    Document doc;
    doc.name = path.filename().string();
    std::string line;
    while (static_cast<int>(doc.lines.size()) < spec.mapReduceSize && std::getline(in, line)) {
      doc.lines.push_back(line);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

MRResult sequentialWordCount(const std::vector<Document>& documents) {
  MRResult result;
  for (const auto& doc : documents) {
    ++result.mapInvocations;
    for (const auto& line : doc.lines) {
      for (auto& word : tokenize(line)) {
        ++result.counts[word];
      }
    }
  }
  result.reduceInvocations = result.counts.size();
  return result;
}

namespace {

Bytes encodeDocuments(const std::vector<const Document*>& docs, bool verbose) {
  Writer w = recordWriter(kTagMapReq);
  w.boolean(verbose);
  w.u32(static_cast<std::uint32_t>(docs.size()));
  for (const Document* doc : docs) {
    w.str(doc->name);
    w.u32(static_cast<std::uint32_t>(doc->lines.size()));
    for (const auto& line : doc->lines) {
      w.str(line);
    }
  }
  return w.take();
}

// Map + per-member combine: counts every document in the payload and
// returns the combined partial counts.
Bytes mapDocumentsHandler(grid::TaskContext& ctx, const Bytes& payload) {
  Reader r = recordReader(payload, kTagMapReq);
  bool verbose = r.boolean();
  std::uint32_t docCount = r.u32();
  std::map<std::string, std::uint64_t> combined;
  std::uint64_t mapped = 0;
  for (std::uint32_t d = 0; d < docCount; ++d) {
    std::string name = r.str();
    std::uint32_t lineCount = r.u32();
    ++mapped;
    for (std::uint32_t i = 0; i < lineCount; ++i) {
      for (auto& word : tokenize(r.str())) {
        ++combined[word];
      }
    }
    if (verbose) {
      std::fprintf(stderr, "[member %u] mapped %s (%u lines)\n",
                   ctx.self.self().ordinal, name.c_str(), lineCount);
    }
  }
  Writer w = recordWriter(kTagMapResp);
  w.u64(mapped);
  w.u32(static_cast<std::uint32_t>(combined.size()));
  for (const auto& [word, count] : combined) {
    w.str(word);
    w.u64(count);
  }
  return w.take();
}

}  // namespace

void registerMapReduceTasks(grid::TaskRegistry& registry) {
  registry.add(kMapTask, mapDocumentsHandler);
}

MRResult runMapReduce(const std::vector<Document>& documents, grid::Fabric& cluster,
                      bool verbose) {
  auto startedAt = std::chrono::steady_clock::now();
  MRResult result;

  // Membership snapshot at job start; documents go round-robin so the
  // per-member task counts differ by at most one.
  std::vector<grid::MemberId> members = cluster.members();
  if (members.empty()) {
    throw MrError("cluster has no live members");
  }
  std::vector<std::vector<const Document*>> perMember(members.size());
  for (std::size_t i = 0; i < documents.size(); ++i) {
    perMember[i % members.size()].push_back(&documents[i]);
  }

  std::vector<std::future<std::vector<grid::TaskResult>>> inFlight;
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (perMember[m].empty()) {
      continue;
    }
    grid::TaskEnvelope envelope = grid::TaskEnvelope::onMember(
        kMapTask, encodeDocuments(perMember[m], verbose), members[m].ordinal);
    inFlight.push_back(std::async(std::launch::async, [&cluster, envelope] {
      return cluster.execute(envelope);
    }));
  }

  std::vector<std::map<std::string, std::uint64_t>> partials;
  for (auto& f : inFlight) {
    const grid::TaskResult r = f.get().at(0);
    if (!r.ok) {
      throw MrError("map task failed on member " + std::to_string(r.ordinal) + ": " +
                    r.error);
    }
    Reader reader = recordReader(r.value, kTagMapResp);
    result.mapInvocations += reader.u64();
    std::uint32_t words = reader.u32();
    std::map<std::string, std::uint64_t> partial;
    for (std::uint32_t i = 0; i < words; ++i) {
      std::string word = reader.str();
      partial[word] = reader.u64();
    }
    partials.push_back(std::move(partial));
  }

  // Reduce phase: one invocation per distinct word, summing the partials.
  std::map<std::string, std::vector<std::uint64_t>> byWord;
  for (const auto& partial : partials) {
    for (const auto& [word, count] : partial) {
      byWord[word].push_back(count);
    }
  }
  auto reduceWord = [](const std::vector<std::uint64_t>& counts) {
    std::uint64_t total = 0;
    for (std::uint64_t c : counts) {
      total += c;
    }
    return total;
  };
  for (const auto& [word, counts] : byWord) {
    result.counts[word] = reduceWord(counts);
    ++result.reduceInvocations;
  }

  result.elapsedSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - startedAt).count();
  return result;
}

MRResult runMapReduce(const MRJobSpec& spec, grid::Fabric& cluster) {
  return runMapReduce(loadCorpus(spec), cluster, spec.verbose);
}

std::vector<CurvePoint> invocationCurve(const MRJobSpec& specTemplate,
                                        const std::vector<int>& sizes,
                                        grid::Fabric& cluster) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] < sizes[i - 1]) {
      throw MrError("sizes must be nondecreasing");
    }
  }
  std::vector<CurvePoint> curve;
  for (int size : sizes) {
    MRJobSpec spec = specTemplate;
    spec.mapReduceSize = size;
    MRResult r = runMapReduce(spec, cluster);
    curve.push_back({size, r.mapInvocations, r.reduceInvocations, r.elapsedSeconds});
  }
  return curve;
}

std::string MRResult::toCsv() const {
  std::string out = "word,count\n";
  for (const auto& [word, count] : counts) {
    out += word;
    out += ",";
    out += std::to_string(count);
    out += "\n";
  }
  return out;
}

}  // namespace dgsim::mr
