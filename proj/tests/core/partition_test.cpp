#include "dgsim/partition.hpp"

#include <random>
#include <vector>

#include "doctest.h"

using namespace dgsim::part;

TEST_CASE("range start formula") {
  CHECK(partitionInit(400, 0, 2) == 0);
  CHECK(partitionInit(400, 1, 2) == 200);
  // ceil rounding can push trailing starts past the end; they clamp.
  CHECK(partitionInit(4, 2, 3) == 4);
}

TEST_CASE("range end formula") {
  CHECK(partitionFinal(400, 0, 2) == 200);
  CHECK(partitionFinal(10, 2, 3) == 10);
  CHECK(partitionFinal(10, 0, 1) == 10);
}

TEST_CASE("offset out of range is a domain error") {
  CHECK_THROWS_AS(partitionInit(10, 3, 3), DomainError);
  CHECK_THROWS_AS(partitionFinal(10, 5, 2), DomainError);
}

TEST_CASE("single member owns the whole space") {
  CHECK(partitionRange(1234, 0, 1) == PartitionRange{0, 1234});
}

namespace {

// Mark-every-index oracle for the tiling property.
bool tilesExactly(std::uint64_t total, std::uint32_t parallel) {
  std::vector<int> marks(total, 0);
  for (std::uint32_t o = 0; o < parallel; ++o) {
    auto r = partitionRange(total, o, parallel);
    if (r.init > r.final || r.final > total) {
      return false;
    }
    for (std::uint64_t i = r.init; i < r.final; ++i) {
      ++marks[i];
    }
  }
  for (int m : marks) {
    if (m != 1) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("ranges tile the id space exactly (marking oracle, small exhaustive)") {
  for (std::uint64_t total = 1; total <= 200; ++total) {
    for (std::uint32_t parallel = 1; parallel <= 8; ++parallel) {
      REQUIRE(tilesExactly(total, parallel));
    }
  }
}

TEST_CASE("ranges tile the id space exactly (marking oracle, random large)") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::uint64_t total = rng() % 10000 + 1;
    std::uint32_t parallel = static_cast<std::uint32_t>(rng() % 32) + 1;
    REQUIRE(tilesExactly(total, parallel));
  }
}

TEST_CASE("ranges are monotone in the offset") {
  for (std::uint32_t parallel = 1; parallel <= 16; ++parallel) {
    for (std::uint64_t total : {1, 7, 100, 271, 4096}) {
      for (std::uint32_t o = 0; o + 1 < parallel; ++o) {
        CHECK(partitionInit(total, o, parallel) <= partitionInit(total, o + 1, parallel));
        CHECK(partitionFinal(total, o, parallel) <= partitionFinal(total, o + 1, parallel));
      }
    }
  }
}

TEST_CASE("deployment list ranks live ordinals") {
  DeploymentList dl({0, 2, 5});
  CHECK(dl.count() == 3);
  CHECK(dl.offsetOf(0) == 0);
  CHECK(dl.offsetOf(2) == 1);
  CHECK(dl.offsetOf(5) == 2);
  CHECK_THROWS_AS(dl.offsetOf(1), DomainError);
}
