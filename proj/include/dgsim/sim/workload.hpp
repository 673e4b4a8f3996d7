#pragma once

#include <cstdint>
#include <stdexcept>

#include "dgsim/sim/entities.hpp"

namespace dgsim::sim {

struct WorkloadOutcome {
  std::int64_t checksum = 0;
  std::uint64_t iterations = 0;
};

/// Deterministic CPU-bound kernel standing in for a cloudlet's work: an
/// integer polynomial-and-rotate loop seeded from the cloudlet id, with
/// the iteration count proportional to lengthMi. Integer-only so the
/// checksum is identical across platforms, members and runs.
WorkloadOutcome runCloudletWorkload(const Cloudlet& cloudlet,
                                    std::uint64_t itersPerMi);

}  // namespace dgsim::sim
