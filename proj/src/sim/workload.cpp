#include "dgsim/sim/workload.hpp"

#include <bit>
#include <cmath>

namespace dgsim::sim {

WorkloadOutcome runCloudletWorkload(const Cloudlet& cloudlet, std::uint64_t itersPerMi) {
  if (!cloudlet.withWorkload) {
    throw std::invalid_argument("cloudlet has no workload attached");
  }
  if (cloudlet.lengthMi <= 0.0) {
    throw std::invalid_argument("cloudlet length must be positive");
  }
  WorkloadOutcome out;
  out.iterations =
      static_cast<std::uint64_t>(std::llround(cloudlet.lengthMi * static_cast<double>(itersPerMi)));
  std::uint64_t x = 0x9E3779B97F4A7C15ULL ^
                    (static_cast<std::uint64_t>(cloudlet.id) * 0xBF58476D1CE4E5B9ULL);
  for (std::uint64_t i = 0; i < out.iterations; ++i) {
    x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    x ^= std::rotl(x, 23);
  }
  out.checksum = static_cast<std::int64_t>(x);
  return out;
}

}  // namespace dgsim::sim
