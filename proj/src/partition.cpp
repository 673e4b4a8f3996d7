#include "dgsim/partition.hpp"

#include <algorithm>

namespace dgsim::part {

namespace {
std::uint64_t ceilDiv(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

void checkOffset(std::uint32_t offset, std::uint32_t parallelCount) {
  if (parallelCount == 0) {
    throw DomainError("parallelCount must be positive");
  }
  if (offset >= parallelCount) {
    throw DomainError("offset " + std::to_string(offset) +
                      " out of range for parallelCount " + std::to_string(parallelCount));
  }
}
}  // namespace

std::uint64_t partitionInit(std::uint64_t totalEntities, std::uint32_t offset,
                            std::uint32_t parallelCount) {
  checkOffset(offset, parallelCount);
  std::uint64_t step = ceilDiv(totalEntities, parallelCount);
  return std::min<std::uint64_t>(totalEntities, offset * step);
}

std::uint64_t partitionFinal(std::uint64_t totalEntities, std::uint32_t offset,
                             std::uint32_t parallelCount) {
  checkOffset(offset, parallelCount);
  std::uint64_t step = ceilDiv(totalEntities, parallelCount);
  return std::min<std::uint64_t>(totalEntities, (offset + std::uint64_t{1}) * step);
}

PartitionRange partitionRange(std::uint64_t totalEntities, std::uint32_t offset,
                              std::uint32_t parallelCount) {
  return {partitionInit(totalEntities, offset, parallelCount),
          partitionFinal(totalEntities, offset, parallelCount)};
}

DeploymentList::DeploymentList(std::vector<std::uint32_t> liveOrdinalsSorted)
    : ordinals_(std::move(liveOrdinalsSorted)) {
  std::sort(ordinals_.begin(), ordinals_.end());
}

std::uint32_t DeploymentList::offsetOf(std::uint32_t ordinal) const {
  auto it = std::lower_bound(ordinals_.begin(), ordinals_.end(), ordinal);
  if (it == ordinals_.end() || *it != ordinal) {
    throw DomainError("ordinal " + std::to_string(ordinal) + " is not a live member");
  }
  return static_cast<std::uint32_t>(it - ordinals_.begin());
}

}  // namespace dgsim::part
