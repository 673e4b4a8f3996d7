#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dgsim::part {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Contiguous id slice [init, final) of an entity space owned by one member.
struct PartitionRange {
  std::uint64_t init = 0;    // inclusive
  std::uint64_t final = 0;   // exclusive

  std::uint64_t size() const { return final - init; }
  bool empty() const { return init == final; }
  bool operator==(const PartitionRange&) const = default;
};

/// First id of the slice for the member at `offset` out of `parallelCount`
/// members: offset * ceil(totalEntities / parallelCount), clamped to
/// totalEntities so trailing slices come out empty instead of inverted.
///
/// Throws DomainError when offset >= parallelCount.
std::uint64_t partitionInit(std::uint64_t totalEntities, std::uint32_t offset,
                            std::uint32_t parallelCount);

/// One-past-last id of the slice: min(totalEntities,
/// (offset + 1) * ceil(totalEntities / parallelCount)).
std::uint64_t partitionFinal(std::uint64_t totalEntities, std::uint32_t offset,
                             std::uint32_t parallelCount);

PartitionRange partitionRange(std::uint64_t totalEntities, std::uint32_t offset,
                              std::uint32_t parallelCount);

/// Member offsets derived from join order: the member with the k-th
/// smallest ordinal among the live members gets offset k. Offsets always
/// form a permutation of 0..count-1, even after departures left gaps in
/// the ordinal sequence.
class DeploymentList {
 public:
  DeploymentList() = default;
  explicit DeploymentList(std::vector<std::uint32_t> liveOrdinalsSorted);

  std::uint32_t offsetOf(std::uint32_t ordinal) const;
  std::uint32_t count() const { return static_cast<std::uint32_t>(ordinals_.size()); }
  const std::vector<std::uint32_t>& ordinals() const { return ordinals_; }

 private:
  std::vector<std::uint32_t> ordinals_;
};

}  // namespace dgsim::part
