#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dgsim/grid/fabric.hpp"

namespace dgsim::grid {

inline constexpr std::uint32_t kDefaultPartitionCount = 271;

/// Assignment of partition indexes to member ordinals. Rebalancing moves
/// only the partitions of departed members plus the minimal set needed to
/// keep per-member counts within one of each other.
class PartitionTable {
 public:
  explicit PartitionTable(std::uint32_t partitionCount = kDefaultPartitionCount);

  std::uint32_t partitionCount() const { return static_cast<std::uint32_t>(owner_.size()); }
  std::uint32_t partitionOf(std::span<const std::uint8_t> key) const;
  std::uint32_t ownerOf(std::uint32_t partition) const { return owner_[partition]; }
  const std::vector<std::uint32_t>& assignment() const { return owner_; }

  bool empty() const { return members_.empty(); }
  const std::vector<std::uint32_t>& members() const { return members_; }
  std::size_t countOwnedBy(std::uint32_t ordinal) const;

  void addMember(std::uint32_t ordinal);
  void removeMember(std::uint32_t ordinal);

  /// Replaces the assignment wholesale (used when adopting a snapshot from
  /// another member; the minimal-move history is not replayable).
  void overwriteAssignment(const std::vector<std::uint32_t>& assignment);

  /// Backup placement: the next live ordinal after the owner, wrapping
  /// around; none when the cluster has a single member.
  std::int64_t backupOf(std::uint32_t partition) const;

 private:
  std::vector<std::uint32_t> owner_;    // partition -> ordinal
  std::vector<std::uint32_t> members_;  // live ordinals, sorted
};

}  // namespace dgsim::grid
