#include "dgsim/grid/partition_table.hpp"

#include <algorithm>
#include <map>

namespace dgsim::grid {

std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : data) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

PartitionTable::PartitionTable(std::uint32_t partitionCount) {
  if (partitionCount == 0) {
    throw ConfigError("partition count must be positive");
  }
  owner_.assign(partitionCount, 0);
}

std::uint32_t PartitionTable::partitionOf(std::span<const std::uint8_t> key) const {
  return static_cast<std::uint32_t>(fnv1a64(key) % owner_.size());
}

std::size_t PartitionTable::countOwnedBy(std::uint32_t ordinal) const {
  if (members_.empty()) {
    return 0;
  }
  return static_cast<std::size_t>(std::count(owner_.begin(), owner_.end(), ordinal));
}

namespace {
// Target partition counts: base share for everyone, one extra for the
// lowest-ordinal members when the count does not divide evenly.
std::map<std::uint32_t, std::size_t> targets(const std::vector<std::uint32_t>& members,
                                             std::size_t partitions) {
  std::map<std::uint32_t, std::size_t> t;
  std::size_t base = partitions / members.size();
  std::size_t extra = partitions % members.size();
  for (std::size_t i = 0; i < members.size(); ++i) {
    t[members[i]] = base + (i < extra ? 1 : 0);
  }
  return t;
}
}  // namespace

void PartitionTable::addMember(std::uint32_t ordinal) {
  if (std::binary_search(members_.begin(), members_.end(), ordinal)) {
    throw ConfigError("duplicate member ordinal");
  }
  members_.insert(std::upper_bound(members_.begin(), members_.end(), ordinal), ordinal);
  if (members_.size() == 1) {
    std::fill(owner_.begin(), owner_.end(), ordinal);
    return;
  }
  auto want = targets(members_, owner_.size());
  std::map<std::uint32_t, std::size_t> have;
  for (std::uint32_t o : owner_) {
    ++have[o];
  }
  // Take excess partitions from over-target members, ascending index.
  std::size_t need = want[ordinal];
  for (std::uint32_t p = 0; p < owner_.size() && need > 0; ++p) {
    std::uint32_t cur = owner_[p];
    if (cur != ordinal && have[cur] > want[cur]) {
      owner_[p] = ordinal;
      --have[cur];
      --need;
    }
  }
}

void PartitionTable::removeMember(std::uint32_t ordinal) {
  auto it = std::find(members_.begin(), members_.end(), ordinal);
  if (it == members_.end()) {
    throw ConfigError("unknown member ordinal");
  }
  members_.erase(it);
  if (members_.empty()) {
    return;
  }
  auto want = targets(members_, owner_.size());
  std::map<std::uint32_t, std::size_t> have;
  for (std::uint32_t o : owner_) {
    if (o != ordinal) {
      ++have[o];
    }
  }
  // Hand the departed member's partitions to whoever is under target.
  auto underTarget = [&]() {
    for (std::uint32_t m : members_) {
      if (have[m] < want[m]) {
        return m;
      }
    }
    return members_.front();
  };
  for (std::uint32_t p = 0; p < owner_.size(); ++p) {
    if (owner_[p] == ordinal) {
      std::uint32_t to = underTarget();
      owner_[p] = to;
      ++have[to];
    }
  }
}

void PartitionTable::overwriteAssignment(const std::vector<std::uint32_t>& assignment) {
  if (assignment.size() != owner_.size()) {
    throw ConfigError("assignment size mismatch");
  }
  for (std::uint32_t o : assignment) {
    if (!std::binary_search(members_.begin(), members_.end(), o)) {
      throw ConfigError("assignment references unknown member");
    }
  }
  owner_ = assignment;
}

std::int64_t PartitionTable::backupOf(std::uint32_t partition) const {
  if (members_.size() < 2) {
    return -1;
  }
  std::uint32_t owner = owner_[partition];
  auto it = std::upper_bound(members_.begin(), members_.end(), owner);
  if (it == members_.end()) {
    it = members_.begin();
  }
  return *it;
}

}  // namespace dgsim::grid
