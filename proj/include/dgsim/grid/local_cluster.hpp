#pragma once

#include <memory>

#include "dgsim/grid/fabric.hpp"
#include "dgsim/grid/partition_table.hpp"

namespace dgsim::grid {

/// In-process cluster: every member is a set of worker threads plus a
/// partition-granular store inside one process. This is the default
/// transport for simulations and tests; the TCP fabric covers multi-process
/// runs.
///
/// Writes apply to the partition owner and, with backupCount = 1, to a
/// synchronous replica on the next live member before returning. kill()
/// models an abrupt member failure: entries whose only copy lived there are
/// gone and the affected maps report data loss. leave() is a graceful
/// shutdown that migrates data out first.
class LocalCluster {
 public:
  struct Options {
    std::string clusterName = "main";
    std::uint32_t partitionCount = kDefaultPartitionCount;
    int backupCount = 0;  // 0 or 1
    std::uint32_t workersPerMember = 1;
  };

  LocalCluster();
  explicit LocalCluster(Options options);
  ~LocalCluster();

  LocalCluster(const LocalCluster&) = delete;
  LocalCluster& operator=(const LocalCluster&) = delete;
  LocalCluster(LocalCluster&&) noexcept;
  LocalCluster& operator=(LocalCluster&&) = delete;

  /// Adds a member with the next ordinal; rebalances partitions and fires
  /// membership callbacks on the previously joined members.
  Fabric& join(std::string label = "");

  /// Graceful departure: drains the member's task queue, migrates its data
  /// to the new owners, then removes it.
  void leave(std::uint32_t ordinal);

  /// Abrupt failure: the member's store is dropped on the floor. Maps that
  /// lose committed entries (no surviving replica) are flagged.
  void kill(std::uint32_t ordinal);

  std::vector<MemberId> members() const;
  std::size_t memberCount() const;

  Fabric& fabricOf(std::uint32_t ordinal);
  /// View of the lowest live ordinal.
  Fabric& master();

  TaskRegistry& tasks();
  const Options& options() const { return options_; }
  const std::string& name() const { return options_.clusterName; }

  struct Core;  // implementation detail

 private:
  Options options_;
  std::unique_ptr<Core> core_;
};

}  // namespace dgsim::grid
