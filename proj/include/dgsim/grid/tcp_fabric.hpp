#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dgsim/grid/fabric.hpp"

namespace dgsim::grid {

/// One cluster member living in its own process, clustered over static TCP
/// endpoint lists. The wire format is length-prefixed frames: a 4-byte
/// big-endian length followed by one neutral record.
///
/// The process owning the first endpoint of the list acts as the seed: it
/// assigns ordinals, serializes membership changes and hosts the atomic
/// cells. Joins with a different cluster name are rejected in the
/// handshake. Membership is meant to be static while data is live: members
/// join up front, run, then leave; crash recovery across processes is not
/// attempted here (the in-process cluster covers that).
class TcpFabric final : public Fabric {
 public:
  struct Options {
    std::string clusterName = "main";
    std::vector<std::string> endpoints;  // "host:port", first entry is the seed
    std::string label;
    std::uint32_t partitionCount = 271;
    int backupCount = 0;
    double joinTimeoutS = 10.0;
  };

  /// Binds the first free endpoint of the list and joins the cluster
  /// through the seed (or becomes the seed when endpoint 0 is free).
  static std::unique_ptr<TcpFabric> join(Options options, TaskRegistry& registry);

  ~TcpFabric() override;

  /// Graceful departure announced to the seed.
  void leave();

  /// Blocks until at least `count` members are present (join barrier).
  bool awaitMembers(std::size_t count, double timeoutS);

  const std::string& boundEndpoint() const;

  MemberId self() const override;
  std::vector<MemberId> members() const override;
  std::uint32_t partitionCount() const override;
  MemberId ownerOf(const Bytes& key) const override;

  std::optional<Bytes> mapPut(std::string_view map, const Bytes& key, Bytes value) override;
  std::optional<Bytes> mapGet(std::string_view map, const Bytes& key) override;
  std::optional<Bytes> mapGetLocal(std::string_view map, const Bytes& key) override;
  std::optional<Bytes> mapRemove(std::string_view map, const Bytes& key) override;
  std::size_t mapSize(std::string_view map) override;
  std::vector<std::pair<Bytes, Bytes>> mapEntries(std::string_view map) override;
  void mapClear(std::string_view map) override;
  bool mapLostData(std::string_view map) override;

  std::int64_t cellGet(std::string_view cell) override;
  void cellSet(std::string_view cell, std::int64_t value) override;
  std::int64_t cellExchange(std::string_view cell, std::int64_t value) override;
  CasResult cellCompareExchange(std::string_view cell, std::int64_t expected,
                                std::int64_t desired) override;

  std::vector<TaskResult> execute(const TaskEnvelope& envelope) override;

  std::uint64_t addMembershipListener(
      std::function<void(const MembershipEvent&)> listener) override;
  void removeMembershipListener(std::uint64_t id) override;

  struct Impl;

 private:
  explicit TcpFabric(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace dgsim::grid
