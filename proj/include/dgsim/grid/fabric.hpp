#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dgsim/codec.hpp"

namespace dgsim::grid {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Identity of one cluster member. Ordinals are assigned in strict join
/// order starting at 0 and are never reused; the member with the lowest
/// live ordinal acts as master.
struct MemberId {
  std::uint32_t ordinal = 0;
  std::string label;

  bool operator==(const MemberId&) const = default;
  auto operator<=>(const MemberId& other) const { return ordinal <=> other.ordinal; }
};

struct MembershipEvent {
  enum class Kind { Joined, Left };
  Kind kind = Kind::Joined;
  MemberId member;
  std::vector<MemberId> members;  // live members after the change, by ordinal
};

struct CasResult {
  bool swapped = false;
  std::int64_t witnessed = 0;
};

/// Routed unit of remote work. The payload names a registered handler plus
/// its serialized arguments; routing picks the member(s) it runs on.
struct TaskEnvelope {
  enum class Routing { KeyOwner, Member, AllMembers };

  std::uint64_t taskId = 0;
  std::string name;
  Bytes payload;
  Routing routing = Routing::AllMembers;
  Bytes key;                      // for KeyOwner
  std::uint32_t targetOrdinal = 0;  // for Member

  static TaskEnvelope onKeyOwner(std::string name, Bytes payload, Bytes key);
  static TaskEnvelope onMember(std::string name, Bytes payload, std::uint32_t ordinal);
  static TaskEnvelope onAllMembers(std::string name, Bytes payload);
};

struct TaskResult {
  std::uint32_t ordinal = 0;
  bool ok = false;
  Bytes value;
  std::string error;
};

class Fabric;

struct TaskContext {
  Fabric& self;
};

using TaskFn = std::function<Bytes(TaskContext&, const Bytes&)>;

/// Named handlers shared by every member of a cluster. Both transports
/// assume the same registry contents on all members (same binary).
class TaskRegistry {
 public:
  void add(std::string name, TaskFn fn);
  TaskFn find(const std::string& name) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, TaskFn> fns_;
};

/// One member's view of the data grid. All operations are safe to call
/// from any thread; maps are per-key linearizable and cells are
/// linearizable across the cluster.
class Fabric {
 public:
  virtual ~Fabric() = default;

  virtual MemberId self() const = 0;
  virtual std::vector<MemberId> members() const = 0;
  virtual std::uint32_t partitionCount() const = 0;
  virtual MemberId ownerOf(const Bytes& key) const = 0;

  virtual std::optional<Bytes> mapPut(std::string_view map, const Bytes& key,
                                      Bytes value) = 0;
  virtual std::optional<Bytes> mapGet(std::string_view map, const Bytes& key) = 0;
  /// Reads from this member's locally held partitions only; nullopt when
  /// the key's partition does not live here. Lets key-owner routed tasks
  /// touch their data without a remote call.
  virtual std::optional<Bytes> mapGetLocal(std::string_view map, const Bytes& key) = 0;
  virtual std::optional<Bytes> mapRemove(std::string_view map, const Bytes& key) = 0;
  virtual std::size_t mapSize(std::string_view map) = 0;
  /// Snapshot of all entries, sorted by key bytes.
  virtual std::vector<std::pair<Bytes, Bytes>> mapEntries(std::string_view map) = 0;
  virtual void mapClear(std::string_view map) = 0;
  /// True when committed entries of this map were dropped by a member
  /// failure without a surviving replica.
  virtual bool mapLostData(std::string_view map) = 0;

  virtual std::int64_t cellGet(std::string_view cell) = 0;
  virtual void cellSet(std::string_view cell, std::int64_t value) = 0;
  virtual std::int64_t cellExchange(std::string_view cell, std::int64_t value) = 0;
  virtual CasResult cellCompareExchange(std::string_view cell, std::int64_t expected,
                                        std::int64_t desired) = 0;

  /// Runs the envelope on its routed member(s) and gathers results in
  /// member-ordinal order.
  virtual std::vector<TaskResult> execute(const TaskEnvelope& envelope) = 0;

  virtual std::uint64_t addMembershipListener(
      std::function<void(const MembershipEvent&)> listener) = 0;
  virtual void removeMembershipListener(std::uint64_t id) = 0;
};

/// Typed convenience handle over a named distributed map.
class GridMap {
 public:
  GridMap() = default;
  GridMap(Fabric& fabric, std::string name) : fabric_(&fabric), name_(std::move(name)) {}

  std::optional<Bytes> put(const Bytes& key, Bytes value) {
    return fabric_->mapPut(name_, key, std::move(value));
  }
  std::optional<Bytes> get(const Bytes& key) const { return fabric_->mapGet(name_, key); }
  std::optional<Bytes> remove(const Bytes& key) { return fabric_->mapRemove(name_, key); }
  std::size_t size() const { return fabric_->mapSize(name_); }
  std::vector<std::pair<Bytes, Bytes>> entries() const { return fabric_->mapEntries(name_); }
  void clear() { fabric_->mapClear(name_); }
  bool lostData() const { return fabric_->mapLostData(name_); }
  const std::string& name() const { return name_; }

 private:
  Fabric* fabric_ = nullptr;
  std::string name_;
};

/// Distributed signed 64-bit integer, initially 0.
class AtomicCell {
 public:
  AtomicCell() = default;
  AtomicCell(Fabric& fabric, std::string name) : fabric_(&fabric), name_(std::move(name)) {}

  std::int64_t get() const { return fabric_->cellGet(name_); }
  void set(std::int64_t v) { fabric_->cellSet(name_, v); }
  std::int64_t exchange(std::int64_t v) { return fabric_->cellExchange(name_, v); }
  CasResult compareExchange(std::int64_t expected, std::int64_t desired) {
    return fabric_->cellCompareExchange(name_, expected, desired);
  }
  const std::string& name() const { return name_; }

 private:
  Fabric* fabric_ = nullptr;
  std::string name_;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> data);

}  // namespace dgsim::grid
