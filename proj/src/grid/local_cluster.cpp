#include "dgsim/grid/local_cluster.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <set>
#include <shared_mutex>
#include <thread>
#include <unordered_map>

namespace dgsim::grid {

TaskEnvelope TaskEnvelope::onKeyOwner(std::string name, Bytes payload, Bytes key) {
  TaskEnvelope e;
  e.name = std::move(name);
  e.payload = std::move(payload);
  e.routing = Routing::KeyOwner;
  e.key = std::move(key);
  return e;
}

TaskEnvelope TaskEnvelope::onMember(std::string name, Bytes payload, std::uint32_t ordinal) {
  TaskEnvelope e;
  e.name = std::move(name);
  e.payload = std::move(payload);
  e.routing = Routing::Member;
  e.targetOrdinal = ordinal;
  return e;
}

TaskEnvelope TaskEnvelope::onAllMembers(std::string name, Bytes payload) {
  TaskEnvelope e;
  e.name = std::move(name);
  e.payload = std::move(payload);
  e.routing = Routing::AllMembers;
  return e;
}

void TaskRegistry::add(std::string name, TaskFn fn) {
  std::lock_guard<std::mutex> lk(mu_);
  fns_[std::move(name)] = std::move(fn);
}

TaskFn TaskRegistry::find(const std::string& name) const {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = fns_.find(name);
  if (it == fns_.end()) {
    throw GridError("no task registered under '" + name + "'");
  }
  return it->second;
}

namespace {

using Bucket = std::map<Bytes, Bytes>;

struct Job {
  TaskFn fn;
  Bytes payload;
  std::shared_ptr<std::promise<TaskResult>> promise;
  std::uint32_t ordinal = 0;
  Fabric* view = nullptr;  // resolved at enqueue time, under the membership lock
};

struct MemberState {
  MemberId id;
  bool alive = true;

  std::mutex storeMu;  // guards the structure of `store`, not bucket contents
  std::unordered_map<std::string, std::vector<Bucket>> store;

  std::mutex queueMu;
  std::condition_variable queueCv;
  std::deque<Job> queue;
  int inFlight = 0;
  bool stopWorkers = false;
  std::vector<std::thread> workers;
};

struct CellSlot {
  std::mutex mu;
  std::int64_t value = 0;
};

}  // namespace

struct LocalCluster::Core {
  explicit Core(const Options& opts)
      : options(opts), table(opts.partitionCount), partLocks(opts.partitionCount) {}

  const Options options;

  mutable std::shared_mutex membershipMu;
  PartitionTable table;
  std::uint32_t nextOrdinal = 0;
  std::unordered_map<std::uint32_t, std::unique_ptr<MemberState>> states;
  std::unordered_map<std::uint32_t, std::unique_ptr<Fabric>> views;

  std::vector<std::mutex> partLocks;

  std::mutex cellsMu;
  std::map<std::string, CellSlot> cells;

  std::mutex lostMu;
  std::set<std::string> lostMaps;

  std::mutex listenersMu;
  std::uint64_t nextListenerId = 1;
  std::map<std::uint64_t, std::function<void(const MembershipEvent&)>> listeners;

  std::atomic<std::uint64_t> nextTaskId{1};
  TaskRegistry registry;

  MemberState& state(std::uint32_t ordinal) {
    auto it = states.find(ordinal);
    if (it == states.end()) {
      throw GridError("unknown member ordinal " + std::to_string(ordinal));
    }
    return *it->second;
  }

  Bucket* bucketFor(std::uint32_t ordinal, std::string_view map, std::uint32_t partition) {
    MemberState& ms = state(ordinal);
    std::lock_guard<std::mutex> lk(ms.storeMu);
    auto& vec = ms.store[std::string(map)];
    if (vec.empty()) {
      vec.resize(options.partitionCount);
    }
    return &vec[partition];
  }

  std::vector<MemberId> liveMembersLocked() const {
    std::vector<MemberId> out;
    for (const auto& [ord, st] : states) {
      if (st->alive) {
        out.push_back(st->id);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::string> knownMapsLocked() const {
    std::set<std::string> names;
    for (const auto& [ord, st] : states) {
      std::lock_guard<std::mutex> lk(st->storeMu);
      for (const auto& [name, vec] : st->store) {
        names.insert(name);
      }
    }
    return {names.begin(), names.end()};
  }

  // Under exclusive membership lock: make every partition's data live on
  // exactly its owner plus (optionally) its backup. Any member still
  // holding a copy serves as the source; copies are identical because
  // writes are applied to owner and backup under one partition lock.
  void reconcileReplicasLocked() {
    if (table.empty()) {
      return;
    }
    for (const std::string& mapName : knownMapsLocked()) {
      for (std::uint32_t p = 0; p < options.partitionCount; ++p) {
        Bucket* source = nullptr;
        std::uint32_t sourceOrd = 0;
        for (const auto& [ord, st] : states) {
          std::lock_guard<std::mutex> lk(st->storeMu);
          auto it = st->store.find(mapName);
          if (it != st->store.end() && !it->second.empty() && !it->second[p].empty()) {
            source = &it->second[p];
            sourceOrd = ord;
            break;
          }
        }
        std::uint32_t owner = table.ownerOf(p);
        std::int64_t backup = options.backupCount > 0 ? table.backupOf(p) : -1;
        for (const auto& [ord, st] : states) {
          if (!st->alive) {
            continue;
          }
          bool shouldHold = ord == owner || (backup >= 0 && ord == static_cast<std::uint32_t>(backup));
          Bucket* local = bucketFor(ord, mapName, p);
          if (shouldHold) {
            if (source != nullptr && ord != sourceOrd) {
              *local = *source;
            }
          } else if (source == nullptr || ord != sourceOrd) {
            local->clear();
          }
        }
        // Drop the surplus source copy last, once owner and backup have it.
        if (source != nullptr) {
          bool keep = sourceOrd == owner ||
                      (backup >= 0 && sourceOrd == static_cast<std::uint32_t>(backup));
          if (!keep) {
            source->clear();
          }
        }
      }
    }
  }

  void fireEvent(const MembershipEvent& ev) {
    std::vector<std::function<void(const MembershipEvent&)>> fns;
    {
      std::lock_guard<std::mutex> lk(listenersMu);
      for (auto& [id, fn] : listeners) {
        fns.push_back(fn);
      }
    }
    for (auto& fn : fns) {
      fn(ev);
    }
  }

  std::future<TaskResult> enqueue(std::uint32_t ordinal, const std::string& name,
                                  const Bytes& payload) {
    MemberState& ms = state(ordinal);
    auto promise = std::make_shared<std::promise<TaskResult>>();
    auto future = promise->get_future();
    TaskFn fn;
    try {
      fn = registry.find(name);
    } catch (const GridError& e) {
      promise->set_value({ordinal, false, {}, e.what()});
      return future;
    }
    Fabric* view = views.at(ordinal).get();
    {
      std::lock_guard<std::mutex> lk(ms.queueMu);
      if (!ms.alive || ms.stopWorkers) {
        promise->set_value({ordinal, false, {}, "member is not alive"});
        return future;
      }
      ms.queue.push_back(Job{std::move(fn), payload, promise, ordinal, view});
    }
    ms.queueCv.notify_one();
    return future;
  }

  void workerLoop(MemberState* ms) {
    for (;;) {
      Job job;
      {
        std::unique_lock<std::mutex> lk(ms->queueMu);
        ms->queueCv.wait(lk, [&] { return ms->stopWorkers || !ms->queue.empty(); });
        if (ms->queue.empty()) {
          return;  // stopWorkers and drained
        }
        job = std::move(ms->queue.front());
        ms->queue.pop_front();
        ++ms->inFlight;
      }
      TaskResult result;
      result.ordinal = job.ordinal;
      try {
        TaskContext ctx{*job.view};
        result.value = job.fn(ctx, job.payload);
        result.ok = true;
      } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
      }
      {
        std::lock_guard<std::mutex> lk(ms->queueMu);
        --ms->inFlight;
        if (!ms->alive) {
          result = {job.ordinal, false, {}, "member left during execution"};
        }
      }
      job.promise->set_value(std::move(result));
      ms->queueCv.notify_all();
    }
  }

  void failQueuedLocked(MemberState& ms) {
    std::deque<Job> dropped;
    {
      std::lock_guard<std::mutex> lk(ms.queueMu);
      dropped.swap(ms.queue);
    }
    for (auto& job : dropped) {
      job.promise->set_value({job.ordinal, false, {}, "member left before execution"});
    }
  }
};

namespace {

class LocalMemberFabric final : public Fabric {
 public:
  LocalMemberFabric(LocalCluster::Core& core, MemberId id) : core_(core), id_(std::move(id)) {}

  MemberId self() const override { return id_; }

  std::vector<MemberId> members() const override {
    std::shared_lock lk(core_.membershipMu);
    return core_.liveMembersLocked();
  }

  std::uint32_t partitionCount() const override { return core_.options.partitionCount; }

  MemberId ownerOf(const Bytes& key) const override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::uint32_t p = core_.table.partitionOf(key);
    return core_.state(core_.table.ownerOf(p)).id;
  }

  std::optional<Bytes> mapPut(std::string_view map, const Bytes& key, Bytes value) override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::uint32_t p = core_.table.partitionOf(key);
    std::uint32_t owner = core_.table.ownerOf(p);
    std::int64_t backup = core_.options.backupCount > 0 ? core_.table.backupOf(p) : -1;
    std::lock_guard<std::mutex> pl(core_.partLocks[p]);
    Bucket* primary = core_.bucketFor(owner, map, p);
    std::optional<Bytes> prev;
    if (auto it = primary->find(key); it != primary->end()) {
      prev = it->second;
    }
    (*primary)[key] = value;
    if (backup >= 0) {
      Bucket* replica = core_.bucketFor(static_cast<std::uint32_t>(backup), map, p);
      (*replica)[key] = std::move(value);
    }
    return prev;
  }

  std::optional<Bytes> mapGet(std::string_view map, const Bytes& key) override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::uint32_t p = core_.table.partitionOf(key);
    std::uint32_t owner = core_.table.ownerOf(p);
    std::lock_guard<std::mutex> pl(core_.partLocks[p]);
    Bucket* primary = core_.bucketFor(owner, map, p);
    if (auto it = primary->find(key); it != primary->end()) {
      return it->second;
    }
    return std::nullopt;
  }

  std::optional<Bytes> mapGetLocal(std::string_view map, const Bytes& key) override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::uint32_t p = core_.table.partitionOf(key);
    std::lock_guard<std::mutex> pl(core_.partLocks[p]);
    Bucket* local = core_.bucketFor(id_.ordinal, map, p);
    if (auto it = local->find(key); it != local->end()) {
      return it->second;
    }
    return std::nullopt;
  }

  std::optional<Bytes> mapRemove(std::string_view map, const Bytes& key) override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::uint32_t p = core_.table.partitionOf(key);
    std::uint32_t owner = core_.table.ownerOf(p);
    std::int64_t backup = core_.options.backupCount > 0 ? core_.table.backupOf(p) : -1;
    std::lock_guard<std::mutex> pl(core_.partLocks[p]);
    Bucket* primary = core_.bucketFor(owner, map, p);
    std::optional<Bytes> prev;
    if (auto it = primary->find(key); it != primary->end()) {
      prev = std::move(it->second);
      primary->erase(it);
    }
    if (backup >= 0) {
      core_.bucketFor(static_cast<std::uint32_t>(backup), map, p)->erase(key);
    }
    return prev;
  }

  std::size_t mapSize(std::string_view map) override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::size_t total = 0;
    for (std::uint32_t p = 0; p < core_.options.partitionCount; ++p) {
      std::lock_guard<std::mutex> pl(core_.partLocks[p]);
      total += core_.bucketFor(core_.table.ownerOf(p), map, p)->size();
    }
    return total;
  }

  std::vector<std::pair<Bytes, Bytes>> mapEntries(std::string_view map) override {
    std::shared_lock lk(core_.membershipMu);
    requireMembers();
    std::vector<std::pair<Bytes, Bytes>> out;
    for (std::uint32_t p = 0; p < core_.options.partitionCount; ++p) {
      std::lock_guard<std::mutex> pl(core_.partLocks[p]);
      Bucket* primary = core_.bucketFor(core_.table.ownerOf(p), map, p);
      out.insert(out.end(), primary->begin(), primary->end());
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

  void mapClear(std::string_view map) override {
    std::shared_lock lk(core_.membershipMu);
    for (std::uint32_t p = 0; p < core_.options.partitionCount; ++p) {
      std::lock_guard<std::mutex> pl(core_.partLocks[p]);
      for (const auto& [ord, st] : core_.states) {
        core_.bucketFor(ord, map, p)->clear();
      }
    }
    std::lock_guard<std::mutex> lost(core_.lostMu);
    core_.lostMaps.erase(std::string(map));
  }

  bool mapLostData(std::string_view map) override {
    std::lock_guard<std::mutex> lost(core_.lostMu);
    return core_.lostMaps.count(std::string(map)) > 0;
  }

  std::int64_t cellGet(std::string_view cell) override {
    CellSlot& slot = slotFor(cell);
    std::lock_guard<std::mutex> lk(slot.mu);
    return slot.value;
  }

  void cellSet(std::string_view cell, std::int64_t value) override {
    CellSlot& slot = slotFor(cell);
    std::lock_guard<std::mutex> lk(slot.mu);
    slot.value = value;
  }

  std::int64_t cellExchange(std::string_view cell, std::int64_t value) override {
    CellSlot& slot = slotFor(cell);
    std::lock_guard<std::mutex> lk(slot.mu);
    std::int64_t witnessed = slot.value;
    slot.value = value;
    return witnessed;
  }

  CasResult cellCompareExchange(std::string_view cell, std::int64_t expected,
                                std::int64_t desired) override {
    CellSlot& slot = slotFor(cell);
    std::lock_guard<std::mutex> lk(slot.mu);
    CasResult r{false, slot.value};
    if (slot.value == expected) {
      slot.value = desired;
      r.swapped = true;
    }
    return r;
  }

  std::vector<TaskResult> execute(const TaskEnvelope& envelope) override {
    std::vector<std::uint32_t> targets;
    std::vector<std::future<TaskResult>> futures;
    {
      std::shared_lock lk(core_.membershipMu);
      requireMembers();
      switch (envelope.routing) {
        case TaskEnvelope::Routing::KeyOwner: {
          std::uint32_t p = core_.table.partitionOf(envelope.key);
          targets.push_back(core_.table.ownerOf(p));
          break;
        }
        case TaskEnvelope::Routing::Member: {
          auto it = core_.states.find(envelope.targetOrdinal);
          if (it == core_.states.end() || !it->second->alive) {
            throw GridError("no such member: ordinal " +
                            std::to_string(envelope.targetOrdinal));
          }
          targets.push_back(envelope.targetOrdinal);
          break;
        }
        case TaskEnvelope::Routing::AllMembers: {
          for (const MemberId& m : core_.liveMembersLocked()) {
            targets.push_back(m.ordinal);
          }
          break;
        }
      }
      futures.reserve(targets.size());
      for (std::uint32_t t : targets) {
        futures.push_back(core_.enqueue(t, envelope.name, envelope.payload));
      }
    }
    // Gather after releasing the membership lock, so membership changes and
    // the tasks' own grid operations can proceed while we wait.
    std::vector<TaskResult> results;
    results.reserve(futures.size());
    for (auto& f : futures) {
      results.push_back(f.get());
    }
    return results;
  }

  std::uint64_t addMembershipListener(
      std::function<void(const MembershipEvent&)> listener) override {
    std::lock_guard<std::mutex> lk(core_.listenersMu);
    std::uint64_t id = core_.nextListenerId++;
    core_.listeners[id] = std::move(listener);
    return id;
  }

  void removeMembershipListener(std::uint64_t id) override {
    std::lock_guard<std::mutex> lk(core_.listenersMu);
    core_.listeners.erase(id);
  }

 private:
  void requireMembers() const {
    if (core_.table.empty()) {
      throw GridError("cluster has no live members");
    }
  }

  CellSlot& slotFor(std::string_view name) {
    std::lock_guard<std::mutex> lk(core_.cellsMu);
    return core_.cells[std::string(name)];
  }

  LocalCluster::Core& core_;
  MemberId id_;
};

}  // namespace

LocalCluster::LocalCluster() : LocalCluster(Options()) {}

LocalCluster::LocalCluster(LocalCluster&&) noexcept = default;

LocalCluster::LocalCluster(Options options) : options_(std::move(options)) {
  if (options_.clusterName.empty()) {
    throw ConfigError("cluster name must be nonempty");
  }
  if (options_.backupCount < 0 || options_.backupCount > 1) {
    throw ConfigError("backupCount must be 0 or 1");
  }
  if (options_.workersPerMember == 0) {
    throw ConfigError("workersPerMember must be positive");
  }
  core_ = std::make_unique<Core>(options_);
}

LocalCluster::~LocalCluster() {
  if (!core_) {
    return;  // moved-from
  }
  std::vector<MemberState*> all;
  {
    std::unique_lock lk(core_->membershipMu);
    for (auto& [ord, st] : core_->states) {
      all.push_back(st.get());
    }
  }
  for (MemberState* ms : all) {
    {
      std::lock_guard<std::mutex> lk(ms->queueMu);
      ms->stopWorkers = true;
    }
    ms->queueCv.notify_all();
  }
  for (MemberState* ms : all) {
    for (std::thread& t : ms->workers) {
      if (t.joinable()) {
        t.join();
      }
    }
  }
}

Fabric& LocalCluster::join(std::string label) {
  MembershipEvent event;
  Fabric* view = nullptr;
  {
    std::unique_lock lk(core_->membershipMu);
    std::uint32_t ordinal = core_->nextOrdinal++;
    if (label.empty()) {
      label = "member-" + std::to_string(ordinal);
    }
    auto state = std::make_unique<MemberState>();
    state->id = MemberId{ordinal, label};
    MemberState* ms = state.get();
    core_->states.emplace(ordinal, std::move(state));
    auto fabric = std::make_unique<LocalMemberFabric>(*core_, ms->id);
    view = fabric.get();
    core_->views.emplace(ordinal, std::move(fabric));
    for (std::uint32_t i = 0; i < options_.workersPerMember; ++i) {
      ms->workers.emplace_back([core = core_.get(), ms] { core->workerLoop(ms); });
    }
    core_->table.addMember(ordinal);
    core_->reconcileReplicasLocked();
    event = {MembershipEvent::Kind::Joined, ms->id, core_->liveMembersLocked()};
  }
  core_->fireEvent(event);
  return *view;
}

void LocalCluster::leave(std::uint32_t ordinal) {
  MemberState* ms = nullptr;
  {
    std::shared_lock lk(core_->membershipMu);
    ms = &core_->state(ordinal);
    if (!ms->alive) {
      return;  // idempotent
    }
  }
  {
    // Drain: running and queued tasks finish before the member departs.
    std::unique_lock<std::mutex> lk(ms->queueMu);
    ms->queueCv.wait(lk, [&] { return ms->queue.empty() && ms->inFlight == 0; });
  }
  MembershipEvent event;
  {
    std::unique_lock lk(core_->membershipMu);
    if (!ms->alive) {
      return;
    }
    ms->alive = false;
    {
      std::lock_guard<std::mutex> qlk(ms->queueMu);
      ms->stopWorkers = true;
    }
    ms->queueCv.notify_all();
    core_->failQueuedLocked(*ms);
    core_->table.removeMember(ordinal);
    // The departing store is still present and serves as a migration
    // source; afterwards it is emptied.
    core_->reconcileReplicasLocked();
    {
      std::lock_guard<std::mutex> slk(ms->storeMu);
      ms->store.clear();
    }
    event = {MembershipEvent::Kind::Left, ms->id, core_->liveMembersLocked()};
  }
  core_->fireEvent(event);
}

void LocalCluster::kill(std::uint32_t ordinal) {
  MembershipEvent event;
  {
    std::unique_lock lk(core_->membershipMu);
    MemberState& ms = core_->state(ordinal);
    if (!ms.alive) {
      return;
    }
    ms.alive = false;
    {
      std::lock_guard<std::mutex> qlk(ms.queueMu);
      ms.stopWorkers = true;
    }
    ms.queueCv.notify_all();
    core_->failQueuedLocked(ms);

    // Committed entries without a surviving copy are lost.
    std::unordered_map<std::string, std::vector<Bucket>> dropped;
    {
      std::lock_guard<std::mutex> slk(ms.storeMu);
      dropped.swap(ms.store);
    }
    for (const auto& [mapName, buckets] : dropped) {
      for (std::uint32_t p = 0; p < buckets.size(); ++p) {
        if (buckets[p].empty() || core_->table.ownerOf(p) != ordinal) {
          continue;
        }
        bool survivorHolds = false;
        for (const auto& [ord, st] : core_->states) {
          if (!st->alive) {
            continue;
          }
          std::lock_guard<std::mutex> slk(st->storeMu);
          auto it = st->store.find(mapName);
          if (it != st->store.end() && !it->second.empty() && !it->second[p].empty()) {
            survivorHolds = true;
            break;
          }
        }
        if (!survivorHolds) {
          std::lock_guard<std::mutex> lost(core_->lostMu);
          core_->lostMaps.insert(mapName);
        }
      }
    }

    core_->table.removeMember(ordinal);
    core_->reconcileReplicasLocked();
    event = {MembershipEvent::Kind::Left, ms.id, core_->liveMembersLocked()};
  }
  core_->fireEvent(event);
}

std::vector<MemberId> LocalCluster::members() const {
  std::shared_lock lk(core_->membershipMu);
  return core_->liveMembersLocked();
}

std::size_t LocalCluster::memberCount() const { return members().size(); }

Fabric& LocalCluster::fabricOf(std::uint32_t ordinal) {
  std::shared_lock lk(core_->membershipMu);
  auto it = core_->views.find(ordinal);
  if (it == core_->views.end()) {
    throw GridError("unknown member ordinal " + std::to_string(ordinal));
  }
  return *it->second;
}

Fabric& LocalCluster::master() {
  std::shared_lock lk(core_->membershipMu);
  auto live = core_->liveMembersLocked();
  if (live.empty()) {
    throw GridError("cluster has no live members");
  }
  return *core_->views.at(live.front().ordinal);
}

TaskRegistry& LocalCluster::tasks() { return core_->registry; }

}  // namespace dgsim::grid
