#include "dgsim/grid/tcp_fabric.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "dgsim/grid/partition_table.hpp"

namespace dgsim::grid {

namespace {

// Message types inside the frame record.
enum Msg : std::uint8_t {
  kJoinReq = 1,
  kJoinAck = 2,
  kJoinReject = 3,
  kMemberAdded = 4,
  kMemberRemoved = 5,
  kMapPut = 6,
  kMapPutResp = 7,
  kMapGet = 8,
  kMapGetResp = 9,
  kMapRemove = 10,
  kMapRemoveResp = 11,
  kMapSizeLocal = 12,
  kMapSizeResp = 13,
  kMapEntriesLocal = 14,
  kMapEntriesResp = 15,
  kMapClearLocal = 16,
  kAck = 17,
  kCellOp = 18,
  kCellResp = 19,
  kTask = 20,
  kTaskResp = 21,
  kLeave = 22,
  kReplicaPut = 23,
  kReplicaRemove = 24,
};

enum CellOpKind : std::uint8_t { kCellGet = 0, kCellSet = 1, kCellXchg = 2, kCellCas = 3 };

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  /// Unblocks any reader without releasing the descriptor.
  void interrupt() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
    }
  }
  void close() {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

Endpoint parseEndpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    throw ConfigError("endpoint '" + text + "' is not host:port");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  int port = std::stoi(text.substr(colon + 1));
  if (port <= 0 || port > 65535) {
    throw ConfigError("endpoint '" + text + "' has an invalid port");
  }
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

sockaddr_in resolve(const Endpoint& e) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(e.port);
  if (inet_pton(AF_INET, e.host.c_str(), &addr.sin_addr) == 1) {
    return addr;
  }
  hostent* host = gethostbyname(e.host.c_str());
  if (host == nullptr || host->h_addrtype != AF_INET) {
    throw GridError("cannot resolve host '" + e.host + "'");
  }
  std::memcpy(&addr.sin_addr, host->h_addr_list[0], sizeof(addr.sin_addr));
  return addr;
}

bool writeAll(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n <= 0) {
      return false;
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool readAll(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::recv(fd, data, len, 0);
    if (n <= 0) {
      return false;
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

bool sendFrame(int fd, const Bytes& record) {
  std::uint8_t header[4] = {
      static_cast<std::uint8_t>(record.size() >> 24),
      static_cast<std::uint8_t>(record.size() >> 16),
      static_cast<std::uint8_t>(record.size() >> 8),
      static_cast<std::uint8_t>(record.size()),
  };
  return writeAll(fd, header, 4) && writeAll(fd, record.data(), record.size());
}

std::optional<Bytes> recvFrame(int fd) {
  std::uint8_t header[4];
  if (!readAll(fd, header, 4)) {
    return std::nullopt;
  }
  std::uint32_t len = std::uint32_t{header[0]} << 24 | std::uint32_t{header[1]} << 16 |
                      std::uint32_t{header[2]} << 8 | header[3];
  if (len > (64u << 20)) {
    return std::nullopt;  // refuse absurd frames
  }
  Bytes record(len);
  if (!readAll(fd, record.data(), len)) {
    return std::nullopt;
  }
  return record;
}

Writer message(std::uint8_t type) { return recordWriter(type); }

struct PeerInfo {
  MemberId id;
  std::string endpoint;
};

}  // namespace

struct TcpFabric::Impl {
  Options options;
  TaskRegistry* registry = nullptr;

  MemberId selfId;
  std::string boundEndpoint;
  Socket listener;
  std::thread acceptThread;
  std::vector<std::thread> connThreads;
  std::mutex inboundMu;
  std::vector<std::shared_ptr<Socket>> inbound;
  std::atomic<bool> closing{false};

  mutable std::mutex stateMu;
  std::condition_variable stateCv;
  PartitionTable table{271};
  std::map<std::uint32_t, PeerInfo> peers;  // live members incl. self
  std::uint32_t nextOrdinal = 0;            // seed only

  // Local storage: map name -> partition -> bucket.
  std::map<std::string, std::map<std::uint32_t, std::map<Bytes, Bytes>>> store;
  std::mutex storeMu;

  // Cells live on the seed.
  std::map<std::string, std::int64_t> cells;
  std::mutex cellsMu;

  // One lazily opened client connection per peer endpoint.
  std::mutex connsMu;
  std::map<std::string, std::shared_ptr<std::pair<std::mutex, Socket>>> conns;

  std::mutex listenersMu;
  std::uint64_t nextListenerId = 1;
  std::map<std::uint64_t, std::function<void(const MembershipEvent&)>> listeners;

  std::atomic<std::uint64_t> nextTaskId{1};

  bool isSeed() const { return selfId.ordinal == 0; }

  std::string seedEndpoint() const { return options.endpoints.front(); }

  // ---- client side -------------------------------------------------------

  std::shared_ptr<std::pair<std::mutex, Socket>> connectionTo(const std::string& endpoint) {
    {
      std::lock_guard<std::mutex> lk(connsMu);
      auto it = conns.find(endpoint);
      if (it != conns.end() && it->second->second.valid()) {
        return it->second;
      }
    }
    Endpoint e = parseEndpoint(endpoint);
    sockaddr_in addr = resolve(e);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) {
      throw GridError("socket() failed");
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd);
      throw GridError("cannot connect to " + endpoint);
    }
    auto conn = std::make_shared<std::pair<std::mutex, Socket>>();
    conn->second = Socket(fd);
    std::lock_guard<std::mutex> lk(connsMu);
    conns[endpoint] = conn;
    return conn;
  }

  Bytes request(const std::string& endpoint, const Bytes& record) {
    auto conn = connectionTo(endpoint);
    std::lock_guard<std::mutex> lk(conn->first);
    if (!sendFrame(conn->second.fd(), record)) {
      conn->second.close();
      throw GridError("send to " + endpoint + " failed");
    }
    auto reply = recvFrame(conn->second.fd());
    if (!reply) {
      conn->second.close();
      throw GridError("connection to " + endpoint + " dropped");
    }
    return *reply;
  }

  std::string endpointOf(std::uint32_t ordinal) const {
    std::lock_guard<std::mutex> lk(stateMu);
    auto it = peers.find(ordinal);
    if (it == peers.end()) {
      throw GridError("no such member: ordinal " + std::to_string(ordinal));
    }
    return it->second.endpoint;
  }

  // ---- storage helpers ----------------------------------------------------

  std::map<Bytes, Bytes>& bucket(std::string_view map, std::uint32_t partition) {
    return store[std::string(map)][partition];
  }

  std::optional<Bytes> localPut(std::string_view map, const Bytes& key, Bytes value,
                                bool forwardToBackup) {
    std::int64_t backup = -1;
    std::uint32_t p;
    {
      std::lock_guard<std::mutex> lk(stateMu);
      p = table.partitionOf(key);
      if (options.backupCount > 0) {
        backup = table.backupOf(p);
      }
    }
    std::optional<Bytes> prev;
    {
      std::lock_guard<std::mutex> lk(storeMu);
      auto& b = bucket(map, p);
      if (auto it = b.find(key); it != b.end()) {
        prev = it->second;
      }
      b[key] = value;
    }
    if (forwardToBackup && backup >= 0 &&
        static_cast<std::uint32_t>(backup) != selfId.ordinal) {
      Writer w = message(kReplicaPut);
      w.str(std::string(map));
      w.bytes(key);
      w.bytes(value);
      request(endpointOf(static_cast<std::uint32_t>(backup)), w.take());
    }
    return prev;
  }

  std::optional<Bytes> localGet(std::string_view map, const Bytes& key) {
    std::uint32_t p;
    {
      std::lock_guard<std::mutex> slk(stateMu);
      p = table.partitionOf(key);
    }
    std::lock_guard<std::mutex> lk(storeMu);
    auto& b = bucket(map, p);
    if (auto it = b.find(key); it != b.end()) {
      return it->second;
    }
    return std::nullopt;
  }

  std::optional<Bytes> localRemove(std::string_view map, const Bytes& key,
                                   bool forwardToBackup) {
    std::int64_t backup = -1;
    std::uint32_t p;
    {
      std::lock_guard<std::mutex> lk(stateMu);
      p = table.partitionOf(key);
      if (options.backupCount > 0) {
        backup = table.backupOf(p);
      }
    }
    std::optional<Bytes> prev;
    {
      std::lock_guard<std::mutex> lk(storeMu);
      auto& b = bucket(map, p);
      if (auto it = b.find(key); it != b.end()) {
        prev = std::move(it->second);
        b.erase(it);
      }
    }
    if (forwardToBackup && backup >= 0 &&
        static_cast<std::uint32_t>(backup) != selfId.ordinal) {
      Writer w = message(kReplicaRemove);
      w.str(std::string(map));
      w.bytes(key);
      request(endpointOf(static_cast<std::uint32_t>(backup)), w.take());
    }
    return prev;
  }

  // Entries/size over the partitions this member currently owns.
  std::vector<std::pair<Bytes, Bytes>> ownedEntries(std::string_view map) {
    std::vector<std::pair<Bytes, Bytes>> out;
    std::lock_guard<std::mutex> slk(stateMu);
    std::lock_guard<std::mutex> lk(storeMu);
    auto it = store.find(std::string(map));
    if (it == store.end()) {
      return out;
    }
    for (const auto& [partition, bucket] : it->second) {
      if (table.ownerOf(partition) == selfId.ordinal) {
        out.insert(out.end(), bucket.begin(), bucket.end());
      }
    }
    return out;
  }

  // ---- membership ---------------------------------------------------------

  void applyMemberAdded(const PeerInfo& info) {
    std::vector<MemberId> snapshot;
    {
      std::lock_guard<std::mutex> lk(stateMu);
      if (peers.count(info.id.ordinal) != 0) {
        return;
      }
      peers[info.id.ordinal] = info;
      table.addMember(info.id.ordinal);
      snapshot = memberSnapshotLocked();
    }
    stateCv.notify_all();
    fireEvent({MembershipEvent::Kind::Joined, info.id, snapshot});
  }

  void applyMemberRemoved(std::uint32_t ordinal) {
    MemberId departed;
    std::vector<MemberId> snapshot;
    {
      std::lock_guard<std::mutex> lk(stateMu);
      auto it = peers.find(ordinal);
      if (it == peers.end()) {
        return;
      }
      departed = it->second.id;
      peers.erase(it);
      table.removeMember(ordinal);
      snapshot = memberSnapshotLocked();
    }
    stateCv.notify_all();
    fireEvent({MembershipEvent::Kind::Left, departed, snapshot});
  }

  std::vector<MemberId> memberSnapshotLocked() const {
    std::vector<MemberId> out;
    for (const auto& [ordinal, info] : peers) {
      out.push_back(info.id);
    }
    return out;
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

  void broadcast(const Bytes& record, std::uint32_t excludeOrdinal) {
    std::vector<std::string> endpoints;
    {
      std::lock_guard<std::mutex> lk(stateMu);
      for (const auto& [ordinal, info] : peers) {
        if (ordinal != selfId.ordinal && ordinal != excludeOrdinal) {
          endpoints.push_back(info.endpoint);
        }
      }
    }
    for (const auto& e : endpoints) {
      try {
        request(e, record);
      } catch (const GridError&) {
        // A dead peer misses the notification; membership here is static
        // while data is live, so this is not repaired further.
      }
    }
  }

  // ---- server side --------------------------------------------------------

  void serveConnection(std::shared_ptr<Socket> sock) {
    while (!closing.load()) {
      auto frame = recvFrame(sock->fd());
      if (!frame) {
        return;
      }
      Bytes reply = handleFrame(*frame);
      if (!sendFrame(sock->fd(), reply)) {
        return;
      }
    }
  }

  Bytes handleFrame(const Bytes& frame) {
    Reader r(frame);
    r.u8();  // version
    std::uint8_t type = r.u8();
    switch (type) {
      case kJoinReq:
        return handleJoin(r);
      case kMemberAdded: {
        PeerInfo info;
        info.id.ordinal = r.u32();
        info.id.label = r.str();
        info.endpoint = r.str();
        applyMemberAdded(info);
        return message(kAck).take();
      }
      case kMemberRemoved: {
        applyMemberRemoved(r.u32());
        return message(kAck).take();
      }
      case kLeave: {
        std::uint32_t ordinal = r.u32();
        applyMemberRemoved(ordinal);
        Writer note = message(kMemberRemoved);
        note.u32(ordinal);
        broadcast(note.take(), ordinal);
        return message(kAck).take();
      }
      case kMapPut: {
        std::string map = r.str();
        Bytes key = r.bytes();
        Bytes value = r.bytes();
        auto prev = localPut(map, key, std::move(value), true);
        Writer w = message(kMapPutResp);
        w.boolean(prev.has_value());
        w.bytes(prev ? *prev : Bytes{});
        return w.take();
      }
      case kReplicaPut: {
        std::string map = r.str();
        Bytes key = r.bytes();
        Bytes value = r.bytes();
        localPut(map, key, std::move(value), false);
        return message(kAck).take();
      }
      case kMapGet: {
        std::string map = r.str();
        Bytes key = r.bytes();
        auto value = localGet(map, key);
        Writer w = message(kMapGetResp);
        w.boolean(value.has_value());
        w.bytes(value ? *value : Bytes{});
        return w.take();
      }
      case kMapRemove: {
        std::string map = r.str();
        Bytes key = r.bytes();
        auto prev = localRemove(map, key, true);
        Writer w = message(kMapRemoveResp);
        w.boolean(prev.has_value());
        w.bytes(prev ? *prev : Bytes{});
        return w.take();
      }
      case kReplicaRemove: {
        std::string map = r.str();
        Bytes key = r.bytes();
        localRemove(map, key, false);
        return message(kAck).take();
      }
      case kMapSizeLocal: {
        std::string map = r.str();
        Writer w = message(kMapSizeResp);
        w.u64(ownedEntries(map).size());
        return w.take();
      }
      case kMapEntriesLocal: {
        std::string map = r.str();
        auto entries = ownedEntries(map);
        Writer w = message(kMapEntriesResp);
        w.u32(static_cast<std::uint32_t>(entries.size()));
        for (const auto& [k, v] : entries) {
          w.bytes(k);
          w.bytes(v);
        }
        return w.take();
      }
      case kMapClearLocal: {
        std::string map = r.str();
        std::lock_guard<std::mutex> lk(storeMu);
        store.erase(map);
        return message(kAck).take();
      }
      case kCellOp: {
        std::string cell = r.str();
        std::uint8_t op = r.u8();
        std::int64_t a = r.i64();
        std::int64_t b = r.i64();
        Writer w = message(kCellResp);
        std::lock_guard<std::mutex> lk(cellsMu);
        std::int64_t& value = cells[cell];
        switch (op) {
          case kCellGet:
            w.boolean(false);
            w.i64(value);
            break;
          case kCellSet:
            value = a;
            w.boolean(true);
            w.i64(value);
            break;
          case kCellXchg: {
            std::int64_t witnessed = value;
            value = a;
            w.boolean(true);
            w.i64(witnessed);
            break;
          }
          case kCellCas: {
            std::int64_t witnessed = value;
            bool swapped = witnessed == a;
            if (swapped) {
              value = b;
            }
            w.boolean(swapped);
            w.i64(witnessed);
            break;
          }
          default:
            w.boolean(false);
            w.i64(0);
        }
        return w.take();
      }
      case kTask: {
        r.u64();  // task id
        std::string name = r.str();
        Bytes payload = r.bytes();
        Writer w = message(kTaskResp);
        try {
          TaskFn fn = registry->find(name);
          TaskContext ctx{*owner};
          Bytes value = fn(ctx, payload);
          w.boolean(true);
          w.bytes(value);
          w.str("");
        } catch (const std::exception& e) {
          w.boolean(false);
          w.bytes(Bytes{});
          w.str(e.what());
        }
        return w.take();
      }
      default: {
        Writer w = message(kJoinReject);
        w.str("unsupported message type " + std::to_string(type));
        return w.take();
      }
    }
  }

  Bytes handleJoin(Reader& r) {
    std::string cluster = r.str();
    std::string label = r.str();
    std::string endpoint = r.str();
    if (cluster != options.clusterName) {
      Writer w = message(kJoinReject);
      w.str("cluster name mismatch: expected '" + options.clusterName + "'");
      return w.take();
    }
    if (!isSeed()) {
      Writer w = message(kJoinReject);
      w.str("joins must go through the seed endpoint");
      return w.take();
    }
    PeerInfo info;
    Bytes ack;
    {
      std::lock_guard<std::mutex> lk(stateMu);
      info.id.ordinal = nextOrdinal++;
      info.id.label = label.empty() ? "member-" + std::to_string(info.id.ordinal) : label;
      info.endpoint = endpoint;
      peers[info.id.ordinal] = info;
      table.addMember(info.id.ordinal);

      Writer w = message(kJoinAck);
      w.u32(info.id.ordinal);
      w.str(info.id.label);
      w.u32(options.partitionCount);
      w.u8(static_cast<std::uint8_t>(options.backupCount));
      const auto& assignment = table.assignment();
      w.u32(static_cast<std::uint32_t>(assignment.size()));
      for (std::uint32_t o : assignment) {
        w.u32(o);
      }
      w.u32(static_cast<std::uint32_t>(peers.size()));
      for (const auto& [ordinal, peer] : peers) {
        w.u32(ordinal);
        w.str(peer.id.label);
        w.str(peer.endpoint);
      }
      ack = w.take();
    }
    stateCv.notify_all();
    Writer note = message(kMemberAdded);
    note.u32(info.id.ordinal);
    note.str(info.id.label);
    note.str(info.endpoint);
    broadcast(note.take(), info.id.ordinal);
    fireEvent({MembershipEvent::Kind::Joined, info.id,
               [this] {
                 std::lock_guard<std::mutex> lk(stateMu);
                 return memberSnapshotLocked();
               }()});
    return ack;
  }

  TcpFabric* owner = nullptr;
};

namespace {

Socket tryBind(const Endpoint& e) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw GridError("socket() failed");
  }
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(e);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 64) != 0) {
    ::close(fd);
    return Socket();
  }
  return Socket(fd);
}

}  // namespace

TcpFabric::TcpFabric(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {
  impl_->owner = this;
}

std::unique_ptr<TcpFabric> TcpFabric::join(Options options, TaskRegistry& registry) {
  if (options.clusterName.empty()) {
    throw ConfigError("cluster name must be nonempty");
  }
  if (options.endpoints.empty()) {
    throw ConfigError("endpoint list must be nonempty");
  }
  {
    std::set<std::string> seen(options.endpoints.begin(), options.endpoints.end());
    if (seen.size() != options.endpoints.size()) {
      throw ConfigError("duplicate endpoint in the endpoint list");
    }
  }

  auto impl = std::make_unique<Impl>();
  impl->options = options;
  impl->registry = &registry;
  impl->table = PartitionTable(options.partitionCount);

  // Claim the first free endpoint; owning the first one makes us the seed.
  std::size_t boundIndex = options.endpoints.size();
  for (std::size_t i = 0; i < options.endpoints.size(); ++i) {
    Socket s = tryBind(parseEndpoint(options.endpoints[i]));
    if (s.valid()) {
      impl->listener = std::move(s);
      boundIndex = i;
      break;
    }
  }
  if (boundIndex == options.endpoints.size()) {
    throw GridError("no free endpoint available in the list");
  }
  impl->boundEndpoint = options.endpoints[boundIndex];

  auto fabric = std::unique_ptr<TcpFabric>(new TcpFabric(std::move(impl)));
  Impl& im = *fabric->impl_;

  im.acceptThread = std::thread([&im] {
    while (!im.closing.load()) {
      int fd = ::accept(im.listener.fd(), nullptr, nullptr);
      if (fd < 0) {
        return;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      auto sock = std::make_shared<Socket>(fd);
      {
        std::lock_guard<std::mutex> lk(im.inboundMu);
        im.inbound.push_back(sock);
      }
      im.connThreads.emplace_back([&im, sock] { im.serveConnection(sock); });
    }
  });

  if (boundIndex == 0) {
    // Seed: ordinal 0, master of the membership sequence.
    std::lock_guard<std::mutex> lk(im.stateMu);
    im.selfId = MemberId{0, options.label.empty() ? "member-0" : options.label};
    im.nextOrdinal = 1;
    im.peers[0] = PeerInfo{im.selfId, im.boundEndpoint};
    im.table.addMember(0);
    return fabric;
  }

  // Worker: join through the seed, retrying while it comes up.
  Writer w = message(kJoinReq);
  w.str(options.clusterName);
  w.str(options.label);
  w.str(im.boundEndpoint);
  Bytes joinFrame = w.take();
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(options.joinTimeoutS));
  for (;;) {
    try {
      Bytes reply = im.request(im.seedEndpoint(), joinFrame);
      Reader r(reply);
      r.u8();
      std::uint8_t type = r.u8();
      if (type == kJoinReject) {
        throw ConfigError("join rejected: " + r.str());
      }
      if (type != kJoinAck) {
        throw GridError("unexpected join reply");
      }
      std::lock_guard<std::mutex> lk(im.stateMu);
      im.selfId.ordinal = r.u32();
      im.selfId.label = r.str();
      std::uint32_t partitions = r.u32();
      int backups = r.u8();
      if (partitions != im.options.partitionCount || backups != im.options.backupCount) {
        throw ConfigError("partition/backup settings disagree with the seed");
      }
      std::uint32_t assignmentSize = r.u32();
      PartitionTable fresh(partitions);
      // Rebuild membership, then overwrite the assignment verbatim; the
      // minimal-move history is not replayable from a snapshot.
      std::vector<std::uint32_t> assignment(assignmentSize);
      for (auto& o : assignment) {
        o = r.u32();
      }
      std::uint32_t count = r.u32();
      im.peers.clear();
      for (std::uint32_t i = 0; i < count; ++i) {
        PeerInfo info;
        info.id.ordinal = r.u32();
        info.id.label = r.str();
        info.endpoint = r.str();
        im.peers[info.id.ordinal] = info;
      }
      for (const auto& [ordinal, info] : im.peers) {
        fresh.addMember(ordinal);
      }
      fresh.overwriteAssignment(assignment);
      im.table = std::move(fresh);
      return fabric;
    } catch (const ConfigError&) {
      throw;
    } catch (const GridError&) {
      if (std::chrono::steady_clock::now() >= deadline) {
        throw GridError("join failure: seed endpoint unreachable");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
}

TcpFabric::~TcpFabric() {
  impl_->closing = true;
  impl_->listener.close();
  {
    std::lock_guard<std::mutex> lk(impl_->connsMu);
    for (auto& [endpoint, conn] : impl_->conns) {
      conn->second.close();
    }
  }
  {
    std::lock_guard<std::mutex> lk(impl_->inboundMu);
    for (auto& sock : impl_->inbound) {
      sock->interrupt();
    }
  }
  if (impl_->acceptThread.joinable()) {
    impl_->acceptThread.join();
  }
  for (auto& t : impl_->connThreads) {
    if (t.joinable()) {
      t.join();
    }
  }
}

void TcpFabric::leave() {
  if (impl_->isSeed()) {
    return;  // the seed outlives the run; workers leave
  }
  Writer w = message(kLeave);
  w.u32(impl_->selfId.ordinal);
  try {
    impl_->request(impl_->seedEndpoint(), w.take());
  } catch (const GridError&) {
  }
}

bool TcpFabric::awaitMembers(std::size_t count, double timeoutS) {
  std::unique_lock<std::mutex> lk(impl_->stateMu);
  return impl_->stateCv.wait_for(lk, std::chrono::duration<double>(timeoutS),
                                 [&] { return impl_->peers.size() >= count; });
}

const std::string& TcpFabric::boundEndpoint() const { return impl_->boundEndpoint; }

MemberId TcpFabric::self() const {
  std::lock_guard<std::mutex> lk(impl_->stateMu);
  return impl_->selfId;
}

std::vector<MemberId> TcpFabric::members() const {
  std::lock_guard<std::mutex> lk(impl_->stateMu);
  return impl_->memberSnapshotLocked();
}

std::uint32_t TcpFabric::partitionCount() const { return impl_->options.partitionCount; }

MemberId TcpFabric::ownerOf(const Bytes& key) const {
  std::lock_guard<std::mutex> lk(impl_->stateMu);
  std::uint32_t owner = impl_->table.ownerOf(impl_->table.partitionOf(key));
  return impl_->peers.at(owner).id;
}

std::optional<Bytes> TcpFabric::mapPut(std::string_view map, const Bytes& key, Bytes value) {
  MemberId owner = ownerOf(key);
  if (owner.ordinal == impl_->selfId.ordinal) {
    return impl_->localPut(map, key, std::move(value), true);
  }
  Writer w = message(kMapPut);
  w.str(std::string(map));
  w.bytes(key);
  w.bytes(value);
  Bytes reply = impl_->request(impl_->endpointOf(owner.ordinal), w.take());
  Reader r(reply);
  r.u8();
  if (r.u8() != kMapPutResp) {
    throw GridError("unexpected put reply");
  }
  bool has = r.boolean();
  Bytes prev = r.bytes();
  if (has) {
    return prev;
  }
  return std::nullopt;
}

std::optional<Bytes> TcpFabric::mapGet(std::string_view map, const Bytes& key) {
  MemberId owner = ownerOf(key);
  if (owner.ordinal == impl_->selfId.ordinal) {
    return impl_->localGet(map, key);
  }
  Writer w = message(kMapGet);
  w.str(std::string(map));
  w.bytes(key);
  Bytes reply = impl_->request(impl_->endpointOf(owner.ordinal), w.take());
  Reader r(reply);
  r.u8();
  if (r.u8() != kMapGetResp) {
    throw GridError("unexpected get reply");
  }
  bool has = r.boolean();
  Bytes value = r.bytes();
  if (has) {
    return value;
  }
  return std::nullopt;
}

std::optional<Bytes> TcpFabric::mapGetLocal(std::string_view map, const Bytes& key) {
  return impl_->localGet(map, key);
}

std::optional<Bytes> TcpFabric::mapRemove(std::string_view map, const Bytes& key) {
  MemberId owner = ownerOf(key);
  if (owner.ordinal == impl_->selfId.ordinal) {
    return impl_->localRemove(map, key, true);
  }
  Writer w = message(kMapRemove);
  w.str(std::string(map));
  w.bytes(key);
  Bytes reply = impl_->request(impl_->endpointOf(owner.ordinal), w.take());
  Reader r(reply);
  r.u8();
  if (r.u8() != kMapRemoveResp) {
    throw GridError("unexpected remove reply");
  }
  bool has = r.boolean();
  Bytes prev = r.bytes();
  if (has) {
    return prev;
  }
  return std::nullopt;
}

std::size_t TcpFabric::mapSize(std::string_view map) {
  std::size_t total = 0;
  for (const MemberId& m : members()) {
    if (m.ordinal == impl_->selfId.ordinal) {
      total += impl_->ownedEntries(map).size();
      continue;
    }
    Writer w = message(kMapSizeLocal);
    w.str(std::string(map));
    Bytes reply = impl_->request(impl_->endpointOf(m.ordinal), w.take());
    Reader r(reply);
    r.u8();
    if (r.u8() != kMapSizeResp) {
      throw GridError("unexpected size reply");
    }
    total += r.u64();
  }
  return total;
}

std::vector<std::pair<Bytes, Bytes>> TcpFabric::mapEntries(std::string_view map) {
  std::vector<std::pair<Bytes, Bytes>> out;
  for (const MemberId& m : members()) {
    if (m.ordinal == impl_->selfId.ordinal) {
      auto mine = impl_->ownedEntries(map);
      out.insert(out.end(), mine.begin(), mine.end());
      continue;
    }
    Writer w = message(kMapEntriesLocal);
    w.str(std::string(map));
    Bytes reply = impl_->request(impl_->endpointOf(m.ordinal), w.take());
    Reader r(reply);
    r.u8();
    if (r.u8() != kMapEntriesResp) {
      throw GridError("unexpected entries reply");
    }
    std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      Bytes k = r.bytes();
      Bytes v = r.bytes();
      out.emplace_back(std::move(k), std::move(v));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void TcpFabric::mapClear(std::string_view map) {
  for (const MemberId& m : members()) {
    if (m.ordinal == impl_->selfId.ordinal) {
      std::lock_guard<std::mutex> lk(impl_->storeMu);
      impl_->store.erase(std::string(map));
      continue;
    }
    Writer w = message(kMapClearLocal);
    w.str(std::string(map));
    impl_->request(impl_->endpointOf(m.ordinal), w.take());
  }
}

bool TcpFabric::mapLostData(std::string_view) {
  return false;  // crash recovery is out of scope for the TCP transport
}

namespace {
std::pair<bool, std::int64_t> decodeCellResp(const Bytes& reply) {
  Reader r(reply);
  r.u8();
  if (r.u8() != kCellResp) {
    throw GridError("unexpected cell reply");
  }
  bool flag = r.boolean();
  std::int64_t value = r.i64();
  return {flag, value};
}
}  // namespace

std::int64_t TcpFabric::cellGet(std::string_view cell) {
  Bytes frame = [&] {
    Writer w = message(kCellOp);
    w.str(std::string(cell));
    w.u8(kCellGet);
    w.i64(0);
    w.i64(0);
    return w.take();
  }();
  if (impl_->isSeed()) {
    return decodeCellResp(impl_->handleFrame(frame)).second;
  }
  return decodeCellResp(impl_->request(impl_->seedEndpoint(), frame)).second;
}

void TcpFabric::cellSet(std::string_view cell, std::int64_t value) {
  Bytes frame = [&] {
    Writer w = message(kCellOp);
    w.str(std::string(cell));
    w.u8(kCellSet);
    w.i64(value);
    w.i64(0);
    return w.take();
  }();
  if (impl_->isSeed()) {
    impl_->handleFrame(frame);
  } else {
    impl_->request(impl_->seedEndpoint(), frame);
  }
}

std::int64_t TcpFabric::cellExchange(std::string_view cell, std::int64_t value) {
  Bytes frame = [&] {
    Writer w = message(kCellOp);
    w.str(std::string(cell));
    w.u8(kCellXchg);
    w.i64(value);
    w.i64(0);
    return w.take();
  }();
  if (impl_->isSeed()) {
    return decodeCellResp(impl_->handleFrame(frame)).second;
  }
  return decodeCellResp(impl_->request(impl_->seedEndpoint(), frame)).second;
}

CasResult TcpFabric::cellCompareExchange(std::string_view cell, std::int64_t expected,
                                         std::int64_t desired) {
  Bytes frame = [&] {
    Writer w = message(kCellOp);
    w.str(std::string(cell));
    w.u8(kCellCas);
    w.i64(expected);
    w.i64(desired);
    return w.take();
  }();
  auto [swapped, witnessed] = impl_->isSeed()
                                  ? decodeCellResp(impl_->handleFrame(frame))
                                  : decodeCellResp(impl_->request(impl_->seedEndpoint(), frame));
  return {swapped, witnessed};
}

std::vector<TaskResult> TcpFabric::execute(const TaskEnvelope& envelope) {
  std::vector<MemberId> targets;
  switch (envelope.routing) {
    case TaskEnvelope::Routing::KeyOwner:
      targets.push_back(ownerOf(envelope.key));
      break;
    case TaskEnvelope::Routing::Member: {
      std::lock_guard<std::mutex> lk(impl_->stateMu);
      auto it = impl_->peers.find(envelope.targetOrdinal);
      if (it == impl_->peers.end()) {
        throw GridError("no such member: ordinal " + std::to_string(envelope.targetOrdinal));
      }
      targets.push_back(it->second.id);
      break;
    }
    case TaskEnvelope::Routing::AllMembers:
      targets = members();
      break;
  }
  Writer w = message(kTask);
  w.u64(impl_->nextTaskId++);
  w.str(envelope.name);
  w.bytes(envelope.payload);
  Bytes frame = w.take();

  std::vector<TaskResult> results;
  for (const MemberId& target : targets) {
    TaskResult result;
    result.ordinal = target.ordinal;
    try {
      Bytes reply = target.ordinal == impl_->selfId.ordinal
                        ? impl_->handleFrame(frame)
                        : impl_->request(impl_->endpointOf(target.ordinal), frame);
      Reader r(reply);
      r.u8();
      if (r.u8() != kTaskResp) {
        throw GridError("unexpected task reply");
      }
      result.ok = r.boolean();
      result.value = r.bytes();
      result.error = r.str();
    } catch (const GridError& e) {
      result.ok = false;
      result.error = e.what();
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::uint64_t TcpFabric::addMembershipListener(
    std::function<void(const MembershipEvent&)> listener) {
  std::lock_guard<std::mutex> lk(impl_->listenersMu);
  std::uint64_t id = impl_->nextListenerId++;
  impl_->listeners[id] = std::move(listener);
  return id;
}

void TcpFabric::removeMembershipListener(std::uint64_t id) {
  std::lock_guard<std::mutex> lk(impl_->listenersMu);
  impl_->listeners.erase(id);
}

}  // namespace dgsim::grid
