#include "dgsim/sim/entities.hpp"

namespace dgsim::sim {

namespace {
constexpr std::uint8_t kTagVm = 10;
constexpr std::uint8_t kTagCloudlet = 11;
}  // namespace

Bytes encodeVm(const Vm& vm) {
  Writer w = recordWriter(kTagVm);
  w.u32(static_cast<std::uint32_t>(vm.id));
  w.u32(static_cast<std::uint32_t>(vm.userId));
  w.f64(vm.mips);
  w.u32(static_cast<std::uint32_t>(vm.numberOfPes));
  w.u32(static_cast<std::uint32_t>(vm.ramMb));
  w.u32(static_cast<std::uint32_t>(vm.bwMbps));
  w.u32(static_cast<std::uint32_t>(vm.sizeMb));
  w.str(vm.vmmName);
  w.u8(static_cast<std::uint8_t>(vm.schedulerKind));
  return w.take();
}

Vm decodeVm(std::span<const std::uint8_t> record) {
  Reader r = recordReader(record, kTagVm);
  Vm vm;
  vm.id = static_cast<int>(r.u32());
  vm.userId = static_cast<int>(r.u32());
  vm.mips = r.f64();
  vm.numberOfPes = static_cast<int>(r.u32());
  vm.ramMb = static_cast<int>(r.u32());
  vm.bwMbps = static_cast<int>(r.u32());
  vm.sizeMb = static_cast<int>(r.u32());
  vm.vmmName = r.str();
  vm.schedulerKind = static_cast<SchedulerKind>(r.u8());
  return vm;
}

Bytes encodeCloudlet(const Cloudlet& c) {
  Writer w = recordWriter(kTagCloudlet);
  w.u32(static_cast<std::uint32_t>(c.id));
  w.u32(static_cast<std::uint32_t>(c.userId));
  w.f64(c.lengthMi);
  w.u32(static_cast<std::uint32_t>(c.pesRequired));
  w.boolean(c.boundVmId.has_value());
  w.u32(c.boundVmId ? static_cast<std::uint32_t>(*c.boundVmId) : 0);
  w.boolean(c.withWorkload);
  w.u8(static_cast<std::uint8_t>(c.status));
  return w.take();
}

Cloudlet decodeCloudlet(std::span<const std::uint8_t> record) {
  Reader r = recordReader(record, kTagCloudlet);
  Cloudlet c;
  c.id = static_cast<int>(r.u32());
  c.userId = static_cast<int>(r.u32());
  c.lengthMi = r.f64();
  c.pesRequired = static_cast<int>(r.u32());
  bool bound = r.boolean();
  std::uint32_t vmId = r.u32();
  if (bound) {
    c.boundVmId = static_cast<int>(vmId);
  }
  c.withWorkload = r.boolean();
  c.status = static_cast<CloudletStatus>(r.u8());
  return c;
}

Vm vmFromId(int id, int numUsers) {
  Vm vm;
  vm.id = id;
  vm.userId = numUsers > 0 ? id % numUsers : 0;
  vm.mips = 500.0 * (1 + id % 4);
  vm.numberOfPes = 1;
  vm.ramMb = 512;
  vm.bwMbps = 1000;
  vm.sizeMb = 10000;
  vm.vmmName = "Xen";
  vm.schedulerKind = SchedulerKind::TimeShared;
  return vm;
}

Cloudlet cloudletFromId(int id, int numUsers, bool withWorkload) {
  Cloudlet c;
  c.id = id;
  c.userId = numUsers > 0 ? id % numUsers : 0;
  c.lengthMi = 250.0 * (1 + id % 8);
  c.pesRequired = 1;
  c.withWorkload = withWorkload;
  c.status = CloudletStatus::Created;
  return c;
}

Host hostFromId(int dcId, int hostIndex, int hostsPerDc) {
  Host h;
  h.id = dcId * hostsPerDc + hostIndex;
  for (int i = 0; i < 4; ++i) {
    h.peList.push_back(Pe{i, 2500.0, PeStatus::Free});
  }
  h.ramMb = 8192;
  h.bwMbps = 10000;
  h.storageMb = 1000000;
  return h;
}

Datacenter datacenterFromId(int id, int hostsPerDc) {
  Datacenter dc;
  dc.id = id;
  dc.costPerSec = 0.1;
  dc.hostList.reserve(hostsPerDc);
  for (int i = 0; i < hostsPerDc; ++i) {
    dc.hostList.push_back(hostFromId(id, i, hostsPerDc));
  }
  return dc;
}

}  // namespace dgsim::sim
