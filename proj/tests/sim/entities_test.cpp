#include "dgsim/sim/entities.hpp"

#include "doctest.h"

using namespace dgsim;
using namespace dgsim::sim;

TEST_CASE("pe status codes are 1/2/3") {
  CHECK(static_cast<int>(PeStatus::Free) == 1);
  CHECK(static_cast<int>(PeStatus::Busy) == 2);
  CHECK(static_cast<int>(PeStatus::Failed) == 3);
}

TEST_CASE("host PEs share one rating") {
  Host h = hostFromId(2, 3, 20);
  CHECK(h.id == 43);
  REQUIRE(h.peCount() == 4);
  for (const Pe& pe : h.peList) {
    CHECK(pe.mips == h.peList[0].mips);
    CHECK(pe.status == PeStatus::Free);
  }
}

TEST_CASE("vm record survives the codec") {
  Vm vm = vmFromId(17, 200);
  Bytes record = encodeVm(vm);
  CHECK(decodeVm(record) == vm);
}

TEST_CASE("cloudlet record survives the codec, bound and unbound") {
  Cloudlet c = cloudletFromId(9, 200, true);
  CHECK(decodeCloudlet(encodeCloudlet(c)) == c);
  c.boundVmId = 4;
  c.status = CloudletStatus::Finished;
  CHECK(decodeCloudlet(encodeCloudlet(c)) == c);
}

TEST_CASE("entity attributes derive from ids alone") {
  // Same id, same attributes; the creating member plays no role.
  CHECK(vmFromId(5, 200) == vmFromId(5, 200));
  CHECK(cloudletFromId(11, 200, false) == cloudletFromId(11, 200, false));
  CHECK(vmFromId(0, 200).mips == 500.0);
  CHECK(vmFromId(3, 200).mips == 2000.0);
  CHECK(cloudletFromId(0, 200, false).lengthMi == 250.0);
  CHECK(cloudletFromId(7, 200, false).lengthMi == 2000.0);
}

TEST_CASE("datacenter layout is deterministic") {
  Datacenter a = datacenterFromId(3, 20);
  Datacenter b = datacenterFromId(3, 20);
  REQUIRE(a.hostList.size() == 20);
  for (std::size_t i = 0; i < a.hostList.size(); ++i) {
    CHECK(a.hostList[i].id == b.hostList[i].id);
  }
}
