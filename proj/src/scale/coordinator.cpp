#include "dgsim/scale/coordinator.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dgsim::scale {

namespace {
std::string formatCell(const std::string& roles) {
  if (roles.empty()) {
    return "0";
  }
  std::string out;
  for (char role : {'S', 'I', 'C'}) {
    auto count = std::count(roles.begin(), roles.end(), role);
    if (count == 0) {
      continue;
    }
    if (!out.empty()) {
      out += "+";
    }
    if (count > 1) {
      out += std::to_string(count);
    }
    out += role;
  }
  return out;
}
}  // namespace

std::string formatDeploymentMatrix(const std::vector<std::string>& experiments,
                                   const std::vector<NodePlacement>& nodes) {
  std::ostringstream out;
  out << "node";
  for (const auto& e : experiments) {
    out << "," << e;
  }
  out << "\n";
  for (const auto& node : nodes) {
    out << node.node;
    for (const auto& e : experiments) {
      auto it = node.roles.find(e);
      out << "," << formatCell(it == node.roles.end() ? "" : it->second);
    }
    out << "\n";
  }
  return out.str();
}

Coordinator::Coordinator(grid::Fabric& coordinationFabric,
                         std::vector<TenantRuntime> tenants)
    : tenants_(std::move(tenants)), board_(coordinationFabric) {
  std::set<std::string> seen;
  for (const auto& t : tenants_) {
    if (!seen.insert(t.name).second) {
      throw grid::ConfigError("duplicate tenant name '" + t.name + "'");
    }
    names_.push_back(t.name);
    board_.initTenant(t.name);
  }
}

grid::LocalCluster& Coordinator::clusterOf(const std::string& tenant) {
  for (auto& t : tenants_) {
    if (t.name == tenant) {
      return *t.cluster;
    }
  }
  throw grid::ConfigError("unknown tenant '" + tenant + "'");
}

Coordinator::TenantStatus Coordinator::status(const std::string& tenant) {
  TenantStatus s;
  s.name = tenant;
  s.memberCount = clusterOf(tenant).memberCount();
  s.flags = board_.flags(tenant);
  s.key = board_.key(tenant);
  s.workers = board_.workerCount(tenant);
  return s;
}

std::vector<Coordinator::TenantStatus> Coordinator::combinedStatus() {
  std::vector<TenantStatus> out;
  out.reserve(names_.size());
  for (const auto& name : names_) {
    out.push_back(status(name));
  }
  return out;
}

}  // namespace dgsim::scale
