#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgsim/grid/local_cluster.hpp"
#include "dgsim/scale/board.hpp"

namespace dgsim::scale {

/// One node's placements: experiment name -> roles hosted there.
/// Roles: 'S' master/supervisor, 'I' initiator (worker), 'C' coordinator.
struct NodePlacement {
  std::string node;
  std::map<std::string, std::string> roles;  // experiment -> e.g. "S", "II", "SC"
};

/// Renders the node x experiment matrix, cells like "S+C", "2I", "0".
std::string formatDeploymentMatrix(const std::vector<std::string>& experiments,
                                   const std::vector<NodePlacement>& nodes);

/// A node that holds one membership in every tenant cluster it coordinates
/// plus the coordination cluster, giving a combined view and scaling
/// authority over all of them.
class Coordinator {
 public:
  struct TenantRuntime {
    std::string name;
    grid::LocalCluster* cluster = nullptr;
  };

  struct TenantStatus {
    std::string name;
    std::size_t memberCount = 0;
    ScalingBoard::Flags flags;
    std::int64_t key = 0;
    std::int64_t workers = 0;
  };

  Coordinator(grid::Fabric& coordinationFabric, std::vector<TenantRuntime> tenants);

  const std::vector<std::string>& tenantNames() const { return names_; }
  ScalingBoard& board() { return board_; }
  grid::LocalCluster& clusterOf(const std::string& tenant);

  TenantStatus status(const std::string& tenant);
  std::vector<TenantStatus> combinedStatus();

 private:
  std::vector<TenantRuntime> tenants_;
  std::vector<std::string> names_;
  ScalingBoard board_;
};

}  // namespace dgsim::scale
