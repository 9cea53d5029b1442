#pragma once

#include <iterator>
#include <map>
#include <memory>

#include "rflow/flow.hpp"

namespace rflow::detail {

// Geometry of a trajectory's metric at a beta, reusing recent evaluations
// (RK4 endpoints are shared between consecutive substeps of a backward march).
class GeometryCache {
public:
  explicit GeometryCache(const FlowTrajectory& traj) : traj_(traj) {}

  const MetricGeometry& at(double beta) {
    auto it = cache_.find(beta);
    if (it != cache_.end()) return *it->second;
    if (cache_.size() > 8) cache_.erase(std::prev(cache_.end()));
    auto geom = std::make_shared<MetricGeometry>(traj_.metric_at(beta));
    return *cache_.emplace(beta, std::move(geom)).first->second;
  }

private:
  const FlowTrajectory& traj_;
  std::map<double, std::shared_ptr<MetricGeometry>> cache_;
};

} // namespace rflow::detail
