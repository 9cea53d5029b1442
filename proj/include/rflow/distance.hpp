#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "rflow/grid.hpp"

namespace rflow {

/// Geodesic distance from a source node, defined on the guard box: nodes whose
/// minimal periodic offset from the source is strictly less than half a
/// period along every axis. Outside the box the wrapping is ambiguous.
class DistanceField {
public:
  DistanceField(const GridChart& chart, const Node& source);

  const GridChart& chart() const { return values_.chart(); }
  const Node& source() const { return source_; }
  bool covers(const Node& x) const;
  /// Throws InjectivityGuardError outside the guard box.
  double at(const Node& x) const;
  /// NaN outside the guard box.
  const ScalarField& values() const { return values_; }
  /// Node the first-arrival path to x comes through (x itself at the source).
  std::size_t parent(std::size_t i) const { return parent_[i]; }

private:
  friend DistanceField geodesic_distance(const MetricField& g, const Node& y);
  Node source_;
  ScalarField values_;
  std::vector<std::size_t> parent_;
};

/// First-arrival solution of |grad d|_g = 1, d(y) = 0 by Gauss-Seidel fast
/// sweeping over the guard box, with local updates on the eight octant
/// simplices of each node (and their faces and edges). A metric that is
/// constant over the box gets the closed form sqrt(dx^T g dx) instead.
DistanceField geodesic_distance(const MetricField& g, const Node& y);

/// Parallel transport from the source: at each covered node the matrix P with
/// V^a(x) = P^a_b V^b(y), integrated along the polyline of first-arrival
/// parents with a midpoint (Cayley) rule per segment.
class TransportField {
public:
  const DistanceField& distance() const { return distance_; }
  /// Throws InjectivityGuardError outside the guard box.
  const Eigen::Matrix3d& at(const Node& x) const;
  const Eigen::Matrix3d& operator[](std::size_t i) const { return p_[i]; }

private:
  friend TransportField parallel_transport(const MetricField& g, const Node& y);
  explicit TransportField(DistanceField d) : distance_(std::move(d)) {}
  DistanceField distance_;
  std::vector<Eigen::Matrix3d> p_;
};

TransportField parallel_transport(const MetricField& g, const Node& y);

} // namespace rflow
