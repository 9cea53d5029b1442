#pragma once

#include <span>

#include "rflow/grid.hpp"

namespace rflow {

/// Everything the flow and kernel solvers need from one metric sample:
/// inverse, volume density, connection and its gradient, and the curvature
/// tensors. Built once per metric and then shared by every operator applied
/// against that metric.
///
/// Riemann is stored as the symmetric 3x3 matrix of R_abcd over the bivector
/// basis (12), (13), (23), in the convention R_abcd = k (g_ac g_bd - g_ad g_bc)
/// for constant sectional curvature k, so Ric_bd = g^ac R_abcd.
class MetricGeometry {
public:
  explicit MetricGeometry(const MetricField& g);

  const MetricField& metric() const { return g_; }
  const GridChart& chart() const { return g_.chart(); }

  const SymTensorField& inverse() const { return inverse_; }
  const ScalarField& sqrt_det() const { return sqrt_det_; }
  /// Slot 3 p + a holds d_a g_p.
  const Field<18>& metric_gradient() const { return dg_; }
  const ConnectionField& connection() const { return gamma_; }
  /// Slot 18 i + 6 c + sym_index(a, b) holds d_i Gamma^c_ab.
  const Field<54>& connection_gradient() const { return dgamma_; }
  /// g^ab Gamma^c_ab
  const CovectorField& contracted_connection() const { return gamma_trace_; }
  const SymTensorField& ricci() const { return ricci_; }
  const ScalarField& scalar_curvature() const { return scalar_; }
  const SymTensorField& riemann_bivector() const { return riemann_; }
  /// Pointwise Frobenius norm sqrt(R_abcd R^abcd).
  const ScalarField& riemann_norm() const { return rm_norm_; }

  double sup_riemann_norm() const;
  double min_det() const;
  double volume() const;

  /// R_abcd at node i, expanded from the bivector storage.
  void riemann_full(std::size_t i, double (&r)[3][3][3][3]) const;

private:
  MetricField g_;
  SymTensorField inverse_;
  ScalarField sqrt_det_;
  Field<18> dg_;
  ConnectionField gamma_;
  Field<54> dgamma_;
  CovectorField gamma_trace_;
  SymTensorField ricci_;
  ScalarField scalar_;
  SymTensorField riemann_;
  ScalarField rm_norm_;
};

ConnectionField christoffel(const MetricField& g);
SymTensorField ricci(const MetricField& g);
ScalarField scalar_curvature(const MetricField& g);
double riemann_norm_sup(const MetricField& g);

/// Delta u = g^ab d_a d_b u - g^ab Gamma^c_ab d_c u
/// (the expanded form of |g|^{-1/2} d_a(|g|^{1/2} g^ab d_b u)).
ScalarField laplace_beltrami(const MetricGeometry& geom, const ScalarField& u);
ScalarField laplace_beltrami(const MetricField& g, const ScalarField& u);

/// g^ab d_a u d_b u
ScalarField gradient_norm2(const MetricGeometry& geom, const ScalarField& u);

/// Lichnerowicz-DeRham Laplacian on covariant symmetric 2-tensors:
/// nabla^i nabla_i K_ab - R_as K^s_b - R_bs K^s_a + 2 R_asbt K^st.
SymTensorField lichnerowicz_laplacian(const MetricGeometry& geom, const SymTensorField& k);
SymTensorField lichnerowicz_laplacian(const MetricField& g, const SymTensorField& k);

/// Same operator for contravariant components E^ab (indices are lowered,
/// the operator applied, and the result raised again at fixed metric).
SymTensorField lichnerowicz_laplacian_upper(const MetricGeometry& geom, const SymTensorField& e);

SymTensorField raise(const MetricGeometry& geom, const SymTensorField& t);
SymTensorField lower(const MetricField& g, const SymTensorField& t);
/// g^bc nabla_c T_ba
CovectorField covariant_divergence(const MetricGeometry& geom, const SymTensorField& t);

/// g^ab T_ab
ScalarField trace(const MetricGeometry& geom, const SymTensorField& t);

/// Periodic trapezoid rule: sum over nodes of u sqrt(det g) times cell volume.
double integrate(const MetricGeometry& geom, const ScalarField& u);
double integrate(const MetricField& g, const ScalarField& u);
/// The same sum restricted to the listed nodes, in the listed order.
double integrate(const MetricField& g, const ScalarField& u, std::span<const std::size_t> nodes);
double volume(const MetricField& g);

} // namespace rflow
