#pragma once

#include <optional>
#include <string>

#include "rflow/geometry.hpp"

namespace rflow {

/// Physical data on one slice: metric, extrinsic curvature, matter and
/// momentum densities, cosmological constant and gravitational constant.
struct InitialDataSet {
  MetricField g;
  SymTensorField K;
  ScalarField rho;
  CovectorField J;
  double Lambda = 0.0;
  double G = 1.0;
  /// Ricci tensor to use instead of the stencil one. Set for constant samples
  /// of curved model geometries, whose curvature the chart cannot see.
  std::optional<SymTensorField> model_ricci;

  explicit InitialDataSet(const MetricField& metric)
      : g(metric), K(metric.chart()), rho(metric.chart()), J(metric.chart()) {}
};

/// R + k^2 - K^a_b K^b_a - 16 pi G rho - 2 Lambda
ScalarField hamiltonian_residual(const InitialDataSet& d);
ScalarField hamiltonian_residual(const MetricGeometry& geom, const InitialDataSet& d);
/// nabla_b K^b_a - nabla_a k - 8 pi G J_a
CovectorField momentum_residual(const InitialDataSet& d);
CovectorField momentum_residual(const MetricGeometry& geom, const InitialDataSet& d);

/// rho - (R + k^2 - K.K - 2 Lambda) / (16 pi G); equals -residual / (16 pi G).
ScalarField backreaction_phi(const InitialDataSet& d);
/// J_a - (nabla_b K^b_a - nabla_a k) / (8 pi G)
CovectorField backreaction_psi(const InitialDataSet& d);

/// nabla_b K^b_a - nabla_a k, the divergence side of the momentum constraint.
CovectorField momentum_divergence(const MetricGeometry& geom, const SymTensorField& K);
/// R + k^2 - K.K with the given Ricci tensor.
ScalarField hamiltonian_geometry(const MetricGeometry& geom, const SymTensorField& ricci, const SymTensorField& K);

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};
/// L1 and L2 against d mu_g, sup over nodes.
Norms norms(const MetricField& g, const ScalarField& u);
/// Norms of the pointwise length sqrt(g^ab v_a v_b).
Norms norms(const MetricGeometry& geom, const CovectorField& v);

struct CurvatureSplit {
  double C = 0.0;       // <R> / 6
  SymTensorField delta; // Ric - 2 C g
};
CurvatureSplit constant_curvature_fit(const MetricField& g, const SymTensorField& ricci);

struct BackreactionReport {
  ScalarField phi;
  CovectorField psi;
  Norms phi_norms;
  Norms psi_norms;
  CurvatureSplit split;
};
BackreactionReport backreaction_report(const InitialDataSet& d);

struct EnergyConditions {
  bool weak = true;
  bool dominant = true;
  double weak_margin = 0.0;     // min rho
  Node weak_node{};
  double dominant_margin = 0.0; // min (rho - |J|_g)
  Node dominant_node{};
};
EnergyConditions validate(const InitialDataSet& d);

/// Initial-data recipe. The background fixes (g, K); the perturbations are
/// fixed smooth patterns scaled by the amplitudes. rho and J are then solved
/// from the two constraints so both residuals vanish.
struct InitialDataSpec {
  enum class Background { Flat, Flrw, ConstantCurvature };
  Background background = Background::Flat;
  double scale_factor = 1.0; // FLRW a
  double hubble = 0.0;       // FLRW H
  double curvature = 0.0;    // sectional curvature of the constant sample
  double metric_amplitude = 0.0;
  double extrinsic_amplitude = 0.0; // transverse-traceless part of K
  double momentum_amplitude = 0.0;  // conformal part lambda(x) g of K, which sources J
  double Lambda = 0.0;
  double G = 1.0;
};

/// Raised when the solved data break an energy condition.
class InadmissibleDataError : public ValidationError {
public:
  InadmissibleDataError(const std::string& which, const Node& node, double margin);
  const Node& node() const { return node_; }
  double margin() const { return margin_; }

private:
  Node node_;
  double margin_;
};

InitialDataSet generate_initial_data(const GridChart& chart, const InitialDataSpec& spec);

/// The fixed perturbation patterns used by generate_initial_data.
SymTensorField metric_perturbation_pattern(const GridChart& chart);
SymTensorField tt_pattern(const GridChart& chart);
ScalarField conformal_pattern(const GridChart& chart);

} // namespace rflow
