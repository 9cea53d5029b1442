#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rflow/grid.hpp"
#include "rflow/pinching.hpp"

namespace rflow {

enum class ModelKind { FlatTorus, RoundSphere, BergerSphere };

std::string to_string(ModelKind m);
ModelKind parse_model_kind(const std::string& name);

/// Locally homogeneous model in the left-invariant coframe theta_i:
///   flat / round:  g = c (theta_1^2 + theta_2^2 + theta_3^2)
///   berger:        g = a (theta_1^2 + theta_2^2) + c theta_3^2
/// For the sphere models the coframe is dual to left-invariant fields on SU(2)
/// with [X_i, X_j] = 2 X_k (cyclic), so c = 1 is the unit round sphere.
struct HomogeneousState {
  ModelKind model = ModelKind::RoundSphere;
  /// {c} for flat/round, {a, c} for Berger.
  std::vector<double> coefficients{1.0};
  /// K = extrinsic * g(0): components held fixed along the flow (exact for
  /// flat/round where K stays Lichnerowicz-harmonic).
  std::optional<double> extrinsic;
  /// Spatially constant matter density (invariant under the heat flow).
  std::optional<double> matter;

  static HomogeneousState flat(double c) { return {ModelKind::FlatTorus, {c}, {}, {}}; }
  static HomogeneousState round(double c) { return {ModelKind::RoundSphere, {c}, {}, {}}; }
  static HomogeneousState berger(double a, double c) { return {ModelKind::BergerSphere, {a, c}, {}, {}}; }
};

/// Throws ValidationError on a wrong coefficient count or a non-positive
/// coefficient.
void validate(const HomogeneousState& s);

/// Coefficients of g along (theta_1^2, theta_2^2, theta_3^2).
std::array<double, 3> frame_metric(const HomogeneousState& s);
/// Eigenvalues of g^{-1} Ric along the coframe directions.
std::array<double, 3> ricci_eigenvalues(const HomogeneousState& s);
double scalar_curvature(const HomogeneousState& s);
double riemann_norm(const HomogeneousState& s);
/// Volume of the model space: (2 pi)^3 c^{3/2} for the torus of side 2 pi,
/// 2 pi^2 sqrt(a a c) for the sphere models.
double model_volume(const HomogeneousState& s);

enum class FlowNormalization { Plain, VolumeNormalized };

/// d(coefficients)/d beta under -2 Ric (+ 2/3 <R> g when normalized).
std::vector<double> ode_rhs(const HomogeneousState& s, FlowNormalization norm = FlowNormalization::Plain);

struct ModelSample {
  double beta = 0.0;
  HomogeneousState state;
  double scalar = 0.0;
  double sup_rm = 0.0;
  PinchingReport pinching;
};

struct ModelRunOptions {
  double step = 1e-3;
  FlowNormalization normalization = FlowNormalization::Plain;
  /// Blow-up once |Rm| exceeds ceiling_factor * (initial |Rm| + 1).
  double ceiling_factor = 1e6;
  PinchingOptions pinching;
};

/// Fixed-step RK4 from beta = 0 to `beta_end` (the last step is shortened to
/// land on it). Samples every step. Throws BlowUpError at the step where a
/// coefficient turns non-positive or |Rm| passes the ceiling.
std::vector<ModelSample> integrate_model(const HomogeneousState& initial, double beta_end,
                                         const ModelRunOptions& opt = {});
/// The same march writing into `out`, so a partial run survives a throw.
void integrate_model_into(std::vector<ModelSample>& out, const HomogeneousState& initial,
                          double beta_end, const ModelRunOptions& opt = {});

/// Extinction time of the plain flow (c0 / 4 for the round model, infinity for
/// the torus; the Berger time is located by integration).
double extinction_time(const HomogeneousState& initial);

/// Reference solution of the plain flow at `beta`: closed form for flat and
/// round, Richardson-controlled RK4 (tolerance 1e-12) for Berger.
/// Throws ExtinctionError when beta reaches the extinction time.
HomogeneousState analytic_solution(const HomogeneousState& initial, double beta);

PinchingReport pinching_report(const HomogeneousState& s, const PinchingOptions& opt = {});

/// The model's metric and Ricci tensor written as constant fields on a chart,
/// identifying the coframe with dx^i. Lets grid diagnostics be checked against
/// exact model curvature.
struct ChartSample {
  MetricField metric;
  SymTensorField ricci;
};
ChartSample sample_on_chart(const HomogeneousState& s, const GridChart& chart);

void write_model_csv(std::ostream& os, const std::vector<ModelSample>& run);

} // namespace rflow
