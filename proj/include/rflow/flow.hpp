#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rflow/constraints.hpp"
#include "rflow/geometry.hpp"
#include "rflow/pinching.hpp"

namespace rflow {

enum class Gauge { Plain, DeTurck, VolumeNormalized };
enum class DeTurckBackground { Initial, Flat };

std::string to_string(Gauge g);
Gauge parse_gauge(const std::string& s);
std::string to_string(DeTurckBackground b);
DeTurckBackground parse_deturck_background(const std::string& s);

/// One slice of the coupled deformation. J is carried but not evolved.
struct FlowState {
  double beta = 0.0;
  MetricField g;
  SymTensorField K;
  ScalarField rho;
  CovectorField J;
  double Lambda = 0.0;
  double G = 1.0;

  explicit FlowState(const MetricField& metric)
      : g(metric), K(metric.chart()), rho(metric.chart()), J(metric.chart()) {}
  explicit FlowState(const InitialDataSet& d, double beta0 = 0.0);

  InitialDataSet data() const;
};

/// Precomputed pieces of the DeTurck vector field W^k = g^ij (Gamma^k_ij - B^k_ij)
/// for a fixed background connection B.
class DeTurckField {
public:
  /// Flat background: B = 0.
  explicit DeTurckField(const GridChart& chart);
  /// Background connection of `background`.
  explicit DeTurckField(const MetricGeometry& background);

  bool flat() const { return !background_; }
  /// W^k at every node.
  CovectorField vector_field(const MetricGeometry& geom) const;
  /// nabla_a W_b + nabla_b W_a. d_a W_b is formed from the connection gradient
  /// (no extra stencil pass), so about a flat metric the linearized gauge term
  /// cancels the mixed derivatives of -2 Ric exactly.
  SymTensorField lie_term(const MetricGeometry& geom) const;

private:
  std::optional<ConnectionField> background_;
  std::optional<Field<54>> background_gradient_;
};

/// -2 Ric (+ gauge term).
SymTensorField ricci_rhs(const MetricGeometry& geom, Gauge gauge, const DeTurckField* deturck = nullptr);
/// Delta_L K
SymTensorField k_rhs(const MetricGeometry& geom, const SymTensorField& K);
/// Delta rho
ScalarField matter_rhs(const MetricGeometry& geom, const ScalarField& rho);

struct FlowControls {
  double target_beta = 0.0;
  Gauge gauge = Gauge::Plain;
  DeTurckBackground deturck_background = DeTurckBackground::Initial;
  double safety = 0.8;
  /// Upper bound on the step in addition to the CFL bound (0 = none).
  double max_step = 0.0;
  double min_step = 1e-14;
  /// Blow-up once sup|Rm| exceeds ceiling_factor * (initial sup|Rm| + 1).
  double ceiling_factor = 1e6;
  double det_floor = 1e-12;
  /// Keep a field snapshot every this many steps (the final state is always kept).
  int snapshot_every = 1;
  long max_steps = 10'000'000;
  /// Betas inside the run that the march lands on exactly; each is kept as a
  /// snapshot.
  std::vector<double> landmarks;
  PinchingOptions pinching;
};

/// Largest stable step safety * h^2 / (6 max g^ii) for the metric.
double cfl_step(const MetricGeometry& geom, double safety);

struct FlowDiagnostics {
  double beta = 0.0;
  double step = 0.0; // the step that led here (0 for the initial state)
  double volume = 0.0;
  double sup_rm = 0.0;
  double min_det = 0.0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double mass = 0.0;      // integral of rho d mu
  double mass_rate = 0.0; // -integral of rho R d mu
  double hamiltonian_linf = 0.0;
  double momentum_linf = 0.0;
  bool weak_energy = true;
  PinchingReport pinching;
};

struct FlowSnapshot {
  double beta = 0.0;
  MetricField g;
  SymTensorField K;
  ScalarField rho;
};

class FlowTrajectory {
public:
  Gauge gauge = Gauge::Plain;
  std::vector<FlowSnapshot> snapshots;
  std::vector<FlowDiagnostics> diagnostics;
  /// Constants and the (fixed) momentum density of the run.
  std::optional<CovectorField> J;
  double Lambda = 0.0;
  double G = 1.0;

  double first_beta() const;
  double last_beta() const;
  /// Snapshot at exactly this beta (relative tolerance 1e-12), else throws
  /// ValidationError.
  const FlowSnapshot& snapshot_at(double beta) const;
  /// Metric at any covered beta: cubic Lagrange through the four nearest
  /// snapshots (fewer near a short trajectory), exact at snapshot betas.
  MetricField metric_at(double beta) const;
  /// Snapshot betas inside [lo, hi].
  std::vector<double> snapshot_betas(double lo, double hi) const;
};

/// Integrates from `initial` to controls.target_beta, appending to `traj`
/// (which may be empty). Diagnostics are recorded every step. On blow-up,
/// positivity loss or step underflow the exception propagates and `traj`
/// keeps everything up to the last good step.
void evolve_into(FlowTrajectory& traj, const FlowState& initial, const FlowControls& controls);
FlowTrajectory evolve(const FlowState& initial, const FlowControls& controls);

/// Pointwise pinching numbers over the chart.
PinchingReport grid_pinching_report(const MetricGeometry& geom, const PinchingOptions& opt = {});
/// Same with a supplied Ricci tensor (model samples).
PinchingReport grid_pinching_report(const MetricField& g, const SymTensorField& ricci, const PinchingOptions& opt = {});

FlowDiagnostics diagnose(const MetricGeometry& geom, const FlowState& s, const PinchingOptions& opt = {});

} // namespace rflow
