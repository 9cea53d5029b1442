#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rflow/flow.hpp"
#include "rflow/homogeneous.hpp"

namespace rflow {

/// Which backward equation for f:
///   as-written:        d f / d beta = -Delta f - R + 3 / (2 tau)
///   gradient-squared:  d f / d beta = -Delta f + |grad f|^2 - R + 3 / (2 tau)
enum class CouplingVariant { AsWritten, GradientSquared };

std::string to_string(CouplingVariant v);
CouplingVariant parse_coupling_variant(const std::string& s);

/// tau(beta) = tau_star + (beta_star - beta); throws ValidationError when the
/// result is not positive.
double tau_schedule(double tau_star, double beta_star, double beta);

ScalarField f_backward_rhs(const MetricGeometry& geom, const ScalarField& f, double tau, CouplingVariant v);

/// (4 pi tau)^{-3/2} e^{-f}, the density of the measure against d mu.
ScalarField perelman_density(const ScalarField& f, double tau);
/// Integral of the density against d mu.
double normalization_check(const MetricGeometry& geom, const ScalarField& f, double tau);
double normalization_check(const MetricField& g, const ScalarField& f, double tau);
/// f -> f + ln(check), after which the check is 1.
void renormalize(ScalarField& f, double check);
/// Integral of rho against the measure.
double localized_mass(const MetricField& g, const ScalarField& rho, const ScalarField& f, double tau);

/// Constant f normalizing the measure on g.
ScalarField normalizing_final_data(const MetricField& g, double tau);
/// f from a periodic Gaussian bump exp(-|x - x_c|^2 / (4 width)) around
/// `center` (coordinate distance to the nearest image), normalized on g.
ScalarField gaussian_final_data(const MetricField& g, double tau, const Node& center, double width);

struct CouplingControls {
  double tau_star = 1.0;
  CouplingVariant variant = CouplingVariant::GradientSquared;
  double safety = 0.8;
  /// Upper bound on the backward substep (0 = CFL only).
  double max_step = 0.0;
  /// Shift f back onto the normalized measure at every snapshot.
  bool renormalize_each_snapshot = false;
};

struct CouplingRecord {
  double beta = 0.0;
  double tau = 0.0;
  double normalization = 0.0;
  double localized_mass = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  int substeps = 0; // backward substeps taken since the previous record
};

struct CouplingSnapshot {
  double beta = 0.0;
  double tau = 0.0;
  ScalarField f;
};

struct CouplingRun {
  CouplingVariant variant = CouplingVariant::GradientSquared;
  /// Ordered from beta_star down to the first snapshot.
  std::vector<CouplingRecord> records;
  std::vector<CouplingSnapshot> snapshots;
};

/// The backward half of the two-step prescription: starting from f(beta_star)
/// at the last snapshot of `traj`, march to its first snapshot, stopping at
/// every stored beta with CFL-limited substeps in between (metric between
/// snapshots from the trajectory's cubic interpolation).
///
/// The gradient-squared variant is advanced in the equivalent linear form
/// v = (4 pi tau)^{-3/2} e^{-f}, which solves d v / d eta = Delta v - R v for
/// eta = beta_star - beta; the as-written variant is advanced in f directly.
CouplingRun couple_backward(const FlowTrajectory& traj, const ScalarField& f_star, const CouplingControls& c);

/// Round-model coupling with spatially constant f: one backward RK4 step of
/// size `step` from `beta` using the closed-form c(beta). Returns f(beta - step).
double homogeneous_backward_step(const HomogeneousState& initial, double beta, double f, double tau_star,
                                 double beta_star, double step);

void write_coupling_csv(std::ostream& os, const CouplingRun& run);

} // namespace rflow
