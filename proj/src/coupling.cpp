#include "rflow/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "rflow/csv.hpp"
#include "rflow/rk4.hpp"
#include "geometry_cache.hpp"

namespace rflow {

namespace {

constexpr double kPi = std::numbers::pi;

double log_norm(double tau) { return -1.5 * std::log(4.0 * kPi * tau); }

// Conjugate heat operator Delta v - R v.
ScalarField conjugate_rhs(const MetricGeometry& geom, const ScalarField& v) {
  ScalarField out = laplace_beltrami(geom, v);
  const auto& R = geom.scalar_curvature();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= R[i] * v[i];
  return out;
}

ScalarField density_to_f(const ScalarField& v, double tau, double beta) {
  ScalarField f(v.chart());
  const double c = log_norm(tau);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw PositivityLossError(beta, "measure density at node " + to_string(v.chart().node(i)));
    f[i] = c - std::log(v[i]);
  }
  return f;
}

// Beta of an RK4 stage, snapped onto the half-step lattice hi - k h / 2 so
// that shared endpoints hit the geometry cache and the last one is the snapshot.
double stage_beta(double beta_star, double eta, double hi, double lo, double h, int m) {
  const double k = std::round(2.0 * (hi - (beta_star - eta)) / h);
  return k >= 2 * m ? lo : hi - 0.5 * k * h;
}

} // namespace

std::string to_string(CouplingVariant v) {
  return v == CouplingVariant::AsWritten ? "as-written" : "gradient-squared";
}

CouplingVariant parse_coupling_variant(const std::string& s) {
  if (s == "as-written") return CouplingVariant::AsWritten;
  if (s == "gradient-squared") return CouplingVariant::GradientSquared;
  throw ValidationError("unknown coupling variant '" + s + "'");
}

double tau_schedule(double tau_star, double beta_star, double beta) {
  const double tau = tau_star + (beta_star - beta);
  if (!(tau > 0.0))
    throw ValidationError("tau(beta) = " + std::to_string(tau) + " is not positive at beta=" + std::to_string(beta));
  return tau;
}

ScalarField f_backward_rhs(const MetricGeometry& geom, const ScalarField& f, double tau, CouplingVariant v) {
  ScalarField out = laplace_beltrami(geom, f);
  out *= -1.0;
  if (v == CouplingVariant::GradientSquared) out += gradient_norm2(geom, f);
  const auto& R = geom.scalar_curvature();
  const double c = 1.5 / tau;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c - R[i];
  return out;
}

ScalarField perelman_density(const ScalarField& f, double tau) {
  ScalarField out(f.chart());
  const double c = log_norm(tau);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::exp(c - f[i]);
  return out;
}

double normalization_check(const MetricGeometry& geom, const ScalarField& f, double tau) {
  return integrate(geom, perelman_density(f, tau));
}

double normalization_check(const MetricField& g, const ScalarField& f, double tau) {
  return integrate(g, perelman_density(f, tau));
}

void renormalize(ScalarField& f, double check) {
  if (!(check > 0.0)) throw NumericalError("cannot renormalize a measure of mass " + std::to_string(check));
  const double shift = std::log(check);
  for (auto& v : f.values()) v += shift;
}

double localized_mass(const MetricField& g, const ScalarField& rho, const ScalarField& f, double tau) {
  rho.require_same_chart(f);
  ScalarField w = perelman_density(f, tau);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= rho[i];
  return integrate(g, w);
}

ScalarField normalizing_final_data(const MetricField& g, double tau) {
  const double vol = volume(g);
  return ScalarField(g.chart(), std::log(vol) + log_norm(tau));
}

ScalarField gaussian_final_data(const MetricField& g, double tau, const Node& center, double width) {
  if (!(width > 0.0)) throw ValidationError("Gaussian width must be positive");
  const auto& chart = g.chart();
  ScalarField f(chart);
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const Node off = chart.minimal_offset(center, chart.node(i));
    double r2 = 0.0;
    for (int a = 0; a < 3; ++a) r2 += std::pow(off[a] * chart.spacing(a), 2);
    f[i] = r2 / (4.0 * width);
  }
  renormalize(f, normalization_check(g, f, tau));
  return f;
}

CouplingRun couple_backward(const FlowTrajectory& traj, const ScalarField& f_star, const CouplingControls& c) {
  if (traj.snapshots.empty()) throw ValidationError("coupling needs a non-empty trajectory");
  if (!(c.tau_star > 0.0)) throw ValidationError("tau* must be positive");
  if (!(c.safety > 0.0)) throw ValidationError("safety must be positive");
  const double beta_star = traj.last_beta();
  f_star.require_same_chart(traj.snapshots.back().rho);
  // tau must stay positive over the whole backward range.
  tau_schedule(c.tau_star, beta_star, traj.first_beta());

  CouplingRun run;
  run.variant = c.variant;
  detail::GeometryCache cache(traj);
  const bool linear = c.variant == CouplingVariant::GradientSquared;

  ScalarField f = f_star;
  auto record = [&](const FlowSnapshot& s, int substeps) {
    const double tau = tau_schedule(c.tau_star, beta_star, s.beta);
    const auto& geom = cache.at(s.beta);
    if (c.renormalize_each_snapshot) renormalize(f, normalization_check(geom, f, tau));
    CouplingRecord r;
    r.beta = s.beta;
    r.tau = tau;
    r.normalization = normalization_check(geom, f, tau);
    r.localized_mass = localized_mass(s.g, s.rho, f, tau);
    const auto [mn, mx] = std::minmax_element(f.values().begin(), f.values().end());
    r.min_f = *mn;
    r.max_f = *mx;
    r.substeps = substeps;
    run.records.push_back(r);
    run.snapshots.push_back({s.beta, tau, f});
  };

  record(traj.snapshots.back(), 0);
  for (std::size_t j = traj.snapshots.size() - 1; j-- > 0;) {
    const double hi = traj.snapshots[j + 1].beta, lo = traj.snapshots[j].beta;
    const double span = hi - lo;
    double dt = cfl_step(cache.at(hi), c.safety);
    if (c.max_step > 0.0) dt = std::min(dt, c.max_step);
    const int m = std::max(1, static_cast<int>(std::ceil(span / dt * (1.0 - 1e-12))));
    const double h = span / m;

    // March in eta = beta_star - beta, which increases as beta decreases.
    if (linear) {
      ScalarField v = perelman_density(f, tau_schedule(c.tau_star, beta_star, hi));
      for (int s = 0; s < m; ++s)
        v = rk4_step(v, beta_star - (hi - s * h), h, [&](double eta, const ScalarField& u) {
          return conjugate_rhs(cache.at(stage_beta(beta_star, eta, hi, lo, h, m)), u);
        });
      f = density_to_f(v, tau_schedule(c.tau_star, beta_star, lo), lo);
    } else {
      for (int s = 0; s < m; ++s)
        f = rk4_step(f, beta_star - (hi - s * h), h, [&](double eta, const ScalarField& u) {
          const double b = stage_beta(beta_star, eta, hi, lo, h, m);
          ScalarField r = f_backward_rhs(cache.at(b), u, tau_schedule(c.tau_star, beta_star, b), c.variant);
          r *= -1.0;
          return r;
        });
    }
    record(traj.snapshots[j], m);
  }
  return run;
}

double homogeneous_backward_step(const HomogeneousState& initial, double beta, double f, double tau_star,
                                 double beta_star, double step) {
  if (initial.model == ModelKind::BergerSphere)
    throw ValidationError("homogeneous coupling step is defined for the round and flat models");
  auto rhs = [&](double fv, double b) {
    (void)fv;
    const double R = scalar_curvature(analytic_solution(initial, b));
    return -(1.5 / tau_schedule(tau_star, beta_star, b) - R);
  };
  // d f / d eta = R - 3/(2 tau) with eta = beta_star - beta.
  const double k1 = rhs(f, beta);
  const double k2 = rhs(f, beta - 0.5 * step);
  const double k4 = rhs(f, beta - step);
  return f + step / 6.0 * (k1 + 4.0 * k2 + k4);
}

void write_coupling_csv(std::ostream& os, const CouplingRun& run) {
  os << "beta,tau,normalization,localized_mass,min_f,max_f,substeps\n";
  for (const auto& r : run.records)
    write_csv_row(os, {r.beta, r.tau, r.normalization, r.localized_mass, r.min_f, r.max_f,
                       static_cast<double>(r.substeps)});
}

} // namespace rflow
