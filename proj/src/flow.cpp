#include "rflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "rflow/sym3.hpp"

namespace rflow {

namespace {

struct FlowVector {
  SymTensorField g;
  SymTensorField K;
  ScalarField rho;
};

void axpy(FlowVector& y, double a, const FlowVector& x) {
  y.g.axpy(a, x.g);
  y.K.axpy(a, x.K);
  y.rho.axpy(a, x.rho);
}

double average_scalar(const MetricGeometry& geom) {
  return integrate(geom, geom.scalar_curvature()) / geom.volume();
}

} // namespace

std::string to_string(Gauge g) {
  switch (g) {
  case Gauge::Plain:
    return "plain";
  case Gauge::DeTurck:
    return "deturck";
  case Gauge::VolumeNormalized:
    return "volume-normalized";
  }
  return "?";
}

Gauge parse_gauge(const std::string& s) {
  if (s == "plain") return Gauge::Plain;
  if (s == "deturck") return Gauge::DeTurck;
  if (s == "volume-normalized") return Gauge::VolumeNormalized;
  throw ValidationError("unknown gauge '" + s + "'");
}

std::string to_string(DeTurckBackground b) { return b == DeTurckBackground::Initial ? "initial" : "flat"; }

DeTurckBackground parse_deturck_background(const std::string& s) {
  if (s == "initial") return DeTurckBackground::Initial;
  if (s == "flat") return DeTurckBackground::Flat;
  throw ValidationError("unknown DeTurck background '" + s + "'");
}

FlowState::FlowState(const InitialDataSet& d, double beta0)
    : beta(beta0), g(d.g), K(d.K), rho(d.rho), J(d.J), Lambda(d.Lambda), G(d.G) {}

InitialDataSet FlowState::data() const {
  InitialDataSet d(g);
  d.K = K;
  d.rho = rho;
  d.J = J;
  d.Lambda = Lambda;
  d.G = G;
  return d;
}

DeTurckField::DeTurckField(const GridChart&) {}

DeTurckField::DeTurckField(const MetricGeometry& background)
    : background_(background.connection()), background_gradient_(background.connection_gradient()) {}

CovectorField DeTurckField::vector_field(const MetricGeometry& geom) const {
  const auto& chart = geom.chart();
  CovectorField w(chart);
  const auto& gam = geom.connection();
  for (std::size_t i = 0; i < chart.node_count(); ++i)
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int q = 0; q < 6; ++q) {
        double d = gam.at(6 * k + q, i);
        if (background_) d -= background_->at(6 * k + q, i);
        s += sym_weight(q) * geom.inverse().at(q, i) * d;
      }
      w.at(k, i) = s;
    }
  return w;
}

SymTensorField DeTurckField::lie_term(const MetricGeometry& geom) const {
  const auto& chart = geom.chart();
  if (background_) background_->require_same_chart(geom.connection());
  SymTensorField out(chart);
  const auto& gamF = geom.connection();
  const auto& dgamF = geom.connection_gradient();
  const auto& dgF = geom.metric_gradient();
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const auto gv = geom.metric().at(i);
    const auto gi = geom.inverse().node_values(i);
    double D[3][6], dD[3][3][6], dg[6][3];
    for (int k = 0; k < 3; ++k)
      for (int q = 0; q < 6; ++q) {
        D[k][q] = gamF.at(6 * k + q, i) - (background_ ? background_->at(6 * k + q, i) : 0.0);
        for (int a = 0; a < 3; ++a)
          dD[a][k][q] = dgamF.at(18 * a + 6 * k + q, i) -
                        (background_gradient_ ? background_gradient_->at(18 * a + 6 * k + q, i) : 0.0);
      }
    for (int p = 0; p < 6; ++p)
      for (int a = 0; a < 3; ++a) dg[p][a] = dgF.at(3 * p + a, i);

    double Wup[3];
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int q = 0; q < 6; ++q) s += sym_weight(q) * gi[q] * D[k][q];
      Wup[k] = s;
    }
    double Wlow[3];
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += sym3::get(gv, b, k) * Wup[k];
      Wlow[b] = s;
    }
    // d_a W^k = d_a g^ij D^k_ij + g^ij d_a D^k_ij, with d_a g^ij = -g^ip d_a g_pq g^qj
    double dWup[3][3];
    for (int a = 0; a < 3; ++a) {
      sym3::Sym dga;
      for (int p = 0; p < 6; ++p) dga[p] = dg[p][a];
      const auto dginv = sym3::raise_both(gi, dga); // g^ip d_a g_pq g^qj
      for (int k = 0; k < 3; ++k) {
        double s = 0.0;
        for (int q = 0; q < 6; ++q) s += sym_weight(q) * (gi[q] * dD[a][k][q] - dginv[q] * D[k][q]);
        dWup[a][k] = s;
      }
    }
    double nablaW[3][3]; // nabla_a W_b
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += dg[sym_index(b, k)][a] * Wup[k] + sym3::get(gv, b, k) * dWup[a][k];
        for (int c = 0; c < 3; ++c) s -= gamF.at(6 * c + sym_index(a, b), i) * Wlow[c];
        nablaW[a][b] = s;
      }
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      out.at(q, i) = nablaW[a][b] + nablaW[b][a];
    }
  }
  return out;
}

SymTensorField ricci_rhs(const MetricGeometry& geom, Gauge gauge, const DeTurckField* deturck) {
  SymTensorField out = geom.ricci();
  out *= -2.0;
  switch (gauge) {
  case Gauge::Plain:
    break;
  case Gauge::DeTurck:
    if (!deturck) throw ValidationError("DeTurck gauge needs a background");
    out += deturck->lie_term(geom);
    break;
  case Gauge::VolumeNormalized:
    out.axpy(2.0 / 3.0 * average_scalar(geom), geom.metric().components());
    break;
  }
  return out;
}

SymTensorField k_rhs(const MetricGeometry& geom, const SymTensorField& K) { return lichnerowicz_laplacian(geom, K); }

ScalarField matter_rhs(const MetricGeometry& geom, const ScalarField& rho) { return laplace_beltrami(geom, rho); }

double cfl_step(const MetricGeometry& geom, double safety) {
  double m = 0.0;
  const auto& gi = geom.inverse();
  for (int a = 0; a < 3; ++a)
    for (double v : gi.component(sym_index(a, a))) m = std::max(m, v);
  const double h = geom.chart().min_spacing();
  return safety * h * h / (6.0 * m);
}

PinchingReport grid_pinching_report(const MetricField& g, const SymTensorField& ricci, const PinchingOptions& opt) {
  g.components().require_same_chart(ricci);
  std::vector<PinchingSample> samples(ricci.size());
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = pinching_sample(g.at(i), ricci.node_values(i));
  return pinching_report(samples, opt);
}

PinchingReport grid_pinching_report(const MetricGeometry& geom, const PinchingOptions& opt) {
  return grid_pinching_report(geom.metric(), geom.ricci(), opt);
}

FlowDiagnostics diagnose(const MetricGeometry& geom, const FlowState& s, const PinchingOptions& opt) {
  FlowDiagnostics d;
  d.beta = s.beta;
  d.volume = geom.volume();
  d.sup_rm = geom.sup_riemann_norm();
  d.min_det = geom.min_det();
  d.min_rho = std::numeric_limits<double>::infinity();
  d.max_rho = -std::numeric_limits<double>::infinity();
  ScalarField rhoR(s.rho.chart());
  for (std::size_t i = 0; i < s.rho.size(); ++i) {
    d.min_rho = std::min(d.min_rho, s.rho[i]);
    d.max_rho = std::max(d.max_rho, s.rho[i]);
    rhoR[i] = s.rho[i] * geom.scalar_curvature()[i];
  }
  d.mass = integrate(geom, s.rho);
  d.mass_rate = -integrate(geom, rhoR);
  const auto data = s.data();
  d.hamiltonian_linf = hamiltonian_residual(geom, data).max_abs();
  d.momentum_linf = momentum_residual(geom, data).max_abs();
  d.weak_energy = d.min_rho >= 0.0;
  d.pinching = grid_pinching_report(geom, opt);
  return d;
}

double FlowTrajectory::first_beta() const {
  if (snapshots.empty()) throw ValidationError("empty trajectory");
  return snapshots.front().beta;
}

double FlowTrajectory::last_beta() const {
  if (snapshots.empty()) throw ValidationError("empty trajectory");
  return snapshots.back().beta;
}

namespace {

bool same_beta(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

} // namespace

const FlowSnapshot& FlowTrajectory::snapshot_at(double beta) const {
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), beta,
                             [](const FlowSnapshot& s, double b) { return s.beta < b && !same_beta(s.beta, b); });
  if (it == snapshots.end() || !same_beta(it->beta, beta))
    throw ValidationError("no metric snapshot at beta=" + std::to_string(beta));
  return *it;
}

MetricField FlowTrajectory::metric_at(double beta) const {
  if (snapshots.empty()) throw ValidationError("empty trajectory");
  const double lo = snapshots.front().beta, hi = snapshots.back().beta;
  if ((beta < lo && !same_beta(beta, lo)) || (beta > hi && !same_beta(beta, hi)))
    throw ValidationError("trajectory does not cover beta=" + std::to_string(beta));
  for (const auto& s : snapshots)
    if (same_beta(s.beta, beta)) return s.g;

  const long n = static_cast<long>(snapshots.size());
  const long idx = std::upper_bound(snapshots.begin(), snapshots.end(), beta,
                                    [](double b, const FlowSnapshot& s) { return b < s.beta; }) -
                   snapshots.begin();
  const long width = std::min<long>(4, n);
  const long start = std::clamp<long>(idx - 2, 0, n - width);
  SymTensorField out(snapshots.front().g.chart());
  for (long j = start; j < start + width; ++j) {
    double w = 1.0;
    for (long m = start; m < start + width; ++m)
      if (m != j) w *= (beta - snapshots[m].beta) / (snapshots[j].beta - snapshots[m].beta);
    out.axpy(w, snapshots[j].g.components());
  }
  return MetricField(out);
}

std::vector<double> FlowTrajectory::snapshot_betas(double lo, double hi) const {
  std::vector<double> out;
  for (const auto& s : snapshots)
    if ((s.beta >= lo || same_beta(s.beta, lo)) && (s.beta <= hi || same_beta(s.beta, hi))) out.push_back(s.beta);
  return out;
}

void evolve_into(FlowTrajectory& traj, const FlowState& initial, const FlowControls& c) {
  if (!(c.safety > 0.0)) throw ValidationError("CFL safety must be positive");
  if (c.snapshot_every < 1) throw ValidationError("snapshot cadence must be at least 1");
  if (!(c.target_beta >= initial.beta)) throw ValidationError("target beta lies before the initial state");

  auto geom = std::make_unique<MetricGeometry>(initial.g);
  std::optional<DeTurckField> deturck;
  if (c.gauge == Gauge::DeTurck) {
    if (c.deturck_background == DeTurckBackground::Flat)
      deturck.emplace(initial.g.chart());
    else
      deturck.emplace(*geom);
  }

  if (traj.snapshots.empty()) {
    traj.gauge = c.gauge;
    traj.J = initial.J;
    traj.Lambda = initial.Lambda;
    traj.G = initial.G;
    traj.snapshots.push_back({initial.beta, initial.g, initial.K, initial.rho});
    traj.diagnostics.push_back(diagnose(*geom, initial, c.pinching));
  }

  const double ceiling = c.ceiling_factor * (geom->sup_riemann_norm() + 1.0);
  FlowState state = initial;
  FlowVector y{initial.g.components(), initial.K, initial.rho};

  auto geometry_of = [&](const SymTensorField& g, double beta) {
    try {
      return std::make_unique<MetricGeometry>(MetricField(g));
    } catch (const SingularMetricError& e) {
      throw PositivityLossError(beta, e.what());
    }
  };
  auto rhs = [&](const MetricGeometry& gm, const FlowVector& v) {
    return FlowVector{ricci_rhs(gm, c.gauge, deturck ? &*deturck : nullptr), k_rhs(gm, v.K), matter_rhs(gm, v.rho)};
  };

  long steps = 0;
  const double end = c.target_beta;
  while (state.beta < end && !same_beta(state.beta, end)) {
    if (steps >= c.max_steps) throw StepUnderflowError(state.beta, 0.0);
    double h = cfl_step(*geom, c.safety);
    if (c.max_step > 0.0) h = std::min(h, c.max_step);
    double stop = end;
    for (double m : c.landmarks)
      if (m > state.beta && !same_beta(m, state.beta)) stop = std::min(stop, m);
    const bool last = state.beta + h >= stop || same_beta(state.beta + h, stop);
    if (last) h = stop - state.beta;
    if (!(h >= c.min_step)) throw StepUnderflowError(state.beta, h);

    const double b = state.beta;
    const FlowVector k1 = rhs(*geom, y);
    FlowVector y2 = y;
    axpy(y2, 0.5 * h, k1);
    const FlowVector k2 = rhs(*geometry_of(y2.g, b + 0.5 * h), y2);
    FlowVector y3 = y;
    axpy(y3, 0.5 * h, k2);
    const FlowVector k3 = rhs(*geometry_of(y3.g, b + 0.5 * h), y3);
    FlowVector y4 = y;
    axpy(y4, h, k3);
    const FlowVector k4 = rhs(*geometry_of(y4.g, b + h), y4);
    axpy(y, h / 6.0, k1);
    axpy(y, h / 3.0, k2);
    axpy(y, h / 3.0, k3);
    axpy(y, h / 6.0, k4);

    const double nb = last ? stop : b + h;
    geom = geometry_of(y.g, nb);
    const double sup = geom->sup_riemann_norm();
    if (!(sup <= ceiling) || !(geom->min_det() >= c.det_floor)) throw BlowUpError(nb, sup);

    state.beta = nb;
    state.g = geom->metric();
    state.K = y.K;
    state.rho = y.rho;
    ++steps;
    auto d = diagnose(*geom, state, c.pinching);
    d.step = h;
    traj.diagnostics.push_back(std::move(d));
    const bool done = state.beta >= end || same_beta(state.beta, end);
    if (steps % c.snapshot_every == 0 || done || last) traj.snapshots.push_back({state.beta, state.g, state.K, state.rho});
  }
}

FlowTrajectory evolve(const FlowState& initial, const FlowControls& controls) {
  FlowTrajectory t;
  evolve_into(t, initial, controls);
  return t;
}

} // namespace rflow
