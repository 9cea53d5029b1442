#include "rflow/constraints.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "rflow/stencil.hpp"
#include "rflow/sym3.hpp"

namespace rflow {

namespace {

constexpr double kPi = std::numbers::pi;

const SymTensorField& ricci_of(const MetricGeometry& geom, const InitialDataSet& d) {
  return d.model_ricci ? *d.model_ricci : geom.ricci();
}

void require_consistent(const InitialDataSet& d) {
  const auto& g = d.g.components();
  g.require_same_chart(d.K);
  g.require_same_chart(d.rho);
  g.require_same_chart(d.J);
  if (d.model_ricci) g.require_same_chart(*d.model_ricci);
  if (!(d.G > 0.0)) throw ValidationError("gravitational constant must be positive");
}

} // namespace

InadmissibleDataError::InadmissibleDataError(const std::string& which, const Node& node, double margin)
    : ValidationError(which + " energy condition fails at node " + to_string(node) +
                      " (margin " + std::to_string(margin) + ")"),
      node_(node), margin_(margin) {}

ScalarField hamiltonian_geometry(const MetricGeometry& geom, const SymTensorField& ricci, const SymTensorField& K) {
  geom.metric().components().require_same_chart(K);
  ScalarField out(K.chart());
  for (std::size_t i = 0; i < K.size(); ++i) {
    const auto gi = geom.inverse().node_values(i);
    const auto k = K.node_values(i);
    const double tr = sym3::contract(gi, k);
    const double kk = sym3::contract(sym3::raise_both(gi, k), k);
    out[i] = sym3::contract(gi, ricci.node_values(i)) + tr * tr - kk;
  }
  return out;
}

CovectorField momentum_divergence(const MetricGeometry& geom, const SymTensorField& K) {
  const auto& chart = geom.chart();
  CovectorField out = covariant_divergence(geom, K);
  std::array<std::array<std::vector<double>, 3>, 6> dK;
  for (int p = 0; p < 6; ++p)
    for (int a = 0; a < 3; ++a) dK[p][a] = stencil::diff1(chart, a, K.component(p));
  const auto& dg = geom.metric_gradient();
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const auto gi = geom.inverse().node_values(i);
    const auto Kup = sym3::raise_both(gi, K.node_values(i));
    for (int a = 0; a < 3; ++a) {
      // d_a (g^bc K_bc) = g^bc d_a K_bc - K^pq d_a g_pq
      double dk = 0.0;
      for (int p = 0; p < 6; ++p) dk += sym_weight(p) * (gi[p] * dK[p][a][i] - Kup[p] * dg.at(3 * p + a, i));
      out.at(a, i) -= dk;
    }
  }
  return out;
}

ScalarField hamiltonian_residual(const MetricGeometry& geom, const InitialDataSet& d) {
  require_consistent(d);
  ScalarField out = hamiltonian_geometry(geom, ricci_of(geom, d), d.K);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= 16.0 * kPi * d.G * d.rho[i] + 2.0 * d.Lambda;
  return out;
}

ScalarField hamiltonian_residual(const InitialDataSet& d) { return hamiltonian_residual(MetricGeometry(d.g), d); }

CovectorField momentum_residual(const MetricGeometry& geom, const InitialDataSet& d) {
  require_consistent(d);
  CovectorField out = momentum_divergence(geom, d.K);
  out.axpy(-8.0 * kPi * d.G, d.J);
  return out;
}

CovectorField momentum_residual(const InitialDataSet& d) { return momentum_residual(MetricGeometry(d.g), d); }

ScalarField backreaction_phi(const InitialDataSet& d) {
  require_consistent(d);
  const MetricGeometry geom(d.g);
  const ScalarField h = hamiltonian_geometry(geom, ricci_of(geom, d), d.K);
  ScalarField out(d.rho.chart());
  const double inv = 1.0 / (16.0 * kPi * d.G);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = d.rho[i] - inv * (h[i] - 2.0 * d.Lambda);
  return out;
}

CovectorField backreaction_psi(const InitialDataSet& d) {
  require_consistent(d);
  CovectorField out = d.J;
  out.axpy(-1.0 / (8.0 * kPi * d.G), momentum_divergence(MetricGeometry(d.g), d.K));
  return out;
}

Norms norms(const MetricField& g, const ScalarField& u) {
  ScalarField a(u.chart()), s(u.chart());
  Norms n;
  for (std::size_t i = 0; i < u.size(); ++i) {
    a[i] = std::abs(u[i]);
    s[i] = u[i] * u[i];
    n.linf = std::max(n.linf, a[i]);
  }
  n.l1 = integrate(g, a);
  n.l2 = std::sqrt(integrate(g, s));
  return n;
}

Norms norms(const MetricGeometry& geom, const CovectorField& v) {
  ScalarField len(v.chart());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto gi = geom.inverse().node_values(i);
    double s = 0.0;
    for (int p = 0; p < 6; ++p) {
      const auto [a, b] = kSymPairs[p];
      s += sym_weight(p) * gi[p] * v.at(a, i) * v.at(b, i);
    }
    len[i] = std::sqrt(std::max(0.0, s));
  }
  return norms(geom.metric(), len);
}

CurvatureSplit constant_curvature_fit(const MetricField& g, const SymTensorField& ricci) {
  g.components().require_same_chart(ricci);
  ScalarField R(ricci.chart());
  for (std::size_t i = 0; i < R.size(); ++i) R[i] = sym3::contract(sym3::inverse(g.at(i)), ricci.node_values(i));
  CurvatureSplit out{integrate(g, R) / volume(g) / 6.0, ricci};
  out.delta.axpy(-2.0 * out.C, g.components());
  return out;
}

BackreactionReport backreaction_report(const InitialDataSet& d) {
  require_consistent(d);
  const MetricGeometry geom(d.g);
  BackreactionReport r{backreaction_phi(d), backreaction_psi(d), {}, {},
                       constant_curvature_fit(d.g, ricci_of(geom, d))};
  r.phi_norms = norms(d.g, r.phi);
  r.psi_norms = norms(geom, r.psi);
  return r;
}

EnergyConditions validate(const InitialDataSet& d) {
  require_consistent(d);
  EnergyConditions e;
  e.weak_margin = std::numeric_limits<double>::infinity();
  e.dominant_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.rho.size(); ++i) {
    const auto gi = sym3::inverse(d.g.at(i));
    double j2 = 0.0;
    for (int p = 0; p < 6; ++p) {
      const auto [a, b] = kSymPairs[p];
      j2 += sym_weight(p) * gi[p] * d.J.at(a, i) * d.J.at(b, i);
    }
    const double rho = d.rho[i];
    if (rho < e.weak_margin) {
      e.weak_margin = rho;
      e.weak_node = d.rho.chart().node(i);
    }
    const double dom = rho - std::sqrt(std::max(0.0, j2));
    if (dom < e.dominant_margin) {
      e.dominant_margin = dom;
      e.dominant_node = d.rho.chart().node(i);
    }
  }
  e.weak = e.weak_margin >= 0.0;
  e.dominant = e.dominant_margin >= 0.0;
  return e;
}

SymTensorField metric_perturbation_pattern(const GridChart& chart) {
  const double wx = 2 * kPi / chart.period(0), wy = 2 * kPi / chart.period(1), wz = 2 * kPi / chart.period(2);
  return SymTensorField::sample(chart, [&](double x, double y, double z) {
    return std::array<double, 6>{std::sin(wx * x + wy * y),           0.5 * std::cos(wz * z),
                                 0.3 * std::sin(wx * x - wz * z),      std::cos(wx * x) * std::sin(wz * z),
                                 0.4 * std::sin(wy * y),               0.7 * std::cos(wy * y + wz * z)};
  });
}

SymTensorField tt_pattern(const GridChart& chart) {
  // K_12(z): traceless and divergence-free against the coordinate metric.
  const double wz = 2 * kPi / chart.period(2);
  return SymTensorField::sample(chart, [&](double, double, double z) {
    return std::array<double, 6>{0.0, std::sin(wz * z), 0.0, 0.0, 0.0, 0.0};
  });
}

ScalarField conformal_pattern(const GridChart& chart) {
  const double wx = 2 * kPi / chart.period(0), wy = 2 * kPi / chart.period(1);
  return ScalarField::sample(chart, [&](double x, double y, double) {
    return std::sin(wx * x) + 0.5 * std::cos(wy * y);
  });
}

InitialDataSet generate_initial_data(const GridChart& chart, const InitialDataSpec& spec) {
  using B = InitialDataSpec::Background;
  if (!(spec.G > 0.0)) throw ValidationError("gravitational constant must be positive");

  SymTensorField g = MetricField::flat(chart).components();
  double scale = 1.0;
  if (spec.background == B::Flrw) {
    if (!(spec.scale_factor > 0.0)) throw ValidationError("FLRW scale factor must be positive");
    scale = spec.scale_factor * spec.scale_factor;
  } else if (spec.background == B::ConstantCurvature) {
    if (!(spec.curvature > 0.0)) throw ValidationError("constant-curvature sample needs positive curvature");
    if (spec.metric_amplitude != 0.0 || spec.extrinsic_amplitude != 0.0 || spec.momentum_amplitude != 0.0)
      throw ValidationError("perturbations are only defined on chart backgrounds (flat or FLRW)");
    scale = 1.0 / spec.curvature;
  }
  if (spec.metric_amplitude != 0.0) g.axpy(spec.metric_amplitude, metric_perturbation_pattern(chart));
  g *= scale;

  InitialDataSet d{MetricField(g)};
  d.Lambda = spec.Lambda;
  d.G = spec.G;
  if (spec.background == B::ConstantCurvature) {
    d.model_ricci = g;
    *d.model_ricci *= 2.0 * spec.curvature;
  }

  d.K.axpy(-spec.hubble, g);
  if (spec.extrinsic_amplitude != 0.0) d.K.axpy(spec.extrinsic_amplitude, tt_pattern(chart));
  if (spec.momentum_amplitude != 0.0) {
    const ScalarField lam = conformal_pattern(chart);
    for (int p = 0; p < 6; ++p)
      for (std::size_t i = 0; i < chart.node_count(); ++i)
        d.K.at(p, i) += spec.momentum_amplitude * lam[i] * g.at(p, i);
  }

  const MetricGeometry geom(d.g);
  const ScalarField h = hamiltonian_geometry(geom, ricci_of(geom, d), d.K);
  const double inv16 = 1.0 / (16.0 * kPi * d.G);
  for (std::size_t i = 0; i < chart.node_count(); ++i) d.rho[i] = inv16 * (h[i] - 2.0 * d.Lambda);
  d.J = momentum_divergence(geom, d.K);
  d.J *= 1.0 / (8.0 * kPi * d.G);

  const auto e = validate(d);
  if (!e.weak) throw InadmissibleDataError("weak", e.weak_node, e.weak_margin);
  if (!e.dominant) throw InadmissibleDataError("dominant", e.dominant_node, e.dominant_margin);
  return d;
}

} // namespace rflow
