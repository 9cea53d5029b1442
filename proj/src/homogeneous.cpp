#include "rflow/homogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "rflow/csv.hpp"
#include "rflow/rk4.hpp"

namespace rflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> plain_rhs(ModelKind model, const std::vector<double>& c) {
  switch (model) {
  case ModelKind::FlatTorus:
    return {0.0};
  case ModelKind::RoundSphere:
    return {-4.0};
  case ModelKind::BergerSphere: {
    const double a = c[0], b = c[1];
    return {-8.0 + 4.0 * b / a, -4.0 * b * b / (a * a)};
  }
  }
  return {};
}

bool admissible(const std::vector<double>& c) {
  return std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
}

double berger_extinction(double a, double c) {
  // The Berger flow rounds out before it shrinks to a point; march with a step
  // proportional to the current size until nothing is left.
  HomogeneousState s = HomogeneousState::berger(a, c);
  const double floor = 1e-10 * std::min(a, c);
  double beta = 0.0;
  while (true) {
    const double m = std::min(s.coefficients[0], s.coefficients[1]);
    if (m < floor) return beta;
    const double h = 0.01 * m / 8.0;
    s.coefficients = rk4_step(s.coefficients, beta, h, [&](double, const std::vector<double>& y) {
      return plain_rhs(ModelKind::BergerSphere, y);
    });
    beta += h;
    if (!admissible(s.coefficients)) return beta;
  }
}

std::vector<double> march(ModelKind model, std::vector<double> y, double beta, int steps) {
  const double h = beta / steps;
  for (int i = 0; i < steps; ++i)
    y = rk4_step(y, i * h, h, [&](double, const std::vector<double>& v) { return plain_rhs(model, v); });
  return y;
}

} // namespace

std::string to_string(ModelKind m) {
  switch (m) {
  case ModelKind::FlatTorus:
    return "flat-torus";
  case ModelKind::RoundSphere:
    return "round-sphere";
  case ModelKind::BergerSphere:
    return "berger-sphere";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "flat-torus") return ModelKind::FlatTorus;
  if (name == "round-sphere") return ModelKind::RoundSphere;
  if (name == "berger-sphere") return ModelKind::BergerSphere;
  throw ValidationError("unknown model '" + name + "'");
}

void validate(const HomogeneousState& s) {
  const std::size_t want = s.model == ModelKind::BergerSphere ? 2 : 1;
  if (s.coefficients.size() != want)
    throw ValidationError(to_string(s.model) + " takes " + std::to_string(want) + " metric coefficient(s)");
  if (!admissible(s.coefficients)) throw ValidationError("metric coefficients must be positive");
  if (s.matter && *s.matter < 0.0) throw ValidationError("matter density must be non-negative");
}

std::array<double, 3> frame_metric(const HomogeneousState& s) {
  if (s.model == ModelKind::BergerSphere) return {s.coefficients[0], s.coefficients[0], s.coefficients[1]};
  const double c = s.coefficients[0];
  return {c, c, c};
}

std::array<double, 3> ricci_eigenvalues(const HomogeneousState& s) {
  validate(s);
  switch (s.model) {
  case ModelKind::FlatTorus:
    return {0.0, 0.0, 0.0};
  case ModelKind::RoundSphere: {
    const double r = 2.0 / s.coefficients[0];
    return {r, r, r};
  }
  case ModelKind::BergerSphere: {
    const double a = s.coefficients[0], c = s.coefficients[1];
    const double r1 = 4.0 / a - 2.0 * c / (a * a);
    return {r1, r1, 2.0 * c / (a * a)};
  }
  }
  return {};
}

double scalar_curvature(const HomogeneousState& s) {
  const auto r = ricci_eigenvalues(s);
  return r[0] + r[1] + r[2];
}

double riemann_norm(const HomogeneousState& s) {
  // In three dimensions the Weyl part vanishes: |Rm|^2 = 4 |Ric|^2 - R^2.
  const auto r = ricci_eigenvalues(s);
  const double ric2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
  const double sum = r[0] + r[1] + r[2];
  return std::sqrt(std::max(0.0, 4.0 * ric2 - sum * sum));
}

double model_volume(const HomogeneousState& s) {
  validate(s);
  const auto g = frame_metric(s);
  const double density = std::sqrt(g[0] * g[1] * g[2]);
  if (s.model == ModelKind::FlatTorus) return std::pow(2.0 * kPi, 3) * density;
  return 2.0 * kPi * kPi * density;
}

std::vector<double> ode_rhs(const HomogeneousState& s, FlowNormalization norm) {
  validate(s);
  auto d = plain_rhs(s.model, s.coefficients);
  if (norm == FlowNormalization::VolumeNormalized) {
    const double r = scalar_curvature(s);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += 2.0 / 3.0 * r * s.coefficients[i];
  }
  return d;
}

PinchingReport pinching_report(const HomogeneousState& s, const PinchingOptions& opt) {
  const auto r = ricci_eigenvalues(s);
  PinchingSample sample;
  sample.scalar = r[0] + r[1] + r[2];
  sample.min_eigenvalue = std::min({r[0], r[1], r[2]});
  const double mean = sample.scalar / 3.0;
  for (double v : r) sample.tracefree_norm2 += (v - mean) * (v - mean);
  return pinching_report(std::span<const PinchingSample>(&sample, 1), opt);
}

void integrate_model_into(std::vector<ModelSample>& out, const HomogeneousState& initial, double beta_end,
                          const ModelRunOptions& opt) {
  validate(initial);
  if (!(opt.step > 0.0)) throw ValidationError("model step must be positive");
  if (!(beta_end >= 0.0)) throw ValidationError("target beta must be non-negative");
  if (initial.extrinsic && initial.model == ModelKind::BergerSphere)
    throw ValidationError("extrinsic data on the Berger model is not Lichnerowicz-harmonic; not supported");

  auto record = [&](double beta, const HomogeneousState& s) {
    out.push_back({beta, s, scalar_curvature(s), riemann_norm(s), pinching_report(s, opt.pinching)});
  };
  record(0.0, initial);
  const double ceiling = opt.ceiling_factor * (riemann_norm(initial) + 1.0);
  const auto rhs = [&](double, const std::vector<double>& y) {
    if (!admissible(y)) return std::vector<double>(y.size(), std::numeric_limits<double>::quiet_NaN());
    HomogeneousState s = initial;
    s.coefficients = y;
    return ode_rhs(s, opt.normalization);
  };

  HomogeneousState s = initial;
  const long steps = static_cast<long>(std::ceil(beta_end / opt.step - 1e-9));
  for (long n = 0; n < steps; ++n) {
    const double beta = n * opt.step;
    const double next = std::min(beta_end, (n + 1) * opt.step);
    s.coefficients = rk4_step(s.coefficients, beta, next - beta, rhs);
    if (!admissible(s.coefficients)) throw BlowUpError(next, std::numeric_limits<double>::infinity());
    const double rm = riemann_norm(s);
    if (!(rm <= ceiling)) throw BlowUpError(next, rm);
    record(next, s);
  }
}

std::vector<ModelSample> integrate_model(const HomogeneousState& initial, double beta_end,
                                         const ModelRunOptions& opt) {
  std::vector<ModelSample> out;
  integrate_model_into(out, initial, beta_end, opt);
  return out;
}

double extinction_time(const HomogeneousState& initial) {
  validate(initial);
  switch (initial.model) {
  case ModelKind::FlatTorus:
    return std::numeric_limits<double>::infinity();
  case ModelKind::RoundSphere:
    return initial.coefficients[0] / 4.0;
  case ModelKind::BergerSphere:
    return berger_extinction(initial.coefficients[0], initial.coefficients[1]);
  }
  return 0.0;
}

HomogeneousState analytic_solution(const HomogeneousState& initial, double beta) {
  validate(initial);
  if (beta < 0.0) throw ValidationError("beta must be non-negative");
  HomogeneousState out = initial;
  switch (initial.model) {
  case ModelKind::FlatTorus:
    return out;
  case ModelKind::RoundSphere: {
    const double star = initial.coefficients[0] / 4.0;
    if (beta >= star) throw ExtinctionError(star);
    out.coefficients[0] = initial.coefficients[0] - 4.0 * beta;
    return out;
  }
  case ModelKind::BergerSphere: {
    const double star = extinction_time(initial);
    if (beta >= star) throw ExtinctionError(star);
    if (beta == 0.0) return out;
    int steps = 64;
    auto coarse = march(initial.model, initial.coefficients, beta, steps);
    for (int round = 0; round < 14; ++round) {
      steps *= 2;
      auto fine = march(initial.model, initial.coefficients, beta, steps);
      double diff = 0.0;
      for (std::size_t i = 0; i < fine.size(); ++i) diff = std::max(diff, std::abs(fine[i] - coarse[i]));
      if (admissible(fine) && diff < 1e-12) {
        out.coefficients = fine;
        return out;
      }
      coarse = std::move(fine);
    }
    throw NumericalError("Berger reference integration did not reach 1e-12 before beta=" + std::to_string(beta));
  }
  }
  return out;
}

ChartSample sample_on_chart(const HomogeneousState& s, const GridChart& chart) {
  const auto g = frame_metric(s);
  const auto r = ricci_eigenvalues(s);
  SymTensorField metric(chart), ric(chart);
  for (int a = 0; a < 3; ++a) {
    const int p = sym_index(a, a);
    std::fill(metric.component(p).begin(), metric.component(p).end(), g[a]);
    std::fill(ric.component(p).begin(), ric.component(p).end(), g[a] * r[a]);
  }
  return {MetricField(metric), ric};
}

void write_model_csv(std::ostream& os, const std::vector<ModelSample>& run) {
  os << "beta,coef0,coef1,scalar_curvature,sup_rm,alpha1_max,alpha2,alpha3,tracefree_norm2\n";
  for (const auto& s : run) {
    const auto& c = s.state.coefficients;
    write_csv_row(os, {s.beta, c[0], c.size() > 1 ? c[1] : c[0], s.scalar, s.sup_rm, s.pinching.alpha1_max,
                       s.pinching.alpha2, s.pinching.alpha3, s.pinching.max_tracefree_norm2});
  }
}

} // namespace rflow
