#include "rflow/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geometry_cache.hpp"
#include "rflow/rk4.hpp"
#include "rflow/sym3.hpp"

namespace rflow {

namespace {

constexpr double kPi = std::numbers::pi;

bool same_eta(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

double contract(const SymTensorField& e, const SymTensorField& t, std::size_t i) {
  double s = 0.0;
  for (int q = 0; q < 6; ++q) s += sym_weight(q) * e.at(q, i) * t.at(q, i);
  return s;
}

ScalarField scalar_rhs(const MetricGeometry& geom, const ScalarField& e) {
  ScalarField out = laplace_beltrami(geom, e);
  const auto& R = geom.scalar_curvature();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= R[i] * e[i];
  return out;
}

std::vector<SymTensorField> tensor_rhs(const MetricGeometry& geom, const std::vector<SymTensorField>& e) {
  std::vector<SymTensorField> out;
  out.reserve(e.size());
  const auto& R = geom.scalar_curvature();
  for (const auto& block : e) {
    SymTensorField r = lichnerowicz_laplacian_upper(geom, block);
    for (int q = 0; q < 6; ++q) {
      auto c = r.component(q);
      const auto b = block.component(q);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] -= R[i] * b[i];
    }
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace

std::string to_string(KernelRank r) { return r == KernelRank::Scalar ? "scalar" : "tensor"; }

KernelRank parse_kernel_rank(const std::string& s) {
  if (s == "scalar") return KernelRank::Scalar;
  if (s == "tensor") return KernelRank::Tensor;
  throw ValidationError("unknown kernel rank '" + s + "'");
}

const KernelSlice& KernelField::at(double eta) const {
  for (const auto& s : slices)
    if (same_eta(s.eta, eta)) return s;
  throw ValidationError("no kernel slice at eta=" + std::to_string(eta));
}

double KernelField::mass(double eta) const {
  const auto& s = at(eta);
  if (rank != KernelRank::Scalar) throw ValidationError("kernel mass is defined for the scalar kernel");
  return integrate(s.g, s.scalar);
}

ScalarField mollified_delta(const MetricField& g, const Node& y, double eta0) {
  const auto& chart = g.chart();
  double h2 = 0.0;
  for (int a = 0; a < 3; ++a) h2 = std::max(h2, chart.spacing(a) * chart.spacing(a));
  if (!(eta0 >= 4.0 * h2))
    throw ValidationError("mollifier eta0=" + std::to_string(eta0) + " is under-resolved (needs >= 4 h^2 = " +
                          std::to_string(4.0 * h2) + ")");
  const auto gy = g.at(chart.index(y));
  ScalarField out(chart);
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const Node o = chart.minimal_offset(y, chart.node(i));
    double sum = 0.0;
    for (int n2 = -2; n2 <= 2; ++n2)
      for (int n1 = -2; n1 <= 2; ++n1)
        for (int n0 = -2; n0 <= 2; ++n0) {
          const double v[3] = {o[0] * chart.spacing(0) + n0 * chart.period(0),
                               o[1] * chart.spacing(1) + n1 * chart.period(1),
                               o[2] * chart.spacing(2) + n2 * chart.period(2)};
          double q = 0.0;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) q += gy[sym_index(a, b)] * v[a] * v[b];
          sum += std::exp(-q / (4.0 * eta0));
        }
    out[i] = sum;
  }
  out *= 1.0 / integrate(g, out);
  return out;
}

KernelField conjugate_kernel(const FlowTrajectory& traj, const Node& y, const KernelControls& c) {
  if (traj.snapshots.empty()) throw ValidationError("kernel needs a non-empty trajectory");
  if (c.etas.empty()) throw ValidationError("kernel needs at least one evaluation eta");
  if (!(c.safety > 0.0)) throw ValidationError("safety must be positive");
  const double beta_star = traj.last_beta();
  std::vector<double> etas = c.etas;
  std::sort(etas.begin(), etas.end());
  if (etas.front() < c.eta0 && !same_eta(etas.front(), c.eta0))
    throw ValidationError("evaluation eta below the mollification scale");
  const double eta_max = etas.back();
  const double cover = beta_star - traj.first_beta();
  if (eta_max > cover && !same_eta(eta_max, cover))
    throw ValidationError("trajectory covers eta <= " + std::to_string(cover) + ", requested " +
                          std::to_string(eta_max));

  KernelField out;
  out.source = y;
  out.rank = c.rank;
  out.eta0 = c.eta0;
  out.beta_star = beta_star;

  detail::GeometryCache cache(traj);
  auto beta_of = [&](double eta) { return same_eta(eta, cover) ? traj.first_beta() : beta_star - eta; };
  const MetricField g0 = traj.metric_at(beta_of(c.eta0));
  const ScalarField delta = mollified_delta(g0, y, c.eta0);

  ScalarField es = delta;
  std::vector<SymTensorField> et;
  if (c.rank == KernelRank::Tensor) {
    for (int p = 0; p < 6; ++p) {
      SymTensorField block(g0.chart());
      const double w = (p == 0 || p == 3 || p == 5) ? 1.0 : 0.5;
      std::copy(delta.values().begin(), delta.values().end(), block.component(p).begin());
      block *= w;
      et.push_back(std::move(block));
    }
  }

  // Breakpoints: requested etas and every snapshot in between, so the metric
  // is interpolated only inside a snapshot interval.
  std::vector<double> marks{c.eta0};
  for (double e : etas) marks.push_back(e);
  for (const auto& s : traj.snapshots) {
    const double e = beta_star - s.beta;
    if (e > c.eta0 && e < eta_max) marks.push_back(e);
  }
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end(), same_eta), marks.end());

  auto record = [&](double eta) {
    for (double e : etas)
      if (same_eta(e, eta)) {
        KernelSlice s{e, beta_of(e), cache.at(beta_of(e)).metric(), es, et};
        if (c.rank == KernelRank::Tensor) s.scalar = ScalarField(g0.chart());
        out.slices.push_back(std::move(s));
        return;
      }
  };

  record(marks.front());
  for (std::size_t j = 1; j < marks.size(); ++j) {
    const double lo = marks[j - 1], hi = marks[j];
    double dt = cfl_step(cache.at(beta_of(lo)), c.safety);
    if (c.max_step > 0.0) dt = std::min(dt, c.max_step);
    const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / dt * (1.0 - 1e-12))));
    const double h = (hi - lo) / m;
    // Stage etas snapped to the half-step lattice so endpoints reuse geometry.
    auto stage = [&](double eta) {
      const double k = std::round(2.0 * (eta - lo) / h);
      return beta_of(k >= 2 * m ? hi : lo + 0.5 * k * h);
    };
    for (int s = 0; s < m; ++s) {
      const double t = lo + s * h;
      if (c.rank == KernelRank::Scalar)
        es = rk4_step(es, t, h, [&](double eta, const ScalarField& u) { return scalar_rhs(cache.at(stage(eta)), u); });
      else
        et = rk4_step(et, t, h, [&](double eta, const std::vector<SymTensorField>& u) {
          return tensor_rhs(cache.at(stage(eta)), u);
        });
    }
    record(hi);
  }
  return out;
}

double represent_scalar(const KernelField& k, double eta, const ScalarField& target) {
  if (k.rank != KernelRank::Scalar) throw ValidationError("scalar representation needs the scalar kernel");
  const auto& s = k.at(eta);
  s.scalar.require_same_chart(target);
  ScalarField w = s.scalar;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= target[i];
  return integrate(s.g, w);
}

std::array<double, 6> represent_tensor(const KernelField& k, double eta, const SymTensorField& target) {
  if (k.rank != KernelRank::Tensor) throw ValidationError("tensor representation needs the tensor kernel");
  const auto& s = k.at(eta);
  s.g.components().require_same_chart(target);
  std::array<double, 6> out{};
  for (int p = 0; p < 6; ++p) {
    ScalarField w(target.chart());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = contract(s.tensor[p], target, i);
    out[p] = integrate(s.g, w);
  }
  return out;
}

std::array<double, 6> represent_metric(const KernelField& k, double eta) {
  const auto& s = k.at(eta);
  SymTensorField t = s.g.components();
  t.axpy(-2.0 * s.eta, MetricGeometry(s.g).ricci());
  return represent_tensor(k, eta, t);
}

double gaussian_parametrix(const DistanceField& d, const Node& x, double eta) {
  if (!(eta > 0.0)) throw ValidationError("parametrix needs eta > 0");
  const double r = d.at(x);
  return std::pow(4.0 * kPi * eta, -1.5) * std::exp(-r * r / (4.0 * eta));
}

std::array<std::array<double, 6>, 6> gaussian_parametrix(const TransportField& t, const Node& x, double eta) {
  const double s = gaussian_parametrix(t.distance(), x, eta);
  const auto& P = t.at(x);
  std::array<std::array<double, 6>, 6> out{};
  for (int p = 0; p < 6; ++p) {
    const auto [i, k] = kSymPairs[p];
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      out[p][q] = 0.5 * s * (P(a, i) * P(b, k) + P(a, k) * P(b, i));
    }
  }
  return out;
}

SmoothedPhi smoothed_phi(const KernelField& scalar, const KernelField& tensor, double eta, const ScalarField& rho,
                         const std::array<double, 6>& g_source, double G, const SymTensorField* model_ricci) {
  if (!(scalar.source == tensor.source)) throw ValidationError("kernels belong to different source nodes");
  const auto& s = tensor.at(eta);
  const SymTensorField ric = model_ricci ? *model_ricci : MetricGeometry(s.g).ricci();
  const auto fit = constant_curvature_fit(s.g, ric);
  const auto gi = sym3::inverse(g_source);
  auto trace_at_source = [&](const std::array<double, 6>& rep) {
    double v = 0.0;
    for (int p = 0; p < 6; ++p) v += sym_weight(p) * gi[p] * rep[p];
    return v;
  };
  const double c = 1.0 / (16.0 * kPi * G);
  SmoothedPhi out;
  out.C = fit.C;
  const double smoothed_rho = represent_scalar(scalar, eta, rho);
  out.full = smoothed_rho - c * trace_at_source(represent_tensor(tensor, eta, ric));
  out.fluctuation = -c * trace_at_source(represent_tensor(tensor, eta, fit.delta));
  out.difference = out.full - out.fluctuation;
  out.scale_residual = smoothed_rho - 6.0 * fit.C * c;
  return out;
}

} // namespace rflow
