#include <cmath>
#include <numeric>

#include "doctest.h"
#include "jet_oracle.hpp"
#include "rflow/geometry.hpp"
#include "rflow/stencil.hpp"
#include "rflow/sym3.hpp"
#include "test_metrics.hpp"

using namespace rflow;
using namespace testing_support;

namespace {

// Max over the nodes whose coordinates are multiples of `stride` (these are
// the nodes shared with the coarser grid of a refinement pair).
template <class F>
double max_on_coarse_nodes(const GridChart& chart, int stride, F&& err_at) {
  double m = 0.0;
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const auto n = chart.node(i);
    if (n[0] % stride || n[1] % stride || n[2] % stride) continue;
    m = std::max(m, err_at(i));
  }
  return m;
}

double christoffel_error(int n, int order) {
  const auto chart = GridChart::cube(n, 1.0, order);
  const WavyMetric f{0.1};
  const auto gam = christoffel(sample_metric(chart, f));
  return max_on_coarse_nodes(chart, n / 16, [&](std::size_t i) {
    const auto ex = oracle::christoffel<double>(f, chart.position(i));
    double e = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int q = 0; q < 6; ++q) {
        const auto [a, b] = kSymPairs[q];
        e = std::max(e, std::abs(gam.at(6 * c + q, i) - ex[c][a][b]));
      }
    return e;
  });
}

double ricci_error(int n, int order) {
  const auto chart = GridChart::cube(n, 1.0, order);
  const WavyMetric f{0.1};
  const MetricGeometry geom(sample_metric(chart, f));
  return max_on_coarse_nodes(chart, n / 16, [&](std::size_t i) {
    const auto ex = oracle::ricci(f, chart.position(i));
    double e = 0.0;
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      e = std::max(e, std::abs(geom.ricci().at(q, i) - ex[a][b]));
    }
    e = std::max(e, std::abs(geom.scalar_curvature()[i] - oracle::scalar_curvature(f, chart.position(i))));
    e = std::max(e, std::abs(geom.riemann_norm()[i] - oracle::riemann_norm(f, chart.position(i))));
    return e;
  });
}

double laplacian_error(int n, int order) {
  const auto chart = GridChart::cube(n, 1.0, order);
  const WavyMetric f{0.1};
  const WavyScalar u;
  const auto lap = laplace_beltrami(sample_metric(chart, f), sample_scalar(chart, u));
  return max_on_coarse_nodes(chart, n / 16, [&](std::size_t i) {
    return std::abs(lap[i] - oracle::laplacian(f, u, chart.position(i)));
  });
}

double lichnerowicz_error(int n, int order) {
  const auto chart = GridChart::cube(n, 1.0, order);
  const WavyMetric f{0.1};
  const WavyTensor k;
  const auto lk = lichnerowicz_laplacian(sample_metric(chart, f), sample_tensor(chart, k));
  return max_on_coarse_nodes(chart, n / 16, [&](std::size_t i) {
    const auto ex = oracle::lichnerowicz(f, k, chart.position(i));
    double e = 0.0;
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      e = std::max(e, std::abs(lk.at(q, i) - ex[a][b]));
    }
    return e;
  });
}

double bianchi_defect(int n, int order) {
  const auto chart = GridChart::cube(n, 1.0, order);
  const MetricGeometry geom(sample_metric(chart, WavyMetric{0.1}));
  SymTensorField einstein = geom.ricci();
  einstein.axpy(-0.5, [&] {
    SymTensorField rg(chart);
    for (std::size_t i = 0; i < chart.node_count(); ++i)
      for (int q = 0; q < 6; ++q) rg.at(q, i) = geom.scalar_curvature()[i] * geom.metric().components().at(q, i);
    return rg;
  }());
  return covariant_divergence(geom, einstein).max_abs();
}

} // namespace

TEST_CASE("chart invariants") {
  CHECK_THROWS_AS(GridChart::cube(7), ValidationError);
  CHECK_THROWS_AS(GridChart({8, 8, 8}, {1.0, 0.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(GridChart::cube(8, 1.0, 3), ValidationError);
  const auto chart = GridChart({8, 10, 12}, {1.0, 2.0, 3.0});
  CHECK(chart.node_count() == 960);
  CHECK(chart.spacing(1) == doctest::Approx(0.2));
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{959}}) CHECK(chart.index(chart.node(i)) == i);
  CHECK(chart.index(-1, 0, 0) == chart.index(7, 0, 0));
  CHECK(chart.minimal_offset({0, 0, 0}, {7, 5, 6}) == Node{-1, -5, -6});
}

TEST_CASE("metric positivity is enforced on construction") {
  const auto chart = GridChart::cube(8);
  auto g = MetricField::flat(chart).components();
  g.at(sym_index(1, 1), chart.index(3, 4, 5)) = -0.5;
  try {
    MetricField bad(g);
    FAIL("expected rejection");
  } catch (const SingularMetricError& e) {
    CHECK(e.node() == Node{3, 4, 5});
  }
}

TEST_CASE("flat and constant metrics have no connection or curvature") {
  for (double c : {1.0, 2.5}) {
    const auto chart = GridChart::cube(8, 2.0, 4);
    const MetricGeometry geom(MetricField::flat(chart, c));
    CHECK(geom.connection().max_abs() == 0.0);
    CHECK(geom.ricci().max_abs() == 0.0);
    CHECK(geom.scalar_curvature().max_abs() == 0.0);
    CHECK(geom.sup_riemann_norm() == 0.0);
  }
}

TEST_CASE("christoffel converges to the exact symbols at stencil order") {
  const double e16 = christoffel_error(16, 2), e32 = christoffel_error(32, 2);
  CHECK(observed_rate(e16, e32) == doctest::Approx(2.0).epsilon(0.15));
  const double f16 = christoffel_error(16, 4), f32 = christoffel_error(32, 4);
  CHECK(observed_rate(f16, f32) == doctest::Approx(4.0).epsilon(0.075));
}

TEST_CASE("ricci, scalar curvature and |Rm| converge at stencil order") {
  const double e16 = ricci_error(16, 2), e32 = ricci_error(32, 2);
  CHECK(observed_rate(e16, e32) == doctest::Approx(2.0).epsilon(0.15));
  const double f16 = ricci_error(16, 4), f32 = ricci_error(32, 4);
  CHECK(observed_rate(f16, f32) == doctest::Approx(4.0).epsilon(0.075));
}

TEST_CASE("ricci of a perturbed flat metric matches the linearized formula to O(eps^2)") {
  const auto chart = GridChart::cube(16, 1.0, 4);
  const WavyMetric unit{1.0};
  // Perturbation h = (WavyMetric{1} - delta).
  auto h = sample_tensor(chart, unit);
  for (int a = 0; a < 3; ++a)
    for (auto& v : h.component(sym_index(a, a))) v -= 1.0;
  // Linearized Ricci with the same stencils:
  // 1/2 (d_c d_a h_cb + d_c d_b h_ca - d_a d_b tr h - d_c d_c h_ab)
  std::array<stencil::Jet, 6> jh;
  for (int p = 0; p < 6; ++p) jh[p] = stencil::jet(chart, h.component(p));
  auto d2 = [&](int a, int b, int x, int y, std::size_t i) { return jh[sym_index(a, b)].d2[sym_index(x, y)][i]; };
  SymTensorField lin(chart);
  for (std::size_t i = 0; i < chart.node_count(); ++i)
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      double v = 0.0;
      for (int c = 0; c < 3; ++c)
        v += d2(c, b, c, a, i) + d2(c, a, c, b, i) - d2(c, c, a, b, i) - d2(a, b, c, c, i);
      lin.at(q, i) = 0.5 * v;
    }
  auto defect = [&](double eps) {
    auto g = SymTensorField(MetricField::flat(chart).components());
    g.axpy(eps, h);
    auto r = ricci(MetricField(g));
    r.axpy(-eps, lin);
    return r.max_abs();
  };
  const double d1 = defect(1e-3), d2v = defect(2e-3);
  CHECK(d1 < 1e-3 * 1e-3 * 100.0);
  CHECK(observed_rate(d2v, d1) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("laplace_beltrami") {
  const auto chart = GridChart::cube(16, 2.0, 4);
  const auto g = sample_metric(chart, WavyMetric{0.1});
  CHECK(laplace_beltrami(g, ScalarField(chart, 3.0)).max_abs() < 1e-10);

  SUBCASE("flat Fourier eigenfunction") {
    for (int order : {2, 4}) {
      for (int n : {1, 2}) {
        const auto c = GridChart::cube(32, 2.0, order);
        const double k = kTwoPi * n / 2.0;
        const auto u = ScalarField::sample(c, [&](double x, double, double) { return std::sin(k * x); });
        auto lap = laplace_beltrami(MetricField::flat(c), u);
        lap.axpy(k * k, u);
        const double h = c.spacing(0);
        const double bound = order == 2 ? k * k * (k * h) * (k * h) / 12.0 : k * k * std::pow(k * h, 4) / 90.0;
        CHECK(lap.max_abs() <= 1.01 * bound);
      }
    }
  }
  SUBCASE("perturbed metric against the divergence-form oracle") {
    const double e16 = laplacian_error(16, 2), e32 = laplacian_error(32, 2);
    CHECK(observed_rate(e16, e32) == doctest::Approx(2.0).epsilon(0.15));
    const double f16 = laplacian_error(16, 4), f32 = laplacian_error(32, 4);
    CHECK(observed_rate(f16, f32) == doctest::Approx(4.0).epsilon(0.075));
  }
}

TEST_CASE("lichnerowicz laplacian") {
  SUBCASE("the metric is harmonic") {
    for (int order : {2, 4}) {
      const auto chart = GridChart::cube(16, 1.0, order);
      const auto g = sample_metric(chart, WavyMetric{0.2});
      CHECK(lichnerowicz_laplacian(g, g.components()).max_abs() < 1e-9);
      const auto flat = MetricField::flat(chart);
      CHECK(lichnerowicz_laplacian(flat, flat.components()).max_abs() == 0.0);
    }
  }
  SUBCASE("flat metric reduces to the componentwise Laplacian") {
    const auto chart = GridChart::cube(16, 1.0, 4);
    const auto flat = MetricField::flat(chart);
    const auto k = sample_tensor(chart, WavyTensor{});
    const auto lk = lichnerowicz_laplacian(flat, k);
    for (int p = 0; p < 6; ++p) {
      ScalarField comp(chart);
      std::copy(k.component(p).begin(), k.component(p).end(), comp.values().begin());
      const auto lap = laplace_beltrami(flat, comp);
      for (std::size_t i = 0; i < chart.node_count(); ++i) CHECK(lk.at(p, i) == lap[i]);
    }
    const double w = kTwoPi;
    const std::array<double, 6> amp{0.3, -0.2, 0.5, 1.0, 0.1, -0.7};
    const auto mode = SymTensorField::sample(chart, [&](double x, double, double) {
      std::array<double, 6> v;
      for (int p = 0; p < 6; ++p) v[p] = amp[p] * std::sin(w * x);
      return v;
    });
    auto lm = lichnerowicz_laplacian(flat, mode);
    lm.axpy(w * w, mode);
    CHECK(lm.max_abs() < w * w * std::pow(w / 16.0, 4) / 90.0);
  }
  SUBCASE("perturbed metric against the oracle") {
    const double e16 = lichnerowicz_error(16, 2), e32 = lichnerowicz_error(32, 2);
    CHECK(observed_rate(e16, e32) == doctest::Approx(2.0).epsilon(0.15));
    const double f16 = lichnerowicz_error(16, 4), f32 = lichnerowicz_error(32, 4);
    CHECK(observed_rate(f16, f32) == doctest::Approx(4.0).epsilon(0.075));
  }
}

TEST_CASE("contracted Bianchi identity holds at stencil order") {
  const double e16 = bianchi_defect(16, 2), e32 = bianchi_defect(32, 2);
  CHECK(observed_rate(e16, e32) == doctest::Approx(2.0).epsilon(0.15));
  const double f16 = bianchi_defect(16, 4), f32 = bianchi_defect(32, 4);
  CHECK(observed_rate(f16, f32) == doctest::Approx(4.0).epsilon(0.075));
}

TEST_CASE("integration") {
  const double L = 1.7;
  const auto chart = GridChart::cube(12, L);
  CHECK(volume(MetricField::flat(chart)) == doctest::Approx(L * L * L).epsilon(1e-12));
  CHECK(volume(MetricField::flat(chart, 2.0)) == doctest::Approx(std::pow(2.0, 1.5) * L * L * L).epsilon(1e-12));
  const auto u = ScalarField::sample(chart, [&](double x, double, double) { return 1.0 + std::sin(kTwoPi * x / L); });
  CHECK(integrate(MetricField::flat(chart), u) == doctest::Approx(L * L * L).epsilon(1e-12));

  const auto g = sample_metric(chart, WavyMetric{0.3});
  const auto v = ScalarField::sample(chart, [](double x, double y, double z) { return std::cos(x) + y * z; });
  const double iu = integrate(g, u), iv = integrate(g, v);
  CHECK(integrate(g, 2.0 * u + (-3.0) * v) == doctest::Approx(2.0 * iu - 3.0 * iv).epsilon(1e-14));
  // Chart-respecting split: the slab x < L/2 and its complement.
  std::vector<std::size_t> left, right;
  for (std::size_t i = 0; i < chart.node_count(); ++i) (chart.node(i)[0] < 6 ? left : right).push_back(i);
  CHECK(integrate(g, u, left) + integrate(g, u, right) == doctest::Approx(iu).epsilon(1e-14));
}
