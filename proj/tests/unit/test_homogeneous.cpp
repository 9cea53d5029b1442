#include <cmath>
#include <numbers>

#include "doctest.h"
#include "koszul_oracle.hpp"
#include "rflow/homogeneous.hpp"

using namespace rflow;

TEST_CASE("ode right-hand sides") {
  CHECK(ode_rhs(HomogeneousState::flat(2.0)) == std::vector<double>{0.0});
  CHECK(ode_rhs(HomogeneousState::round(1.0)) == std::vector<double>{-4.0});
  for (double c : {0.5, 1.0, 3.0}) {
    const auto d = ode_rhs(HomogeneousState::berger(c, c));
    CHECK(d[0] == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(-4.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(ode_rhs(HomogeneousState::round(-1.0)), ValidationError);
  CHECK_THROWS_AS(ode_rhs(HomogeneousState::berger(1.0, 0.0)), ValidationError);
  CHECK_THROWS_AS(ode_rhs({ModelKind::BergerSphere, {1.0}, {}, {}}), ValidationError);
}

TEST_CASE("model curvature agrees with the Koszul computation on SU(2)") {
  for (auto [a, c] : {std::pair{1.0, 1.0}, {1.0, 0.5}, {0.7, 1.9}, {2.0, 0.1}}) {
    const auto s = HomogeneousState::berger(a, c);
    const auto lie = oracle::LieGroupMetric::su2(oracle::diagonal(a, a, c));
    const auto ric = lie.ricci();
    const auto g = frame_metric(s);
    const auto ev = ricci_eigenvalues(s);
    const auto rhs = ode_rhs(s);
    for (int i = 0; i < 3; ++i) {
      CAPTURE(i);
      CHECK(ev[i] == doctest::Approx(ric[i][i] / g[i]).epsilon(1e-13));
      for (int j = 0; j < 3; ++j)
        if (i != j) CHECK(std::abs(ric[i][j]) < 1e-13);
    }
    CHECK(rhs[0] == doctest::Approx(-2.0 * ric[0][0]).epsilon(1e-13));
    CHECK(rhs[1] == doctest::Approx(-2.0 * ric[2][2]).epsilon(1e-13));
    CHECK(scalar_curvature(s) == doctest::Approx(lie.scalar()).epsilon(1e-13));
    CHECK(riemann_norm(s) == doctest::Approx(lie.riemann_norm()).epsilon(1e-12));
  }
  SUBCASE("round model has constant sectional curvature 1/c") {
    for (double c : {0.25, 1.0, 4.0}) {
      const auto s = HomogeneousState::round(c);
      const double k = 1.0 / c;
      CHECK(scalar_curvature(s) == doctest::Approx(6.0 * k));
      CHECK(riemann_norm(s) == doctest::Approx(2.0 * std::sqrt(3.0) * k));
      const auto lie = oracle::LieGroupMetric::su2(oracle::diagonal(c, c, c));
      CHECK(lie.ricci()[1][1] == doctest::Approx(2.0 * k * c));
    }
  }
}

TEST_CASE("analytic solutions") {
  CHECK(analytic_solution(HomogeneousState::round(1.0), 0.2).coefficients[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(analytic_solution(HomogeneousState::flat(2.0), 7.5).coefficients[0] == 2.0);
  try {
    analytic_solution(HomogeneousState::round(1.0), 0.25);
    FAIL("expected extinction");
  } catch (const ExtinctionError& e) {
    CHECK(e.beta_star() == 0.25);
  }
  CHECK(extinction_time(HomogeneousState::berger(0.8, 0.8)) == doctest::Approx(0.2).epsilon(1e-8));
  const double star = extinction_time(HomogeneousState::berger(1.0, 0.5));
  CHECK(star > 0.0);
  CHECK_THROWS_AS(analytic_solution(HomogeneousState::berger(1.0, 0.5), star * 1.01), ExtinctionError);
}

TEST_CASE("fixed-step integration reproduces the reference solutions") {
  const auto round = integrate_model(HomogeneousState::round(1.0), 0.2);
  CHECK(round.back().beta == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(std::abs(round.back().state.coefficients[0] - 0.2) < 1e-10);
  CHECK(std::abs(round.back().state.coefficients[0] - 0.2) < 1e-13);

  const auto b0 = HomogeneousState::berger(1.0, 0.5);
  ModelRunOptions fine;
  fine.step = 2.5e-4;
  const auto run = integrate_model(b0, 0.15, fine);
  const auto ref = analytic_solution(b0, 0.15);
  CHECK(std::abs(run.back().state.coefficients[0] - ref.coefficients[0]) < 1e-10);
  CHECK(std::abs(run.back().state.coefficients[1] - ref.coefficients[1]) < 1e-10);

  const auto locus = integrate_model(HomogeneousState::berger(1.3, 1.3), 0.3);
  for (const auto& s : locus) CHECK(std::abs(s.state.coefficients[0] - s.state.coefficients[1]) <= 1e-12);

  const auto flat = integrate_model(HomogeneousState::flat(2.0), 1.0);
  for (const auto& s : flat) CHECK(s.state.coefficients[0] == 2.0);
}

TEST_CASE("volume-normalized flow") {
  ModelRunOptions opt;
  opt.normalization = FlowNormalization::VolumeNormalized;
  for (const auto& s : integrate_model(HomogeneousState::round(1.7), 0.5, opt))
    CHECK(std::abs(s.state.coefficients[0] - 1.7) <= 1e-12);
  const auto b0 = HomogeneousState::berger(1.0, 0.6);
  const double v0 = model_volume(b0);
  for (const auto& s : integrate_model(b0, 0.2, opt)) CHECK(model_volume(s.state) == doctest::Approx(v0).epsilon(1e-10));
}

TEST_CASE("blow-up detection on the round model") {
  ModelRunOptions opt;
  opt.step = 1e-3;
  std::vector<ModelSample> partial;
  try {
    integrate_model_into(partial, HomogeneousState::round(1.0), 0.3, opt);
    FAIL("expected blow-up");
  } catch (const BlowUpError& e) {
    CHECK(std::abs(e.beta() - 0.25) <= 2 * opt.step);
  }
  CHECK(!partial.empty());
  CHECK(partial.back().beta < 0.25 + 1e-12);
}

TEST_CASE("pinching diagnostics") {
  const auto round = pinching_report(HomogeneousState::round(0.7));
  CHECK(round.positive_scalar);
  CHECK(round.alpha1_max == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(round.max_tracefree_norm2 < 1e-28);
  CHECK(round.alpha2 < 1e-28);

  CHECK_FALSE(pinching_report(HomogeneousState::flat(1.0)).positive_scalar);

  for (auto [a, c] : {std::pair{1.0, 0.5}, {1.0, 1.5}}) {
    const auto s = HomogeneousState::berger(a, c);
    const auto lie = oracle::LieGroupMetric::su2(oracle::diagonal(a, a, c));
    const auto ric = lie.ricci();
    const double r = lie.scalar();
    const double l1 = ric[0][0] / a, l3 = ric[2][2] / c;
    const auto rep = pinching_report(s);
    CHECK(rep.alpha1_max < 1.0 / 3.0);
    CHECK(rep.alpha1_max == doctest::Approx(std::min(l1, l3) / r).epsilon(1e-12));
    const double tf2 = 2 * (l1 - r / 3) * (l1 - r / 3) + (l3 - r / 3) * (l3 - r / 3);
    CHECK(rep.max_tracefree_norm2 == doctest::Approx(tf2).epsilon(1e-12));
    CHECK(rep.alpha2 == doctest::Approx(tf2 / std::pow(r, 1.0 - rep.alpha3)).epsilon(1e-12));

    // The same numbers through the pointwise path on a chart sample.
    const auto cs = sample_on_chart(s, GridChart::cube(8));
    const auto ps = pinching_sample(cs.metric.at(5), cs.ricci.node_values(5));
    CHECK(ps.scalar == doctest::Approx(r).epsilon(1e-12));
    CHECK(ps.min_eigenvalue == doctest::Approx(std::min(l1, l3)).epsilon(1e-12));
  }
}

TEST_CASE("alpha3 regression recovers a planted power law") {
  std::vector<PinchingSample> samples;
  for (double r : {0.5, 1.0, 2.0, 4.0, 9.0}) samples.push_back({r, 0.3 * std::pow(r, 0.4), 0.1 * r});
  const auto rep = pinching_report(samples);
  CHECK(rep.alpha3_fitted);
  CHECK(rep.alpha3 == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(rep.alpha2 == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rep.alpha1_max == doctest::Approx(0.1));
}
