#include <cmath>
#include <numeric>
#include <queue>

#include "doctest.h"
#include "rflow/distance.hpp"
#include "rflow/geometry.hpp"
#include "test_metrics.hpp"

using namespace rflow;
using namespace testing_support;

namespace {

// Shortest paths on the periodic node graph with every primitive offset of
// length <= 3 per axis as an edge; edge lengths by an 8-point midpoint rule
// on the closed-form metric.
template <class F>
std::vector<double> dijkstra(const GridChart& chart, F&& metric, const Node& src) {
  std::vector<Node> offsets;
  for (int k = -3; k <= 3; ++k)
    for (int j = -3; j <= 3; ++j)
      for (int i = -3; i <= 3; ++i)
        if (std::gcd(std::gcd(std::abs(i), std::abs(j)), std::abs(k)) == 1) offsets.push_back({i, j, k});
  auto length = [&](const std::array<double, 3>& x, const Node& o) {
    double s = 0.0;
    const int q = 8;
    for (int t = 0; t < q; ++t) {
      const double f = (t + 0.5) / q;
      const auto g = metric(x[0] + f * o[0] * chart.spacing(0), x[1] + f * o[1] * chart.spacing(1),
                            x[2] + f * o[2] * chart.spacing(2));
      double n2 = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) n2 += g[sym_index(a, b)] * o[a] * chart.spacing(a) * o[b] * chart.spacing(b);
      s += std::sqrt(n2) / q;
    }
    return s;
  };
  std::vector<double> d(chart.node_count(), INFINITY);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[chart.index(src)] = 0.0;
  pq.push({0.0, chart.index(src)});
  while (!pq.empty()) {
    const auto [du, i] = pq.top();
    pq.pop();
    if (du > d[i]) continue;
    const Node nd = chart.node(i);
    const auto x = chart.position(nd);
    for (const auto& o : offsets) {
      const std::size_t j = chart.index(nd[0] + o[0], nd[1] + o[1], nd[2] + o[2]);
      const double cand = du + length(x, o);
      if (cand < d[j]) {
        d[j] = cand;
        pq.push({cand, j});
      }
    }
  }
  return d;
}

} // namespace

TEST_CASE("flat metric distance is the minimal-image Euclidean distance") {
  const auto chart = GridChart({12, 10, 9}, {1.0, 2.0, 1.5});
  const Node y{11, 0, 4};
  const auto d = geodesic_distance(MetricField::flat(chart), y);
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const Node x = chart.node(i);
    const Node o = chart.minimal_offset(y, x);
    if (std::abs(2 * o[0]) >= 12 || std::abs(2 * o[1]) >= 10 || std::abs(2 * o[2]) >= 9) {
      CHECK_FALSE(d.covers(x));
      CHECK_THROWS_AS(d.at(x), InjectivityGuardError);
      continue;
    }
    const double e = std::hypot(o[0] * chart.spacing(0), o[1] * chart.spacing(1), o[2] * chart.spacing(2));
    CHECK(d.at(x) == doctest::Approx(e).epsilon(1e-15));
  }
  SUBCASE("scaling") {
    const auto d4 = geodesic_distance(MetricField::flat(chart, 4.0), y);
    for (std::size_t i = 0; i < chart.node_count(); ++i)
      if (d.covers(chart.node(i))) CHECK(d4.values()[i] == doctest::Approx(2.0 * d.values()[i]).epsilon(1e-15));
  }
  SUBCASE("transport is the identity") {
    const auto t = parallel_transport(MetricField::flat(chart), y);
    for (std::size_t i = 0; i < chart.node_count(); ++i)
      if (d.covers(chart.node(i))) CHECK(t[i] == Eigen::Matrix3d::Identity());
  }
}

TEST_CASE("perturbed metric distance against a graph shortest-path oracle") {
  for (int n : {16, 24}) {
    const auto chart = GridChart::cube(n);
    const WavyMetric f{0.1};
    const auto g = sample_metric(chart, f);
    const Node y{3, 7, 11};
    const auto d = geodesic_distance(g, y);
    const auto ref = dijkstra(chart, f, y);
    double worst = 0.0;
    for (std::size_t i = 0; i < chart.node_count(); ++i)
      if (d.covers(chart.node(i))) worst = std::max(worst, std::abs(d.values()[i] - ref[i]));
    MESSAGE("n=" << n << " max |sweep - graph| = " << worst);
    CHECK(worst < 2.0 * chart.spacing(0));
    CHECK(d.at(y) == 0.0);
  }
}

TEST_CASE("first-arrival parents descend to the source") {
  const auto chart = GridChart::cube(12);
  const auto g = sample_metric(chart, WavyMetric{0.1});
  const Node y{5, 5, 5};
  const auto d = geodesic_distance(g, y);
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    if (!d.covers(chart.node(i))) continue;
    std::size_t j = i;
    int steps = 0;
    while (d.parent(j) != j && steps < 100) {
      CHECK(d.values()[d.parent(j)] < d.values()[j]);
      j = d.parent(j);
      ++steps;
    }
    CHECK(chart.node(j) == y);
  }
}

TEST_CASE("transport on a perturbed metric") {
  const auto chart = GridChart::cube(24, 1.0, 4);
  const auto g = sample_metric(chart, WavyMetric{0.1});
  const Node y{6, 6, 6};
  const auto t = parallel_transport(g, y);
  CHECK(t.at(y) == Eigen::Matrix3d::Identity());
  CHECK_THROWS_AS(t.at({18, 6, 6}), InjectivityGuardError);
  // Levi-Civita transport is an isometry: P^T g(x) P = g(y) up to path
  // discretization error.
  auto G = [&](std::size_t i) {
    Eigen::Matrix3d m;
    const auto v = g.at(i);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) m(a, b) = v[sym_index(a, b)];
    return m;
  };
  const Eigen::Matrix3d Gy = G(chart.index(y));
  double worst = 0.0;
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    if (!t.distance().covers(chart.node(i))) continue;
    worst = std::max(worst, (t[i].transpose() * G(i) * t[i] - Gy).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-2);
  CHECK(worst > 0.0);
}
