#include "rflow/grid.hpp"

#include <sstream>

#include "rflow/sym3.hpp"

namespace rflow {

std::string to_string(const Node& node) {
  std::ostringstream os;
  os << '(' << node[0] << ',' << node[1] << ',' << node[2] << ')';
  return os.str();
}

GridChart::GridChart(std::array<int, 3> resolution, std::array<double, 3> period,
                     int stencil_order)
    : n_(resolution), period_(period), order_(stencil_order) {
  if (stencil_order != 2 && stencil_order != 4)
    throw ValidationError("stencil order must be 2 or 4");
  for (int a = 0; a < 3; ++a) {
    if (n_[a] < 8) throw ValidationError("grid resolution must be at least 8 per axis");
    if (!(period_[a] > 0.0) || !std::isfinite(period_[a]))
      throw ValidationError("grid period must be positive and finite");
    h_[a] = period_[a] / n_[a];
  }
  count_ = static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
}

Node GridChart::node(std::size_t idx) const {
  const int i = static_cast<int>(idx % n_[0]);
  idx /= n_[0];
  const int j = static_cast<int>(idx % n_[1]);
  const int k = static_cast<int>(idx / n_[1]);
  return {i, j, k};
}

bool GridChart::contains(const Node& node) const {
  for (int a = 0; a < 3; ++a)
    if (node[a] < 0 || node[a] >= n_[a]) return false;
  return true;
}

Node GridChart::minimal_offset(const Node& from, const Node& to) const {
  Node d;
  for (int a = 0; a < 3; ++a) {
    int v = wrap(to[a] - from[a], a);
    if (2 * v >= n_[a]) v -= n_[a];
    d[a] = v;
  }
  return d;
}

void require_positive_definite(const SymTensorField& g) {
  const auto& chart = g.chart();
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    const auto v = g.node_values(i);
    if (!sym3::positive_definite(v) || !std::isfinite(sym3::det(v)))
      throw SingularMetricError(chart.node(i), "not positive definite");
  }
}

MetricField::MetricField(SymTensorField components) : g_(std::move(components)) {
  require_positive_definite(g_);
}

MetricField MetricField::flat(const GridChart& chart, double scale) {
  SymTensorField g(chart);
  for (int a = 0; a < 3; ++a) {
    auto c = g.component(sym_index(a, a));
    std::fill(c.begin(), c.end(), scale);
  }
  return MetricField(std::move(g));
}

} // namespace rflow
