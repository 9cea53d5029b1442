#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rflow/errors.hpp"

namespace rflow {

/// Storage slot of the symmetric pair (a, b); order 11,12,13,22,23,33.
constexpr int sym_index(int a, int b) {
  constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return table[a][b];
}

constexpr std::array<std::array<int, 2>, 6> kSymPairs = {
    {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}}};

/// Off-diagonal slots appear twice in a full contraction.
constexpr double sym_weight(int slot) { return (slot == 0 || slot == 3 || slot == 5) ? 1.0 : 2.0; }

/// Periodic 3-torus discretization. Node (i, j, k) sits at (i h1, j h2, k h3);
/// the flat index runs x-fastest.
class GridChart {
public:
  GridChart(std::array<int, 3> resolution, std::array<double, 3> period, int stencil_order = 2);

  /// Cube of side `period` with `n` nodes per axis.
  static GridChart cube(int n, double period = 1.0, int stencil_order = 2) {
    return GridChart({n, n, n}, {period, period, period}, stencil_order);
  }

  int resolution(int axis) const { return n_[axis]; }
  double period(int axis) const { return period_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  int stencil_order() const { return order_; }
  std::size_t node_count() const { return count_; }
  double cell_volume() const { return h_[0] * h_[1] * h_[2]; }
  double max_spacing() const { return std::max({h_[0], h_[1], h_[2]}); }
  double min_spacing() const { return std::min({h_[0], h_[1], h_[2]}); }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(wrap(i, 0)) +
           static_cast<std::size_t>(n_[0]) *
               (static_cast<std::size_t>(wrap(j, 1)) +
                static_cast<std::size_t>(n_[1]) * static_cast<std::size_t>(wrap(k, 2)));
  }
  std::size_t index(const Node& node) const { return index(node[0], node[1], node[2]); }
  Node node(std::size_t idx) const;
  std::array<double, 3> position(const Node& node) const {
    return {node[0] * h_[0], node[1] * h_[1], node[2] * h_[2]};
  }
  std::array<double, 3> position(std::size_t idx) const { return position(node(idx)); }

  bool contains(const Node& node) const;
  int wrap(int c, int axis) const {
    const int n = n_[axis];
    const int r = c % n;
    return r < 0 ? r + n : r;
  }
  /// Integer offset from `from` to the nearest periodic image of `to`; ties
  /// (exactly half a period) resolve to the negative side.
  Node minimal_offset(const Node& from, const Node& to) const;

  bool operator==(const GridChart& other) const {
    return n_ == other.n_ && period_ == other.period_ && order_ == other.order_;
  }

private:
  std::array<int, 3> n_;
  std::array<double, 3> period_;
  std::array<double, 3> h_;
  int order_;
  std::size_t count_;
};

/// Sampled field with `N` components per node, stored component-major.
template <int N>
class Field {
public:
  static constexpr int kComponents = N;

  explicit Field(GridChart chart, double value = 0.0) : chart_(chart) {
    for (auto& c : data_) c.assign(chart_.node_count(), value);
  }

  /// Fill from f(x, y, z) -> std::array<double, N> (or double when N == 1).
  template <class F>
  static Field sample(const GridChart& chart, F&& f) {
    Field out(chart);
    for (std::size_t i = 0; i < chart.node_count(); ++i) {
      const auto x = chart.position(i);
      if constexpr (N == 1) {
        out.data_[0][i] = f(x[0], x[1], x[2]);
      } else {
        const auto v = f(x[0], x[1], x[2]);
        for (int c = 0; c < N; ++c) out.data_[c][i] = v[c];
      }
    }
    return out;
  }

  const GridChart& chart() const { return chart_; }
  std::size_t size() const { return chart_.node_count(); }

  std::span<double> component(int c) { return data_[c]; }
  std::span<const double> component(int c) const { return data_[c]; }
  double& at(int c, std::size_t i) { return data_[c][i]; }
  double at(int c, std::size_t i) const { return data_[c][i]; }

  // Scalar convenience.
  double& operator[](std::size_t i) requires(N == 1) { return data_[0][i]; }
  double operator[](std::size_t i) const requires(N == 1) { return data_[0][i]; }
  std::span<double> values() requires(N == 1) { return data_[0]; }
  std::span<const double> values() const requires(N == 1) { return data_[0]; }

  std::array<double, N> node_values(std::size_t i) const {
    std::array<double, N> v;
    for (int c = 0; c < N; ++c) v[c] = data_[c][i];
    return v;
  }
  void set_node(std::size_t i, const std::array<double, N>& v) {
    for (int c = 0; c < N; ++c) data_[c][i] = v[c];
  }

  Field& operator+=(const Field& o) { return axpy(1.0, o); }
  Field& operator-=(const Field& o) { return axpy(-1.0, o); }
  Field& operator*=(double s) {
    for (auto& c : data_)
      for (auto& v : c) v *= s;
    return *this;
  }
  /// this += alpha * x
  Field& axpy(double alpha, const Field& x) {
    require_same_chart(x);
    for (int c = 0; c < N; ++c) {
      auto& dst = data_[c];
      const auto& src = x.data_[c];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
    }
    return *this;
  }
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : data_)
      for (double v : c) m = std::max(m, std::abs(v));
    return m;
  }
  double max_abs_diff(const Field& o) const {
    require_same_chart(o);
    double m = 0.0;
    for (int c = 0; c < N; ++c)
      for (std::size_t i = 0; i < data_[c].size(); ++i)
        m = std::max(m, std::abs(data_[c][i] - o.data_[c][i]));
    return m;
  }

  template <int M>
  void require_same_chart(const Field<M>& o) const {
    if (!(chart_ == o.chart())) throw ChartMismatchError();
  }

  bool operator==(const Field& o) const { return chart_ == o.chart_ && data_ == o.data_; }

private:
  GridChart chart_;
  std::array<std::vector<double>, N> data_;
};

/// Free form used by the generic time steppers.
template <int N>
void axpy(Field<N>& y, double alpha, const Field<N>& x) {
  y.axpy(alpha, x);
}
template <int N>
void axpy(std::vector<Field<N>>& y, double alpha, const std::vector<Field<N>>& x) {
  for (std::size_t p = 0; p < y.size(); ++p) y[p].axpy(alpha, x[p]);
}

using ScalarField = Field<1>;
using CovectorField = Field<3>;
/// Symmetric rank-2 tensor; slots follow `sym_index`.
using SymTensorField = Field<6>;
/// Christoffel symbols Gamma^c_ab at slot 6 c + sym_index(a, b).
using ConnectionField = Field<18>;

/// Riemannian metric: a symmetric tensor field that is positive definite at
/// every node (all leading principal minors > 0). Construction rejects
/// anything else; the data are never projected.
class MetricField {
public:
  explicit MetricField(SymTensorField components);

  /// Constant multiple of the chart's coordinate metric.
  static MetricField flat(const GridChart& chart, double scale = 1.0);

  const SymTensorField& components() const { return g_; }
  const GridChart& chart() const { return g_.chart(); }
  std::array<double, 6> at(std::size_t i) const { return g_.node_values(i); }

  bool operator==(const MetricField& o) const { return g_ == o.g_; }

private:
  SymTensorField g_;
};

/// Throws SingularMetricError naming the first node that fails the minor test.
void require_positive_definite(const SymTensorField& g);

} // namespace rflow
