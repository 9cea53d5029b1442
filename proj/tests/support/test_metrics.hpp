#pragma once

// Closed-form periodic test metrics and helpers to sample them on a chart.

#include <array>
#include <cmath>

#include "jet_oracle.hpp"
#include "rflow/grid.hpp"

namespace testing_support {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// A generic smooth metric on the unit torus: delta + eps * h with every
/// component varying along more than one axis.
struct WavyMetric {
  double eps;
  template <class T>
  std::array<T, 6> operator()(const T& x, const T& y, const T& z) const {
    using std::cos;
    using std::sin;
    using oracle::cos;
    using oracle::sin;
    const double w = kTwoPi;
    return {1.0 + eps * sin(w * (x + y)),
            0.5 * eps * cos(w * z),
            0.3 * eps * sin(w * (x - z)),
            1.0 + eps * cos(w * x) * sin(w * z),
            0.4 * eps * sin(w * y),
            1.0 + 0.7 * eps * cos(w * (y + z))};
  }
};

/// A smooth symmetric tensor used as extrinsic-curvature-like input.
struct WavyTensor {
  template <class T>
  std::array<T, 6> operator()(const T& x, const T& y, const T& z) const {
    using std::cos;
    using std::sin;
    using oracle::cos;
    using oracle::sin;
    const double w = kTwoPi;
    return {0.3 + sin(w * y), 0.2 * cos(w * (x + z)), 0.1 * sin(w * x),
            -0.1 + cos(w * z) * sin(w * x), 0.25 * cos(w * y), 0.5 * sin(w * (x + y + z))};
  }
};

struct WavyScalar {
  template <class T>
  T operator()(const T& x, const T& y, const T& z) const {
    using std::cos;
    using std::sin;
    using oracle::cos;
    using oracle::sin;
    const double w = kTwoPi;
    return sin(w * x) * cos(w * y) + 0.5 * sin(w * (y + z));
  }
};

template <class F>
rflow::SymTensorField sample_tensor(const rflow::GridChart& chart, const F& f) {
  return rflow::SymTensorField::sample(chart, [&](double x, double y, double z) { return f(x, y, z); });
}

template <class F>
rflow::MetricField sample_metric(const rflow::GridChart& chart, const F& f) {
  return rflow::MetricField(sample_tensor(chart, f));
}

template <class F>
rflow::ScalarField sample_scalar(const rflow::GridChart& chart, const F& f) {
  return rflow::ScalarField::sample(chart, [&](double x, double y, double z) { return f(x, y, z); });
}

inline double observed_rate(double coarse_err, double fine_err, double ratio = 2.0) {
  return std::log(coarse_err / fine_err) / std::log(ratio);
}

} // namespace testing_support
