#pragma once

#include <cstddef>
#include <vector>

namespace rflow {

inline void axpy(std::vector<double>& y, double alpha, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

/// One classical RK4 step of dy/dt = f(t, y). `V` needs copy and an
/// ADL-visible axpy(V&, double, const V&).
template <class V, class F>
V rk4_step(const V& y, double t, double h, F&& f) {
  const V k1 = f(t, y);
  V y2 = y;
  axpy(y2, 0.5 * h, k1);
  const V k2 = f(t + 0.5 * h, y2);
  V y3 = y;
  axpy(y3, 0.5 * h, k2);
  const V k3 = f(t + 0.5 * h, y3);
  V y4 = y;
  axpy(y4, h, k3);
  const V k4 = f(t + h, y4);
  V out = y;
  axpy(out, h / 6.0, k1);
  axpy(out, h / 3.0, k2);
  axpy(out, h / 3.0, k3);
  axpy(out, h / 6.0, k4);
  return out;
}

} // namespace rflow
