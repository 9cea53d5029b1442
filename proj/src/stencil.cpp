#include "rflow/stencil.hpp"

namespace rflow::stencil {
namespace {

// Applies sum_s w[s] * in[shift by offsets[s] along axis] * scale.
template <std::size_t S>
void apply(const GridChart& chart, int axis, std::span<const double> in, std::span<double> out,
           const std::array<int, S>& offsets, const std::array<double, S>& w, double scale) {
  const int nx = chart.resolution(0);
  const int ny = chart.resolution(1);
  const int nz = chart.resolution(2);
  const int n = chart.resolution(axis);
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(nx)
                                                        : static_cast<std::size_t>(nx) * ny);
  // Neighbor displacement (in flat index units) for every coordinate value.
  std::vector<std::array<std::ptrdiff_t, S>> disp(n);
  for (int c = 0; c < n; ++c)
    for (std::size_t s = 0; s < S; ++s)
      disp[c][s] = static_cast<std::ptrdiff_t>(chart.wrap(c + offsets[s], axis) - c) *
                   static_cast<std::ptrdiff_t>(stride);

  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        const int c = axis == 0 ? i : (axis == 1 ? j : k);
        const auto& d = disp[c];
        double acc = 0.0;
        for (std::size_t s = 0; s < S; ++s)
          acc += w[s] * in[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + d[s])];
        out[idx] = acc * scale;
      }
}

} // namespace

void diff1(const GridChart& chart, int axis, std::span<const double> in, std::span<double> out) {
  const double h = chart.spacing(axis);
  if (chart.stencil_order() == 2) {
    apply<2>(chart, axis, in, out, {1, -1}, {1.0, -1.0}, 1.0 / (2.0 * h));
  } else {
    apply<4>(chart, axis, in, out, {2, 1, -1, -2}, {-1.0, 8.0, -8.0, 1.0}, 1.0 / (12.0 * h));
  }
}

void diff2(const GridChart& chart, int axis, std::span<const double> in, std::span<double> out) {
  const double h = chart.spacing(axis);
  if (chart.stencil_order() == 2) {
    apply<3>(chart, axis, in, out, {1, 0, -1}, {1.0, -2.0, 1.0}, 1.0 / (h * h));
  } else {
    apply<5>(chart, axis, in, out, {2, 1, 0, -1, -2}, {-1.0, 16.0, -30.0, 16.0, -1.0},
             1.0 / (12.0 * h * h));
  }
}

std::vector<double> diff1(const GridChart& chart, int axis, std::span<const double> in) {
  std::vector<double> out(in.size());
  diff1(chart, axis, in, out);
  return out;
}

Jet jet(const GridChart& chart, std::span<const double> in) {
  Jet j;
  const std::size_t n = in.size();
  for (int a = 0; a < 3; ++a) {
    j.d1[a].resize(n);
    diff1(chart, a, in, j.d1[a]);
  }
  for (int p = 0; p < 6; ++p) {
    const auto [a, b] = kSymPairs[p];
    j.d2[p].resize(n);
    if (a == b)
      diff2(chart, a, in, j.d2[p]);
    else
      diff1(chart, b, j.d1[a], j.d2[p]);
  }
  return j;
}

} // namespace rflow::stencil
