#pragma once

// Pointwise 3x3 symmetric algebra on the packed 11,12,13,22,23,33 layout.

#include <array>
#include <cmath>

#include "rflow/grid.hpp"

namespace rflow::sym3 {

using Sym = std::array<double, 6>;
using Mat = std::array<std::array<double, 3>, 3>;

inline double get(const Sym& s, int a, int b) { return s[sym_index(a, b)]; }

inline Mat to_mat(const Sym& s) {
  Mat m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m[a][b] = get(s, a, b);
  return m;
}

inline Sym from_mat(const Mat& m) {
  Sym s;
  for (int p = 0; p < 6; ++p) {
    const auto [a, b] = kSymPairs[p];
    s[p] = 0.5 * (m[a][b] + m[b][a]);
  }
  return s;
}

inline double det(const Sym& g) {
  return g[0] * (g[3] * g[5] - g[4] * g[4]) - g[1] * (g[1] * g[5] - g[4] * g[2]) +
         g[2] * (g[1] * g[4] - g[3] * g[2]);
}

/// Leading principal minors all positive.
inline bool positive_definite(const Sym& g) {
  return g[0] > 0.0 && g[0] * g[3] - g[1] * g[1] > 0.0 && det(g) > 0.0;
}

/// Inverse of a symmetric matrix with determinant `d` (assumed nonzero).
inline Sym inverse(const Sym& g, double d) {
  const double inv = 1.0 / d;
  return {(g[3] * g[5] - g[4] * g[4]) * inv, (g[2] * g[4] - g[1] * g[5]) * inv,
          (g[1] * g[4] - g[2] * g[3]) * inv, (g[0] * g[5] - g[2] * g[2]) * inv,
          (g[1] * g[2] - g[0] * g[4]) * inv, (g[0] * g[3] - g[1] * g[1]) * inv};
}

inline Sym inverse(const Sym& g) { return inverse(g, det(g)); }

/// Full contraction A_ab B^ab where both are given with indices in the same
/// position (the caller raises one of them).
inline double contract(const Sym& a, const Sym& b) {
  double s = 0.0;
  for (int p = 0; p < 6; ++p) s += sym_weight(p) * a[p] * b[p];
  return s;
}

/// g^ac g^bd T_cd
inline Sym raise_both(const Sym& gi, const Sym& t) {
  const Mat G = to_mat(gi);
  const Mat T = to_mat(t);
  Mat tmp{};
  for (int a = 0; a < 3; ++a)
    for (int d = 0; d < 3; ++d) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += G[a][c] * T[c][d];
      tmp[a][d] = s;
    }
  Sym out;
  for (int p = 0; p < 6; ++p) {
    const auto [a, b] = kSymPairs[p];
    double s = 0.0;
    for (int d = 0; d < 3; ++d) s += tmp[a][d] * G[b][d];
    out[p] = s;
  }
  return out;
}

/// g^ab T_ab
inline double trace(const Sym& gi, const Sym& t) { return contract(gi, t); }

} // namespace rflow::sym3
