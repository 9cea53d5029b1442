#pragma once

// Curvature of a left-invariant metric on a 3-dimensional Lie group, from the
// structure constants alone (Koszul formula). Independent of the model code.

#include <array>
#include <cmath>

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

struct LieGroupMetric {
  // bracket[i][j][k]: [X_i, X_j] = bracket[i][j][k] X_k
  double bracket[3][3][3] = {};
  Mat3 g{};
  // Gamma^m_ij with nabla_{X_i} X_j = Gamma^m_ij X_m
  double gamma[3][3][3] = {};
  // R(X_i, X_j) X_k = riem[i][j][k][m] X_m
  double riem[3][3][3][3] = {};

  static LieGroupMetric su2(const Mat3& g) {
    LieGroupMetric out;
    out.g = g;
    const int cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
    for (const auto& c : cyc) {
      out.bracket[c[0]][c[1]][c[2]] = 2.0;
      out.bracket[c[1]][c[0]][c[2]] = -2.0;
    }
    out.build();
    return out;
  }

  double metric(const double (&u)[3], const double (&v)[3]) const {
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s += g[a][b] * u[a] * v[b];
    return s;
  }

  Mat3 inverse() const {
    const double d = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                     g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                     g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    Mat3 inv;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
        inv[i][j] = (g[i1][j1] * g[i2][j2] - g[i1][j2] * g[i2][j1]) / d;
      }
    return inv;
  }

  void build() {
    // g(nabla_i X_j, X_k) = 1/2 (g([X_i,X_j],X_k) - g([X_j,X_k],X_i) + g([X_k,X_i],X_j))
    double low[3][3][3];
    auto gb = [&](int i, int j, int k) {
      double s = 0.0;
      for (int m = 0; m < 3; ++m) s += bracket[i][j][m] * g[m][k];
      return s;
    };
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) low[i][j][k] = 0.5 * (gb(i, j, k) - gb(j, k, i) + gb(k, i, j));
    const Mat3 gi = inverse();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int m = 0; m < 3; ++m) {
          double s = 0.0;
          for (int k = 0; k < 3; ++k) s += low[i][j][k] * gi[k][m];
          gamma[m][i][j] = s;
        }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int n = 0; n < 3; ++n) {
            double s = 0.0;
            for (int m = 0; m < 3; ++m) s += gamma[m][j][k] * gamma[n][i][m] - gamma[m][i][k] * gamma[n][j][m];
            for (int l = 0; l < 3; ++l) s -= bracket[i][j][l] * gamma[n][l][k];
            riem[i][j][k][n] = s;
          }
  }

  /// Ric(X_j, X_k) = trace of X_i -> R(X_i, X_j) X_k
  Mat3 ricci() const {
    Mat3 r{};
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i) r[j][k] += riem[i][j][k][i];
    return r;
  }

  double scalar() const {
    const Mat3 gi = inverse();
    const Mat3 r = ricci();
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) s += gi[a][b] * r[a][b];
    return s;
  }

  /// sqrt(R_ijkl R^ijkl) with R_ijkl = g(R(X_i, X_j) X_k, X_l)
  double riemann_norm() const {
    const Mat3 gi = inverse();
    double low[3][3][3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double s = 0.0;
            for (int n = 0; n < 3; ++n) s += riem[i][j][k][n] * g[n][l];
            low[i][j][k][l] = s;
          }
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            for (int p = 0; p < 3; ++p)
              for (int q = 0; q < 3; ++q)
                for (int r = 0; r < 3; ++r)
                  for (int s = 0; s < 3; ++s)
                    sum += low[i][j][k][l] * low[p][q][r][s] * gi[i][p] * gi[j][q] * gi[k][r] * gi[l][s];
    return std::sqrt(sum);
  }
};

inline Mat3 diagonal(double a, double b, double c) { return {{{a, 0, 0}, {0, b, 0}, {0, 0, c}}}; }

} // namespace oracle
