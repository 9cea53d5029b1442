#include "rflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rflow/stencil.hpp"
#include "rflow/sym3.hpp"

namespace rflow {
namespace {

constexpr int kBivector[3][2] = {{0, 1}, {0, 2}, {1, 2}};

// Bivector slot and orientation of the ordered pair (a, b); sign 0 when a == b.
inline void bivector_of(int a, int b, int& slot, int& sign) {
  if (a == b) {
    slot = 0;
    sign = 0;
    return;
  }
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  slot = lo == 0 ? (hi == 1 ? 0 : 1) : 2;
  sign = a < b ? 1 : -1;
}

inline double gam(const double (&gamma)[3][6], int c, int a, int b) {
  return gamma[c][sym_index(a, b)];
}

} // namespace

MetricGeometry::MetricGeometry(const MetricField& g)
    : g_(g), inverse_(g.chart()), sqrt_det_(g.chart()), dg_(g.chart()), gamma_(g.chart()),
      dgamma_(g.chart()), gamma_trace_(g.chart()), ricci_(g.chart()), scalar_(g.chart()),
      riemann_(g.chart()), rm_norm_(g.chart()) {
  const auto& chart = g.chart();
  const std::size_t n = chart.node_count();

  std::array<stencil::Jet, 6> jets;
  for (int p = 0; p < 6; ++p) jets[p] = stencil::jet(chart, g.components().component(p));

  for (std::size_t i = 0; i < n; ++i) {
    const sym3::Sym gv = g.at(i);
    const double d = sym3::det(gv);
    if (!(d > 0.0) || !std::isfinite(d)) throw SingularMetricError(chart.node(i), "non-invertible");
    const sym3::Sym gi = sym3::inverse(gv, d);
    inverse_.set_node(i, gi);
    sqrt_det_[i] = std::sqrt(d);

    double dg[6][3];
    double ddg[6][6];
    for (int p = 0; p < 6; ++p) {
      for (int a = 0; a < 3; ++a) {
        dg[p][a] = jets[p].d1[a][i];
        dg_.at(3 * p + a, i) = dg[p][a];
      }
      for (int q = 0; q < 6; ++q) ddg[p][q] = jets[p].d2[q][i];
    }
    auto dG = [&](int a, int b, int axis) { return dg[sym_index(a, b)][axis]; };
    auto ddG = [&](int a, int b, int x, int y) { return ddg[sym_index(a, b)][sym_index(x, y)]; };
    auto GI = [&](int a, int b) { return gi[sym_index(a, b)]; };

    // Connection of the first kind Gamma_cab and of the second kind Gamma^c_ab.
    double low[3][6];
    double up[3][6];
    for (int c = 0; c < 3; ++c)
      for (int q = 0; q < 6; ++q) {
        const auto [a, b] = kSymPairs[q];
        low[c][q] = 0.5 * (dG(c, b, a) + dG(c, a, b) - dG(a, b, c));
      }
    for (int c = 0; c < 3; ++c)
      for (int q = 0; q < 6; ++q) {
        double s = 0.0;
        for (int e = 0; e < 3; ++e) s += GI(c, e) * low[e][q];
        up[c][q] = s;
        gamma_.at(6 * c + q, i) = s;
      }
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int q = 0; q < 6; ++q) s += sym_weight(q) * gi[q] * up[c][q];
      gamma_trace_.at(c, i) = s;
    }

    // d_x Gamma^s_ab = g^se (d_x Gamma_eab - d_x g_ep Gamma^p_ab)
    for (int x = 0; x < 3; ++x)
      for (int q = 0; q < 6; ++q) {
        const auto [a, b] = kSymPairs[q];
        double dlow[3];
        for (int e = 0; e < 3; ++e) {
          double t = 0.5 * (ddG(e, b, x, a) + ddG(e, a, x, b) - ddG(a, b, x, e));
          for (int p = 0; p < 3; ++p) t -= dG(e, p, x) * up[p][q];
          dlow[e] = t;
        }
        for (int s = 0; s < 3; ++s) {
          double v = 0.0;
          for (int e = 0; e < 3; ++e) v += GI(s, e) * dlow[e];
          dgamma_.at(18 * x + 6 * s + q, i) = v;
        }
      }

    // Riemann over the bivector basis.
    double m[3][3];
    for (int P = 0; P < 3; ++P)
      for (int Q = P; Q < 3; ++Q) {
        const int a = kBivector[P][0], b = kBivector[P][1];
        const int c = kBivector[Q][0], e = kBivector[Q][1];
        double r = 0.5 * (ddG(a, e, b, c) + ddG(b, c, a, e) - ddG(b, e, a, c) - ddG(a, c, b, e));
        for (int f = 0; f < 3; ++f)
          r += low[f][sym_index(b, c)] * gam(up, f, a, e) -
               low[f][sym_index(b, e)] * gam(up, f, a, c);
        m[P][Q] = r;
        m[Q][P] = r;
      }
    riemann_.set_node(i, {m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]});

    auto R = [&](int a, int b, int c, int e) {
      int P, sp, Q, sq;
      bivector_of(a, b, P, sp);
      bivector_of(c, e, Q, sq);
      return static_cast<double>(sp * sq) * m[P][Q];
    };
    sym3::Sym ric;
    for (int q = 0; q < 6; ++q) {
      const auto [b, e] = kSymPairs[q];
      double s = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) s += GI(a, c) * R(a, b, c, e);
      ric[q] = s;
    }
    ricci_.set_node(i, ric);
    scalar_[i] = sym3::contract(gi, ric);

    // |Rm|^2 = 4 tr(M G M G), G the induced inverse metric on bivectors.
    double G[3][3];
    for (int P = 0; P < 3; ++P)
      for (int Q = 0; Q < 3; ++Q) {
        const int a = kBivector[P][0], b = kBivector[P][1];
        const int c = kBivector[Q][0], e = kBivector[Q][1];
        G[P][Q] = GI(a, c) * GI(b, e) - GI(a, e) * GI(b, c);
      }
    double mg[3][3];
    for (int P = 0; P < 3; ++P)
      for (int Q = 0; Q < 3; ++Q) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m[P][k] * G[k][Q];
        mg[P][Q] = s;
      }
    double tr = 0.0;
    for (int P = 0; P < 3; ++P)
      for (int Q = 0; Q < 3; ++Q) tr += mg[P][Q] * mg[Q][P];
    rm_norm_[i] = std::sqrt(std::max(0.0, 4.0 * tr));
  }
}

double MetricGeometry::sup_riemann_norm() const {
  double m = 0.0;
  for (double v : rm_norm_.values()) m = std::max(m, v);
  return m;
}

double MetricGeometry::min_det() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : sqrt_det_.values()) m = std::min(m, v * v);
  return m;
}

double MetricGeometry::volume() const { return integrate(*this, ScalarField(chart(), 1.0)); }

void MetricGeometry::riemann_full(std::size_t i, double (&r)[3][3][3][3]) const {
  const auto v = riemann_.node_values(i);
  const double m[3][3] = {{v[0], v[1], v[2]}, {v[1], v[3], v[4]}, {v[2], v[4], v[5]}};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          int P, sp, Q, sq;
          bivector_of(a, b, P, sp);
          bivector_of(c, d, Q, sq);
          r[a][b][c][d] = static_cast<double>(sp * sq) * m[P][Q];
        }
}

ConnectionField christoffel(const MetricField& g) { return MetricGeometry(g).connection(); }
SymTensorField ricci(const MetricField& g) { return MetricGeometry(g).ricci(); }
ScalarField scalar_curvature(const MetricField& g) { return MetricGeometry(g).scalar_curvature(); }
double riemann_norm_sup(const MetricField& g) { return MetricGeometry(g).sup_riemann_norm(); }

ScalarField laplace_beltrami(const MetricGeometry& geom, const ScalarField& u) {
  geom.metric().components().require_same_chart(u);
  const auto& chart = geom.chart();
  const auto j = stencil::jet(chart, u.values());
  ScalarField out(chart);
  const auto& gi = geom.inverse();
  const auto& gt = geom.contracted_connection();
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    double s = 0.0;
    for (int q = 0; q < 6; ++q) s += sym_weight(q) * gi.at(q, i) * j.d2[q][i];
    for (int c = 0; c < 3; ++c) s -= gt.at(c, i) * j.d1[c][i];
    out[i] = s;
  }
  return out;
}

ScalarField laplace_beltrami(const MetricField& g, const ScalarField& u) {
  return laplace_beltrami(MetricGeometry(g), u);
}

ScalarField gradient_norm2(const MetricGeometry& geom, const ScalarField& u) {
  geom.metric().components().require_same_chart(u);
  const auto& chart = geom.chart();
  std::array<std::vector<double>, 3> d;
  for (int a = 0; a < 3; ++a) d[a] = stencil::diff1(chart, a, u.values());
  ScalarField out(chart);
  const auto& gi = geom.inverse();
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    double s = 0.0;
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      s += sym_weight(q) * gi.at(q, i) * d[a][i] * d[b][i];
    }
    out[i] = s;
  }
  return out;
}

SymTensorField lichnerowicz_laplacian(const MetricGeometry& geom, const SymTensorField& k) {
  geom.metric().components().require_same_chart(k);
  const auto& chart = geom.chart();
  const std::size_t n = chart.node_count();
  std::array<stencil::Jet, 6> jets;
  for (int p = 0; p < 6; ++p) jets[p] = stencil::jet(chart, k.component(p));

  SymTensorField out(chart);
  const auto& giF = geom.inverse();
  const auto& gamF = geom.connection();
  const auto& dgamF = geom.connection_gradient();
  const auto& gtrF = geom.contracted_connection();
  const auto& ricF = geom.ricci();

  double riem[3][3][3][3];
  for (std::size_t i = 0; i < n; ++i) {
    double gi[3][3], K[3][3], dK[3][3][3], ddK[3][3][3][3], gam[3][3][3], dgam[3][3][3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int p = sym_index(a, b);
        gi[a][b] = giF.at(p, i);
        K[a][b] = k.at(p, i);
        for (int x = 0; x < 3; ++x) {
          dK[x][a][b] = jets[p].d1[x][i];
          for (int y = 0; y < 3; ++y) ddK[x][y][a][b] = jets[p].d2[sym_index(x, y)][i];
        }
        for (int c = 0; c < 3; ++c) {
          gam[c][a][b] = gamF.at(6 * c + p, i);
          for (int x = 0; x < 3; ++x) dgam[x][c][a][b] = dgamF.at(18 * x + 6 * c + p, i);
        }
      }

    // T_jab = nabla_j K_ab
    double T[3][3][3];
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double t = dK[j][a][b];
          for (int s = 0; s < 3; ++s) t -= gam[s][j][a] * K[s][b] + gam[s][j][b] * K[a][s];
          T[j][a][b] = t;
        }

    double rough[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        double acc = 0.0;
        for (int x = 0; x < 3; ++x)
          for (int j = 0; j < 3; ++j) {
            const double w = gi[x][j];
            // d_x T_jab
            double dT = ddK[x][j][a][b];
            for (int s = 0; s < 3; ++s)
              dT -= dgam[x][s][j][a] * K[s][b] + gam[s][j][a] * dK[x][s][b] +
                    dgam[x][s][j][b] * K[a][s] + gam[s][j][b] * dK[x][a][s];
            // minus the connection acting on the two lower slots a, b
            double conn = 0.0;
            for (int s = 0; s < 3; ++s) conn += gam[s][x][a] * T[j][s][b] + gam[s][x][b] * T[j][a][s];
            acc += w * (dT - conn);
          }
        for (int s = 0; s < 3; ++s) acc -= gtrF.at(s, i) * T[s][a][b];
        rough[a][b] = acc;
      }

    geom.riemann_full(i, riem);
    double ric[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) ric[a][b] = ricF.at(sym_index(a, b), i);
    double Kmix[3][3]; // K^s_b = g^sc K_cb
    for (int s = 0; s < 3; ++s)
      for (int b = 0; b < 3; ++b) {
        double v = 0.0;
        for (int c = 0; c < 3; ++c) v += gi[s][c] * K[c][b];
        Kmix[s][b] = v;
      }
    double Kup[3][3]; // K^st
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) {
        double v = 0.0;
        for (int c = 0; c < 3; ++c) v += Kmix[s][c] * gi[c][t];
        Kup[s][t] = v;
      }
    for (int q = 0; q < 6; ++q) {
      const auto [a, b] = kSymPairs[q];
      double v = rough[a][b];
      for (int s = 0; s < 3; ++s) v -= ric[a][s] * Kmix[s][b] + ric[b][s] * Kmix[s][a];
      double rk = 0.0;
      for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 3; ++t) rk += riem[a][s][b][t] * Kup[s][t];
      out.at(q, i) = v + 2.0 * rk;
    }
  }
  return out;
}

SymTensorField lichnerowicz_laplacian(const MetricField& g, const SymTensorField& k) {
  return lichnerowicz_laplacian(MetricGeometry(g), k);
}

SymTensorField raise(const MetricGeometry& geom, const SymTensorField& t) {
  geom.metric().components().require_same_chart(t);
  SymTensorField out(t.chart());
  for (std::size_t i = 0; i < t.size(); ++i)
    out.set_node(i, sym3::raise_both(geom.inverse().node_values(i), t.node_values(i)));
  return out;
}

SymTensorField lower(const MetricField& g, const SymTensorField& t) {
  g.components().require_same_chart(t);
  SymTensorField out(t.chart());
  // Lowering with g is raising with g^{-1}'s inverse.
  for (std::size_t i = 0; i < t.size(); ++i)
    out.set_node(i, sym3::raise_both(g.at(i), t.node_values(i)));
  return out;
}

SymTensorField lichnerowicz_laplacian_upper(const MetricGeometry& geom, const SymTensorField& e) {
  return raise(geom, lichnerowicz_laplacian(geom, lower(geom.metric(), e)));
}

CovectorField covariant_divergence(const MetricGeometry& geom, const SymTensorField& t) {
  geom.metric().components().require_same_chart(t);
  const auto& chart = geom.chart();
  std::array<std::array<std::vector<double>, 3>, 6> d;
  for (int p = 0; p < 6; ++p)
    for (int c = 0; c < 3; ++c) d[p][c] = stencil::diff1(chart, c, t.component(p));
  CovectorField out(chart);
  const auto& giF = geom.inverse();
  const auto& gamF = geom.connection();
  const auto& gtrF = geom.contracted_connection();
  for (std::size_t i = 0; i < chart.node_count(); ++i) {
    for (int a = 0; a < 3; ++a) {
      double v = 0.0;
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const double w = giF.at(sym_index(b, c), i);
          v += w * d[sym_index(b, a)][c][i];
          for (int s = 0; s < 3; ++s)
            v -= w * gamF.at(6 * s + sym_index(c, a), i) * t.at(sym_index(b, s), i);
        }
      for (int s = 0; s < 3; ++s) v -= gtrF.at(s, i) * t.at(sym_index(s, a), i);
      out.at(a, i) = v;
    }
  }
  return out;
}

ScalarField trace(const MetricGeometry& geom, const SymTensorField& t) {
  geom.metric().components().require_same_chart(t);
  ScalarField out(t.chart());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = sym3::contract(geom.inverse().node_values(i), t.node_values(i));
  return out;
}

double integrate(const MetricGeometry& geom, const ScalarField& u) {
  geom.metric().components().require_same_chart(u);
  double s = 0.0;
  const auto& w = geom.sqrt_det();
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * w[i];
  return s * geom.chart().cell_volume();
}

double integrate(const MetricField& g, const ScalarField& u) {
  g.components().require_same_chart(u);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * std::sqrt(sym3::det(g.at(i)));
  return s * g.chart().cell_volume();
}

double integrate(const MetricField& g, const ScalarField& u, std::span<const std::size_t> nodes) {
  g.components().require_same_chart(u);
  double s = 0.0;
  for (std::size_t i : nodes) s += u[i] * std::sqrt(sym3::det(g.at(i)));
  return s * g.chart().cell_volume();
}

double volume(const MetricField& g) { return integrate(g, ScalarField(g.chart(), 1.0)); }

} // namespace rflow
