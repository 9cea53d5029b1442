#include "rflow/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "rflow/geometry.hpp"

namespace rflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Guard box around the source in offset coordinates [-r, r] per axis.
struct Box {
  std::array<int, 3> r;
  std::array<int, 3> n;

  explicit Box(const GridChart& chart) {
    for (int a = 0; a < 3; ++a) {
      r[a] = (chart.resolution(a) - 1) / 2;
      n[a] = 2 * r[a] + 1;
    }
  }
  bool inside(const Node& o) const {
    for (int a = 0; a < 3; ++a)
      if (std::abs(o[a]) > r[a]) return false;
    return true;
  }
  std::size_t local(const Node& o) const {
    return static_cast<std::size_t>(o[0] + r[0]) +
           static_cast<std::size_t>(n[0]) *
               (static_cast<std::size_t>(o[1] + r[1]) + static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(o[2] + r[2]));
  }
  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
};

Eigen::Matrix3d metric_matrix(const std::array<double, 6>& g) {
  Eigen::Matrix3d m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m(a, b) = g[sym_index(a, b)];
  return m;
}

double norm_g(const Eigen::Matrix3d& G, const Eigen::Vector3d& v) { return std::sqrt(v.dot(G * v)); }

// Smallest value of sum lambda_i u_i + |sum lambda_i v_i|_G over the simplex
// spanned by the given vertices (v_i = x - x_i), restricted to its relative
// interior; +inf when the stationary point falls outside.
double face_update(const Eigen::Matrix3d& G, const Eigen::Vector3d* v, const double* u, int count) {
  const int k = count - 1;
  if (k == 0) return u[0] + norm_g(G, v[0]);
  Eigen::MatrixXd A(3, k);
  Eigen::VectorXd delta(k);
  for (int i = 0; i < k; ++i) {
    A.col(i) = v[i] - v[k];
    delta(i) = u[i] - u[k];
  }
  const Eigen::MatrixXd M = A.transpose() * G * A;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  const Eigen::VectorXd c = ldlt.solve(A.transpose() * G * v[k]);
  const Eigen::Vector3d perp = v[k] - A * c;
  const double r2 = perp.dot(G * perp);
  const Eigen::VectorXd Md = ldlt.solve(delta);
  const double q = delta.dot(Md);
  if (!(q < 1.0) || r2 <= 0.0) return kInf;
  const double s = std::sqrt(r2 / (1.0 - q));
  const Eigen::VectorXd mu = -s * Md - c;
  double last = 1.0;
  for (int i = 0; i < k; ++i) {
    if (mu(i) < -1e-12) return kInf;
    last -= mu(i);
  }
  if (last < -1e-12) return kInf;
  return u[k] + delta.dot(mu) + s;
}

} // namespace

DistanceField::DistanceField(const GridChart& chart, const Node& source)
    : source_(source), values_(chart, std::numeric_limits<double>::quiet_NaN()), parent_(chart.node_count()) {
  if (!chart.contains(source)) throw ValidationError("source node " + to_string(source) + " is not on the chart");
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

bool DistanceField::covers(const Node& x) const {
  const Node o = chart().minimal_offset(source_, x);
  return Box(chart()).inside(o) && chart().contains(x);
}

double DistanceField::at(const Node& x) const {
  if (!covers(x))
    throw InjectivityGuardError("node " + to_string(x) + " lies beyond half a period from " + to_string(source_));
  return values_[chart().index(x)];
}

DistanceField geodesic_distance(const MetricField& g, const Node& y) {
  const auto& chart = g.chart();
  DistanceField out(chart, y);
  const Box box(chart);
  const Eigen::Vector3d h(chart.spacing(0), chart.spacing(1), chart.spacing(2));

  auto global = [&](const Node& o) { return chart.index(y[0] + o[0], y[1] + o[1], y[2] + o[2]); };
  auto for_box = [&](auto&& fn) {
    for (int k = -box.r[2]; k <= box.r[2]; ++k)
      for (int j = -box.r[1]; j <= box.r[1]; ++j)
        for (int i = -box.r[0]; i <= box.r[0]; ++i) fn(Node{i, j, k});
  };

  std::vector<Eigen::Matrix3d> G(box.size());
  bool constant = true;
  const auto g0 = g.at(chart.index(y));
  for_box([&](const Node& o) {
    const auto gi = g.at(global(o));
    constant = constant && gi == g0;
    G[box.local(o)] = metric_matrix(gi);
  });
  auto offset_vec = [&](const Node& o) { return Eigen::Vector3d(o[0] * h(0), o[1] * h(1), o[2] * h(2)); };

  // Additive factoring u = T0 + tau with T0 the distance for the source's
  // metric: tau is smooth at the source, so the point-source error of a plain
  // sweep disappears. With z = x - p the local problem for tau is
  // min tau(p) + |z|_g - grad T0 . z, i.e. the plain simplex update with the
  // vertex values shifted by -grad T0 . v_i.
  const Eigen::Matrix3d G0 = metric_matrix(g0);
  std::vector<double> t0(box.size());
  for_box([&](const Node& o) { t0[box.local(o)] = norm_g(G0, offset_vec(o)); });

  std::vector<double> u(box.size(), kInf);
  if (constant) {
    u = t0;
  } else {
    std::vector<double> tau(box.size(), kInf);
    const std::size_t centre = box.local({0, 0, 0});
    tau[centre] = 0.0;

    auto update = [&](const Node& o) {
      const std::size_t l = box.local(o);
      if (l == centre) return 0.0;
      const Eigen::Vector3d q = G0 * offset_vec(o) / t0[l];
      // Axis neighbours per direction and sign.
      std::array<std::array<double, 2>, 3> nu;
      for (int a = 0; a < 3; ++a)
        for (int s = 0; s < 2; ++s) {
          Node nb = o;
          nb[a] += s ? 1 : -1;
          nu[a][s] = box.inside(nb) ? tau[box.local(nb)] : kInf;
        }
      double best = tau[l];
      Eigen::Vector3d v[3];
      double uv[3];
      for (int s0 = 0; s0 < 2; ++s0)
        for (int s1 = 0; s1 < 2; ++s1)
          for (int s2 = 0; s2 < 2; ++s2) {
            const int sg[3] = {s0, s1, s2};
            // Every non-empty subset of this octant's vertices; edges and
            // vertices are revisited by neighbouring octants, which is harmless.
            for (int mask = 1; mask < 8; ++mask) {
              int count = 0;
              bool ok = true;
              for (int a = 0; a < 3 && ok; ++a) {
                if (!(mask & (1 << a))) continue;
                if (nu[a][sg[a]] == kInf) ok = false;
                v[count] = Eigen::Vector3d::Zero();
                v[count](a) = (sg[a] ? -1.0 : 1.0) * h(a);
                uv[count] = nu[a][sg[a]] - q.dot(v[count]);
                ++count;
              }
              if (ok) best = std::min(best, face_update(G[l], v, uv, count));
            }
          }
      const double change = tau[l] == kInf ? (best < kInf ? kInf : 0.0) : tau[l] - best;
      tau[l] = best;
      return change;
    };

    for (int sweep = 0; sweep < 200; ++sweep) {
      double change = 0.0;
      for (int dir = 0; dir < 8; ++dir) {
        const int sx = dir & 1 ? -1 : 1, sy = dir & 2 ? -1 : 1, sz = dir & 4 ? -1 : 1;
        for (int kk = -box.r[2]; kk <= box.r[2]; ++kk)
          for (int jj = -box.r[1]; jj <= box.r[1]; ++jj)
            for (int ii = -box.r[0]; ii <= box.r[0]; ++ii) change = std::max(change, update({sx * ii, sy * jj, sz * kk}));
      }
      if (change <= 1e-14) break;
      if (sweep == 199) throw NumericalError("distance sweeps did not settle");
    }
    for (std::size_t l = 0; l < u.size(); ++l) u[l] = t0[l] + tau[l];
  }

  // First-arrival parents among the 26 neighbours with smaller distance.
  for_box([&](const Node& o) {
    const std::size_t l = box.local(o), gi = global(o);
    out.values_[gi] = u[l];
    if (o == Node{0, 0, 0}) return;
    double best = kInf;
    std::size_t parent = gi;
    for (int k = -1; k <= 1; ++k)
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const Node q{o[0] + i, o[1] + j, o[2] + k};
          if ((i == 0 && j == 0 && k == 0) || !box.inside(q)) continue;
          const std::size_t lq = box.local(q);
          if (!(u[lq] < u[l])) continue;
          const double cand = u[lq] + norm_g(0.5 * (G[l] + G[lq]), offset_vec(o) - offset_vec(q));
          if (cand < best) {
            best = cand;
            parent = global(q);
          }
        }
    out.parent_[gi] = parent;
  });
  return out;
}

const Eigen::Matrix3d& TransportField::at(const Node& x) const {
  if (!distance_.covers(x))
    throw InjectivityGuardError("node " + to_string(x) + " lies beyond half a period from " +
                                to_string(distance_.source()));
  return p_[distance_.chart().index(x)];
}

TransportField parallel_transport(const MetricField& g, const Node& y) {
  TransportField out(geodesic_distance(g, y));
  const auto& chart = g.chart();
  const auto& d = out.distance_;
  const auto gamma = christoffel(g);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < chart.node_count(); ++i)
    if (!std::isnan(d.values()[i])) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d.values()[a] < d.values()[b]; });

  out.p_.assign(chart.node_count(), Eigen::Matrix3d::Constant(std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t i : order) {
    const std::size_t p = d.parent(i);
    if (p == i) {
      out.p_[i] = Eigen::Matrix3d::Identity();
      continue;
    }
    const Node off = chart.minimal_offset(chart.node(p), chart.node(i));
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const int slot = 6 * a + sym_index(b, c);
          A(a, b) += 0.5 * (gamma.at(slot, i) + gamma.at(slot, p)) * off[c] * chart.spacing(c);
        }
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    out.p_[i] = (I + 0.5 * A).partialPivLu().solve((I - 0.5 * A) * out.p_[p]);
  }
  return out;
}

} // namespace rflow
