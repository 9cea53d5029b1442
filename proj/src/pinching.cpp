#include "rflow/pinching.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rflow {

PinchingSample pinching_sample(const sym3::Sym& g, const sym3::Sym& ric) {
  Eigen::Matrix3d G, Rc;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      G(a, b) = sym3::get(g, a, b);
      Rc(a, b) = sym3::get(ric, a, b);
    }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(Rc, G, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  PinchingSample s;
  s.scalar = ev.sum();
  s.min_eigenvalue = ev.minCoeff();
  const double mean = s.scalar / 3.0;
  for (int i = 0; i < 3; ++i) s.tracefree_norm2 += (ev(i) - mean) * (ev(i) - mean);
  return s;
}

PinchingReport pinching_report(std::span<const PinchingSample> samples, const PinchingOptions& opt) {
  PinchingReport rep;
  rep.positive_scalar = !samples.empty();
  rep.alpha1_max = std::numeric_limits<double>::infinity();
  rep.alpha1_margin = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (const auto& s : samples) {
    rep.max_tracefree_norm2 = std::max(rep.max_tracefree_norm2, s.tracefree_norm2);
    rep.alpha1_margin = std::min(rep.alpha1_margin, s.min_eigenvalue - opt.alpha1 * s.scalar);
    if (s.scalar <= 0.0) {
      rep.positive_scalar = false;
      continue;
    }
    rep.alpha1_max = std::min(rep.alpha1_max, s.min_eigenvalue / s.scalar);
    if (s.tracefree_norm2 > 0.0) {
      lx.push_back(std::log(s.scalar));
      ly.push_back(std::log(s.tracefree_norm2));
    }
  }
  if (!rep.positive_scalar) rep.alpha1_max = 0.0;
  if (samples.empty()) rep.alpha1_margin = 0.0;

  rep.alpha3 = opt.fallback_alpha3;
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx > 1e-18 * n) {
      rep.alpha3 = 1.0 - sxy / sxx;
      rep.alpha3_fitted = true;
    }
  }
  for (const auto& s : samples)
    if (s.scalar > 0.0) rep.alpha2 = std::max(rep.alpha2, s.tracefree_norm2 / std::pow(s.scalar, 1.0 - rep.alpha3));
  return rep;
}

} // namespace rflow
