#pragma once

#include <span>

#include "rflow/sym3.hpp"

namespace rflow {

/// Curvature numbers at one point.
struct PinchingSample {
  double scalar = 0.0;          // R
  double tracefree_norm2 = 0.0; // |Ric - R g / 3|^2
  double min_eigenvalue = 0.0;  // smallest eigenvalue of g^{-1} Ric
};

PinchingSample pinching_sample(const sym3::Sym& g, const sym3::Sym& ric);

struct PinchingReport {
  bool positive_scalar = false; // R > 0 at every sample
  /// Largest a1 with Ric - a1 R g >= 0 everywhere (meaningful when R > 0).
  double alpha1_max = 0.0;
  /// min over samples of the smallest eigenvalue of Ric - a1 R g for the
  /// configured a1, in an orthonormal frame.
  double alpha1_margin = 0.0;
  /// Exponent of |trace-free Ric|^2 <= a2 R^(1 - a3); fitted by log-regression
  /// when the samples spread in R, otherwise the configured fallback.
  double alpha3 = 0.0;
  bool alpha3_fitted = false;
  /// Tightest a2 for that a3.
  double alpha2 = 0.0;
  double max_tracefree_norm2 = 0.0;
};

struct PinchingOptions {
  double alpha1 = 0.1;
  double fallback_alpha3 = 0.5;
};

PinchingReport pinching_report(std::span<const PinchingSample> samples, const PinchingOptions& opt = {});

} // namespace rflow
