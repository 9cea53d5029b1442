#pragma once

#include <array>
#include <string>
#include <vector>

#include "rflow/distance.hpp"
#include "rflow/flow.hpp"

namespace rflow {

enum class KernelRank { Scalar, Tensor };

std::string to_string(KernelRank r);
KernelRank parse_kernel_rank(const std::string& s);

/// Tensor kernel block for one source slot p = (i', k'): the contravariant
/// field E^ab(x) at the evaluation node. Off-diagonal source slots carry the
/// symmetrized identity, so a full contraction over (a, b) with T_ab yields
/// the (i', k') component of T.
using TensorKernelBlocks = std::array<SymTensorField, 6>;

struct KernelSlice {
  double eta = 0.0;
  double beta = 0.0; // beta_star - eta
  MetricField g;     // metric the slice lives on
  ScalarField scalar;
  std::vector<SymTensorField> tensor; // 6 blocks for rank 2, empty for scalars
};

struct KernelControls {
  KernelRank rank = KernelRank::Scalar;
  /// Mollification scale; must be at least 4 max h^2.
  double eta0 = 0.0;
  /// Evaluation times (>= eta0); the march ends at the largest.
  std::vector<double> etas;
  double safety = 0.8;
  double max_step = 0.0;
};

class KernelField {
public:
  Node source{};
  KernelRank rank = KernelRank::Scalar;
  double eta0 = 0.0;
  double beta_star = 0.0;
  std::vector<KernelSlice> slices;

  /// Slice at exactly this eta (relative tolerance 1e-12), else ValidationError.
  const KernelSlice& at(double eta) const;
  /// Integral of the scalar kernel (rank 0) against d mu of its slice.
  double mass(double eta) const;
};

/// Mollified delta at the source: the periodic Gaussian of variance 2 eta0 in
/// the constant metric g(y), scaled so its quadrature against d mu is 1.
ScalarField mollified_delta(const MetricField& g, const Node& y, double eta0);

/// Backward march of d E / d eta = Delta_L E - R E from eta0 against
/// g(beta_star - eta) read from the trajectory (beta_star = its last beta).
KernelField conjugate_kernel(const FlowTrajectory& traj, const Node& y, const KernelControls& c);

/// Integral of E(x; eta) u(x) d mu.
double represent_scalar(const KernelField& k, double eta, const ScalarField& target);
/// Integral of E^ab_{i'k'} T_ab d mu for each source slot (i', k').
std::array<double, 6> represent_tensor(const KernelField& k, double eta, const SymTensorField& target);
/// Integral of E^ab_{i'k'} [g_ab - 2 eta R_ab] d mu with g, R of the slice.
std::array<double, 6> represent_metric(const KernelField& k, double eta);

/// Leading term (4 pi eta)^{-3/2} exp(-d^2 / 4 eta) at node x.
double gaussian_parametrix(const DistanceField& d, const Node& x, double eta);
/// Rank-2 leading term: the scalar factor times the symmetrized transport
/// P^a_{i'} P^b_{k'}; row p is the block of source slot p, column q the
/// component slot of (a, b), matching TensorKernelBlocks.
std::array<std::array<double, 6>, 6> gaussian_parametrix(const TransportField& t, const Node& x, double eta);

/// Kernel-smoothed Hamiltonian backreaction at the source.
struct SmoothedPhi {
  double full = 0.0;        // int E rho - (16 pi G)^{-1} int g^{i'k'}(y) E^ab_{i'k'} R_ab
  double fluctuation = 0.0; // -(16 pi G)^{-1} int g^{i'k'}(y) E^ab_{i'k'} dR_ab
  double difference = 0.0;  // full - fluctuation
  /// int E rho - 6 C / (16 pi G): vanishes when the Hamiltonian constraint
  /// holds at the smoothing scale.
  double scale_residual = 0.0;
  double C = 0.0;
};

/// Needs both kernels at eta; `g_source` is the metric at y where the source
/// indices are contracted, `rho` and the curvature are taken at beta_star - eta.
/// Assumes K = 0 and Lambda = 0. `model_ricci` replaces the stencil Ricci of
/// the slice (chart samples of homogeneous models).
SmoothedPhi smoothed_phi(const KernelField& scalar, const KernelField& tensor, double eta, const ScalarField& rho,
                         const std::array<double, 6>& g_source, double G = 1.0,
                         const SymTensorField* model_ricci = nullptr);

} // namespace rflow
