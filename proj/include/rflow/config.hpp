#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rflow/constraints.hpp"
#include "rflow/coupling.hpp"
#include "rflow/flow.hpp"
#include "rflow/homogeneous.hpp"
#include "rflow/kernel.hpp"

namespace rflow {

enum class Backend { Grid, Homogeneous };
enum class FinalData { Constant, Gaussian };

struct ChartConfig {
  std::array<int, 3> resolution{16, 16, 16};
  std::array<double, 3> period{1.0, 1.0, 1.0};
  int stencil_order = 4;

  GridChart chart() const { return GridChart(resolution, period, stencil_order); }
};

struct ModelConfig {
  HomogeneousState initial = HomogeneousState::round(1.0);
  ModelRunOptions options;
};

struct CouplingConfig {
  bool enabled = true;
  CouplingControls controls;
  FinalData final_data = FinalData::Constant;
  Node center{0, 0, 0};
  double width = 0.01;
};

struct KernelConfig {
  std::vector<Node> sources;
  std::vector<double> etas;
  /// 0 selects 4 max h^2, the smallest resolved mollifier.
  double eta0 = 0.0;
  std::vector<KernelRank> ranks{KernelRank::Scalar};
  double safety = 0.8;
};

/// Parsed experiment. `flow.target_beta` is beta*.
struct ExperimentConfig {
  std::string name = "experiment";
  Backend backend = Backend::Grid;
  ChartConfig chart;
  InitialDataSpec initial;
  ModelConfig model;
  FlowControls flow;
  CouplingConfig coupling;
  KernelConfig kernels;

  double beta_star() const { return flow.target_beta; }
  double effective_eta0() const;
};

/// INI text with sections [experiment], [chart], [initial_data], [model],
/// [flow], [coupling], [kernels]. Unknown sections or keys, unparsable values
/// and broken invariants raise ValidationError. See docs/config.md.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every eta <= beta*, eta >= eta0, sources on the chart, tolerances positive.
void validate(const ExperimentConfig& c);

} // namespace rflow
