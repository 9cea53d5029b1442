#pragma once

#include <filesystem>
#include <vector>

#include "rflow/grid.hpp"

namespace rflow {

/// Snapshot file: a text header
///
///   rflow-field 1
///   resolution 16 16 16
///   period 1 1 1
///   stencil_order 4
///   rank 2
///   components 11 12 13 22 23 33
///   end
///
/// then node_count * components little-endian float64 values, node-major and
/// component-minor. Rank 0 lists component `1`, rank 1 lists `1 2 3`.
struct FieldFile {
  GridChart chart;
  int rank = 0;
  std::vector<double> data; // node-major, component-minor
};

void write_field(const std::filesystem::path& path, const ScalarField& u);
void write_field(const std::filesystem::path& path, const CovectorField& u);
void write_field(const std::filesystem::path& path, const SymTensorField& u);

/// Throws ValidationError on a malformed header, an unknown component order or
/// a short data block.
FieldFile read_field_file(const std::filesystem::path& path);

ScalarField read_scalar_field(const std::filesystem::path& path);
CovectorField read_covector_field(const std::filesystem::path& path);
SymTensorField read_sym_tensor_field(const std::filesystem::path& path);

} // namespace rflow
