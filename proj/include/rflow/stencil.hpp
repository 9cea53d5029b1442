#pragma once

#include <array>
#include <span>
#include <vector>

#include "rflow/grid.hpp"

namespace rflow::stencil {

/// Centered first derivative along `axis` at the chart's stencil order.
void diff1(const GridChart& chart, int axis, std::span<const double> in, std::span<double> out);

/// Compact centered second derivative along `axis` (the 3- or 5-point stencil,
/// not the square of diff1).
void diff2(const GridChart& chart, int axis, std::span<const double> in, std::span<double> out);

/// First and second derivatives of one sampled component. Pure second
/// derivatives use the compact stencil, mixed ones are diff1 applied twice.
struct Jet {
  std::array<std::vector<double>, 3> d1;
  std::array<std::vector<double>, 6> d2; // slot sym_index(a, b)
};

Jet jet(const GridChart& chart, std::span<const double> in);

std::vector<double> diff1(const GridChart& chart, int axis, std::span<const double> in);

} // namespace rflow::stencil
