// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mefem/grid.hpp"

#include <vector>

namespace mefem {

enum class WeightScheme { circular, uniform };

struct WeightConfig {
  double falloff_radius = 5.0; // r0, patch units
  double steepness = 1.5;      // sigma, 1 / patch units
  WeightScheme scheme = WeightScheme::circular;

  void validate() const;
};

/// Per-patch loss weights, row-major over the grid. The CLS token always
/// carries weight 1.
struct WeightMatrix {
  int patches_per_axis = 0;
  std::vector<double> weights;
  static constexpr double cls_weight = 1.0;

  double at(int row, int col) const { return weights[row * patches_per_axis + col]; }
  double operator[](int index) const { return weights[index]; }
};

/// Radial sigmoid 1 / (1 + exp(sigma (r - r0))): flat near the center, falling
/// off towards the border.
double radial_weight(double r, double falloff_radius, double steepness);

/// Distance in patch units from the center of patch (row, col) to the
/// geometric grid center (L/2, L/2).
double patch_radius(const GridSpec& grid, int row, int col);

WeightMatrix build_weight_matrix(const GridSpec& grid, const WeightConfig& config);

} // namespace mefem
