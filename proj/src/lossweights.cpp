// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/lossweights.hpp"

#include <cmath>
#include <stdexcept>

namespace mefem {

void WeightConfig::validate() const
{
  if (!(falloff_radius > 0.0) || !(steepness > 0.0)) {
    throw std::invalid_argument("WeightConfig: falloff radius and steepness must be positive");
  }
}

double radial_weight(double r, double falloff_radius, double steepness)
{
  return 1.0 / (1.0 + std::exp(steepness * (r - falloff_radius)));
}

double patch_radius(const GridSpec& grid, int row, int col)
{
  const double center = grid.patches_per_axis / 2.0;
  return std::hypot(row + 0.5 - center, col + 0.5 - center);
}

WeightMatrix build_weight_matrix(const GridSpec& grid, const WeightConfig& config)
{
  grid.validate();
  WeightMatrix m;
  m.patches_per_axis = grid.patches_per_axis;
  m.weights.assign(grid.num_patches(), 1.0);
  if (config.scheme == WeightScheme::uniform) {
    return m;
  }
  config.validate();
  for (int r = 0; r < grid.patches_per_axis; ++r) {
    for (int c = 0; c < grid.patches_per_axis; ++c) {
      m.weights[grid.index(r, c)] = radial_weight(patch_radius(grid, r, c), config.falloff_radius, config.steepness);
    }
  }
  return m;
}

} // namespace mefem
