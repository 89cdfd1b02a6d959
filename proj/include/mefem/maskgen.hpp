// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Source/target partition samplers: axial stripes, quadrants and the
// multiblock scheme, plus a Monte-Carlo estimate of each sampler's
// per-patch source-inclusion probability.

#pragma once

#include "mefem/grid.hpp"
#include "mefem/rng.hpp"

#include <utility>
#include <variant>
#include <vector>

namespace mefem {

enum class Rounding { half_even, half_away_from_zero };

/// Round to the nearest integer; ties resolved according to `mode`.
double round_with(double x, Rounding mode);

enum class Orientation { random, horizontal, vertical };

struct StripeParams {
  int width = 3;
  double center_spread = 0.175;
  Orientation orientation = Orientation::random;
  Rounding rounding = Rounding::half_even;

  void validate(const GridSpec& grid) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct MultiblockParams {
  int num_blocks = 4;
  Interval scale{0.15, 0.2};
  Interval aspect{0.75, 1.5};

  void validate() const;
};

/// Multiblock sampler: each draw first picks one of `modes` uniformly.
struct MultiblockConfig {
  std::vector<MultiblockParams> modes;
  int resample_budget = 100;

  /// Four small blocks or one large block, with equal probability.
  static MultiblockConfig defaults();
  static MultiblockConfig single(MultiblockParams params, int resample_budget = 100);
};

struct QuadrantParams {};

using MaskStrategy = std::variant<StripeParams, QuadrantParams, MultiblockConfig>;

/// Continuous draw from Normal(mean, sd^2) truncated to [lo, hi], by rejection.
double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

/// Stripe center index: round(x), x ~ Normal((L-1)/2, (L k)^2) truncated to [0, L-1].
int sample_stripe_center(int patches_per_axis, double center_spread, Rng& rng,
                         Rounding rounding = Rounding::half_even);

/// First row/column of a width-`width` window centered on `center`, clamped so
/// the window stays inside the grid.
int stripe_window_start(int center, int width, int patches_per_axis);

/// Deterministic stripe mask for a given center and orientation.
MaskPair stripe_mask(const GridSpec& grid, int width, int center, bool horizontal);

MaskPair sample_stripe_mask(const GridSpec& grid, const StripeParams& params, Rng& rng);

enum class Quadrant { top_left = 0, top_right = 1, bottom_left = 2, bottom_right = 3 };

MaskPair quadrant_mask(const GridSpec& grid, Quadrant quadrant);
MaskPair sample_quadrant_mask(const GridSpec& grid, Rng& rng);

/// Axis-aligned block in patch units.
struct Block {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

/// Target = union of the blocks, source = complement. No emptiness check.
MaskPair mask_from_blocks(const GridSpec& grid, const std::vector<Block>& blocks);

/// Throws std::runtime_error once the resample budget is exhausted.
MaskPair sample_multiblock_mask(const GridSpec& grid, const MultiblockConfig& config, Rng& rng);
MaskPair sample_multiblock_mask(const GridSpec& grid, const MultiblockParams& params, Rng& rng,
                                int resample_budget = 100);

MaskPair sample_mask(const GridSpec& grid, const MaskStrategy& strategy, Rng& rng);

void validate_strategy(const MaskStrategy& strategy, const GridSpec& grid);

/// L x L row-major matrix of source-inclusion frequencies over `n_samples` draws.
std::vector<double> coverage_map(const MaskStrategy& strategy, const GridSpec& grid, int n_samples, Rng& rng);

} // namespace mefem
