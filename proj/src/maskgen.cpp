// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/maskgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <stdexcept>

namespace mefem {

double round_with(double x, Rounding mode)
{
  if (mode == Rounding::half_away_from_zero) {
    return std::round(x);
  }
  // nearbyint honours the current rounding mode; pin it to nearest-even.
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(x);
  std::fesetround(saved);
  return r;
}

void StripeParams::validate(const GridSpec& grid) const
{
  const int L = grid.patches_per_axis;
  if (L < 2) {
    throw std::invalid_argument("stripe masking needs at least 2 patches per axis");
  }
  if (width < 1 || width > L - 1) {
    throw std::invalid_argument(fmt::format("stripe width {} outside [1, {}]: target would be empty", width, L - 1));
  }
  if (!(center_spread > 0.0) || !std::isfinite(center_spread)) {
    throw std::invalid_argument("stripe center spread k must be positive");
  }
}

void MultiblockParams::validate() const
{
  if (num_blocks < 1) {
    throw std::invalid_argument("multiblock: num_blocks must be >= 1");
  }
  if (!(scale.lo > 0.0 && scale.hi < 1.0 && scale.lo <= scale.hi)) {
    throw std::invalid_argument(fmt::format("multiblock: scale range ({}, {}) must lie in (0, 1)", scale.lo, scale.hi));
  }
  if (!(aspect.lo > 0.0 && aspect.lo <= aspect.hi)) {
    throw std::invalid_argument("multiblock: aspect range must be positive");
  }
}

MultiblockConfig MultiblockConfig::defaults()
{
  MultiblockConfig c;
  c.modes = {MultiblockParams{4, {0.15, 0.2}, {0.75, 1.5}}, MultiblockParams{1, {0.3, 0.45}, {0.75, 1.5}}};
  return c;
}

MultiblockConfig MultiblockConfig::single(MultiblockParams params, int resample_budget)
{
  MultiblockConfig c;
  c.modes = {params};
  c.resample_budget = resample_budget;
  return c;
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng)
{
  for (;;) {
    const double x = rng.normal(mean, sd);
    if (x >= lo && x <= hi) {
      return x;
    }
  }
}

int sample_stripe_center(int patches_per_axis, double center_spread, Rng& rng, Rounding rounding)
{
  const double last = patches_per_axis - 1;
  const double x = sample_truncated_normal(last / 2.0, patches_per_axis * center_spread, 0.0, last, rng);
  return static_cast<int>(round_with(x, rounding));
}

int stripe_window_start(int center, int width, int patches_per_axis)
{
  return std::clamp(center - width / 2, 0, patches_per_axis - width);
}

MaskPair stripe_mask(const GridSpec& grid, int width, int center, bool horizontal)
{
  const int L = grid.patches_per_axis;
  const int start = stripe_window_start(center, width, L);
  std::vector<bool> in_source(grid.num_patches(), false);
  for (int r = 0; r < L; ++r) {
    for (int c = 0; c < L; ++c) {
      const int along = horizontal ? r : c;
      in_source[grid.index(r, c)] = along >= start && along < start + width;
    }
  }
  return mask_from_membership(in_source, MaskOrigin::stripe);
}

MaskPair sample_stripe_mask(const GridSpec& grid, const StripeParams& params, Rng& rng)
{
  params.validate(grid);
  bool horizontal = params.orientation == Orientation::horizontal;
  if (params.orientation == Orientation::random) {
    horizontal = rng.bernoulli(0.5);
  }
  const int center = sample_stripe_center(grid.patches_per_axis, params.center_spread, rng, params.rounding);
  return stripe_mask(grid, params.width, center, horizontal);
}

MaskPair quadrant_mask(const GridSpec& grid, Quadrant quadrant)
{
  const int L = grid.patches_per_axis;
  if (L % 2 != 0) {
    throw std::invalid_argument(fmt::format("quadrant masking needs an even grid, got L={}", L));
  }
  const int half = L / 2;
  const int q = static_cast<int>(quadrant);
  const int top = (q / 2) * half;
  const int left = (q % 2) * half;
  std::vector<bool> in_source(grid.num_patches(), false);
  for (int r = top; r < top + half; ++r) {
    for (int c = left; c < left + half; ++c) {
      in_source[grid.index(r, c)] = true;
    }
  }
  return mask_from_membership(in_source, MaskOrigin::quadrant);
}

MaskPair sample_quadrant_mask(const GridSpec& grid, Rng& rng)
{
  if (grid.patches_per_axis % 2 != 0) {
    throw std::invalid_argument(fmt::format("quadrant masking needs an even grid, got L={}", grid.patches_per_axis));
  }
  return quadrant_mask(grid, static_cast<Quadrant>(rng.uniform_int(4)));
}

MaskPair mask_from_blocks(const GridSpec& grid, const std::vector<Block>& blocks)
{
  std::vector<bool> in_source(grid.num_patches(), true);
  for (const Block& b : blocks) {
    for (int r = b.top; r < b.top + b.height; ++r) {
      for (int c = b.left; c < b.left + b.width; ++c) {
        in_source[grid.index(r, c)] = false;
      }
    }
  }
  return mask_from_membership(in_source, MaskOrigin::multiblock);
}

namespace {

Block sample_block(const GridSpec& grid, const MultiblockParams& p, Rng& rng)
{
  const int L = grid.patches_per_axis;
  const double scale = rng.uniform(p.scale.lo, p.scale.hi);
  const double aspect = rng.uniform(p.aspect.lo, p.aspect.hi);
  const double area = scale * grid.num_patches();
  Block b;
  b.width = std::clamp(static_cast<int>(std::lround(std::sqrt(area * aspect))), 1, L);
  b.height = std::clamp(static_cast<int>(std::lround(std::sqrt(area / aspect))), 1, L);
  b.top = static_cast<int>(rng.uniform_int(L - b.height + 1));
  b.left = static_cast<int>(rng.uniform_int(L - b.width + 1));
  return b;
}

} // namespace

MaskPair sample_multiblock_mask(const GridSpec& grid, const MultiblockParams& params, Rng& rng, int resample_budget)
{
  params.validate();
  std::vector<Block> blocks;
  for (int attempt = 0; attempt < resample_budget; ++attempt) {
    blocks.clear();
    for (int i = 0; i < params.num_blocks; ++i) {
      blocks.push_back(sample_block(grid, params, rng));
    }
    MaskPair mask = mask_from_blocks(grid, blocks);
    if (!mask.source.empty() && !mask.target.empty()) {
      return mask;
    }
  }
  throw std::runtime_error(fmt::format("multiblock: no non-empty partition after {} resamples", resample_budget));
}

MaskPair sample_multiblock_mask(const GridSpec& grid, const MultiblockConfig& config, Rng& rng)
{
  if (config.modes.empty()) {
    throw std::invalid_argument("multiblock: no modes configured");
  }
  const auto mode = config.modes.size() == 1 ? 0 : rng.uniform_int(config.modes.size());
  return sample_multiblock_mask(grid, config.modes[mode], rng, config.resample_budget);
}

MaskPair sample_mask(const GridSpec& grid, const MaskStrategy& strategy, Rng& rng)
{
  struct Visitor {
    const GridSpec& grid;
    Rng& rng;
    MaskPair operator()(const StripeParams& p) const { return sample_stripe_mask(grid, p, rng); }
    MaskPair operator()(const QuadrantParams&) const { return sample_quadrant_mask(grid, rng); }
    MaskPair operator()(const MultiblockConfig& c) const { return sample_multiblock_mask(grid, c, rng); }
  };
  return std::visit(Visitor{grid, rng}, strategy);
}

void validate_strategy(const MaskStrategy& strategy, const GridSpec& grid)
{
  grid.validate();
  if (const auto* s = std::get_if<StripeParams>(&strategy)) {
    s->validate(grid);
  } else if (std::holds_alternative<QuadrantParams>(strategy)) {
    if (grid.patches_per_axis % 2 != 0) {
      throw std::invalid_argument("quadrant masking needs an even grid");
    }
  } else {
    const auto& c = std::get<MultiblockConfig>(strategy);
    if (c.modes.empty()) throw std::invalid_argument("multiblock: no modes configured");
    for (const auto& m : c.modes) m.validate();
  }
}

std::vector<double> coverage_map(const MaskStrategy& strategy, const GridSpec& grid, int n_samples, Rng& rng)
{
  if (n_samples < 1) {
    throw std::invalid_argument("coverage_map: n_samples must be >= 1");
  }
  std::vector<long> counts(grid.num_patches(), 0);
  for (int s = 0; s < n_samples; ++s) {
    for (int i : sample_mask(grid, strategy, rng).source) {
      ++counts[i];
    }
  }
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / n_samples;
  }
  return out;
}

} // namespace mefem
