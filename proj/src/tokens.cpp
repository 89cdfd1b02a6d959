// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/tokens.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace mefem {

void ClsPolicy::validate() const
{
  if (!(p_source >= 0.0 && p_source <= 1.0)) {
    throw std::invalid_argument(fmt::format("CLS source probability {} outside [0, 1]", p_source));
  }
}

std::vector<int> TokenPartition::source_patches() const
{
  std::vector<int> out = mask.source;
  if (dropped_patch) {
    out.pop_back();
  }
  return out;
}

int TokenPartition::source_token_count() const
{
  return static_cast<int>(mask.source.size()) - (dropped_patch ? 1 : 0) + (cls_in_source ? 1 : 0);
}

int TokenPartition::target_token_count() const
{
  return static_cast<int>(mask.target.size()) + (cls_in_source ? 0 : 1);
}

TokenPartition apply_border_drop(TokenPartition partition, const GridSpec& grid)
{
  if (!partition.cls_in_source || partition.dropped_patch) {
    return partition;
  }
  if (partition.mask.source.empty()) {
    throw std::invalid_argument("apply_border_drop: empty source");
  }
  const int last = partition.mask.source.back();
  if (partition.mask.origin == MaskOrigin::stripe && !grid.is_border(last)) {
    throw BorderDropError(fmt::format("dropped patch {} (row {}, col {}) is not on the grid border", last,
                                      grid.row(last), grid.col(last)));
  }
  partition.dropped_patch = last;
  return partition;
}

TokenPartition route_cls(MaskPair mask, bool cls_in_source, bool border_drop, const GridSpec& grid)
{
  TokenPartition p;
  p.mask = std::move(mask);
  p.cls_in_source = cls_in_source;
  if (cls_in_source && border_drop && p.mask.origin == MaskOrigin::stripe) {
    p = apply_border_drop(std::move(p), grid);
  }
  return p;
}

TokenPartition assign_cls(MaskPair mask, const ClsPolicy& policy, const GridSpec& grid, Rng& rng)
{
  policy.validate();
  const bool b = rng.bernoulli(policy.p_source);
  return route_cls(std::move(mask), b, policy.border_drop, grid);
}

} // namespace mefem
