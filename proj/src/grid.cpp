// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/grid.hpp"

#include <fmt/format.h>

namespace mefem {

std::string to_string(MaskOrigin origin)
{
  switch (origin) {
  case MaskOrigin::stripe: return "stripe";
  case MaskOrigin::quadrant: return "quadrant";
  case MaskOrigin::multiblock: return "multiblock";
  case MaskOrigin::custom: return "custom";
  }
  return "unknown";
}

MaskPair mask_from_membership(const std::vector<bool>& in_source, MaskOrigin origin)
{
  MaskPair mask;
  mask.origin = origin;
  for (int i = 0; i < static_cast<int>(in_source.size()); ++i) {
    (in_source[i] ? mask.source : mask.target).push_back(i);
  }
  return mask;
}

namespace {

std::string check_increasing(const std::vector<int>& v, const char* name, int n)
{
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0 || v[i] >= n) {
      return fmt::format("{} index {} out of range [0,{})", name, v[i], n);
    }
    if (i > 0 && v[i] <= v[i - 1]) {
      return fmt::format("{} not strictly increasing at position {}", name, i);
    }
  }
  return {};
}

} // namespace

std::string check_partition(const MaskPair& mask, const GridSpec& grid)
{
  const int n = grid.num_patches();
  if (mask.source.empty()) return "source is empty";
  if (mask.target.empty()) return "target is empty";
  if (auto e = check_increasing(mask.source, "source", n); !e.empty()) return e;
  if (auto e = check_increasing(mask.target, "target", n); !e.empty()) return e;

  std::vector<int> seen(n, 0);
  for (int i : mask.source) ++seen[i];
  for (int i : mask.target) ++seen[i];
  for (int i = 0; i < n; ++i) {
    if (seen[i] == 0) return fmt::format("patch {} in neither set", i);
    if (seen[i] > 1) return fmt::format("patch {} in both sets", i);
  }
  return {};
}

} // namespace mefem
