// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mefem {

/// Square patch grid laid over a square image. Patches are indexed row-major.
struct GridSpec {
  int patches_per_axis = 14;
  int patch_size = 16;

  int image_size() const { return patches_per_axis * patch_size; }
  int num_patches() const { return patches_per_axis * patches_per_axis; }

  int row(int index) const { return index / patches_per_axis; }
  int col(int index) const { return index % patches_per_axis; }
  int index(int row, int col) const { return row * patches_per_axis + col; }

  bool is_border(int index) const
  {
    const int r = row(index), c = col(index), last = patches_per_axis - 1;
    return r == 0 || c == 0 || r == last || c == last;
  }

  void validate() const
  {
    if (patches_per_axis < 1 || patch_size < 1) {
      throw std::invalid_argument("GridSpec: patches_per_axis and patch_size must be positive");
    }
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class MaskOrigin { stripe, quadrant, multiblock, custom };

std::string to_string(MaskOrigin origin);

/// Disjoint, exhaustive split of the patch grid into source (context) and
/// target (prediction) indices. Both lists are strictly increasing.
struct MaskPair {
  std::vector<int> source;
  std::vector<int> target;
  MaskOrigin origin = MaskOrigin::custom;

  friend bool operator==(const MaskPair&, const MaskPair&) = default;
};

/// Build a MaskPair from a per-patch membership flag (true = source).
MaskPair mask_from_membership(const std::vector<bool>& in_source, MaskOrigin origin);

/// Check the partition invariants; returns an empty string when valid,
/// otherwise a description of the first violation.
std::string check_partition(const MaskPair& mask, const GridSpec& grid);

} // namespace mefem
