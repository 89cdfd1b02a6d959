// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// CLS routing. The CLS token joins the source set with probability p; when it
// does and the mask is a stripe, the last row-major source patch (always on the
// grid border for a full-axis stripe) is dropped so the source length stays
// w*L tokens.

#pragma once

#include "mefem/grid.hpp"
#include "mefem/rng.hpp"

#include <optional>
#include <vector>

namespace mefem {

struct ClsPolicy {
  double p_source = 0.5;
  bool border_drop = true;

  void validate() const;
};

struct TokenPartition {
  MaskPair mask;
  bool cls_in_source = false;
  std::optional<int> dropped_patch;

  /// Source patches actually fed to the source encoder.
  std::vector<int> source_patches() const;
  const std::vector<int>& target_patches() const { return mask.target; }
  int source_token_count() const;
  int target_token_count() const;
};

/// Thrown when the border-drop rule picks an interior patch of a stripe mask.
struct BorderDropError : std::logic_error {
  using std::logic_error::logic_error;
};

TokenPartition assign_cls(MaskPair mask, const ClsPolicy& policy, const GridSpec& grid, Rng& rng);

/// Route the CLS token deterministically (b given), applying the drop rule when enabled.
TokenPartition route_cls(MaskPair mask, bool cls_in_source, bool border_drop, const GridSpec& grid);

/// No-op unless CLS is in the source. Drops the last source patch; for stripe
/// masks it must lie on the grid border.
TokenPartition apply_border_drop(TokenPartition partition, const GridSpec& grid);

} // namespace mefem
