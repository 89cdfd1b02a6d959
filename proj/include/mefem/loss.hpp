// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Weighted latent-prediction loss:
//   L = 1/|T| * sum_i w_i * d(pred_i, ref_i)
// where d averages a per-dimension distance over the embedding width and the
// CLS token's weight is 1.

#pragma once

#include "mefem/nn.hpp"

#include <span>

namespace mefem {

enum class Distance { smooth_l1, l2 };

struct LossConfig {
  Distance distance = Distance::smooth_l1;
  double smooth_l1_beta = 1.0;

  void validate() const;
};

/// Per-element distance and its derivative with respect to `diff`.
double elementwise_distance(double diff, const LossConfig& config);
double elementwise_distance_grad(double diff, const LossConfig& config);

/// Returns the loss; when `grad` is non-null it receives d loss / d predicted.
/// `reference` is treated as a constant.
template <typename T>
double jepa_loss(const nn::Mat<T>& predicted, const nn::Mat<T>& reference, std::span<const double> weights,
                 const LossConfig& config, nn::Mat<T>* grad = nullptr);

} // namespace mefem
