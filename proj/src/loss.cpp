// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/loss.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace mefem {

void LossConfig::validate() const
{
  if (!(smooth_l1_beta > 0.0)) {
    throw std::invalid_argument("smooth L1 beta must be positive");
  }
}

double elementwise_distance(double diff, const LossConfig& config)
{
  if (config.distance == Distance::l2) {
    return diff * diff;
  }
  const double a = std::abs(diff);
  const double beta = config.smooth_l1_beta;
  return a < beta ? 0.5 * diff * diff / beta : a - 0.5 * beta;
}

double elementwise_distance_grad(double diff, const LossConfig& config)
{
  if (config.distance == Distance::l2) {
    return 2.0 * diff;
  }
  const double beta = config.smooth_l1_beta;
  if (std::abs(diff) < beta) {
    return diff / beta;
  }
  return diff > 0.0 ? 1.0 : -1.0;
}

template <typename T>
double jepa_loss(const nn::Mat<T>& predicted, const nn::Mat<T>& reference, std::span<const double> weights,
                 const LossConfig& config, nn::Mat<T>* grad)
{
  config.validate();
  const auto n = predicted.rows();
  const auto d = predicted.cols();
  if (n < 1 || d < 1) {
    throw std::invalid_argument("jepa_loss: need at least one token");
  }
  if (reference.rows() != n || reference.cols() != d || static_cast<Eigen::Index>(weights.size()) != n) {
    throw std::invalid_argument(fmt::format("jepa_loss: token count mismatch (pred {}x{}, ref {}x{}, {} weights)", n, d,
                                            reference.rows(), reference.cols(), weights.size()));
  }
  if (!predicted.allFinite() || !reference.allFinite()) {
    throw std::invalid_argument("jepa_loss: non-finite latents");
  }
  if (grad) {
    grad->resize(n, d);
  }
  const double inv_tokens = 1.0 / static_cast<double>(n);
  const double inv_dims = 1.0 / static_cast<double>(d);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double token = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = static_cast<double>(predicted(i, j)) - static_cast<double>(reference(i, j));
      token += elementwise_distance(diff, config);
      if (grad) {
        (*grad)(i, j) = static_cast<T>(weights[i] * inv_tokens * inv_dims * elementwise_distance_grad(diff, config));
      }
    }
    total += weights[i] * (token * inv_dims);
  }
  return total * inv_tokens;
}

template double jepa_loss<float>(const nn::Mat<float>&, const nn::Mat<float>&, std::span<const double>,
                                 const LossConfig&, nn::Mat<float>*);
template double jepa_loss<double>(const nn::Mat<double>&, const nn::Mat<double>&, std::span<const double>,
                                  const LossConfig&, nn::Mat<double>*);

} // namespace mefem
