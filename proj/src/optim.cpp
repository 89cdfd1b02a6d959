// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mefem {

template <typename T>
AdamW<T>::AdamW(const nn::ParamRefs<T>& params, AdamWConfig config) : config_(config)
{
  for (const auto* p : params) {
    m_.push_back(nn::Mat<T>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(nn::Mat<T>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <typename T>
void AdamW<T>::step(const nn::ParamRefs<T>& params, double lr)
{
  if (params.size() != m_.size()) {
    throw std::invalid_argument("AdamW: parameter list changed between steps");
  }
  ++t_;
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(config_.beta1, static_cast<double>(t_))));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(config_.beta2, static_cast<double>(t_))));
  const T step_size = static_cast<T>(lr);
  const T decay = static_cast<T>(lr * config_.weight_decay);
  const T eps = static_cast<T>(config_.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (!p->trainable) continue;
    auto m = m_[i].array();
    auto v = v_[i].array();
    const auto g = p->grad.array();
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.square();
    if (p->decay && decay != T(0)) {
      p->value.array() -= decay * p->value.array();
    }
    p->value.array() -= step_size * (m * c1) / ((v * c2).sqrt() + eps);
  }
}

double learning_rate_at(std::int64_t step, std::int64_t total, std::int64_t warmup, double base)
{
  if (warmup > 0 && step < warmup) {
    return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const double span = static_cast<double>(std::max<std::int64_t>(1, total - warmup));
  const double progress = std::clamp(static_cast<double>(step - warmup) / span, 0.0, 1.0);
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double momentum_at(std::int64_t step, std::int64_t total, double start, double end)
{
  if (total <= 0) return end;
  const double progress = std::clamp(static_cast<double>(step) / static_cast<double>(total), 0.0, 1.0);
  return start + (end - start) * progress;
}

template <typename T>
double grad_norm(const nn::ParamRefs<T>& params)
{
  double sq = 0.0;
  for (const auto* p : params) {
    if (p->trainable) sq += p->grad.template cast<double>().squaredNorm();
  }
  return std::sqrt(sq);
}

template class AdamW<float>;
template class AdamW<double>;
template double grad_norm<float>(const nn::ParamRefs<float>&);
template double grad_norm<double>(const nn::ParamRefs<double>&);

} // namespace mefem
