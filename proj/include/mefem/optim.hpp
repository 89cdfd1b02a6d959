// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mefem/nn.hpp"

#include <cstdint>
#include <vector>

namespace mefem {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.04;
};

/// Adam with decoupled weight decay. Moments are stored in the order of the
/// parameter list passed to `step`, which must be the same on every call.
template <typename T>
class AdamW {
public:
  AdamW() = default;
  AdamW(const nn::ParamRefs<T>& params, AdamWConfig config);

  void step(const nn::ParamRefs<T>& params, double lr);

  std::int64_t steps_taken() const { return t_; }
  const AdamWConfig& config() const { return config_; }

  std::vector<nn::Mat<T>>& first_moments() { return m_; }
  std::vector<nn::Mat<T>>& second_moments() { return v_; }
  const std::vector<nn::Mat<T>>& first_moments() const { return m_; }
  const std::vector<nn::Mat<T>>& second_moments() const { return v_; }
  void set_steps_taken(std::int64_t t) { t_ = t; }

private:
  AdamWConfig config_;
  std::vector<nn::Mat<T>> m_;
  std::vector<nn::Mat<T>> v_;
  std::int64_t t_ = 0;
};

/// Linear warmup over `warmup` steps, then cosine decay to zero at `total`.
double learning_rate_at(std::int64_t step, std::int64_t total, std::int64_t warmup, double base);

/// Linear ramp from `start` (step 0) to `end` (step `total`).
double momentum_at(std::int64_t step, std::int64_t total, double start, double end);

/// Global L2 norm of the trainable gradients.
template <typename T>
double grad_norm(const nn::ParamRefs<T>& params);

} // namespace mefem
