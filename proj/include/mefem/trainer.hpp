// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Training: one step samples a mask and a CLS route per image, encodes the
// source tokens with the student, the target tokens with the EMA teacher (no
// gradient), predicts the target latents and minimizes the weighted loss.
// Only the student encoder and the predictor are optimized; the teacher moves
// exclusively through the EMA update at the end of each step.

#pragma once

#include "mefem/config.hpp"
#include "mefem/dataset.hpp"
#include "mefem/loss.hpp"
#include "mefem/lossweights.hpp"
#include "mefem/maskgen.hpp"
#include "mefem/optim.hpp"
#include "mefem/tokens.hpp"
#include "mefem/vit.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mefem {

struct TrainConfig {
  EncoderConfig encoder = EncoderConfig::tiny();
  std::optional<PredictorConfig> predictor; // defaults derived from the encoder
  int batch_size = 8;
  int epochs = 10;
  double learning_rate = 1e-3;
  double weight_decay = 0.04;
  std::int64_t warmup_steps = -1; // -1: 10% of all steps
  double ema_start = 0.996;
  double ema_end = 1.0;
  std::uint64_t seed = 0;
  MaskStrategy strategy = StripeParams{};
  ClsPolicy cls;
  LossConfig loss;
  WeightConfig weights;
  bool target_full_context = false;

  const GridSpec& grid() const { return encoder.grid; }
  PredictorConfig predictor_config() const { return predictor.value_or(PredictorConfig::for_encoder(encoder)); }
  void validate() const;

  KeyValueConfig to_kv() const;
  /// Keys missing from `kv` keep their defaults; unknown keys are rejected.
  static TrainConfig from_kv(const KeyValueConfig& kv);
  static const std::set<std::string>& known_keys();
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainState {
  TrainConfig config;
  Encoder<float> source;
  Encoder<float> target;
  Predictor<float> predictor;
  AdamW<float> optimizer;
  WeightMatrix weights;
  Rng rng;
  std::int64_t step = 0;
  int epoch = 0;
  std::int64_t total_steps = 0;

  /// Student encoder and predictor parameters, in optimizer order.
  nn::ParamRefs<float> trainable();
};

/// Fresh state: random student, teacher an exact copy of it.
TrainState init_state(const TrainConfig& config);

struct StepMetrics {
  double loss = 0.0;
  double grad_norm = 0.0;
  double momentum = 0.0;
  double learning_rate = 0.0;
};

/// Inputs of one sample after masking and CLS routing.
struct SamplePlan {
  TokenPartition partition;
  TokenRequest source;
  TokenRequest target;
  PredictionQuery query;
};

SamplePlan plan_sample(const TokenPartition& partition, const GridSpec& grid, bool target_full_context);

/// Loss weights for one sample's predictions (CLS first when predicted).
std::vector<double> prediction_weights(const PredictionQuery& query, const WeightMatrix& weights);

/// One optimization step over `batch`, drawing masks and CLS routes from
/// `state.rng`. `batch_ids` only feeds the diagnostic on divergence.
StepMetrics train_step(TrainState& state, std::span<const NormalizedImage> batch,
                       std::span<const std::size_t> batch_ids = {});

/// Batch loss for given plans without touching any state; used by gradient
/// checks. Gradients of student and predictor are accumulated when requested.
template <typename T>
double batch_loss(Encoder<T>& source, const Encoder<T>& target, Predictor<T>& predictor,
                  std::span<const NormalizedImage> batch, std::span<const SamplePlan> plans, const TrainConfig& config,
                  const WeightMatrix& weights, bool accumulate_grads);

struct LoopOptions {
  std::string checkpoint_dir;          // empty: no checkpoints
  std::string metrics_csv;             // empty: no metrics log
  std::vector<int> keep_epochs;        // extra copies epoch_NNNN.mefe after these epochs
  std::function<void(std::int64_t step, const StepMetrics&)> on_step;
};

struct LoopResult {
  std::vector<double> step_losses;
  std::vector<double> epoch_mean_losses;
};

/// Runs epochs `state.epoch` .. `config.epochs - 1`, checkpointing to
/// `<dir>/latest.mefe` after each epoch (and once up front when no epoch runs).
LoopResult train_loop(TrainState& state, const Dataset& data, const LoopOptions& options);

/// Minibatch composition for one epoch; consumes `rng`.
std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng);

struct EncodedImage {
  std::vector<float> cls;             // embed_dim
  nn::Mat<float> patches;             // num_patches x embed_dim
};

/// Full-image forward with CLS; the encoder is only read.
EncodedImage encode_full(const Encoder<float>& encoder, const NormalizedImage& image);

struct RepresentationStats {
  std::vector<double> cls_mean, cls_std;
  std::vector<double> patch_mean, patch_std; // over mean-pooled patch embeddings
  double collapse_indicator = 0.0;           // mean per-dimension std, CLS and pooled patches averaged
};

using FeatureFn = std::function<EncodedImage(const NormalizedImage&)>;

RepresentationStats representation_stats(const FeatureFn& features, const Dataset& data, std::size_t n);
RepresentationStats representation_stats(const Encoder<float>& encoder, const Dataset& data, std::size_t n);

} // namespace mefem
