// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Frozen-feature evaluation heads: an attentive pooler (one learnable query
// cross-attending over token latents, then a linear task head) and a
// single-hidden-layer perceptron over the CLS latent.

#pragma once

#include "mefem/dataset.hpp"
#include "mefem/nn.hpp"
#include "mefem/vit.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mefem {

enum class FeatureMode { patches, cls, patches_plus_cls };
enum class HeadKind { attentive_pooler, mlp };
enum class TaskKind { regression, classification };

std::string to_string(FeatureMode m);
std::string to_string(HeadKind h);
FeatureMode parse_feature_mode(const std::string& s);
HeadKind parse_head_kind(const std::string& s);

struct ProbeConfig {
  FeatureMode features = FeatureMode::patches;
  HeadKind head = HeadKind::attentive_pooler;
  int hidden_dim = 512;
  int pooler_heads = 3;
  TaskKind task = TaskKind::regression;
  int num_classes = 0;
  double train_fraction = 0.8;
  double val_fraction = 0.15; // of the training split, for early stopping
  std::uint64_t seed = 0;
  int epochs = 50;
  int patience = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;

  /// CLS features pair with the perceptron, patch features with the pooler.
  void validate() const;
  std::string to_text() const;
};

struct ProbeReport {
  std::optional<double> r_squared; // unset when held-out labels have zero variance
  std::optional<double> mae;
  std::optional<double> accuracy;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  int epochs_run = 0;

  /// `key: value` per line.
  std::string to_text() const;
};

/// 1 - SS_res / SS_tot; nullopt when SS_tot is zero.
std::optional<double> r_squared(const std::vector<double>& truth, const std::vector<double>& pred);
double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred);

template <typename T>
class AttentivePooler {
public:
  AttentivePooler() = default;
  AttentivePooler(int dim, int heads, int outputs, Rng& rng);

  struct Cache {
    std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> attention; // per head, one weight per token
    std::vector<nn::RowVec<T>> mixed;                            // per head, attention-weighted token mean
    nn::RowVec<T> pooled;
  };

  /// Pooled vector (width dim) for one sample's tokens.
  nn::RowVec<T> pool(const nn::Mat<T>& tokens, Cache* cache = nullptr) const;
  /// Task outputs for one sample.
  nn::RowVec<T> forward(const nn::Mat<T>& tokens, Cache* cache = nullptr) const;
  void backward(const nn::Mat<T>& tokens, const nn::RowVec<T>& doutput, const Cache& cache);

  nn::ParamRefs<T> parameters();
  int dim() const { return static_cast<int>(query.value.cols()); }

  int heads = 1;
  nn::Param<T> query; // 1 x dim
  nn::Linear<T> key;  // bias-free in effect: a key bias shifts all logits equally
  nn::Linear<T> value;
  nn::Linear<T> head;
};

template <typename T>
class MlpHead {
public:
  MlpHead() = default;
  MlpHead(int dim, int hidden, int outputs, Rng& rng);

  struct Cache {
    nn::Mat<T> input, pre, act;
  };
  nn::Mat<T> forward(const nn::Mat<T>& x, Cache* cache = nullptr) const;
  void backward(const nn::Mat<T>& dy, const Cache& cache);
  nn::ParamRefs<T> parameters();

  nn::Linear<T> fc1;
  nn::Linear<T> fc2;
};

/// Per-sample token matrices (rows = tokens fed to the head) plus labels.
struct ProbeData {
  std::vector<nn::Mat<float>> tokens;
  std::vector<double> labels;
};

/// Runs the frozen encoder over every image (full image plus CLS) and keeps
/// the rows the feature mode asks for. The encoder is only read; `workers`
/// threads each take every workers-th batch.
ProbeData extract_probe_features(const Encoder<float>& encoder, const Dataset& data, const std::vector<double>& labels,
                                 FeatureMode mode, int batch = 16, int workers = 1);

/// Selects a feature mode from full encodings (row 0 = CLS, then patches).
nn::Mat<float> select_features(const nn::Mat<float>& full, FeatureMode mode);

struct ProbeSplit {
  std::vector<std::size_t> train, val, test;
};

/// Deterministic in (n, config.seed, fractions).
ProbeSplit split_indices(std::size_t n, const ProbeConfig& config);

struct FittedProbe {
  std::variant<AttentivePooler<float>, MlpHead<float>> head;
  ProbeReport report;
  ProbeSplit split;
  double label_mean = 0.0;
  double label_scale = 1.0;
  std::vector<double> test_predictions;
};

FittedProbe fit_probe(const ProbeData& data, const ProbeConfig& config);

/// Append one CSV row keyed by `config_hash`; writes the header for a new file.
void append_report_csv(const std::string& path, const std::string& config_hash, const ProbeConfig& config,
                       const ProbeReport& report);

} // namespace mefem
