// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// ViT encoder over arbitrary token subsets, the latent predictor, and the EMA
// teacher update.
//
// Positional table layout (encoder and predictor alike): row 0 belongs to the
// CLS token, row 1 + i to grid patch i.

#pragma once

#include "mefem/grid.hpp"
#include "mefem/image.hpp"
#include "mefem/nn.hpp"
#include "mefem/rng.hpp"

#include <span>
#include <vector>

namespace mefem {

enum class PosEmbedding { learned, sinusoidal };

struct EncoderConfig {
  int embed_dim = 192;
  int depth = 6;
  int num_heads = 3;
  double mlp_ratio = 4.0;
  GridSpec grid;
  PosEmbedding pos_embedding = PosEmbedding::learned;

  /// Desk-scale default: width 192, 6 blocks, 3 heads.
  static EncoderConfig tiny(GridSpec grid = {}) { return EncoderConfig{192, 6, 3, 4.0, grid}; }
  void validate() const;
};

struct PredictorConfig {
  int width = 96;
  int depth = 4;
  int num_heads = 3;
  double mlp_ratio = 4.0;

  /// Width half the encoder's, depth 4.
  static PredictorConfig for_encoder(const EncoderConfig& enc);
  void validate(const EncoderConfig& enc) const;
};

/// Which tokens of one image to encode.
struct TokenRequest {
  std::vector<int> patches;
  bool include_cls = false;
};

/// Tokens of a batch packed row-wise. For every output row: `pos_row` is its
/// positional-table row and `patch_row` its row in `patches` (-1 for CLS).
template <typename T>
struct PackedTokens {
  nn::Mat<T> patches;
  std::vector<int> pos_row;
  std::vector<int> patch_row;
  nn::Segments segments;

  int batch_size() const { return static_cast<int>(segments.size()) - 1; }
  int token_count() const { return static_cast<int>(pos_row.size()); }
};

/// Output order per sample: CLS first when requested, then patches in request order.
template <typename T>
PackedTokens<T> pack_tokens(std::span<const NormalizedImage* const> images, std::span<const TokenRequest> requests,
                            const GridSpec& grid);

template <typename T>
class Encoder {
public:
  struct Cache {
    const PackedTokens<T>* tokens = nullptr;
    typename nn::Transformer<T>::Cache stack;
  };

  Encoder() = default;
  Encoder(const EncoderConfig& config, Rng& rng);

  /// One latent per packed token, rows aligned with `tokens`.
  nn::Mat<T> forward(const PackedTokens<T>& tokens, Cache* cache = nullptr) const;
  void backward(const nn::Mat<T>& dlatents, const Cache& cache);

  nn::Mat<T> encode(const NormalizedImage& image, const TokenRequest& request) const;

  nn::ParamRefs<T> parameters();
  nn::ConstParamRefs<T> parameters() const;
  const EncoderConfig& config() const { return config_; }

  template <typename U>
  Encoder<U> cast() const;

  nn::Linear<T> patch_embed;
  nn::Param<T> cls_token;
  nn::Param<T> pos_embed;
  nn::Transformer<T> stack;

private:
  template <typename U>
  friend class Encoder;

  EncoderConfig config_;
};

/// Per-sample prediction request. Output order: CLS prediction first (when
/// requested), then one row per target position in the given order.
struct PredictionQuery {
  std::vector<int> targets;
  bool predict_cls = false;

  int output_count() const { return static_cast<int>(targets.size()) + (predict_cls ? 1 : 0); }
};

template <typename T>
class Predictor {
public:
  struct Cache {
    nn::Mat<T> source_latents;
    std::vector<int> input_pos_row;
    std::vector<int> output_rows; // rows of the stack output that are predictions
    std::vector<int> query_kind;  // per input row: 0 source, 1 mask token, 2 CLS query
    nn::Segments segments;
    typename nn::Transformer<T>::Cache stack;
    nn::Mat<T> gathered;
  };

  Predictor() = default;
  Predictor(const EncoderConfig& encoder, const PredictorConfig& config, Rng& rng);

  /// `source_pos_rows` and `source_segments` describe `source_latents` exactly
  /// as PackedTokens does for the encoder output.
  nn::Mat<T> forward(const nn::Mat<T>& source_latents, std::span<const int> source_pos_rows,
                     const nn::Segments& source_segments, std::span<const PredictionQuery> queries,
                     Cache* cache = nullptr) const;
  /// Returns d loss / d source_latents.
  nn::Mat<T> backward(const nn::Mat<T>& dpred, const Cache& cache);

  nn::ParamRefs<T> parameters();
  nn::ConstParamRefs<T> parameters() const;
  const PredictorConfig& config() const { return config_; }

  template <typename U>
  Predictor<U> cast() const;

  nn::Linear<T> input_proj;
  nn::Param<T> mask_token;
  nn::Param<T> cls_query;
  nn::Param<T> pos_embed;
  nn::Transformer<T> stack;
  nn::Linear<T> output_proj;

private:
  template <typename U>
  friend class Predictor;

  PredictorConfig config_;
  int grid_tokens_ = 0;
};

/// 2D sine-cosine table with (L^2 + 1) rows; the CLS row is zero.
template <typename T>
nn::Mat<T> sinusoidal_table(const GridSpec& grid, int dim);

/// target <- m * target + (1 - m) * source, for every scalar.
template <typename T>
void ema_update(nn::ParamRefs<T> target, nn::ConstParamRefs<T> source, double momentum);

template <typename T>
void ema_update(Encoder<T>& target, const Encoder<T>& source, double momentum)
{
  ema_update<T>(target.parameters(), source.parameters(), momentum);
}

void zero_grads(auto&& params)
{
  for (auto* p : params) p->zero_grad();
}

} // namespace mefem
