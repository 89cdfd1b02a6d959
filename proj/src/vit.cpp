// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/vit.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace mefem {

using nn::Mat;

void EncoderConfig::validate() const
{
  grid.validate();
  if (embed_dim < 1 || depth < 0 || num_heads < 1 || embed_dim % num_heads != 0) {
    throw std::invalid_argument(
        fmt::format("encoder: embed_dim {} must be positive and divisible by num_heads {}", embed_dim, num_heads));
  }
  if (!(mlp_ratio > 0.0)) {
    throw std::invalid_argument("encoder: mlp_ratio must be positive");
  }
  if (pos_embedding == PosEmbedding::sinusoidal && embed_dim % 4 != 0) {
    throw std::invalid_argument("encoder: sinusoidal positions need embed_dim divisible by 4");
  }
}

PredictorConfig PredictorConfig::for_encoder(const EncoderConfig& enc)
{
  PredictorConfig p;
  p.width = enc.embed_dim / 2;
  p.depth = 4;
  p.num_heads = enc.num_heads;
  p.mlp_ratio = enc.mlp_ratio;
  if (p.width % p.num_heads != 0 || p.width == 0) {
    p.width = enc.embed_dim;
  }
  return p;
}

void PredictorConfig::validate(const EncoderConfig& enc) const
{
  if (width < 1 || width > enc.embed_dim) {
    throw std::invalid_argument(fmt::format("predictor width {} must be in [1, {}]", width, enc.embed_dim));
  }
  if (num_heads < 1 || width % num_heads != 0) {
    throw std::invalid_argument("predictor: width must be divisible by num_heads");
  }
  if (depth < 0 || !(mlp_ratio > 0.0)) {
    throw std::invalid_argument("predictor: invalid depth or mlp_ratio");
  }
  if (enc.pos_embedding == PosEmbedding::sinusoidal && width % 4 != 0) {
    throw std::invalid_argument("predictor: sinusoidal positions need width divisible by 4");
  }
}

template <typename T>
Mat<T> sinusoidal_table(const GridSpec& grid, int dim)
{
  const int L = grid.patches_per_axis;
  Mat<T> table = Mat<T>::Zero(grid.num_patches() + 1, dim);
  const int half = dim / 2;
  const int freqs = half / 2;
  for (int idx = 0; idx < grid.num_patches(); ++idx) {
    const double coords[2] = {static_cast<double>(idx / L), static_cast<double>(idx % L)};
    for (int axis = 0; axis < 2; ++axis) {
      for (int i = 0; i < freqs; ++i) {
        const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / freqs);
        table(idx + 1, axis * half + i) = static_cast<T>(std::sin(coords[axis] * omega));
        table(idx + 1, axis * half + freqs + i) = static_cast<T>(std::cos(coords[axis] * omega));
      }
    }
  }
  return table;
}

namespace {

template <typename T>
void init_positions(nn::Param<T>& pos, const std::string& name, const GridSpec& grid, int dim, PosEmbedding kind,
                    Rng& rng)
{
  pos.name = name;
  pos.resize(grid.num_patches() + 1, dim);
  if (kind == PosEmbedding::sinusoidal) {
    pos.value = sinusoidal_table<T>(grid, dim);
    pos.trainable = false;
  } else {
    nn::trunc_normal_fill(pos.value, 0.02, rng);
  }
}

template <typename T>
void init_vector(nn::Param<T>& p, const std::string& name, int dim, Rng& rng)
{
  p.name = name;
  p.resize(1, dim);
  nn::trunc_normal_fill(p.value, 0.02, rng);
}

template <typename T>
void add_grad_row(nn::Param<T>& p, int row, const auto& g)
{
  if (p.trainable) {
    p.grad.row(row) += g;
  }
}

template <typename T, typename U>
void copy_values(nn::ConstParamRefs<T> src, nn::ParamRefs<U> dst)
{
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->value = src[i]->value.template cast<U>();
  }
}

} // namespace

// ---------------------------------------------------------------- packing

template <typename T>
PackedTokens<T> pack_tokens(std::span<const NormalizedImage* const> images, std::span<const TokenRequest> requests,
                            const GridSpec& grid)
{
  if (images.size() != requests.size()) {
    throw std::invalid_argument("pack_tokens: one request per image required");
  }
  PackedTokens<T> out;
  std::size_t total_patches = 0;
  for (const auto& r : requests) total_patches += r.patches.size();

  const int pd = patch_dim(grid);
  out.patches.resize(static_cast<Eigen::Index>(total_patches), pd);
  std::vector<float> buffer(pd);
  out.segments.push_back(0);
  int patch_cursor = 0;
  for (std::size_t s = 0; s < images.size(); ++s) {
    const auto& req = requests[s];
    if (req.patches.empty() && !req.include_cls) {
      throw std::invalid_argument("pack_tokens: empty token request");
    }
    if (images[s]->size() != grid.image_size()) {
      throw std::invalid_argument(
          fmt::format("image size {} does not match grid image size {}", images[s]->size(), grid.image_size()));
    }
    if (req.include_cls) {
      out.pos_row.push_back(0);
      out.patch_row.push_back(-1);
    }
    for (int idx : req.patches) {
      if (idx < 0 || idx >= grid.num_patches()) {
        throw std::out_of_range(fmt::format("patch index {} outside grid of {} patches", idx, grid.num_patches()));
      }
      extract_patch(*images[s], grid, idx, buffer);
      for (int j = 0; j < pd; ++j) {
        out.patches(patch_cursor, j) = static_cast<T>(buffer[j]);
      }
      out.pos_row.push_back(idx + 1);
      out.patch_row.push_back(patch_cursor++);
    }
    out.segments.push_back(static_cast<int>(out.pos_row.size()));
  }
  return out;
}

// ---------------------------------------------------------------- Encoder

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config, Rng& rng)
    : patch_embed("encoder.patch_embed", patch_dim(config.grid), config.embed_dim),
      stack("encoder", config.embed_dim, config.depth, config.num_heads, config.mlp_ratio), config_(config)
{
  config.validate();
  patch_embed.init(rng);
  init_vector(cls_token, "encoder.cls_token", config.embed_dim, rng);
  init_positions(pos_embed, "encoder.pos_embed", config.grid, config.embed_dim, config.pos_embedding, rng);
  stack.init(rng);
}

template <typename T>
Mat<T> Encoder<T>::forward(const PackedTokens<T>& tokens, Cache* cache) const
{
  const Mat<T> embedded = patch_embed.forward(tokens.patches);
  Mat<T> x(tokens.token_count(), config_.embed_dim);
  for (int r = 0; r < tokens.token_count(); ++r) {
    if (tokens.patch_row[r] < 0) {
      x.row(r) = cls_token.value.row(0) + pos_embed.value.row(0);
    } else {
      x.row(r) = embedded.row(tokens.patch_row[r]) + pos_embed.value.row(tokens.pos_row[r]);
    }
  }
  if (cache) {
    cache->tokens = &tokens;
  }
  return stack.forward(x, tokens.segments, cache ? &cache->stack : nullptr);
}

template <typename T>
void Encoder<T>::backward(const Mat<T>& dlatents, const Cache& cache)
{
  const PackedTokens<T>& tokens = *cache.tokens;
  const Mat<T> dx = stack.backward(dlatents, tokens.segments, cache.stack);
  Mat<T> dembedded(tokens.patches.rows(), config_.embed_dim);
  for (int r = 0; r < tokens.token_count(); ++r) {
    add_grad_row(pos_embed, tokens.pos_row[r], dx.row(r));
    if (tokens.patch_row[r] < 0) {
      cls_token.grad.row(0) += dx.row(r);
    } else {
      dembedded.row(tokens.patch_row[r]) = dx.row(r);
    }
  }
  patch_embed.accumulate_grads(tokens.patches, dembedded);
}

template <typename T>
Mat<T> Encoder<T>::encode(const NormalizedImage& image, const TokenRequest& request) const
{
  const NormalizedImage* images[] = {&image};
  const PackedTokens<T> tokens = pack_tokens<T>(images, std::span(&request, 1), config_.grid);
  return forward(tokens);
}

template <typename T>
nn::ParamRefs<T> Encoder<T>::parameters()
{
  nn::ParamRefs<T> out;
  patch_embed.collect(out);
  out.push_back(&cls_token);
  out.push_back(&pos_embed);
  stack.collect(out);
  return out;
}

template <typename T>
nn::ConstParamRefs<T> Encoder<T>::parameters() const
{
  nn::ConstParamRefs<T> out;
  patch_embed.collect(out);
  out.push_back(&cls_token);
  out.push_back(&pos_embed);
  stack.collect(out);
  return out;
}

template <typename T>
template <typename U>
Encoder<U> Encoder<T>::cast() const
{
  Rng scratch(0);
  Encoder<U> out(config_, scratch);
  copy_values<T, U>(parameters(), out.parameters());
  return out;
}

// ---------------------------------------------------------------- Predictor

template <typename T>
Predictor<T>::Predictor(const EncoderConfig& encoder, const PredictorConfig& config, Rng& rng)
    : input_proj("predictor.input_proj", encoder.embed_dim, config.width),
      stack("predictor", config.width, config.depth, config.num_heads, config.mlp_ratio),
      output_proj("predictor.output_proj", config.width, encoder.embed_dim), config_(config),
      grid_tokens_(encoder.grid.num_patches())
{
  encoder.validate();
  config.validate(encoder);
  input_proj.init(rng);
  init_vector(mask_token, "predictor.mask_token", config.width, rng);
  init_vector(cls_query, "predictor.cls_query", config.width, rng);
  init_positions(pos_embed, "predictor.pos_embed", encoder.grid, config.width, encoder.pos_embedding, rng);
  stack.init(rng);
  output_proj.init(rng);
}

template <typename T>
Mat<T> Predictor<T>::forward(const Mat<T>& source_latents, std::span<const int> source_pos_rows,
                             const nn::Segments& source_segments, std::span<const PredictionQuery> queries,
                             Cache* cache) const
{
  if (source_latents.cols() != input_proj.in_features()) {
    throw std::invalid_argument(fmt::format("predictor: source latent width {} does not match encoder width {}",
                                            source_latents.cols(), input_proj.in_features()));
  }
  if (source_segments.size() != queries.size() + 1 ||
      static_cast<std::size_t>(source_latents.rows()) != source_pos_rows.size()) {
    throw std::invalid_argument("predictor: source layout does not match queries");
  }
  const Mat<T> projected = input_proj.forward(source_latents);
  const int width = config_.width;

  int total = static_cast<int>(source_latents.rows());
  for (const auto& q : queries) {
    if (q.output_count() == 0) {
      throw std::invalid_argument("predictor: query with nothing to predict");
    }
    total += q.output_count();
  }

  Mat<T> x(total, width);
  std::vector<int> origin(total);
  std::vector<int> pos(total);
  std::vector<int> output_rows;
  nn::Segments segments{0};
  int row = 0;
  for (std::size_t s = 0; s < queries.size(); ++s) {
    for (int r = source_segments[s]; r < source_segments[s + 1]; ++r, ++row) {
      x.row(row) = projected.row(r) + pos_embed.value.row(source_pos_rows[r]);
      origin[row] = r;
      pos[row] = source_pos_rows[r];
    }
    if (queries[s].predict_cls) {
      x.row(row) = cls_query.value.row(0) + pos_embed.value.row(0);
      origin[row] = -2;
      pos[row] = 0;
      output_rows.push_back(row++);
    }
    for (int t : queries[s].targets) {
      if (t < 0 || t >= grid_tokens_) {
        throw std::out_of_range(fmt::format("predictor: target position {} outside grid", t));
      }
      x.row(row) = mask_token.value.row(0) + pos_embed.value.row(t + 1);
      origin[row] = -1;
      pos[row] = t + 1;
      output_rows.push_back(row++);
    }
    segments.push_back(row);
  }

  Mat<T> h = stack.forward(x, segments, cache ? &cache->stack : nullptr);
  Mat<T> gathered(static_cast<Eigen::Index>(output_rows.size()), width);
  for (std::size_t i = 0; i < output_rows.size(); ++i) {
    gathered.row(i) = h.row(output_rows[i]);
  }
  Mat<T> out = output_proj.forward(gathered);
  if (cache) {
    cache->source_latents = source_latents;
    cache->input_pos_row = std::move(pos);
    cache->output_rows = std::move(output_rows);
    cache->query_kind = std::move(origin);
    cache->segments = std::move(segments);
    cache->gathered = std::move(gathered);
  }
  return out;
}

template <typename T>
Mat<T> Predictor<T>::backward(const Mat<T>& dpred, const Cache& cache)
{
  const Mat<T> dgathered = output_proj.backward(cache.gathered, dpred);
  const int total = static_cast<int>(cache.query_kind.size());
  Mat<T> dh = Mat<T>::Zero(total, config_.width);
  for (std::size_t i = 0; i < cache.output_rows.size(); ++i) {
    dh.row(cache.output_rows[i]) = dgathered.row(i);
  }
  const Mat<T> dx = stack.backward(dh, cache.segments, cache.stack);

  Mat<T> dprojected(cache.source_latents.rows(), config_.width);
  for (int r = 0; r < total; ++r) {
    add_grad_row(pos_embed, cache.input_pos_row[r], dx.row(r));
    const int origin = cache.query_kind[r];
    if (origin >= 0) {
      dprojected.row(origin) = dx.row(r);
    } else if (origin == -1) {
      mask_token.grad.row(0) += dx.row(r);
    } else {
      cls_query.grad.row(0) += dx.row(r);
    }
  }
  return input_proj.backward(cache.source_latents, dprojected);
}

template <typename T>
nn::ParamRefs<T> Predictor<T>::parameters()
{
  nn::ParamRefs<T> out;
  input_proj.collect(out);
  out.push_back(&mask_token);
  out.push_back(&cls_query);
  out.push_back(&pos_embed);
  stack.collect(out);
  output_proj.collect(out);
  return out;
}

template <typename T>
nn::ConstParamRefs<T> Predictor<T>::parameters() const
{
  nn::ConstParamRefs<T> out;
  input_proj.collect(out);
  out.push_back(&mask_token);
  out.push_back(&cls_query);
  out.push_back(&pos_embed);
  stack.collect(out);
  output_proj.collect(out);
  return out;
}

template <typename T>
template <typename U>
Predictor<U> Predictor<T>::cast() const
{
  Rng scratch(0);
  EncoderConfig enc;
  enc.embed_dim = input_proj.in_features();
  enc.num_heads = 1;
  enc.grid.patches_per_axis = static_cast<int>(std::lround(std::sqrt(grid_tokens_)));
  enc.pos_embedding = pos_embed.trainable ? PosEmbedding::learned : PosEmbedding::sinusoidal;
  Predictor<U> out(enc, config_, scratch);
  copy_values<T, U>(parameters(), out.parameters());
  return out;
}

// ---------------------------------------------------------------- EMA

template <typename T>
void ema_update(nn::ParamRefs<T> target, nn::ConstParamRefs<T> source, double momentum)
{
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument(fmt::format("EMA momentum {} outside [0, 1]", momentum));
  }
  if (target.size() != source.size()) {
    throw std::invalid_argument("EMA: parameter count mismatch");
  }
  const T keep = static_cast<T>(momentum);
  const T mix = static_cast<T>(1.0 - momentum);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target[i]->value;
    const auto& s = source[i]->value;
    if (t.rows() != s.rows() || t.cols() != s.cols()) {
      throw std::invalid_argument(fmt::format("EMA: shape mismatch for '{}'", target[i]->name));
    }
    if (!target[i]->trainable) {
      continue;
    }
    t = keep * t + mix * s;
  }
}

#define MEFEM_INSTANTIATE(T)                                                                                           \
  template nn::Mat<T> sinusoidal_table<T>(const GridSpec&, int);                                                       \
  template PackedTokens<T> pack_tokens<T>(std::span<const NormalizedImage* const>, std::span<const TokenRequest>,     \
                                          const GridSpec&);                                                            \
  template class Encoder<T>;                                                                                           \
  template class Predictor<T>;                                                                                         \
  template void ema_update<T>(nn::ParamRefs<T>, nn::ConstParamRefs<T>, double);

MEFEM_INSTANTIATE(float)
MEFEM_INSTANTIATE(double)

template Encoder<double> Encoder<float>::cast<double>() const;
template Encoder<float> Encoder<double>::cast<float>() const;
template Encoder<float> Encoder<float>::cast<float>() const;
template Predictor<double> Predictor<float>::cast<double>() const;
template Predictor<float> Predictor<double>::cast<float>() const;

#undef MEFEM_INSTANTIATE

} // namespace mefem
