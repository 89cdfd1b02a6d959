// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/trainer.hpp"

#include "mefem/checkpoint.hpp"
#include "mefem/io.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace mefem {

using nn::Mat;

// ---------------------------------------------------------------- config

namespace {

std::string orientation_name(Orientation o)
{
  switch (o) {
  case Orientation::horizontal: return "horizontal";
  case Orientation::vertical: return "vertical";
  default: return "random";
  }
}

Orientation parse_orientation(const std::string& s)
{
  if (s == "random") return Orientation::random;
  if (s == "horizontal") return Orientation::horizontal;
  if (s == "vertical") return Orientation::vertical;
  throw ConfigError(fmt::format("mask.orientation: unknown value '{}'", s));
}

std::string format_modes(const MultiblockConfig& c)
{
  std::vector<std::string> parts;
  for (const auto& m : c.modes) {
    parts.push_back(fmt::format("{}:{}:{}:{}:{}", m.num_blocks, m.scale.lo, m.scale.hi, m.aspect.lo, m.aspect.hi));
  }
  return fmt::format("{}", fmt::join(parts, ";"));
}

MultiblockConfig parse_modes(const std::string& text, int budget)
{
  MultiblockConfig c;
  c.resample_budget = budget;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    MultiblockParams m;
    char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    std::istringstream is(item);
    if (!(is >> m.num_blocks >> c1 >> m.scale.lo >> c2 >> m.scale.hi >> c3 >> m.aspect.lo >> c4 >> m.aspect.hi) ||
        c1 != ':' || c2 != ':' || c3 != ':' || c4 != ':') {
      throw ConfigError(fmt::format("mask.multiblock_modes: cannot parse '{}' (want blocks:scale_lo:scale_hi:aspect_lo:aspect_hi)", item));
    }
    c.modes.push_back(m);
  }
  if (c.modes.empty()) {
    throw ConfigError("mask.multiblock_modes: no modes given");
  }
  return c;
}

} // namespace

const std::set<std::string>& TrainConfig::known_keys()
{
  static const std::set<std::string> keys{
      "grid.patches_per_axis", "grid.patch_size", "model.embed_dim", "model.depth", "model.heads", "model.mlp_ratio",
      "model.pos_embedding", "predictor.width", "predictor.depth", "predictor.heads", "train.batch_size",
      "train.epochs", "train.lr", "train.weight_decay", "train.warmup_steps", "ema.start", "ema.end", "seed",
      "mask.strategy", "mask.stripe_width", "mask.stripe_k", "mask.orientation", "mask.rounding",
      "mask.multiblock_modes", "mask.resample_budget", "cls.p_source", "cls.border_drop", "loss.distance",
      "loss.beta", "weights.scheme", "weights.r0", "weights.sigma", "target.full_context"};
  return keys;
}

void TrainConfig::validate() const
{
  encoder.validate();
  predictor_config().validate(encoder);
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) throw ConfigError("train.lr and train.weight_decay must be >= 0");
  if (!(ema_start >= 0.0 && ema_start <= 1.0 && ema_end >= 0.0 && ema_end <= 1.0)) {
    throw ConfigError("ema.start and ema.end must lie in [0, 1]");
  }
  validate_strategy(strategy, grid());
  cls.validate();
  loss.validate();
  if (weights.scheme == WeightScheme::circular) weights.validate();
}

KeyValueConfig TrainConfig::to_kv() const
{
  KeyValueConfig kv;
  const auto pred = predictor_config();
  kv.set("grid.patches_per_axis", std::to_string(encoder.grid.patches_per_axis));
  kv.set("grid.patch_size", std::to_string(encoder.grid.patch_size));
  kv.set("model.embed_dim", std::to_string(encoder.embed_dim));
  kv.set("model.depth", std::to_string(encoder.depth));
  kv.set("model.heads", std::to_string(encoder.num_heads));
  kv.set("model.mlp_ratio", fmt::format("{}", encoder.mlp_ratio));
  kv.set("model.pos_embedding", encoder.pos_embedding == PosEmbedding::learned ? "learned" : "sinusoidal");
  kv.set("predictor.width", std::to_string(pred.width));
  kv.set("predictor.depth", std::to_string(pred.depth));
  kv.set("predictor.heads", std::to_string(pred.num_heads));
  kv.set("train.batch_size", std::to_string(batch_size));
  kv.set("train.epochs", std::to_string(epochs));
  kv.set("train.lr", fmt::format("{}", learning_rate));
  kv.set("train.weight_decay", fmt::format("{}", weight_decay));
  kv.set("train.warmup_steps", std::to_string(warmup_steps));
  kv.set("ema.start", fmt::format("{}", ema_start));
  kv.set("ema.end", fmt::format("{}", ema_end));
  kv.set("seed", std::to_string(seed));
  if (const auto* s = std::get_if<StripeParams>(&strategy)) {
    kv.set("mask.strategy", "stripe");
    kv.set("mask.stripe_width", std::to_string(s->width));
    kv.set("mask.stripe_k", fmt::format("{}", s->center_spread));
    kv.set("mask.orientation", orientation_name(s->orientation));
    kv.set("mask.rounding", s->rounding == Rounding::half_even ? "half_even" : "half_away");
  } else if (std::holds_alternative<QuadrantParams>(strategy)) {
    kv.set("mask.strategy", "quadrant");
  } else {
    const auto& m = std::get<MultiblockConfig>(strategy);
    kv.set("mask.strategy", "multiblock");
    kv.set("mask.multiblock_modes", format_modes(m));
    kv.set("mask.resample_budget", std::to_string(m.resample_budget));
  }
  kv.set("cls.p_source", fmt::format("{}", cls.p_source));
  kv.set("cls.border_drop", cls.border_drop ? "true" : "false");
  kv.set("loss.distance", loss.distance == Distance::smooth_l1 ? "smooth_l1" : "l2");
  kv.set("loss.beta", fmt::format("{}", loss.smooth_l1_beta));
  kv.set("weights.scheme", weights.scheme == WeightScheme::circular ? "circular" : "uniform");
  kv.set("weights.r0", fmt::format("{}", weights.falloff_radius));
  kv.set("weights.sigma", fmt::format("{}", weights.steepness));
  kv.set("target.full_context", target_full_context ? "true" : "false");
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv)
{
  kv.check_known(known_keys());
  TrainConfig c;
  c.encoder.grid.patches_per_axis = kv.get_int("grid.patches_per_axis", c.encoder.grid.patches_per_axis);
  c.encoder.grid.patch_size = kv.get_int("grid.patch_size", c.encoder.grid.patch_size);
  c.encoder.embed_dim = kv.get_int("model.embed_dim", c.encoder.embed_dim);
  c.encoder.depth = kv.get_int("model.depth", c.encoder.depth);
  c.encoder.num_heads = kv.get_int("model.heads", c.encoder.num_heads);
  c.encoder.mlp_ratio = kv.get_double("model.mlp_ratio", c.encoder.mlp_ratio);
  const auto pos = kv.get_string("model.pos_embedding", "learned");
  if (pos == "learned") {
    c.encoder.pos_embedding = PosEmbedding::learned;
  } else if (pos == "sinusoidal") {
    c.encoder.pos_embedding = PosEmbedding::sinusoidal;
  } else {
    throw ConfigError(fmt::format("model.pos_embedding: unknown value '{}'", pos));
  }
  if (kv.has("predictor.width") || kv.has("predictor.depth") || kv.has("predictor.heads")) {
    auto p = PredictorConfig::for_encoder(c.encoder);
    p.width = kv.get_int("predictor.width", p.width);
    p.depth = kv.get_int("predictor.depth", p.depth);
    p.num_heads = kv.get_int("predictor.heads", p.num_heads);
    p.mlp_ratio = c.encoder.mlp_ratio;
    c.predictor = p;
  }
  c.batch_size = kv.get_int("train.batch_size", c.batch_size);
  c.epochs = kv.get_int("train.epochs", c.epochs);
  c.learning_rate = kv.get_double("train.lr", c.learning_rate);
  c.weight_decay = kv.get_double("train.weight_decay", c.weight_decay);
  c.warmup_steps = kv.get_int("train.warmup_steps", static_cast<int>(c.warmup_steps));
  c.ema_start = kv.get_double("ema.start", c.ema_start);
  c.ema_end = kv.get_double("ema.end", c.ema_end);
  c.seed = kv.get_u64("seed", c.seed);

  const auto strategy = kv.get_string("mask.strategy", "stripe");
  if (strategy == "stripe") {
    StripeParams s;
    s.width = kv.get_int("mask.stripe_width", s.width);
    s.center_spread = kv.get_double("mask.stripe_k", s.center_spread);
    s.orientation = parse_orientation(kv.get_string("mask.orientation", "random"));
    const auto r = kv.get_string("mask.rounding", "half_even");
    if (r != "half_even" && r != "half_away") throw ConfigError(fmt::format("mask.rounding: unknown value '{}'", r));
    s.rounding = r == "half_even" ? Rounding::half_even : Rounding::half_away_from_zero;
    c.strategy = s;
  } else if (strategy == "quadrant") {
    c.strategy = QuadrantParams{};
  } else if (strategy == "multiblock") {
    const int budget = kv.get_int("mask.resample_budget", 100);
    if (auto modes = kv.get("mask.multiblock_modes")) {
      c.strategy = parse_modes(*modes, budget);
    } else {
      auto m = MultiblockConfig::defaults();
      m.resample_budget = budget;
      c.strategy = m;
    }
  } else {
    throw ConfigError(fmt::format("mask.strategy: unknown value '{}' (stripe, quadrant, multiblock)", strategy));
  }

  c.cls.p_source = kv.get_double("cls.p_source", c.cls.p_source);
  c.cls.border_drop = kv.get_bool("cls.border_drop", c.cls.border_drop);
  const auto dist = kv.get_string("loss.distance", "smooth_l1");
  if (dist == "smooth_l1") {
    c.loss.distance = Distance::smooth_l1;
  } else if (dist == "l2") {
    c.loss.distance = Distance::l2;
  } else {
    throw ConfigError(fmt::format("loss.distance: unknown value '{}'", dist));
  }
  c.loss.smooth_l1_beta = kv.get_double("loss.beta", c.loss.smooth_l1_beta);
  const auto scheme = kv.get_string("weights.scheme", "circular");
  if (scheme == "circular") {
    c.weights.scheme = WeightScheme::circular;
  } else if (scheme == "uniform") {
    c.weights.scheme = WeightScheme::uniform;
  } else {
    throw ConfigError(fmt::format("weights.scheme: unknown value '{}'", scheme));
  }
  c.weights.falloff_radius = kv.get_double("weights.r0", c.weights.falloff_radius);
  c.weights.steepness = kv.get_double("weights.sigma", c.weights.steepness);
  c.target_full_context = kv.get_bool("target.full_context", c.target_full_context);
  return c;
}

// ---------------------------------------------------------------- state

nn::ParamRefs<float> TrainState::trainable()
{
  auto params = source.parameters();
  const auto pred = predictor.parameters();
  params.insert(params.end(), pred.begin(), pred.end());
  return params;
}

TrainState init_state(const TrainConfig& config)
{
  config.validate();
  Rng init_rng(config.seed);
  Encoder<float> source(config.encoder, init_rng);
  Predictor<float> predictor(config.encoder, config.predictor_config(), init_rng);
  TrainState state{config,
                   source,
                   source,
                   std::move(predictor),
                   {},
                   build_weight_matrix(config.grid(), config.weights),
                   Rng(config.seed ^ 0xA5A5A5A5DEADBEEFULL)};
  AdamWConfig opt;
  opt.weight_decay = config.weight_decay;
  state.optimizer = AdamW<float>(state.trainable(), opt);
  return state;
}

// ---------------------------------------------------------------- step

SamplePlan plan_sample(const TokenPartition& partition, const GridSpec& grid, bool target_full_context)
{
  SamplePlan plan;
  plan.partition = partition;
  plan.source = TokenRequest{partition.source_patches(), partition.cls_in_source};
  plan.query = PredictionQuery{partition.target_patches(), !partition.cls_in_source};
  if (target_full_context) {
    std::vector<int> all(grid.num_patches());
    std::iota(all.begin(), all.end(), 0);
    plan.target = TokenRequest{std::move(all), true};
  } else {
    plan.target = TokenRequest{partition.target_patches(), !partition.cls_in_source};
  }
  return plan;
}

std::vector<double> prediction_weights(const PredictionQuery& query, const WeightMatrix& weights)
{
  std::vector<double> w;
  w.reserve(query.output_count());
  if (query.predict_cls) {
    w.push_back(WeightMatrix::cls_weight);
  }
  for (int t : query.targets) {
    w.push_back(weights[t]);
  }
  return w;
}

template <typename T>
double batch_loss(Encoder<T>& source, const Encoder<T>& target, Predictor<T>& predictor,
                  std::span<const NormalizedImage> batch, std::span<const SamplePlan> plans, const TrainConfig& config,
                  const WeightMatrix& weights, bool accumulate_grads)
{
  const std::size_t B = batch.size();
  if (B == 0 || plans.size() != B) {
    throw std::invalid_argument("batch_loss: need one plan per image and a non-empty batch");
  }
  std::vector<const NormalizedImage*> images;
  std::vector<TokenRequest> source_req, target_req;
  std::vector<PredictionQuery> queries;
  for (std::size_t s = 0; s < B; ++s) {
    images.push_back(&batch[s]);
    source_req.push_back(plans[s].source);
    target_req.push_back(plans[s].target);
    queries.push_back(plans[s].query);
  }

  const auto source_tokens = pack_tokens<T>(images, source_req, config.grid());
  typename Encoder<T>::Cache encoder_cache;
  const Mat<T> source_latents = source.forward(source_tokens, accumulate_grads ? &encoder_cache : nullptr);

  const auto target_tokens = pack_tokens<T>(images, target_req, config.grid());
  const Mat<T> reference_all = target.forward(target_tokens);

  typename Predictor<T>::Cache predictor_cache;
  const Mat<T> predicted = predictor.forward(source_latents, source_tokens.pos_row, source_tokens.segments, queries,
                                             accumulate_grads ? &predictor_cache : nullptr);

  Mat<T> dpredicted(predicted.rows(), predicted.cols());
  double total = 0.0;
  int offset = 0;
  for (std::size_t s = 0; s < B; ++s) {
    const auto& q = queries[s];
    const int n = q.output_count();
    const int base = target_tokens.segments[s];
    Mat<T> reference(n, predicted.cols());
    if (config.target_full_context) {
      // Full-image teacher output is [CLS, patch 0, ..., patch N-1].
      int row = 0;
      if (q.predict_cls) reference.row(row++) = reference_all.row(base);
      for (int t : q.targets) reference.row(row++) = reference_all.row(base + 1 + t);
    } else {
      if (target_tokens.segments[s + 1] - base != n) {
        throw std::logic_error("batch_loss: teacher and predictor token counts differ");
      }
      reference = reference_all.middleRows(base, n);
    }
    const Mat<T> pred = predicted.middleRows(offset, n);
    const auto w = prediction_weights(q, weights);
    Mat<T> grad;
    const double loss = jepa_loss<T>(pred, reference, w, config.loss, accumulate_grads ? &grad : nullptr);
    total += loss / static_cast<double>(B);
    if (accumulate_grads) {
      dpredicted.middleRows(offset, n) = grad / static_cast<T>(B);
    }
    offset += n;
  }

  if (accumulate_grads) {
    const Mat<T> dsource = predictor.backward(dpredicted, predictor_cache);
    source.backward(dsource, encoder_cache);
  }
  return total;
}

template double batch_loss<float>(Encoder<float>&, const Encoder<float>&, Predictor<float>&,
                                  std::span<const NormalizedImage>, std::span<const SamplePlan>, const TrainConfig&,
                                  const WeightMatrix&, bool);
template double batch_loss<double>(Encoder<double>&, const Encoder<double>&, Predictor<double>&,
                                   std::span<const NormalizedImage>, std::span<const SamplePlan>, const TrainConfig&,
                                   const WeightMatrix&, bool);

namespace {

std::int64_t warmup_for(const TrainConfig& c, std::int64_t total)
{
  return c.warmup_steps >= 0 ? c.warmup_steps : total / 10;
}

std::string divergence_report(const TrainState& state, std::span<const SamplePlan> plans,
                              std::span<const std::size_t> ids, const std::string& what)
{
  std::string report = fmt::format("training diverged at step {} (seed {}): {}\n  batch ids: [{}]\n", state.step,
                                   state.config.seed, what, fmt::join(ids, ", "));
  for (std::size_t s = 0; s < plans.size(); ++s) {
    const auto& p = plans[s].partition;
    report += fmt::format("  sample {}: {} source=[{}] cls_in_source={} dropped={}\n", s, to_string(p.mask.origin),
                          fmt::join(p.mask.source, ","), p.cls_in_source, p.dropped_patch ? *p.dropped_patch : -1);
  }
  return report;
}

} // namespace

StepMetrics train_step(TrainState& state, std::span<const NormalizedImage> batch, std::span<const std::size_t> batch_ids)
{
  const TrainConfig& cfg = state.config;
  std::vector<SamplePlan> plans;
  plans.reserve(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    MaskPair mask = sample_mask(cfg.grid(), cfg.strategy, state.rng);
    plans.push_back(plan_sample(assign_cls(std::move(mask), cfg.cls, cfg.grid(), state.rng), cfg.grid(),
                                cfg.target_full_context));
  }

  auto params = state.trainable();
  zero_grads(params);
  StepMetrics m;
  try {
    m.loss = batch_loss<float>(state.source, state.target, state.predictor, batch, plans, cfg, state.weights, true);
  } catch (const std::invalid_argument& e) {
    throw TrainingError(divergence_report(state, plans, batch_ids, e.what()));
  }
  m.grad_norm = grad_norm(params);
  if (!std::isfinite(m.loss) || !std::isfinite(m.grad_norm)) {
    throw TrainingError(divergence_report(state, plans, batch_ids, fmt::format("loss {} grad norm {}", m.loss, m.grad_norm)));
  }

  if (state.total_steps > 0) {
    m.learning_rate = learning_rate_at(state.step, state.total_steps, warmup_for(cfg, state.total_steps), cfg.learning_rate);
    m.momentum = momentum_at(state.step, state.total_steps, cfg.ema_start, cfg.ema_end);
  } else {
    m.learning_rate = cfg.learning_rate;
    m.momentum = cfg.ema_start;
  }
  state.optimizer.step(params, m.learning_rate);
  ema_update(state.target, state.source, m.momentum);
  ++state.step;
  return m;
}

// ---------------------------------------------------------------- loop

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng)
{
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_int(i)]);
  }
  return order;
}

LoopResult train_loop(TrainState& state, const Dataset& data, const LoopOptions& options)
{
  namespace fs = std::filesystem;
  const TrainConfig& cfg = state.config;
  if (data.size() == 0) {
    throw std::invalid_argument("train_loop: empty dataset");
  }
  const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>((data.size() + B - 1) / B);
  if (state.total_steps == 0) {
    state.total_steps = steps_per_epoch * cfg.epochs;
  }
  if (!options.checkpoint_dir.empty()) {
    fs::create_directories(options.checkpoint_dir);
  }
  const auto save = [&] {
    if (options.checkpoint_dir.empty()) return;
    const auto latest = (fs::path(options.checkpoint_dir) / "latest.mefe").string();
    save_checkpoint(state, latest);
    for (int e : options.keep_epochs) {
      if (e == state.epoch) {
        save_checkpoint(state, (fs::path(options.checkpoint_dir) / fmt::format("epoch_{:04d}.mefe", e)).string());
      }
    }
  };

  // The metrics log is rewritten atomically after every epoch.
  std::string metrics;
  if (!options.metrics_csv.empty()) {
    if (fs::exists(options.metrics_csv)) metrics = read_file(options.metrics_csv);
    if (metrics.empty()) metrics = "step,loss,grad_norm,momentum,wall_ms\n";
  }
  const auto flush_metrics = [&] {
    if (!options.metrics_csv.empty()) write_file_atomic(options.metrics_csv, metrics);
  };

  LoopResult result;
  if (state.epoch >= cfg.epochs) {
    save();
    return result;
  }
  for (; state.epoch < cfg.epochs;) {
    const auto order = epoch_order(data.size(), state.rng);
    double epoch_sum = 0.0;
    int epoch_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t end = std::min(order.size(), start + B);
      std::vector<NormalizedImage> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(NormalizedImage::normalize(data.image(order[i])));
      }
      const auto t0 = std::chrono::steady_clock::now();
      const std::int64_t step = state.step;
      const StepMetrics m = train_step(state, batch, std::span(order).subspan(start, end - start));
      const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      result.step_losses.push_back(m.loss);
      epoch_sum += m.loss;
      ++epoch_steps;
      if (!options.metrics_csv.empty()) {
        metrics += fmt::format("{},{:.9g},{:.9g},{:.9g},{:.3f}\n", step, m.loss, m.grad_norm, m.momentum, wall_ms);
      }
      if (options.on_step) options.on_step(step, m);
    }
    result.epoch_mean_losses.push_back(epoch_sum / epoch_steps);
    ++state.epoch;
    flush_metrics();
    save();
  }
  return result;
}

// ---------------------------------------------------------------- features

EncodedImage encode_full(const Encoder<float>& encoder, const NormalizedImage& image)
{
  const GridSpec& grid = encoder.config().grid;
  TokenRequest req;
  req.include_cls = true;
  req.patches.resize(grid.num_patches());
  std::iota(req.patches.begin(), req.patches.end(), 0);
  const Mat<float> out = encoder.encode(image, req);
  EncodedImage e;
  e.cls.assign(out.row(0).data(), out.row(0).data() + out.cols());
  e.patches = out.bottomRows(grid.num_patches());
  return e;
}

RepresentationStats representation_stats(const FeatureFn& features, const Dataset& data, std::size_t n)
{
  n = std::min(n, data.size());
  if (n < 2) {
    throw std::invalid_argument("representation_stats: need at least 2 samples");
  }
  RepresentationStats st;
  std::vector<std::vector<double>> cls_rows, patch_rows;
  for (std::size_t i = 0; i < n; ++i) {
    const EncodedImage e = features(NormalizedImage::normalize(data.image(i)));
    cls_rows.emplace_back(e.cls.begin(), e.cls.end());
    const Eigen::RowVectorXd pooled = e.patches.cast<double>().colwise().mean();
    patch_rows.emplace_back(pooled.data(), pooled.data() + pooled.size());
  }
  const auto moments = [n](const std::vector<std::vector<double>>& rows, std::vector<double>& mean,
                           std::vector<double>& stddev) {
    const std::size_t d = rows.front().size();
    mean.assign(d, 0.0);
    stddev.assign(d, 0.0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (double& m : mean) m /= static_cast<double>(n);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < d; ++j) stddev[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
    for (double& v : stddev) v = std::sqrt(v / static_cast<double>(n));
  };
  moments(cls_rows, st.cls_mean, st.cls_std);
  moments(patch_rows, st.patch_mean, st.patch_std);
  const auto avg = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  st.collapse_indicator = 0.5 * (avg(st.cls_std) + avg(st.patch_std));
  return st;
}

RepresentationStats representation_stats(const Encoder<float>& encoder, const Dataset& data, std::size_t n)
{
  return representation_stats([&](const NormalizedImage& img) { return encode_full(encoder, img); }, data, n);
}

} // namespace mefem
