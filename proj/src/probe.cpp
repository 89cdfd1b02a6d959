// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/probe.hpp"

#include "mefem/io.hpp"
#include "mefem/optim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace mefem {

using nn::Mat;
using nn::RowVec;

std::string to_string(FeatureMode m)
{
  switch (m) {
  case FeatureMode::patches: return "patches";
  case FeatureMode::cls: return "cls";
  case FeatureMode::patches_plus_cls: return "patches_plus_cls";
  }
  return "?";
}

std::string to_string(HeadKind h)
{
  return h == HeadKind::mlp ? "mlp" : "attentive_pooler";
}

FeatureMode parse_feature_mode(const std::string& s)
{
  if (s == "patches") return FeatureMode::patches;
  if (s == "cls") return FeatureMode::cls;
  if (s == "patches_plus_cls" || s == "patches+cls") return FeatureMode::patches_plus_cls;
  throw std::invalid_argument(fmt::format("unknown feature mode '{}'", s));
}

HeadKind parse_head_kind(const std::string& s)
{
  if (s == "attentive_pooler" || s == "pooler") return HeadKind::attentive_pooler;
  if (s == "mlp") return HeadKind::mlp;
  throw std::invalid_argument(fmt::format("unknown probe head '{}'", s));
}

void ProbeConfig::validate() const
{
  const bool cls_mode = features == FeatureMode::cls;
  if (cls_mode && head != HeadKind::mlp) {
    throw std::invalid_argument("probe: cls features pair with the mlp head");
  }
  if (!cls_mode && head != HeadKind::attentive_pooler) {
    throw std::invalid_argument(fmt::format("probe: {} features pair with the attentive_pooler head", to_string(features)));
  }
  if (hidden_dim <= 0) throw std::invalid_argument("probe: hidden_dim must be positive");
  if (pooler_heads <= 0) throw std::invalid_argument("probe: pooler_heads must be positive");
  if (task == TaskKind::classification && num_classes < 2) {
    throw std::invalid_argument("probe: classification needs at least 2 classes");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("probe: train_fraction must lie in (0, 1)");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("probe: val_fraction must lie in [0, 1)");
  }
  if (epochs < 1 || patience < 1 || batch_size < 1) {
    throw std::invalid_argument("probe: epochs, patience and batch_size must be positive");
  }
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
    throw std::invalid_argument("probe: learning_rate must be positive and weight_decay non-negative");
  }
}

std::string ProbeConfig::to_text() const
{
  return fmt::format("features={}\nhead={}\nhidden_dim={}\npooler_heads={}\ntask={}\nnum_classes={}\n"
                     "train_fraction={:.17g}\nval_fraction={:.17g}\nseed={}\nepochs={}\npatience={}\n"
                     "batch_size={}\nlr={:.17g}\nweight_decay={:.17g}\n",
                     to_string(features), to_string(head), hidden_dim, pooler_heads,
                     task == TaskKind::regression ? "regression" : "classification", num_classes, train_fraction,
                     val_fraction, seed, epochs, patience, batch_size, learning_rate, weight_decay);
}

namespace {

std::string opt_text(const std::optional<double>& v)
{
  return v ? fmt::format("{:.9g}", *v) : std::string("undefined");
}

} // namespace

std::string ProbeReport::to_text() const
{
  return fmt::format("r_squared: {}\nmae: {}\naccuracy: {}\nn_train: {}\nn_val: {}\nn_test: {}\nepochs_run: {}\n",
                     opt_text(r_squared), opt_text(mae), opt_text(accuracy), n_train, n_val, n_test, epochs_run);
}

std::optional<double> r_squared(const std::vector<double>& truth, const std::vector<double>& pred)
{
  if (truth.size() != pred.size() || truth.empty()) {
    throw std::invalid_argument("r_squared: size mismatch or empty input");
  }
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

double mean_absolute_error(const std::vector<double>& truth, const std::vector<double>& pred)
{
  if (truth.size() != pred.size() || truth.empty()) {
    throw std::invalid_argument("mean_absolute_error: size mismatch or empty input");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(pred[i] - truth[i]);
  return s / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Attentive pooler
//
// With a single query the per-head logits are X (Wk_h q_h^T) / sqrt(dh): the
// key projection folds into one d-vector and the value projection is applied
// after mixing, so the cost is linear in the token count.

template <typename T>
AttentivePooler<T>::AttentivePooler(int dim, int heads_, int outputs, Rng& rng)
    : heads(heads_), key("pool.key", dim, dim), value("pool.value", dim, dim), head("pool.head", dim, outputs)
{
  if (dim <= 0 || heads_ <= 0 || dim % heads_ != 0 || outputs <= 0) {
    throw std::invalid_argument(fmt::format("attentive pooler: dim {} must be a positive multiple of heads {}", dim, heads_));
  }
  query.name = "pool.query";
  query.resize(1, dim);
  nn::trunc_normal_fill(query.value, 0.02, rng);
  const double fan_in = 1.0 / std::sqrt(static_cast<double>(dim));
  key.init(rng, fan_in);
  value.init(rng, fan_in);
  head.init(rng, fan_in);
}

template <typename T>
RowVec<T> AttentivePooler<T>::pool(const Mat<T>& tokens, Cache* cache) const
{
  const int d = dim();
  if (tokens.rows() < 1) throw std::invalid_argument("attentive pooler: no tokens");
  if (tokens.cols() != d) {
    throw std::invalid_argument(fmt::format("attentive pooler: token width {} != {}", tokens.cols(), d));
  }
  const int dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  RowVec<T> pooled(d);
  if (cache) {
    cache->attention.assign(heads, {});
    cache->mixed.assign(heads, {});
  }
  for (int h = 0; h < heads; ++h) {
    const auto wk = key.weight.value.middleCols(h * dh, dh);
    const Eigen::Matrix<T, Eigen::Dynamic, 1> u = wk * query.value.middleCols(h * dh, dh).transpose();
    Eigen::Matrix<T, Eigen::Dynamic, 1> a = (tokens * u) * scale;
    a = (a.array() - a.maxCoeff()).exp();
    a /= a.sum();
    const RowVec<T> mixed = a.transpose() * tokens;
    pooled.middleCols(h * dh, dh) =
        mixed * value.weight.value.middleCols(h * dh, dh) + value.bias.value.middleCols(h * dh, dh);
    if (cache) {
      cache->attention[h] = std::move(a);
      cache->mixed[h] = mixed;
    }
  }
  if (cache) cache->pooled = pooled;
  return pooled;
}

template <typename T>
RowVec<T> AttentivePooler<T>::forward(const Mat<T>& tokens, Cache* cache) const
{
  const Mat<T> pooled = pool(tokens, cache);
  return head.forward(pooled);
}

template <typename T>
void AttentivePooler<T>::backward(const Mat<T>& tokens, const RowVec<T>& doutput, const Cache& cache)
{
  const int d = dim();
  const int dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const Mat<T> dpooled = head.backward(Mat<T>(cache.pooled), Mat<T>(doutput));
  for (int h = 0; h < heads; ++h) {
    const RowVec<T> dp = dpooled.middleCols(h * dh, dh);
    value.weight.grad.middleCols(h * dh, dh) += cache.mixed[h].transpose() * dp;
    value.bias.grad.middleCols(h * dh, dh) += dp;
    const RowVec<T> dmixed = dp * value.weight.value.middleCols(h * dh, dh).transpose();
    const auto& a = cache.attention[h];
    const Eigen::Matrix<T, Eigen::Dynamic, 1> da = tokens * dmixed.transpose();
    const Eigen::Matrix<T, Eigen::Dynamic, 1> dlogit = a.cwiseProduct((da.array() - a.dot(da)).matrix());
    const Eigen::Matrix<T, Eigen::Dynamic, 1> du = scale * (tokens.transpose() * dlogit);
    const auto q = query.value.middleCols(h * dh, dh);
    key.weight.grad.middleCols(h * dh, dh) += du * q;
    query.grad.middleCols(h * dh, dh) += du.transpose() * key.weight.value.middleCols(h * dh, dh);
  }
}

template <typename T>
nn::ParamRefs<T> AttentivePooler<T>::parameters()
{
  nn::ParamRefs<T> out{&query};
  key.collect(out);
  value.collect(out);
  head.collect(out);
  return out;
}

// ---------------------------------------------------------------------------
// Perceptron

template <typename T>
MlpHead<T>::MlpHead(int dim, int hidden, int outputs, Rng& rng)
    : fc1("mlp.fc1", dim, hidden), fc2("mlp.fc2", hidden, outputs)
{
  if (dim <= 0 || hidden <= 0 || outputs <= 0) throw std::invalid_argument("mlp head: sizes must be positive");
  fc1.init(rng);
  fc2.init(rng);
}

template <typename T>
Mat<T> MlpHead<T>::forward(const Mat<T>& x, Cache* cache) const
{
  if (x.cols() != fc1.in_features()) {
    throw std::invalid_argument(fmt::format("mlp head: input width {} != {}", x.cols(), fc1.in_features()));
  }
  Mat<T> pre = fc1.forward(x);
  Mat<T> act = pre.unaryExpr([](T v) { return nn::gelu(v); });
  Mat<T> y = fc2.forward(act);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return y;
}

template <typename T>
void MlpHead<T>::backward(const Mat<T>& dy, const Cache& cache)
{
  const Mat<T> dact = fc2.backward(cache.act, dy);
  const Mat<T> dpre = dact.cwiseProduct(cache.pre.unaryExpr([](T v) { return nn::gelu_grad(v); }));
  fc1.accumulate_grads(cache.input, dpre);
}

template <typename T>
nn::ParamRefs<T> MlpHead<T>::parameters()
{
  nn::ParamRefs<T> out;
  fc1.collect(out);
  fc2.collect(out);
  return out;
}

template class AttentivePooler<float>;
template class AttentivePooler<double>;
template class MlpHead<float>;
template class MlpHead<double>;

// ---------------------------------------------------------------------------
// Features

Mat<float> select_features(const Mat<float>& full, FeatureMode mode)
{
  switch (mode) {
  case FeatureMode::cls: return full.topRows(1);
  case FeatureMode::patches: return full.bottomRows(full.rows() - 1);
  case FeatureMode::patches_plus_cls: return full;
  }
  return full;
}

ProbeData extract_probe_features(const Encoder<float>& encoder, const Dataset& data, const std::vector<double>& labels,
                                 FeatureMode mode, int batch, int workers)
{
  if (labels.size() != data.size()) {
    throw std::invalid_argument(fmt::format("probe features: {} labels for {} images", labels.size(), data.size()));
  }
  batch = std::max(batch, 1);
  workers = std::max(workers, 1);
  const GridSpec& grid = encoder.config().grid;
  TokenRequest full;
  full.include_cls = true;
  full.patches.resize(grid.num_patches());
  std::iota(full.patches.begin(), full.patches.end(), 0);

  ProbeData out;
  out.labels = labels;
  out.tokens.resize(data.size());
  const std::size_t n_batches = (data.size() + batch - 1) / batch;

  const auto run = [&](std::size_t worker) {
    for (std::size_t b = worker; b < n_batches; b += workers) {
      const std::size_t lo = b * batch, hi = std::min(data.size(), lo + batch);
      std::vector<NormalizedImage> images;
      images.reserve(hi - lo);
      for (std::size_t i = lo; i < hi; ++i) images.push_back(NormalizedImage::normalize(data.image(i)));
      std::vector<const NormalizedImage*> ptrs;
      for (const auto& im : images) ptrs.push_back(&im);
      const std::vector<TokenRequest> reqs(images.size(), full);
      const PackedTokens<float> packed = pack_tokens<float>(ptrs, reqs, grid);
      const Mat<float> latents = encoder.forward(packed);
      for (std::size_t i = lo; i < hi; ++i) {
        const int s = static_cast<int>(i - lo);
        const int r0 = packed.segments[s], r1 = packed.segments[s + 1];
        out.tokens[i] = select_features(latents.middleRows(r0, r1 - r0), mode);
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, static_cast<std::size_t>(w));
  }
  return out;
}

ProbeSplit split_indices(std::size_t n, const ProbeConfig& config)
{
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);

  const auto n_train_all = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n_train_all)));
  ProbeSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train_all - n_val));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train_all - n_val),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train_all));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train_all), order.end());
  return split;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct Targets {
  bool regression = true;
  std::vector<double> value; // standardized regression target or class index
};

// Mean loss over `rows`; accumulates gradients when `grad` is set.
template <typename Head>
double head_loss(Head& head, const ProbeData& data, const Targets& targets, std::span<const std::size_t> rows,
                 bool grad, std::vector<double>* outputs = nullptr)
{
  const double inv = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;

  const auto score = [&](const RowVec<float>& out, std::size_t i, RowVec<float>& dout) {
    if (targets.regression) {
      const double diff = static_cast<double>(out(0)) - targets.value[i];
      dout = RowVec<float>::Constant(1, static_cast<float>(diff * inv));
      if (outputs) outputs->push_back(out(0));
      return 0.5 * diff * diff;
    }
    const Eigen::RowVectorXd logits = out.cast<double>();
    const double mx = logits.maxCoeff();
    Eigen::RowVectorXd p = (logits.array() - mx).exp();
    p /= p.sum();
    const auto cls = static_cast<Eigen::Index>(targets.value[i]);
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);
    if (outputs) outputs->push_back(static_cast<double>(arg));
    Eigen::RowVectorXd d = p;
    d(cls) -= 1.0;
    dout = (d * inv).cast<float>();
    return -std::log(std::max(p(cls), 1e-300));
  };

  if constexpr (std::is_same_v<Head, MlpHead<float>>) {
    Mat<float> x(rows.size(), head.fc1.in_features());
    for (std::size_t r = 0; r < rows.size(); ++r) x.row(r) = data.tokens[rows[r]].row(0);
    typename MlpHead<float>::Cache cache;
    const Mat<float> y = head.forward(x, grad ? &cache : nullptr);
    Mat<float> dy(y.rows(), y.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      RowVec<float> d;
      loss += score(y.row(r), rows[r], d);
      dy.row(r) = d;
    }
    if (grad) head.backward(dy, cache);
  } else {
    typename AttentivePooler<float>::Cache cache;
    for (const std::size_t i : rows) {
      const RowVec<float> y = head.forward(data.tokens[i], grad ? &cache : nullptr);
      RowVec<float> d;
      loss += score(y, i, d);
      if (grad) head.backward(data.tokens[i], d, cache);
    }
  }
  return loss * inv;
}

template <typename Head>
void train_head(Head& head, const ProbeData& data, const Targets& targets, const ProbeSplit& split,
                const ProbeConfig& cfg, int& epochs_run)
{
  auto params = head.parameters();
  AdamW<float> opt(params, AdamWConfig{0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng rng(cfg.seed ^ 0x5bd1e995ULL);
  const std::span<const std::size_t> monitor = split.val.empty() ? std::span<const std::size_t>(split.train)
                                                                 : std::span<const std::size_t>(split.val);
  Head best = head;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> order = split.train;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      zero_grads(params);
      head_loss(head, data, targets, std::span<const std::size_t>(order).subspan(lo, hi - lo), true);
      opt.step(params, cfg.learning_rate);
    }
    epochs_run = epoch + 1;
    const double val = head_loss(head, data, targets, monitor, false);
    if (val < best_loss) {
      best_loss = val;
      best = head;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  head = std::move(best);
}

} // namespace

FittedProbe fit_probe(const ProbeData& data, const ProbeConfig& config)
{
  config.validate();
  const std::size_t n = data.tokens.size();
  if (data.labels.size() != n) {
    throw std::invalid_argument(fmt::format("fit_probe: {} labels for {} samples", data.labels.size(), n));
  }
  if (n == 0) throw std::invalid_argument("fit_probe: no samples");
  const auto dim = data.tokens.front().cols();
  for (const auto& t : data.tokens) {
    if (t.rows() < 1 || t.cols() != dim) throw std::invalid_argument("fit_probe: inconsistent feature shapes");
    if (config.head == HeadKind::mlp && t.rows() != 1) {
      throw std::invalid_argument("fit_probe: mlp head expects one feature row per sample");
    }
  }

  FittedProbe fit;
  fit.split = split_indices(n, config);
  if (fit.split.train.empty() || fit.split.test.empty()) {
    throw std::invalid_argument(fmt::format("fit_probe: {} samples are too few to split", n));
  }

  Targets targets;
  targets.regression = config.task == TaskKind::regression;
  targets.value = data.labels;
  if (targets.regression) {
    double mean = 0.0, sq = 0.0;
    for (const auto i : fit.split.train) mean += data.labels[i];
    mean /= static_cast<double>(fit.split.train.size());
    for (const auto i : fit.split.train) sq += (data.labels[i] - mean) * (data.labels[i] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(fit.split.train.size()));
    fit.label_mean = mean;
    fit.label_scale = sd > 0.0 ? sd : 1.0;
    for (auto& v : targets.value) v = (v - fit.label_mean) / fit.label_scale;
  } else {
    for (const double v : data.labels) {
      if (v != std::floor(v) || v < 0 || v >= config.num_classes) {
        throw std::invalid_argument(fmt::format("fit_probe: class label {} outside [0, {})", v, config.num_classes));
      }
    }
  }

  const int outputs = targets.regression ? 1 : config.num_classes;
  Rng init(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> out;
  const auto finish = [&](auto& head) {
    train_head(head, data, targets, fit.split, config, fit.report.epochs_run);
    head_loss(head, data, targets, fit.split.test, false, &out);
    fit.head = head;
  };
  if (config.head == HeadKind::mlp) {
    MlpHead<float> head(static_cast<int>(dim), config.hidden_dim, outputs, init);
    finish(head);
  } else {
    AttentivePooler<float> head(static_cast<int>(dim), config.pooler_heads, outputs, init);
    finish(head);
  }

  std::vector<double> truth;
  for (const auto i : fit.split.test) truth.push_back(data.labels[i]);
  fit.report.n_train = fit.split.train.size();
  fit.report.n_val = fit.split.val.size();
  fit.report.n_test = fit.split.test.size();
  if (targets.regression) {
    for (auto& v : out) v = v * fit.label_scale + fit.label_mean;
    fit.report.r_squared = r_squared(truth, out);
    fit.report.mae = mean_absolute_error(truth, out);
  } else {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += out[i] == truth[i];
    fit.report.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
  }
  fit.test_predictions = std::move(out);
  return fit;
}

void append_report_csv(const std::string& path, const std::string& config_hash, const ProbeConfig& config,
                       const ProbeReport& report)
{
  std::string text;
  if (std::filesystem::exists(path)) text = read_file(path);
  if (text.empty()) text = "config_hash,features,head,seed,r_squared,mae,accuracy,n_train,n_val,n_test,epochs_run\n";
  const auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.9g}", *v) : std::string(); };
  text += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", config_hash, to_string(config.features),
                      to_string(config.head), config.seed, cell(report.r_squared), cell(report.mae),
                      cell(report.accuracy), report.n_train, report.n_val, report.n_test, report.epochs_run);
  write_file_atomic(path, text);
}

} // namespace mefem
