// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/nn.hpp"

#include <unsupported/Eigen/SpecialFunctions>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mefem::nn {

template <typename T>
void trunc_normal_fill(Mat<T>& m, double std, Rng& rng)
{
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v = 0.0;
    do {
      v = rng.normal();
    } while (v < -2.0 || v > 2.0);
    m.data()[i] = static_cast<T>(v * std);
  }
}

template <typename T>
T gelu(T x)
{
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_grad(T x)
{
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
  return cdf + x * pdf;
}

template <typename T>
void softmax_rows(Mat<T>& m)
{
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r).array();
    row = (row - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(const std::string& name, int in, int out)
{
  weight.name = name + ".weight";
  weight.resize(in, out);
  weight.decay = true;
  bias.name = name + ".bias";
  bias.resize(1, out);
}

template <typename T>
void Linear<T>::init(Rng& rng, double std)
{
  trunc_normal_fill(weight.value, std, rng);
  bias.value.setZero();
}

template <typename T>
Mat<T> Linear<T>::forward(const Mat<T>& x) const
{
  if (x.cols() != weight.value.rows()) {
    throw std::invalid_argument(weight.name + ": input width mismatch");
  }
  Mat<T> y(x.rows(), weight.value.cols());
  y.noalias() = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

template <typename T>
void Linear<T>::accumulate_grads(const Mat<T>& x, const Mat<T>& dy)
{
  weight.grad.noalias() += x.transpose() * dy;
  bias.grad += dy.colwise().sum();
}

template <typename T>
Mat<T> Linear<T>::backward(const Mat<T>& x, const Mat<T>& dy)
{
  accumulate_grads(x, dy);
  Mat<T> dx(dy.rows(), weight.value.rows());
  dx.noalias() = dy * weight.value.transpose();
  return dx;
}

template <typename T>
void Linear<T>::collect(ParamRefs<T>& out)
{
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
void Linear<T>::collect(ConstParamRefs<T>& out) const
{
  out.push_back(&weight);
  out.push_back(&bias);
}

// ---------------------------------------------------------------- LayerNorm

template <typename T>
LayerNorm<T>::LayerNorm(const std::string& name, int dim)
{
  gamma.name = name + ".gamma";
  gamma.resize(1, dim);
  gamma.value.setOnes();
  beta.name = name + ".beta";
  beta.resize(1, dim);
}

template <typename T>
Mat<T> LayerNorm<T>::forward(const Mat<T>& x, Cache* cache) const
{
  const Eigen::Index n = x.rows(), d = x.cols();
  Mat<T> xhat(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const T mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean);
    const T var = centered.square().mean();
    inv_std(r) = T(1) / std::sqrt(var + T(eps));
    xhat.row(r) = centered * inv_std(r);
  }
  Mat<T> y = xhat;
  y.array().rowwise() *= gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
Mat<T> LayerNorm<T>::backward(const Mat<T>& dy, const Cache& cache)
{
  const Mat<T>& xhat = cache.normalized;
  gamma.grad += (dy.array() * xhat.array()).matrix().colwise().sum();
  beta.grad += dy.colwise().sum();

  Mat<T> dxhat = dy;
  dxhat.array().rowwise() *= gamma.value.row(0).array();
  Mat<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_d = dxhat.row(r).mean();
    const T mean_dx = (dxhat.row(r).array() * xhat.row(r).array()).mean();
    dx.row(r) = (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx) * cache.inv_std(r);
  }
  return dx;
}

template <typename T>
void LayerNorm<T>::collect(ParamRefs<T>& out)
{
  out.push_back(&gamma);
  out.push_back(&beta);
}

template <typename T>
void LayerNorm<T>::collect(ConstParamRefs<T>& out) const
{
  out.push_back(&gamma);
  out.push_back(&beta);
}

// ---------------------------------------------------------------- Attention

template <typename T>
Attention<T>::Attention(const std::string& name, int dim, int heads_)
    : heads(heads_), qkv(name + ".qkv", dim, 3 * dim), proj(name + ".proj", dim, dim)
{
  if (heads_ < 1 || dim % heads_ != 0) {
    throw std::invalid_argument(name + ": embedding width must be divisible by the head count");
  }
}

template <typename T>
void Attention<T>::init(Rng& rng)
{
  qkv.init(rng);
  proj.init(rng);
}

template <typename T>
Mat<T> Attention<T>::forward(const Mat<T>& x, const Segments& seg, Cache* cache) const
{
  const int dim = proj.in_features();
  const int hd = dim / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  Mat<T> packed = qkv.forward(x);
  Mat<T> context(x.rows(), dim);
  if (cache) {
    cache->input = x;
    cache->probs.clear();
  }
  for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
    const int off = seg[s], n = seg[s + 1] - seg[s];
    for (int h = 0; h < heads; ++h) {
      const auto q = packed.block(off, h * hd, n, hd);
      const auto k = packed.block(off, dim + h * hd, n, hd);
      const auto v = packed.block(off, 2 * dim + h * hd, n, hd);
      Mat<T> scores(n, n);
      scores.noalias() = (q * k.transpose()) * scale;
      softmax_rows(scores);
      context.block(off, h * hd, n, hd).noalias() = scores * v;
      if (cache) {
        cache->probs.push_back(std::move(scores));
      }
    }
  }
  Mat<T> out = proj.forward(context);
  if (cache) {
    cache->qkv = std::move(packed);
    cache->context = std::move(context);
  }
  return out;
}

template <typename T>
Mat<T> Attention<T>::backward(const Mat<T>& dy, const Segments& seg, const Cache& cache)
{
  const int dim = proj.in_features();
  const int hd = dim / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  const Mat<T> dcontext = proj.backward(cache.context, dy);
  Mat<T> dpacked = Mat<T>::Zero(dy.rows(), 3 * dim);
  std::size_t idx = 0;
  for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
    const int off = seg[s], n = seg[s + 1] - seg[s];
    for (int h = 0; h < heads; ++h) {
      const Mat<T>& p = cache.probs[idx++];
      const auto q = cache.qkv.block(off, h * hd, n, hd);
      const auto k = cache.qkv.block(off, dim + h * hd, n, hd);
      const auto v = cache.qkv.block(off, 2 * dim + h * hd, n, hd);
      const auto dout = dcontext.block(off, h * hd, n, hd);

      dpacked.block(off, 2 * dim + h * hd, n, hd).noalias() = p.transpose() * dout;
      Mat<T> dp(n, n);
      dp.noalias() = dout * v.transpose();
      const Eigen::Matrix<T, Eigen::Dynamic, 1> inner = (dp.array() * p.array()).rowwise().sum();
      Mat<T> dscores = p.array() * (dp.array().colwise() - inner.array());
      dscores *= scale;
      dpacked.block(off, h * hd, n, hd).noalias() = dscores * k;
      dpacked.block(off, dim + h * hd, n, hd).noalias() = dscores.transpose() * q;
    }
  }
  return qkv.backward(cache.input, dpacked);
}

template <typename T>
void Attention<T>::collect(ParamRefs<T>& out)
{
  qkv.collect(out);
  proj.collect(out);
}

template <typename T>
void Attention<T>::collect(ConstParamRefs<T>& out) const
{
  qkv.collect(out);
  proj.collect(out);
}

// ---------------------------------------------------------------- Mlp

template <typename T>
Mlp<T>::Mlp(const std::string& name, int dim, int hidden) : fc1(name + ".fc1", dim, hidden), fc2(name + ".fc2", hidden, dim)
{
}

template <typename T>
void Mlp<T>::init(Rng& rng)
{
  fc1.init(rng);
  fc2.init(rng);
}

template <typename T>
Mat<T> Mlp<T>::forward(const Mat<T>& x, Cache* cache) const
{
  Mat<T> pre = fc1.forward(x);
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  Mat<T> act = (T(0.5) * pre.array() * (T(1) + (pre.array() * inv_sqrt2).erf())).matrix();
  Mat<T> out = fc2.forward(act);
  if (cache) {
    cache->input = x;
    cache->pre_activation = std::move(pre);
    cache->activation = std::move(act);
  }
  return out;
}

template <typename T>
Mat<T> Mlp<T>::backward(const Mat<T>& dy, const Cache& cache)
{
  Mat<T> dact = fc2.backward(cache.activation, dy);
  const auto x = cache.pre_activation.array();
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  const T inv_sqrt2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
  dact.array() *= T(0.5) * (T(1) + (x * inv_sqrt2).erf()) + x * (T(-0.5) * x.square()).exp() * inv_sqrt2pi;
  return fc1.backward(cache.input, dact);
}

template <typename T>
void Mlp<T>::collect(ParamRefs<T>& out)
{
  fc1.collect(out);
  fc2.collect(out);
}

template <typename T>
void Mlp<T>::collect(ConstParamRefs<T>& out) const
{
  fc1.collect(out);
  fc2.collect(out);
}

// ---------------------------------------------------------------- Block

template <typename T>
Block<T>::Block(const std::string& name, int dim, int heads, double mlp_ratio)
    : ln1(name + ".ln1", dim), attn(name + ".attn", dim, heads), ln2(name + ".ln2", dim),
      mlp(name + ".mlp", dim, static_cast<int>(std::lround(dim * mlp_ratio)))
{
}

template <typename T>
void Block<T>::init(Rng& rng)
{
  attn.init(rng);
  mlp.init(rng);
}

template <typename T>
Mat<T> Block<T>::forward(const Mat<T>& x, const Segments& seg, Cache* cache) const
{
  Mat<T> h = x + attn.forward(ln1.forward(x, cache ? &cache->ln1 : nullptr), seg, cache ? &cache->attn : nullptr);
  h += mlp.forward(ln2.forward(h, cache ? &cache->ln2 : nullptr), cache ? &cache->mlp : nullptr);
  return h;
}

template <typename T>
Mat<T> Block<T>::backward(const Mat<T>& dy, const Segments& seg, const Cache& cache)
{
  Mat<T> dmid = dy + ln2.backward(mlp.backward(dy, cache.mlp), cache.ln2);
  return dmid + ln1.backward(attn.backward(dmid, seg, cache.attn), cache.ln1);
}

template <typename T>
void Block<T>::collect(ParamRefs<T>& out)
{
  ln1.collect(out);
  attn.collect(out);
  ln2.collect(out);
  mlp.collect(out);
}

template <typename T>
void Block<T>::collect(ConstParamRefs<T>& out) const
{
  ln1.collect(out);
  attn.collect(out);
  ln2.collect(out);
  mlp.collect(out);
}

// ---------------------------------------------------------------- Transformer

template <typename T>
Transformer<T>::Transformer(const std::string& name, int dim, int depth, int heads, double mlp_ratio)
    : norm(name + ".norm", dim)
{
  for (int i = 0; i < depth; ++i) {
    blocks.emplace_back(name + ".blocks." + std::to_string(i), dim, heads, mlp_ratio);
  }
}

template <typename T>
void Transformer<T>::init(Rng& rng)
{
  for (auto& b : blocks) {
    b.init(rng);
  }
}

template <typename T>
Mat<T> Transformer<T>::forward(const Mat<T>& x, const Segments& seg, Cache* cache) const
{
  if (cache) {
    cache->blocks.resize(blocks.size());
  }
  Mat<T> h = x;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h, seg, cache ? &cache->blocks[i] : nullptr);
  }
  return norm.forward(h, cache ? &cache->norm : nullptr);
}

template <typename T>
Mat<T> Transformer<T>::backward(const Mat<T>& dy, const Segments& seg, const Cache& cache)
{
  Mat<T> d = norm.backward(dy, cache.norm);
  for (std::size_t i = blocks.size(); i-- > 0;) {
    d = blocks[i].backward(d, seg, cache.blocks[i]);
  }
  return d;
}

template <typename T>
void Transformer<T>::collect(ParamRefs<T>& out)
{
  for (auto& b : blocks) b.collect(out);
  norm.collect(out);
}

template <typename T>
void Transformer<T>::collect(ConstParamRefs<T>& out) const
{
  for (const auto& b : blocks) b.collect(out);
  norm.collect(out);
}

#define MEFEM_INSTANTIATE(T)                                                                                           \
  template void trunc_normal_fill<T>(Mat<T>&, double, Rng&);                                                         \
  template T gelu<T>(T);                                                                                               \
  template T gelu_grad<T>(T);                                                                                          \
  template void softmax_rows<T>(Mat<T>&);                                                                              \
  template class Linear<T>;                                                                                            \
  template class LayerNorm<T>;                                                                                         \
  template class Attention<T>;                                                                                         \
  template class Mlp<T>;                                                                                               \
  template class Block<T>;                                                                                             \
  template class Transformer<T>;

MEFEM_INSTANTIATE(float)
MEFEM_INSTANTIATE(double)

#undef MEFEM_INSTANTIATE

} // namespace mefem::nn
