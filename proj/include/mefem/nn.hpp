// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Minimal transformer building blocks with hand-written backward passes.
//
// Tokens of several samples are packed row-wise into one matrix; `Segments`
// holds the row offsets so attention only mixes tokens of the same sample.
// Layers are templated on the scalar type: training runs in float, gradient
// checks in double. Forward passes that will be differentiated fill a cache;
// `backward` consumes it and accumulates into each Param's `grad`.

#pragma once

#include "mefem/rng.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace mefem::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
  bool trainable = true;
  bool decay = false; // receives decoupled weight decay

  void resize(int rows, int cols)
  {
    value = Mat<T>::Zero(rows, cols);
    grad = Mat<T>::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

template <typename T>
using ParamRefs = std::vector<Param<T>*>;

template <typename T>
using ConstParamRefs = std::vector<const Param<T>*>;

/// Row offsets of packed samples: sample s owns rows [seg[s], seg[s+1]).
using Segments = std::vector<int>;

/// Normal(0, std) truncated at two standard deviations.
template <typename T>
void trunc_normal_fill(Mat<T>& m, double std, Rng& rng);

template <typename T>
class Linear {
public:
  Linear() = default;
  Linear(const std::string& name, int in, int out);

  void init(Rng& rng, double std = 0.02);
  Mat<T> forward(const Mat<T>& x) const;
  /// Accumulates weight/bias gradients; returns d loss / d x.
  Mat<T> backward(const Mat<T>& x, const Mat<T>& dy);
  /// Accumulates weight/bias gradients only.
  void accumulate_grads(const Mat<T>& x, const Mat<T>& dy);
  void collect(ParamRefs<T>& out);
  void collect(ConstParamRefs<T>& out) const;

  int in_features() const { return static_cast<int>(weight.value.rows()); }
  int out_features() const { return static_cast<int>(weight.value.cols()); }

  Param<T> weight; // in x out
  Param<T> bias;   // 1 x out
};

template <typename T>
class LayerNorm {
public:
  struct Cache {
    Mat<T> normalized;
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim);

  Mat<T> forward(const Mat<T>& x, Cache* cache) const;
  Mat<T> backward(const Mat<T>& dy, const Cache& cache);
  void collect(ParamRefs<T>& out);
  void collect(ConstParamRefs<T>& out) const;

  static constexpr double eps = 1e-6;
  Param<T> gamma;
  Param<T> beta;
};

template <typename T>
class Attention {
public:
  struct Cache {
    Mat<T> input;
    Mat<T> qkv;
    std::vector<Mat<T>> probs; // per (segment, head)
    Mat<T> context;
  };

  Attention() = default;
  Attention(const std::string& name, int dim, int heads);

  void init(Rng& rng);
  Mat<T> forward(const Mat<T>& x, const Segments& seg, Cache* cache) const;
  Mat<T> backward(const Mat<T>& dy, const Segments& seg, const Cache& cache);
  void collect(ParamRefs<T>& out);
  void collect(ConstParamRefs<T>& out) const;

  int heads = 1;
  Linear<T> qkv;
  Linear<T> proj;
};

template <typename T>
class Mlp {
public:
  struct Cache {
    Mat<T> input;
    Mat<T> pre_activation;
    Mat<T> activation;
  };

  Mlp() = default;
  Mlp(const std::string& name, int dim, int hidden);

  void init(Rng& rng);
  Mat<T> forward(const Mat<T>& x, Cache* cache) const;
  Mat<T> backward(const Mat<T>& dy, const Cache& cache);
  void collect(ParamRefs<T>& out);
  void collect(ConstParamRefs<T>& out) const;

  Linear<T> fc1;
  Linear<T> fc2;
};

/// Pre-norm residual block: x + attn(ln1(x)), then + mlp(ln2(.)).
template <typename T>
class Block {
public:
  struct Cache {
    typename LayerNorm<T>::Cache ln1;
    typename Attention<T>::Cache attn;
    typename LayerNorm<T>::Cache ln2;
    typename Mlp<T>::Cache mlp;
  };

  Block() = default;
  Block(const std::string& name, int dim, int heads, double mlp_ratio);

  void init(Rng& rng);
  Mat<T> forward(const Mat<T>& x, const Segments& seg, Cache* cache) const;
  Mat<T> backward(const Mat<T>& dy, const Segments& seg, const Cache& cache);
  void collect(ParamRefs<T>& out);
  void collect(ConstParamRefs<T>& out) const;

  LayerNorm<T> ln1;
  Attention<T> attn;
  LayerNorm<T> ln2;
  Mlp<T> mlp;
};

/// Stack of blocks followed by a final LayerNorm.
template <typename T>
class Transformer {
public:
  struct Cache {
    std::vector<typename Block<T>::Cache> blocks;
    typename LayerNorm<T>::Cache norm;
  };

  Transformer() = default;
  Transformer(const std::string& name, int dim, int depth, int heads, double mlp_ratio);

  void init(Rng& rng);
  Mat<T> forward(const Mat<T>& x, const Segments& seg, Cache* cache) const;
  Mat<T> backward(const Mat<T>& dy, const Segments& seg, const Cache& cache);
  void collect(ParamRefs<T>& out);
  void collect(ConstParamRefs<T>& out) const;

  std::vector<Block<T>> blocks;
  LayerNorm<T> norm;
};

template <typename T>
T gelu(T x);
template <typename T>
T gelu_grad(T x);

/// Row-wise softmax, numerically stabilized.
template <typename T>
void softmax_rows(Mat<T>& m);

} // namespace mefem::nn
