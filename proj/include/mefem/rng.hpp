// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Explicit random stream. Every stochastic operation in the library takes one
// of these by reference; there is no global generator.

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace mefem {

class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection keeps it unbiased.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal by Box-Muller. Uses a fresh pair of uniforms each call and
  /// keeps no cached spare, so the stream state is just the engine state.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Derive an independent child stream (used for per-sample/per-worker streams).
  Rng split() { return Rng(engine_() ^ 0x9E3779B97F4A7C15ULL); }

  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
  std::mt19937_64 engine_;
};

} // namespace mefem
