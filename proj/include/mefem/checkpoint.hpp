// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container, little-endian throughout:
//
//   "MEFE"                       4 bytes magic
//   u32  format version          (currently 1)
//   u64  n, n bytes              config text (key = value lines)
//   u64  n, n bytes              rng engine state
//   i64  step, i32 epoch, i64 total steps, i64 optimizer steps
//   u32  array count, then per array:
//        u32 n, n bytes name | u8 dtype (1 = f32, 2 = f64) | u32 ndim | u64 dims[ndim] | data
//
// Array names: "source.<param>", "target.<param>", "predictor.<param>",
// "adam.m.<param>", "adam.v.<param>" where <param> is the parameter's own name
// (student-encoder and predictor parameters carry the optimizer moments).

#pragma once

#include "mefem/trainer.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mefem {

inline constexpr char checkpoint_magic[4] = {'M', 'E', 'F', 'E'};
inline constexpr std::uint32_t checkpoint_version = 1;

struct NamedArray {
  std::string name;
  std::uint8_t dtype = 1;
  std::vector<std::uint64_t> shape;
  std::vector<double> values; // widened for inspection
};

struct CheckpointContents {
  std::uint32_t version = 0;
  std::string config_text;
  std::string rng_state;
  std::int64_t step = 0;
  std::int32_t epoch = 0;
  std::int64_t total_steps = 0;
  std::int64_t optimizer_steps = 0;
  std::vector<NamedArray> arrays;
};

std::string serialize_checkpoint(const TrainState& state);
/// Atomic: the previous file at `path` survives any failure.
void save_checkpoint(const TrainState& state, const std::string& path);

CheckpointContents parse_checkpoint(const std::string& bytes);
TrainState load_checkpoint(const std::string& path);

} // namespace mefem
