// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mefem/grid.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mefem {

/// Interleaved RGB float image, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels; // height * width * 3, HWC

  static constexpr int channels = 3;

  Image() = default;
  Image(int w, int h, float fill = 0.0f) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Per-channel standardization applied after scaling pixels to [0, 1].
struct PixelNorm {
  std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> stddev{0.25f, 0.25f, 0.25f};
};

/// Standardized square image ready for patch extraction. Only constructible
/// through `normalize` / `from_standardized`, both of which range-check.
class NormalizedImage {
public:
  static NormalizedImage normalize(const Image& image, const PixelNorm& norm = {});
  /// Wrap already-standardized data; rejects values that cannot come from a
  /// [0, 1] image under `norm`.
  static NormalizedImage from_standardized(int size, std::vector<float> data, const PixelNorm& norm = {});

  int size() const { return size_; }
  std::span<const float> data() const { return data_; }
  float at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * size_ + x) * 3 + c]; }

private:
  NormalizedImage(int size, std::vector<float> data) : size_(size), data_(std::move(data)) {}

  int size_ = 0;
  std::vector<float> data_;
};

/// Flattened patch length: patch_size^2 * 3.
inline int patch_dim(const GridSpec& grid) { return grid.patch_size * grid.patch_size * 3; }

/// Copy patch `index` of `image` into `out` (length patch_dim), ordered (y, x, c).
void extract_patch(const NormalizedImage& image, const GridSpec& grid, int index, std::span<float> out);

Image load_image(const std::string& path);
/// Write PNG atomically (temp file + rename).
void save_image_png(const Image& image, const std::string& path);

} // namespace mefem
