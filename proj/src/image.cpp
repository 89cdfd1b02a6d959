// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/image.hpp"

#include "mefem/io.hpp"

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mefem {

NormalizedImage NormalizedImage::normalize(const Image& image, const PixelNorm& norm)
{
  if (image.width != image.height) {
    throw std::invalid_argument(fmt::format("image must be square, got {}x{}", image.width, image.height));
  }
  std::vector<float> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = image.pixels[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw std::invalid_argument(fmt::format("pixel value {} outside [0, 1]", v));
    }
    const int c = static_cast<int>(i % 3);
    out[i] = (v - norm.mean[c]) / norm.stddev[c];
  }
  return NormalizedImage(image.width, std::move(out));
}

NormalizedImage NormalizedImage::from_standardized(int size, std::vector<float> data, const PixelNorm& norm)
{
  if (data.size() != static_cast<std::size_t>(size) * size * 3) {
    throw std::invalid_argument("standardized image: data size does not match geometry");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int c = static_cast<int>(i % 3);
    const float lo = (0.0f - norm.mean[c]) / norm.stddev[c];
    const float hi = (1.0f - norm.mean[c]) / norm.stddev[c];
    const float tol = 1e-5f * (hi - lo);
    if (!std::isfinite(data[i]) || data[i] < lo - tol || data[i] > hi + tol) {
      throw std::invalid_argument(fmt::format("value {} at {} is not a normalized pixel (expected [{}, {}])", data[i], i, lo, hi));
    }
  }
  return NormalizedImage(size, std::move(data));
}

void extract_patch(const NormalizedImage& image, const GridSpec& grid, int index, std::span<float> out)
{
  if (image.size() != grid.image_size()) {
    throw std::invalid_argument(fmt::format("image size {} does not match grid image size {}", image.size(), grid.image_size()));
  }
  if (index < 0 || index >= grid.num_patches()) {
    throw std::out_of_range(fmt::format("patch index {} out of range", index));
  }
  const int p = grid.patch_size;
  const int y0 = grid.row(index) * p, x0 = grid.col(index) * p;
  const auto data = image.data();
  std::size_t k = 0;
  for (int y = 0; y < p; ++y) {
    const std::size_t base = (static_cast<std::size_t>(y0 + y) * image.size() + x0) * 3;
    for (int j = 0; j < p * 3; ++j) {
      out[k++] = data[base + j];
    }
  }
}

Image load_image(const std::string& path)
{
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw std::runtime_error(fmt::format("cannot read image '{}'", path));
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image img(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<unsigned char>(y);
    for (int x = 0; x < rgb.cols * 3; ++x) {
      img.pixels[static_cast<std::size_t>(y) * rgb.cols * 3 + x] = row[x] / 255.0f;
    }
  }
  return img;
}

void save_image_png(const Image& image, const std::string& path)
{
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    auto* row = bgr.ptr<unsigned char>(y);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        row[x * 3 + (2 - c)] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", bgr, buf)) {
    throw std::runtime_error(fmt::format("PNG encoding failed for '{}'", path));
  }
  write_file_atomic(path, std::string(buf.begin(), buf.end()));
}

} // namespace mefem
