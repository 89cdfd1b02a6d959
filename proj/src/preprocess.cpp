// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/preprocess.hpp"

#include "mefem/io.hpp"

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mefem {

namespace fs = std::filesystem;

std::string to_string(CropStatus s)
{
  switch (s) {
  case CropStatus::accepted: return "accepted";
  case CropStatus::rejected_boundary: return "rejected_boundary";
  case CropStatus::rejected_resolution: return "rejected_resolution";
  }
  return "?";
}

void validate_bbox(const BBox& b, int image_width, int image_height)
{
  if (b.width <= 0 || b.height <= 0) {
    throw std::invalid_argument(fmt::format("bbox {}x{} must have positive size", b.width, b.height));
  }
  if (b.x < 0 || b.y < 0 || static_cast<long>(b.x) + b.width > image_width ||
      static_cast<long>(b.y) + b.height > image_height) {
    throw std::invalid_argument(fmt::format("bbox ({},{},{},{}) lies outside the {}x{} image", b.x, b.y, b.width,
                                            b.height, image_width, image_height));
  }
}

CropSquare crop_square(const BBox& b)
{
  // Work in half-pixel units so odd sizes stay exact.
  const long m = std::max(b.width, b.height);
  const long cx2 = 2L * b.x + b.width;
  const long cy2 = 2L * b.y + b.height;
  const auto lo = [m](long c2) { return (c2 - 2 * m) >> 1; }; // floor
  const long left = lo(cx2), top = lo(cy2);
  const long right = (cx2 + 2 * m + 1) >> 1, bottom = (cy2 + 2 * m + 1) >> 1; // ceil
  const long side = std::max(right - left, bottom - top);
  return {static_cast<int>(left), static_cast<int>(top), static_cast<int>(side)};
}

Image crop_and_resize(const Image& image, const CropSquare& sq, int size)
{
  const cv::Mat src(image.height, image.width, CV_32FC3, const_cast<float*>(image.pixels.data()));
  const cv::Mat region = src(cv::Rect(sq.left, sq.top, sq.side, sq.side));
  cv::Mat dst;
  cv::resize(region, dst, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  Image out(size, size);
  for (int y = 0; y < size; ++y) {
    const auto* row = dst.ptr<float>(y);
    std::copy(row, row + size * 3, out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * size * 3);
  }
  return out;
}

CropOutcome crop_face(const Image& image, const BBox& box, const GridSpec& grid, int min_side)
{
  validate_bbox(box, image.width, image.height);
  if (min_side <= 0) min_side = grid.image_size();
  CropOutcome out;
  out.square = crop_square(box);
  const CropSquare& sq = out.square;
  if (2 * std::max(box.width, box.height) < min_side) {
    out.status = CropStatus::rejected_resolution;
  } else if (sq.left < 0 || sq.top < 0 || sq.left + sq.side > image.width || sq.top + sq.side > image.height) {
    out.status = CropStatus::rejected_boundary;
  } else {
    out.status = CropStatus::accepted;
    out.crop = crop_and_resize(image, sq, grid.image_size());
  }
  return out;
}

namespace {

int parse_int(const std::string& field, std::size_t line)
{
  int v = 0;
  const char* end = field.data() + field.size();
  const auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw std::invalid_argument(fmt::format("manifest line {}: '{}' is not an integer", line, field));
  }
  return v;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

} // namespace

std::vector<ManifestRecord> parse_manifest(const std::string& text, const std::string& base_dir)
{
  std::vector<ManifestRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(trim(f));
    if (n == 1 && !fields.empty() && fields[0] == "path") continue;
    if (fields.size() != 5) {
      throw std::invalid_argument(fmt::format("manifest line {}: expected 5 fields, got {}", n, fields.size()));
    }
    ManifestRecord r;
    fs::path p(fields[0]);
    r.path = (p.is_relative() && !base_dir.empty()) ? (fs::path(base_dir) / p).string() : p.string();
    r.box = {parse_int(fields[1], n), parse_int(fields[2], n), parse_int(fields[3], n), parse_int(fields[4], n)};
    out.push_back(std::move(r));
  }
  return out;
}

std::string ManifestSummary::to_line() const
{
  return fmt::format("total={} accepted={} rejected_boundary={} rejected_resolution={} unreadable={} invalid_bbox={}",
                     total, accepted, rejected_boundary, rejected_resolution, unreadable, invalid_bbox);
}

ManifestSummary run_manifest(const std::vector<ManifestRecord>& records, const std::string& out_dir,
                             const GridSpec& grid, int min_side, int workers)
{
  fs::create_directories(out_dir);
  std::vector<int> status(records.size()); // CropStatus, or -1 unreadable, -2 invalid box
  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      Image img;
      try {
        img = load_image(records[i].path);
      } catch (const std::exception&) {
        status[i] = -1;
        continue;
      }
      try {
        const CropOutcome o = crop_face(img, records[i].box, grid, min_side);
        status[i] = static_cast<int>(o.status);
        if (o.crop) save_image_png(*o.crop, (fs::path(out_dir) / fmt::format("crop_{:06d}.png", i)).string());
      } catch (const std::invalid_argument&) {
        status[i] = -2;
      }
    }
  };
  workers = std::max(workers, 1);
  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  }

  ManifestSummary s;
  s.total = records.size();
  for (const int st : status) {
    switch (st) {
    case -1: ++s.unreadable; break;
    case -2: ++s.invalid_bbox; break;
    case static_cast<int>(CropStatus::accepted): ++s.accepted; break;
    case static_cast<int>(CropStatus::rejected_boundary): ++s.rejected_boundary; break;
    default: ++s.rejected_resolution; break;
    }
  }
  write_file_atomic((fs::path(out_dir) / "summary.txt").string(), s.to_line() + "\n");
  return s;
}

} // namespace mefem
