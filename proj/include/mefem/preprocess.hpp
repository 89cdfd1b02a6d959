// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Face crops from externally supplied bounding boxes: a square of twice the
// box's larger side, centered on the box, resized to the grid resolution.

#pragma once

#include "mefem/grid.hpp"
#include "mefem/image.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mefem {

struct BBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

enum class CropStatus { accepted, rejected_boundary, rejected_resolution };

std::string to_string(CropStatus s);

/// Pixel square [left, left + side) x [top, top + side).
struct CropSquare {
  int left = 0;
  int top = 0;
  int side = 0;
};

struct CropOutcome {
  CropStatus status = CropStatus::rejected_resolution;
  CropSquare square;
  std::optional<Image> crop; // present iff accepted
};

/// Throws std::invalid_argument unless the box is non-empty and inside the image.
void validate_bbox(const BBox& box, int image_width, int image_height);

/// Square of side 2 * max(w, h) centered on the box. A half-pixel center
/// widens the square by one pixel, half a pixel on each side.
CropSquare crop_square(const BBox& box);

/// Resolution is checked before bounds; nothing is resampled for a rejected
/// box. `min_side` <= 0 means the grid's image size.
CropOutcome crop_face(const Image& image, const BBox& box, const GridSpec& grid, int min_side = 0);

/// Bilinear resize of a square region to `size` x `size`.
Image crop_and_resize(const Image& image, const CropSquare& square, int size);

struct ManifestRecord {
  std::string path;
  BBox box;
};

/// CSV rows `path,x,y,w,h`; an optional header row starting with "path" is
/// skipped, as are blank lines. Relative paths resolve against `base_dir`.
std::vector<ManifestRecord> parse_manifest(const std::string& text, const std::string& base_dir = {});

struct ManifestSummary {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::size_t rejected_boundary = 0;
  std::size_t rejected_resolution = 0;
  std::size_t unreadable = 0;
  std::size_t invalid_bbox = 0;

  std::string to_line() const;
  friend bool operator==(const ManifestSummary&, const ManifestSummary&) = default;
};

/// Processes every record independently (duplicates included), writing
/// accepted crops as `<out_dir>/crop_NNNNNN.png` (record index) and
/// `<out_dir>/summary.txt`.
ManifestSummary run_manifest(const std::vector<ManifestRecord>& records, const std::string& out_dir,
                             const GridSpec& grid, int min_side = 0, int workers = 1);

} // namespace mefem
