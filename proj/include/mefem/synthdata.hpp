// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0
//
// Procedural face-like images with known attributes: a centered ellipse face
// with two eyes and a mouth over a textured background.

#pragma once

#include "mefem/dataset.hpp"
#include "mefem/image.hpp"
#include "mefem/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mefem {

struct FaceAttributes {
  double face_scale = 0.45;  // face height as a fraction of the frame
  double eccentricity = 0.8; // face width / face height
  double brightness = 0.6;   // face albedo, [0, 1]
  double eye_spacing = 0.35; // eye offset from the face axis, fraction of the face half-width
  double jitter_x = 0.0;     // face center offset, pixels
  double jitter_y = 0.0;
  std::uint64_t texture_seed = 0;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling ranges for random attributes. Jitter is drawn per axis from
/// [-max_jitter, max_jitter] pixels.
struct SynthRanges {
  Range face_scale{0.3, 0.6};
  Range eccentricity{0.7, 0.95};
  Range brightness{0.3, 0.9};
  Range eye_spacing{0.25, 0.45};
  double max_jitter = 8.0;
};

FaceAttributes sample_attributes(Rng& rng, const SynthRanges& ranges = {});
void validate_attributes(const FaceAttributes& attrs, const SynthRanges& ranges = {});

/// Deterministic render of `attrs` at `image_size` x `image_size`.
Image render_face(const FaceAttributes& attrs, int image_size);

struct GeneratedFace {
  Image image;
  FaceAttributes attributes;
};

GeneratedFace generate_face(Rng& rng, int image_size, const SynthRanges& ranges = {});

/// Face center in continuous pixel coordinates (x, y).
std::pair<double, double> face_center(const FaceAttributes& attrs, int image_size);

/// Row-major flags of the pixels whose centers fall inside the face ellipse.
std::vector<bool> face_pixel_mask(const FaceAttributes& attrs, int image_size);

double attribute_value(const FaceAttributes& attrs, const std::string& name);
const std::vector<std::string>& attribute_names();

std::string attributes_csv_header();
std::string attributes_csv_row(const std::string& file, const FaceAttributes& attrs);

/// Lazily rendered synthetic dataset; attributes of item i depend only on
/// (seed, i).
class SyntheticDataset : public Dataset {
public:
  SyntheticDataset(std::size_t count, int image_size, std::uint64_t seed, SynthRanges ranges = {});

  std::size_t size() const override { return attrs_.size(); }
  Image image(std::size_t index) const override { return render_face(attrs_.at(index), image_size_); }
  const FaceAttributes& attributes(std::size_t index) const { return attrs_.at(index); }
  int image_size() const { return image_size_; }

private:
  int image_size_;
  std::vector<FaceAttributes> attrs_;
};

} // namespace mefem
