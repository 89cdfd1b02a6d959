// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/synthdata.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mefem {

namespace {

constexpr float skin_tint[3] = {1.0f, 0.84f, 0.72f};
constexpr float mouth_tint[3] = {0.62f, 0.18f, 0.18f};

struct Ellipse {
  double cx, cy, rx, ry;

  bool contains(double x, double y) const
  {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  }
  double radius2(double x, double y) const
  {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy;
  }
};

Ellipse face_ellipse(const FaceAttributes& a, int size)
{
  const auto [cx, cy] = face_center(a, size);
  const double ry = a.face_scale * size / 2.0;
  return {cx, cy, a.eccentricity * ry, ry};
}

void check_range(double v, const Range& r, const char* name)
{
  if (!(v >= r.lo && v <= r.hi)) {
    throw std::invalid_argument(fmt::format("attribute {}={} outside [{}, {}]", name, v, r.lo, r.hi));
  }
}

} // namespace

std::pair<double, double> face_center(const FaceAttributes& attrs, int image_size)
{
  return {image_size / 2.0 + attrs.jitter_x, image_size / 2.0 + attrs.jitter_y};
}

FaceAttributes sample_attributes(Rng& rng, const SynthRanges& r)
{
  FaceAttributes a;
  a.face_scale = rng.uniform(r.face_scale.lo, r.face_scale.hi);
  a.eccentricity = rng.uniform(r.eccentricity.lo, r.eccentricity.hi);
  a.brightness = rng.uniform(r.brightness.lo, r.brightness.hi);
  a.eye_spacing = rng.uniform(r.eye_spacing.lo, r.eye_spacing.hi);
  a.jitter_x = rng.uniform(-r.max_jitter, r.max_jitter);
  a.jitter_y = rng.uniform(-r.max_jitter, r.max_jitter);
  a.texture_seed = rng.next_u64();
  return a;
}

void validate_attributes(const FaceAttributes& a, const SynthRanges& r)
{
  check_range(a.face_scale, r.face_scale, "face_scale");
  check_range(a.eccentricity, r.eccentricity, "eccentricity");
  check_range(a.brightness, r.brightness, "brightness");
  check_range(a.eye_spacing, r.eye_spacing, "eye_spacing");
  check_range(a.jitter_x, {-r.max_jitter, r.max_jitter}, "jitter_x");
  check_range(a.jitter_y, {-r.max_jitter, r.max_jitter}, "jitter_y");
}

Image render_face(const FaceAttributes& a, int size)
{
  if (size < 1) {
    throw std::invalid_argument("render_face: image size must be positive");
  }
  Image img(size, size);
  Rng tex(a.texture_seed);

  // Background: tinted base plus three oriented gratings and pixel noise.
  float base[3];
  for (float& b : base) b = static_cast<float>(tex.uniform(0.2, 0.5));
  struct Grating {
    double fx, fy, phase, amp;
  } gratings[3];
  for (auto& g : gratings) {
    const double freq = tex.uniform(2.0, 8.0) * 2.0 * std::numbers::pi / size;
    const double angle = tex.uniform(0.0, std::numbers::pi);
    g = {freq * std::cos(angle), freq * std::sin(angle), tex.uniform(0.0, 2.0 * std::numbers::pi), tex.uniform(0.02, 0.06)};
  }

  const Ellipse face = face_ellipse(a, size);
  const double eye_dx = a.eye_spacing * face.rx;
  const Ellipse eyes[2] = {{face.cx - eye_dx, face.cy - 0.25 * face.ry, 0.14 * face.rx, 0.08 * face.ry},
                           {face.cx + eye_dx, face.cy - 0.25 * face.ry, 0.14 * face.rx, 0.08 * face.ry}};
  const Ellipse mouth{face.cx, face.cy + 0.45 * face.ry, 0.35 * face.rx, 0.07 * face.ry};
  const float albedo = static_cast<float>(a.brightness);

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double pattern = 0.0;
      for (const auto& g : gratings) pattern += g.amp * std::sin(g.fx * px + g.fy * py + g.phase);
      const double noise = tex.uniform(-0.03, 0.03);
      float rgb[3];
      for (int c = 0; c < 3; ++c) rgb[c] = static_cast<float>(base[c] + pattern + noise);

      if (face.contains(px, py)) {
        const float shade = static_cast<float>(1.0 - 0.15 * face.radius2(px, py));
        for (int c = 0; c < 3; ++c) rgb[c] = albedo * skin_tint[c] * shade;
        if (eyes[0].contains(px, py) || eyes[1].contains(px, py)) {
          for (float& v : rgb) v = 0.08f;
        } else if (mouth.contains(px, py)) {
          for (int c = 0; c < 3; ++c) rgb[c] = albedo * mouth_tint[c];
        }
      }
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(rgb[c], 0.0f, 1.0f);
    }
  }
  return img;
}

GeneratedFace generate_face(Rng& rng, int image_size, const SynthRanges& ranges)
{
  GeneratedFace out;
  out.attributes = sample_attributes(rng, ranges);
  out.image = render_face(out.attributes, image_size);
  return out;
}

std::vector<bool> face_pixel_mask(const FaceAttributes& attrs, int image_size)
{
  const Ellipse face = face_ellipse(attrs, image_size);
  std::vector<bool> mask(static_cast<std::size_t>(image_size) * image_size);
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      mask[static_cast<std::size_t>(y) * image_size + x] = face.contains(x + 0.5, y + 0.5);
    }
  }
  return mask;
}

const std::vector<std::string>& attribute_names()
{
  static const std::vector<std::string> names{"face_scale", "eccentricity", "brightness", "eye_spacing", "jitter_x",
                                              "jitter_y"};
  return names;
}

double attribute_value(const FaceAttributes& a, const std::string& name)
{
  if (name == "face_scale") return a.face_scale;
  if (name == "eccentricity") return a.eccentricity;
  if (name == "brightness") return a.brightness;
  if (name == "eye_spacing") return a.eye_spacing;
  if (name == "jitter_x") return a.jitter_x;
  if (name == "jitter_y") return a.jitter_y;
  throw std::invalid_argument(fmt::format("unknown attribute '{}'", name));
}

std::string attributes_csv_header()
{
  return "file,face_scale,eccentricity,brightness,eye_spacing,jitter_x,jitter_y,texture_seed\n";
}

std::string attributes_csv_row(const std::string& file, const FaceAttributes& a)
{
  return fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{}\n", file, a.face_scale, a.eccentricity,
                     a.brightness, a.eye_spacing, a.jitter_x, a.jitter_y, a.texture_seed);
}

SyntheticDataset::SyntheticDataset(std::size_t count, int image_size, std::uint64_t seed, SynthRanges ranges)
    : image_size_(image_size)
{
  Rng rng(seed);
  attrs_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    attrs_.push_back(sample_attributes(rng, ranges));
  }
}

} // namespace mefem
