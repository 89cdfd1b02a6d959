// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/io.hpp"
#include "mefem/preprocess.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace mefem;
namespace fs = std::filesystem;

namespace {

Image gradient_image(int w, int h)
{
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(y, x, 0) = static_cast<float>(x) / w;
      img.at(y, x, 1) = static_cast<float>(y) / h;
      img.at(y, x, 2) = 0.5f;
    }
  return img;
}

const BBox accept_box{400, 400, 100, 120};
const BBox boundary_box{0, 0, 150, 150};
const BBox resolution_box{500, 500, 50, 60};

} // namespace

TEST_CASE("the three crop fixtures")
{
  const Image img = gradient_image(1000, 1000);
  const GridSpec grid;

  const auto ok = crop_face(img, accept_box, grid);
  // side 2 * 120, centered on (450, 460)
  CHECK(ok.status == CropStatus::accepted);
  CHECK(ok.square.side == 240);
  CHECK(ok.square.left == 330);
  CHECK(ok.square.top == 340);
  REQUIRE(ok.crop.has_value());
  CHECK(ok.crop->width == 224);
  CHECK(ok.crop->height == 224);

  const auto edge = crop_face(img, boundary_box, grid);
  CHECK(edge.status == CropStatus::rejected_boundary);
  CHECK(edge.square.side == 300);
  CHECK(edge.square.left == -75);
  CHECK_FALSE(edge.crop.has_value());

  const auto small = crop_face(img, resolution_box, grid);
  CHECK(small.status == CropStatus::rejected_resolution);
  CHECK(small.square.side == 120);
  CHECK_FALSE(small.crop.has_value());

  CHECK(crop_face(img, resolution_box, grid, 100).status == CropStatus::accepted);
  CHECK(to_string(CropStatus::rejected_boundary) == "rejected_boundary");
}

TEST_CASE("resolution is decided before bounds")
{
  const Image img = gradient_image(300, 300);
  // Too small and too close to the corner: resolution wins.
  CHECK(crop_face(img, BBox{0, 0, 40, 40}, GridSpec{}).status == CropStatus::rejected_resolution);
  // Exactly at the threshold: 2 * 112 = 224.
  CHECK(crop_face(img, BBox{94, 94, 112, 100}, GridSpec{}).status == CropStatus::accepted);
  CHECK(crop_face(img, BBox{94, 94, 111, 100}, GridSpec{}).status == CropStatus::rejected_resolution);
}

TEST_CASE("odd sizes round outward by at most one pixel")
{
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> pos(0, 500), ext(1, 120);
  for (int trial = 0; trial < 2000; ++trial) {
    const BBox b{pos(gen), pos(gen), ext(gen), ext(gen)};
    const auto sq = crop_square(b);
    const double m = std::max(b.width, b.height);
    const double cx = b.x + b.width / 2.0, cy = b.y + b.height / 2.0;
    CHECK(sq.left <= cx - m);
    CHECK(sq.top <= cy - m);
    CHECK(sq.left + sq.side >= cx + m);
    CHECK(sq.top + sq.side >= cy + m);
    CHECK(sq.left >= cx - m - 0.5);
    CHECK(sq.top >= cy - m - 0.5);
    CHECK(sq.side >= 2 * m);
    CHECK(sq.side <= 2 * m + 1);
  }
}

TEST_CASE("crop content and invalid boxes")
{
  const Image flat(600, 600, 0.25f);
  const auto out = crop_face(flat, BBox{250, 250, 100, 100}, GridSpec{7, 16});
  REQUIRE(out.crop.has_value());
  CHECK(out.crop->width == 112);
  for (float v : out.crop->pixels) CHECK(v == doctest::Approx(0.25f));

  // Bilinear resampling reproduces a linear ramp at pixel centers.
  const Image ramp = gradient_image(600, 600);
  const auto r = crop_face(ramp, BBox{250, 250, 112, 112}, GridSpec{14, 16});
  REQUIRE(r.crop.has_value());
  CHECK(r.square.side == 224);
  for (int x : {0, 50, 223}) CHECK(r.crop->at(10, x, 0) == doctest::Approx((r.square.left + x) / 600.0).epsilon(1e-5));

  CHECK_THROWS_AS(crop_face(flat, BBox{10, 10, 0, 5}, GridSpec{}), std::invalid_argument);
  CHECK_THROWS_AS(crop_face(flat, BBox{590, 10, 20, 5}, GridSpec{}), std::invalid_argument);
  CHECK_THROWS_AS(crop_face(flat, BBox{-1, 10, 20, 5}, GridSpec{}), std::invalid_argument);
}

TEST_CASE("manifest parsing")
{
  const auto recs = parse_manifest("path,x,y,w,h\n\na.png,1,2,3,4\n/abs/b.png, 5, 6, 7, 8\n", "/data");
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].path == "/data/a.png");
  CHECK(recs[0].box.height == 4);
  CHECK(recs[1].path == "/abs/b.png");
  CHECK(recs[1].box.x == 5);
  CHECK_THROWS(parse_manifest("a.png,1,2,3\n"));
  CHECK_THROWS(parse_manifest("a.png,1,2,three,4\n"));
  CHECK(parse_manifest("").empty());
}

TEST_CASE("manifest runs")
{
  const fs::path dir = oracle::temp_dir("manifest");
  const auto src = (dir / "src.png").string();
  save_image_png(gradient_image(1000, 1000), src);
  const GridSpec grid;

  SUBCASE("empty manifest")
  {
    const auto s = run_manifest({}, (dir / "empty").string(), grid);
    CHECK(s == ManifestSummary{});
    CHECK(read_file((dir / "empty" / "summary.txt").string()) == s.to_line() + "\n");
  }
  SUBCASE("three fixtures")
  {
    const std::vector<ManifestRecord> recs{{src, accept_box}, {src, boundary_box}, {src, resolution_box}};
    const auto s = run_manifest(recs, (dir / "three").string(), grid);
    CHECK(s.total == 3);
    CHECK(s.accepted == 1);
    CHECK(s.rejected_boundary == 1);
    CHECK(s.rejected_resolution == 1);
    const Image crop = load_image((dir / "three" / "crop_000000.png").string());
    CHECK(crop.width == 224);
    CHECK_FALSE(fs::exists(dir / "three" / "crop_000001.png"));
    CHECK(s.to_line().find("total=3 accepted=1 rejected_boundary=1 rejected_resolution=1") == 0);
  }
  SUBCASE("duplicates, unreadable images and bad boxes")
  {
    const std::vector<ManifestRecord> recs{{src, accept_box},
                                           {src, accept_box},
                                           {(dir / "missing.png").string(), accept_box},
                                           {src, BBox{990, 990, 50, 50}}};
    const auto s = run_manifest(recs, (dir / "mixed").string(), grid, 0, 2);
    CHECK(s.total == 4);
    CHECK(s.accepted == 2);
    CHECK(s.unreadable == 1);
    CHECK(s.invalid_bbox == 1);
    CHECK(load_image((dir / "mixed" / "crop_000000.png").string()) ==
          load_image((dir / "mixed" / "crop_000001.png").string()));
    for (const auto& e : fs::directory_iterator(dir / "mixed")) CHECK(e.path().extension() != ".tmp");
  }
}
