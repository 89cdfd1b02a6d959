// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/lossweights.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace mefem;

TEST_CASE("uniform scheme is all ones")
{
  for (int L : {2, 7, 14}) {
    const WeightMatrix w = build_weight_matrix(GridSpec{L, 16}, WeightConfig{5.0, 1.5, WeightScheme::uniform});
    for (double v : w.weights) CHECK(v == 1.0);
  }
  CHECK(WeightMatrix::cls_weight == 1.0);
}

TEST_CASE("sigmoid threshold and a hand-evaluated patch")
{
  CHECK(std::abs(radial_weight(5.0, 5.0, 1.5) - 0.5) <= 1e-12);
  CHECK(std::abs(radial_weight(2.25, 2.25, 7.0) - 0.5) <= 1e-12);

  const GridSpec g;
  const WeightMatrix w = build_weight_matrix(g, WeightConfig{});
  const double r = std::sqrt(0.5 * 0.5 + 0.5 * 0.5);
  CHECK(patch_radius(g, 6, 6) == doctest::Approx(r).epsilon(1e-15));
  CHECK(w.at(6, 6) == doctest::Approx(oracle::sigmoid_weight(r, 5.0, 1.5)).epsilon(1e-14));
  CHECK(w.at(6, 6) == doctest::Approx(0.9984).epsilon(1e-4));
  const double corner_r = std::sqrt(2.0) * 6.5;
  CHECK(w.at(0, 0) == doctest::Approx(oracle::sigmoid_weight(corner_r, 5.0, 1.5)).epsilon(1e-14));
  CHECK(w.at(0, 0) < 0.1);
}

TEST_CASE("matches the scalar oracle everywhere")
{
  const GridSpec g;
  const WeightConfig cfg{4.0, 0.8, WeightScheme::circular};
  const WeightMatrix w = build_weight_matrix(g, cfg);
  for (int i = 0; i < 14; ++i) {
    for (int j = 0; j < 14; ++j) {
      const double r = std::hypot(i + 0.5 - 7.0, j + 0.5 - 7.0);
      CHECK(w.at(i, j) == doctest::Approx(oracle::sigmoid_weight(r, 4.0, 0.8)).epsilon(1e-14));
    }
  }
}

TEST_CASE("dihedral symmetry is exact")
{
  for (int L : {5, 14, 15}) {
    const WeightMatrix w = build_weight_matrix(GridSpec{L, 16}, WeightConfig{});
    for (int i = 0; i < L; ++i) {
      for (int j = 0; j < L; ++j) {
        CHECK(w.at(i, j) == w.at(L - 1 - i, j));
        CHECK(w.at(i, j) == w.at(i, L - 1 - j));
        CHECK(w.at(i, j) == w.at(j, i));
      }
    }
  }
}

TEST_CASE("strict radial monotonicity and range")
{
  const GridSpec g;
  const WeightMatrix w = build_weight_matrix(g, WeightConfig{});
  for (int a = 0; a < g.num_patches(); ++a) {
    CHECK(w[a] > 0.0);
    CHECK(w[a] < 1.0);
    for (int b = 0; b < g.num_patches(); ++b) {
      const double ra = patch_radius(g, g.row(a), g.col(a)), rb = patch_radius(g, g.row(b), g.col(b));
      if (ra < rb) CHECK(w[a] > w[b]);
      if (ra == rb) CHECK(w[a] == w[b]);
    }
  }
}

TEST_CASE("invalid configs")
{
  CHECK_THROWS_AS(build_weight_matrix(GridSpec{}, WeightConfig{0.0, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS(build_weight_matrix(GridSpec{}, WeightConfig{5.0, -1.0}), std::invalid_argument);
}
