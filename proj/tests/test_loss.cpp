// Copyright (c) 2026, mefem developers
// SPDX-License-Identifier: Apache-2.0

#include "mefem/loss.hpp"
#include "mefem/lossweights.hpp"
#include "mefem/trainer.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <limits>
#include <random>

using namespace mefem;
using MatD = nn::Mat<double>;

namespace {

// Unweighted loss: mean over tokens of mean-over-dims smooth L1.
double unweighted_oracle(const MatD& p, const MatD& r, double beta)
{
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double tok = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) tok += oracle::smooth_l1(p(i, j) - r(i, j), beta);
    total += tok / p.cols();
  }
  return total / p.rows();
}

MatD random_mat(std::mt19937_64& gen, int rows, int cols, double scale)
{
  std::normal_distribution<double> nd(0.0, scale);
  MatD m(rows, cols);
  for (auto& v : m.reshaped()) v = nd(gen);
  return m;
}

} // namespace

TEST_CASE("identical latents give exactly zero")
{
  std::mt19937_64 gen(1);
  const MatD p = random_mat(gen, 7, 5, 2.0);
  const std::vector<double> w(7, 0.3);
  CHECK(jepa_loss<double>(p, p, w, LossConfig{}) == 0.0);
  CHECK(jepa_loss<double>(p, p, w, LossConfig{Distance::l2}) == 0.0);
  const nn::Mat<float> pf = p.cast<float>();
  CHECK(jepa_loss<float>(pf, pf, w, LossConfig{}) == 0.0);
}

TEST_CASE("hand-evaluated smooth L1 case")
{
  MatD p(1, 2), r = MatD::Zero(1, 2);
  p << 1.0, 0.0;
  const std::vector<double> w{0.5};
  // Exactly at the kink |x| = beta the two branches agree: 0.5 * 1 / 1.
  CHECK(jepa_loss<double>(p, r, w, LossConfig{Distance::smooth_l1, 1.0}) == doctest::Approx(0.125).epsilon(1e-15));
  p << 3.0, -0.5;
  // d = ((3 - 0.5) + 0.125) / 2 = 1.3125
  CHECK(jepa_loss<double>(p, r, std::vector<double>{1.0}, LossConfig{}) == doctest::Approx(1.3125).epsilon(1e-15));
  // L2: (9 + 0.25) / 2
  CHECK(jepa_loss<double>(p, r, std::vector<double>{1.0}, LossConfig{Distance::l2}) == doctest::Approx(4.625).epsilon(1e-15));
}

TEST_CASE("uniform weights reduce to the unweighted loss")
{
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 40), d = 1 + static_cast<int>(gen() % 16);
    const MatD p = random_mat(gen, n, d, 1.5), r = random_mat(gen, n, d, 1.5);
    const std::vector<double> ones(n, 1.0);
    CHECK(std::abs(jepa_loss<double>(p, r, ones, LossConfig{}) - unweighted_oracle(p, r, 1.0)) <= 1e-12);
  }
}

TEST_CASE("flat sigmoid halves the loss")
{
  const GridSpec g;
  const WeightMatrix flat = build_weight_matrix(g, WeightConfig{5.0, 1e-13});
  for (double v : flat.weights) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  std::mt19937_64 gen(3);
  const MatD p = random_mat(gen, 196, 8, 1.0), r = random_mat(gen, 196, 8, 1.0);
  const double half = jepa_loss<double>(p, r, flat.weights, LossConfig{});
  CHECK(half == doctest::Approx(0.5 * unweighted_oracle(p, r, 1.0)).epsilon(1e-12));
}

TEST_CASE("CLS prediction keeps weight one")
{
  const GridSpec g;
  const WeightMatrix w = build_weight_matrix(g, WeightConfig{});
  const PredictionQuery q{{0, 1, 97}, true};
  const auto pw = prediction_weights(q, w);
  REQUIRE(pw.size() == 4);
  CHECK(pw[0] == 1.0);
  CHECK(pw[1] == w[0]);
  CHECK(pw[3] == w[97]);

  // Perturbing the CLS row changes the loss by exactly its unweighted share.
  std::mt19937_64 gen(4);
  MatD p = random_mat(gen, 4, 6, 0.3);
  const MatD r = random_mat(gen, 4, 6, 0.3);
  const double base = jepa_loss<double>(p, r, pw, LossConfig{});
  double before = 0.0, after = 0.0;
  for (int j = 0; j < 6; ++j) before += oracle::smooth_l1(p(0, j) - r(0, j), 1.0);
  p(0, 2) += 0.25;
  for (int j = 0; j < 6; ++j) after += oracle::smooth_l1(p(0, j) - r(0, j), 1.0);
  const double moved = jepa_loss<double>(p, r, pw, LossConfig{});
  CHECK(moved - base == doctest::Approx((after - before) / 6.0 / 4.0).epsilon(1e-10));
}

TEST_CASE("analytic gradient matches central differences")
{
  std::mt19937_64 gen(5);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 6), d = 1 + static_cast<int>(gen() % 6);
    const double beta = trial % 3 == 0 ? 0.5 : 1.0;
    const LossConfig cfg{trial % 5 == 4 ? Distance::l2 : Distance::smooth_l1, beta};
    MatD p = random_mat(gen, n, d, 1.5);
    const MatD r = random_mat(gen, n, d, 1.5);
    // Keep every element away from the kink, where the derivative jumps.
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      while (std::abs(std::abs(p.data()[k] - r.data()[k]) - beta) < 1e-3) p.data()[k] += 0.01;
    }
    std::vector<double> w(n);
    for (auto& v : w) v = std::uniform_real_distribution<double>(0.05, 1.0)(gen);
    MatD grad;
    jepa_loss<double>(p, r, w, cfg, &grad);
    MatD fd(n, d);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      MatD a = p, b = p;
      a.data()[k] += h;
      b.data()[k] -= h;
      fd.data()[k] = (jepa_loss<double>(a, r, w, cfg) - jepa_loss<double>(b, r, w, cfg)) / (2 * h);
    }
    const double rel = (grad - fd).norm() / std::max(fd.norm(), 1e-12);
    CHECK(rel < 1e-5);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("input validation")
{
  const MatD a = MatD::Zero(3, 2), b = MatD::Zero(2, 2);
  CHECK_THROWS_AS(jepa_loss<double>(a, b, std::vector<double>(3, 1.0), LossConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(jepa_loss<double>(a, a, std::vector<double>(2, 1.0), LossConfig{}), std::invalid_argument);
  MatD nan = a;
  nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(jepa_loss<double>(nan, a, std::vector<double>(3, 1.0), LossConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(jepa_loss<double>(a, a, std::vector<double>(3, 1.0), LossConfig{Distance::smooth_l1, 0.0}),
                  std::invalid_argument);
}
