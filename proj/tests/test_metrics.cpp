/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The scatsim Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "scatsim/metrics.hpp"
#include "test_util.hpp"

using namespace scatsim;

namespace {

Image positive_image(int rows, int cols, std::uint64_t seed) { return fixtures::random_image(rows, cols, seed, 0.1, 2.0); }

RegionPair halves(int rows, int cols) {
  RegionPair p{Mask::Zero(rows, cols), Mask::Zero(rows, cols)};
  p.region1.topRows(rows / 2).setConstant(true);
  p.region2.bottomRows(rows - rows / 2).setConstant(true);
  return p;
}

}  // namespace

TEST(Metrics, AllZeroOnIdenticalInputs) {
  const Image a = positive_image(100, 100, 1);
  const Grid2D g = Grid2D::make(100, 100, 0.01925, 0.01925);
  EXPECT_EQ(delta_intensity(a, a), 0.0);
  EXPECT_EQ(delta_snr(a, a), 0.0);
  EXPECT_EQ(delta_cnr(a, a, halves(100, 100)), 0.0);
  EXPECT_EQ(kl_patchwise(a, a, g, 0.5).mean, 0.0);
}

TEST(Metrics, DeltaIntensityMatchesDefinition) {
  const Image t = positive_image(30, 20, 2), s = positive_image(30, 20, 3);
  EXPECT_NEAR(delta_intensity(t, s), std::abs(t.mean() - s.mean()) / t.mean(), 1e-15);
  EXPECT_NEAR(delta_intensity(t, 0.5 * t), 0.5, 1e-15);
}

TEST(Metrics, SnrAndCnrMatchDefinitions) {
  const Image t = positive_image(40, 30, 4), s = positive_image(40, 30, 5);
  const auto snr = [](const Image& x) {
    const double m = x.mean();
    return m / std::sqrt((x - m).square().mean());
  };
  const Image eq = s * (t.sum() / s.sum());
  EXPECT_NEAR(delta_snr(t, s), std::abs(snr(t) - snr(eq)) / snr(t), 1e-12);

  const RegionPair rp = halves(40, 30);
  const auto cnr = [](const Image& x) {
    const Image a = x.topRows(20), b = x.bottomRows(20);
    const double ma = a.mean(), mb = b.mean();
    return std::abs(ma - mb) / (std::sqrt((a - ma).square().mean()) + std::sqrt((b - mb).square().mean()));
  };
  EXPECT_NEAR(contrast_to_noise(t, rp), cnr(t), 1e-12);
  EXPECT_NEAR(delta_cnr(t, s, rp), std::abs(cnr(t) - cnr(eq)) / cnr(t), 1e-12);
}

TEST(Metrics, ScaleInvariantAfterEqualisation) {
  const Image t = positive_image(100, 100, 6), s = positive_image(100, 100, 7);
  const Grid2D g = Grid2D::make(100, 100, 0.01925, 0.01925);
  const RegionPair rp = halves(100, 100);
  for (double a : {0.01, 3.0, 250.0}) {
    EXPECT_NEAR(delta_snr(t, a * s), delta_snr(t, s), 1e-12);
    EXPECT_NEAR(delta_cnr(t, a * s, rp), delta_cnr(t, s, rp), 1e-12);
    EXPECT_NEAR(kl_patchwise(t, a * s, g, 0.5).mean, kl_patchwise(t, s, g, 0.5).mean, 1e-12);
  }
  EXPECT_NEAR(delta_snr(t, 7.0 * t), 0.0, 1e-14);
}

TEST(Metrics, KlNonNegativeOnRandomHistograms) {
  Rng rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> p(50), q(50);
    for (int i = 0; i < 50; ++i) {
      p[i] = rng.bernoulli(0.3) ? 0.0 : std::floor(rng.uniform(0.0, 20.0));
      q[i] = rng.bernoulli(0.3) ? 0.0 : std::floor(rng.uniform(0.0, 20.0));
    }
    ASSERT_GE(kl_divergence(p, q, 1e-10), 0.0);
  }
}

TEST(Metrics, KlMatchesDirectSum) {
  const std::vector<double> p{3, 0, 1, 6}, q{1, 2, 2, 5};
  const double eps = 1e-10;
  double sp = 0, sq = 0, kl = 0;
  for (int i = 0; i < 4; ++i) sp += p[i] + eps, sq += q[i] + eps;
  for (int i = 0; i < 4; ++i) {
    const double a = (p[i] + eps) / sp, b = (q[i] + eps) / sq;
    kl += a * std::log(a / b);
  }
  EXPECT_NEAR(kl_divergence(p, q, eps), kl, 1e-14);
}

TEST(Metrics, DefaultHistogramHasFiftyBins) {
  const HistogramConfig cfg;
  EXPECT_EQ(cfg.bins, 50);
  EXPECT_EQ(cfg.epsilon, 1e-10);
  const Image t = positive_image(52, 52, 9), s = positive_image(52, 52, 10);
  const Grid2D g = Grid2D::make(52, 52, 1.0, 1.0);
  // One 52x52 patch: recompute with explicit 50-bin histograms.
  const double eqs = t.sum() / s.sum();
  std::vector<double> tv(t.data(), t.data() + t.size()), sv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) sv[i] = s.data()[i] * eqs;
  auto [hs, ht] = shared_histograms(sv, tv, 50);
  EXPECT_NEAR(kl_patchwise(t, s, g, 52.0).mean, kl_divergence(hs, ht, 1e-10), 1e-14);
  EXPECT_NE(kl_patchwise(t, s, g, 52.0, HistogramConfig{10, 1e-10}).mean, kl_patchwise(t, s, g, 52.0).mean);
}

TEST(Metrics, PatchTilingDropsPartialPatches) {
  const Image t = positive_image(25, 37, 11);
  const PatchwiseKl kl = kl_patchwise(t, t, Grid2D::make(37, 25, 1.0, 1.0), 12.0);
  EXPECT_EQ(kl.patches.size(), 2u * 3u);
  EXPECT_THROW(kl_patchwise(t, t, Grid2D::make(37, 25, 1.0, 1.0), 40.0), InvalidArgument);
}

TEST(Metrics, InvalidInputsRejected) {
  const Image a = positive_image(10, 10, 12);
  EXPECT_THROW(delta_intensity(Image::Zero(10, 10), a), InvalidArgument);
  EXPECT_THROW(delta_snr(a, Image::Zero(10, 10)), InvalidArgument);
  EXPECT_THROW(delta_intensity(a, positive_image(10, 11, 1)), InvalidArgument);
  RegionPair overlap{Mask::Constant(10, 10, true), Mask::Constant(10, 10, true)};
  EXPECT_THROW(contrast_to_noise(a, overlap), InvalidArgument);
  EXPECT_THROW(HistogramConfig({1, 1e-10}).validate(), InvalidArgument);
}

TEST(Rayleigh, SamplesFromRayleighPassKs) {
  Rng rng(14);
  std::vector<double> v(20000);
  for (double& x : v) x = 2.0 * std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
  const RayleighFit fit = rayleigh_fit(v);
  EXPECT_NEAR(fit.scale, 2.0, 0.03);
  EXPECT_LT(fit.ks, 0.015);
  EXPECT_NEAR(rayleigh_snr(), 1.913, 0.001);
}

TEST(Rayleigh, UniformSamplesFailKs) {
  Rng rng(15);
  std::vector<double> v(20000);
  for (double& x : v) x = rng.uniform();
  EXPECT_GT(rayleigh_fit(v).ks, 0.05);
}
