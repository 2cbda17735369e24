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
#include <set>

#include "scatsim/phantoms.hpp"

using namespace scatsim;

namespace {

Grid2D map_grid() { return Grid2D::make(64, 128, 0.01925, 0.077); }

}  // namespace

TEST(RandomShapes, SingleLevelGivesConstantMap) {
  ShapeGenConfig cfg;
  cfg.n_levels = 1;
  Rng rng(1);
  const ParameterMap pm = generate_random_parameter_map(cfg, map_grid(), rng);
  EXPECT_EQ(pm.mu.minCoeff(), pm.mu.maxCoeff());
  EXPECT_GE(pm.mu(0, 0), 0.0);
  EXPECT_LE(pm.mu(0, 0), 1.0);
}

TEST(RandomShapes, DefaultConfigGivesSeveralRegions) {
  Rng rng(7);
  const ParameterMap pm = generate_random_parameter_map(ShapeGenConfig{}, map_grid(), rng);
  std::set<double> values(pm.mu.data(), pm.mu.data() + pm.mu.size());
  EXPECT_GE(values.size(), 2u);
  for (double v : values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RandomShapes, FourThousandMapsStayInUnitInterval) {
  Rng rng(2024);
  for (int i = 0; i < 4000; ++i) {
    const ParameterMap pm = generate_random_parameter_map(ShapeGenConfig{}, map_grid(), rng);
    ASSERT_EQ(pm.mu.rows(), 128);
    ASSERT_EQ(pm.mu.cols(), 64);
    ASSERT_GE(pm.mu.minCoeff(), 0.0);
    ASSERT_LE(pm.mu.maxCoeff(), 1.0);
  }
}

TEST(RandomShapes, EveryPixelBelongsToOneRegion) {
  Rng rng(8);
  const RandomShapes s = generate_random_shapes(ShapeGenConfig{}, map_grid(), rng);
  for (Eigen::Index i = 0; i < s.labels.size(); ++i) {
    const int id = s.labels.data()[i];
    ASSERT_GE(id, 0);
    ASSERT_LT(id, static_cast<int>(s.region_mu.size()));
    ASSERT_EQ(s.map.mu.data()[i], s.region_mu[id]);
  }
}

TEST(RandomShapes, DeterministicGivenSeed) {
  Rng a(99), b(99);
  const ParameterMap pa = generate_random_parameter_map(ShapeGenConfig{}, map_grid(), a);
  const ParameterMap pb = generate_random_parameter_map(ShapeGenConfig{}, map_grid(), b);
  EXPECT_TRUE((pa.mu == pb.mu).all());
}

TEST(RandomShapes, RegionMeansAreUniformOverRange) {
  ShapeGenConfig cfg;
  cfg.mu_min = 0.2;
  cfg.mu_max = 0.6;
  Rng rng(13);
  double sum = 0.0;
  long n = 0;
  for (int i = 0; i < 1000; ++i) {
    const RandomShapes s = generate_random_shapes(cfg, Grid2D::make(32, 64, 0.01925, 0.077), rng);
    for (double mu : s.region_mu) {
      ASSERT_GE(mu, 0.2);
      ASSERT_LE(mu, 0.6);
      sum += mu;
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 0.4, 0.02);
}

TEST(RandomShapes, InvalidConfigRejected) {
  ShapeGenConfig cfg;
  cfg.coarse_rows = 1;
  Rng rng(1);
  EXPECT_THROW(generate_random_parameter_map(cfg, map_grid(), rng), InvalidArgument);
  cfg = {};
  cfg.mu_max = 1.5;
  EXPECT_THROW(generate_random_parameter_map(cfg, map_grid(), rng), InvalidArgument);
}

TEST(InclusionPhantom, TwoValuesAndAnalyticArea) {
  InclusionPhantomConfig cfg;
  cfg.mu_background = 0.5;
  cfg.mu_inclusion = 1.0;
  const Grid2D grid = make_scatterer_grid(784, 784, 40.0, 1540.0);
  const InclusionPhantom p = make_inclusion_phantom(cfg, grid);
  std::set<double> values;
  for (int r = 0; r < grid.n_axial; ++r)
    for (int c = 0; c < grid.n_lateral; ++c)
      if (p.inclusion(r, c) || p.background(r, c)) values.insert(p.map.mu(r, c));
  EXPECT_EQ(values, (std::set<double>{0.5, 1.0}));
  const double expected = std::numbers::pi * 1.5 * 1.5 / (grid.spacing_lateral * grid.spacing_axial);
  EXPECT_NEAR(p.inclusion.count() / expected, 1.0, 0.02);
  EXPECT_FALSE((p.inclusion && p.background).any());
}

TEST(InclusionPhantom, DiameterIsThreeMillimetres) {
  const Grid2D grid = make_scatterer_grid(784, 784, 40.0, 1540.0);
  const InclusionPhantom p = make_inclusion_phantom(InclusionPhantomConfig{}, grid);
  const int row = static_cast<int>(std::lround(grid.row_at(7.5)));
  const double width = p.inclusion.row(row).count() * grid.spacing_lateral;
  EXPECT_NEAR(width, 3.0, 2 * grid.spacing_lateral);
}

TEST(InclusionPhantom, EqualMeansGiveConstantMap) {
  InclusionPhantomConfig cfg;
  cfg.mu_background = cfg.mu_inclusion = 0.4;
  const InclusionPhantom p = make_inclusion_phantom(cfg, make_scatterer_grid(784, 784, 40.0, 1540.0));
  EXPECT_EQ(p.map.mu.maxCoeff(), 0.4);
  EXPECT_EQ((p.map.mu == 0.4).count(), (p.inclusion || p.background).count());
}

TEST(InclusionPhantom, InclusionOutsideGridRejected) {
  InclusionPhantomConfig cfg;
  cfg.center_lateral_mm = 14.5;
  EXPECT_THROW(make_inclusion_phantom(cfg, make_scatterer_grid(784, 784, 40.0, 1540.0)), InvalidArgument);
}
