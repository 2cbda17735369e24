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

#include "scatsim/geo.hpp"
#include "test_util.hpp"

using namespace scatsim;

TEST(Transform, InverseUndoesApply) {
  Rng rng(1);
  for (const Transform& t : {Transform::rotation(37.0, 3.0, 4.0), Transform::compression(0.3, 3.0, 4.0)}) {
    for (int i = 0; i < 100; ++i) {
      const double l = rng.uniform(-5, 10), a = rng.uniform(-5, 10);
      const auto [l1, a1] = t.apply(l, a);
      const auto [l2, a2] = t.inverse(l1, a1);
      ASSERT_NEAR(l2, l, 1e-12);
      ASSERT_NEAR(a2, a, 1e-12);
    }
  }
}

TEST(Transform, RotationIsRigidAboutCentre) {
  const Transform t = Transform::rotation(90.0, 1.0, 2.0);
  const auto [l, a] = t.apply(2.0, 2.0);
  EXPECT_NEAR(l, 1.0, 1e-12);
  EXPECT_NEAR(a, 3.0, 1e-12);
  const auto [cl, ca] = t.apply(1.0, 2.0);
  EXPECT_DOUBLE_EQ(cl, 1.0);
  EXPECT_DOUBLE_EQ(ca, 2.0);
}

TEST(Transform, CompressionScalesAxialOffsetOnly) {
  const Transform t = Transform::compression(0.25, 5.0, 5.0);
  const auto [l, a] = t.apply(7.0, 9.0);
  EXPECT_DOUBLE_EQ(l, 7.0);
  EXPECT_DOUBLE_EQ(a, 8.0);
  EXPECT_THROW(Transform::compression(0.95, 0, 0).validate(), InvalidArgument);
  EXPECT_THROW(Transform::compression(-0.1, 0, 0).validate(), InvalidArgument);
}

TEST(TransformScatterers, IdentityKeepsMap) {
  const Grid2D g = make_scatterer_grid(50, 60, 40.0, 1540.0);
  ScattererMap m{g, fixtures::random_image(60, 50, 2, 0.0, 1.0)};
  m.amplitudes = (m.amplitudes > 0.9).select(m.amplitudes, 0.0);
  const ScattererMap out = transform_scatterers(m, Transform::rotation(0.0, 0.5, 0.5));
  EXPECT_TRUE((out.amplitudes == m.amplitudes).all());
}

TEST(TransformScatterers, FullTurnKeepsMap) {
  const Grid2D g = make_scatterer_grid(50, 60, 40.0, 1540.0);
  ScattererMap m{g, fixtures::random_image(60, 50, 3, 0.0, 1.0)};
  m.amplitudes = (m.amplitudes > 0.9).select(m.amplitudes, 0.0);
  const ScattererMap out = transform_scatterers(m, Transform::rotation(360.0, 0.5, 0.6));
  EXPECT_LT(fixtures::rel_err(out.amplitudes, m.amplitudes), 1e-12);
}

TEST(TransformScatterers, RotationMovesPointsToRotatedPixels) {
  const Grid2D g = Grid2D::make(21, 21, 1.0, 1.0);
  ScattererMap m{g, Image::Zero(21, 21)};
  m.amplitudes(10, 15) = 2.0;  // 5 mm lateral of the centre
  const ScattererMap out = transform_scatterers(m, Transform::rotation(90.0, 10.0, 10.0));
  EXPECT_DOUBLE_EQ(out.amplitudes(15, 10), 2.0);
  EXPECT_DOUBLE_EQ(out.amplitudes.sum(), 2.0);
}

TEST(TransformScatterers, CompressionConservesAmplitudeInside) {
  const Grid2D g = make_scatterer_grid(80, 80, 40.0, 1540.0);
  ScattererMap m{g, fixtures::random_image(80, 80, 4, 0.0, 1.0)};
  m.amplitudes = (m.amplitudes > 0.95).select(m.amplitudes, 0.0);
  const ScattererMap out = transform_scatterers(m, Transform::compression(0.4, g.lateral_mm(40), g.axial_mm(40)));
  EXPECT_NEAR(out.amplitudes.sum(), m.amplitudes.sum(), 1e-9);
  // Everything lands in the middle 60% of the rows.
  EXPECT_EQ(out.amplitudes.topRows(15).abs().sum(), 0.0);
  EXPECT_EQ(out.amplitudes.bottomRows(15).abs().sum(), 0.0);
}

TEST(BinPoints, SumsCollisionsAndDropsOutside) {
  const Grid2D g = Grid2D::make(4, 4, 1.0, 1.0);
  const ScattererMap m = bin_points({{1.2, 2.1, 1.0}, {0.9, 1.8, 0.5}, {9.0, 1.0, 7.0}, {-0.6, 0.0, 3.0}}, g);
  EXPECT_DOUBLE_EQ(m.amplitudes(2, 1), 1.5);
  EXPECT_DOUBLE_EQ(m.amplitudes.sum(), 1.5);
}

TEST(ResampleField, IdentityAndRigidShift) {
  const Grid2D g = Grid2D::make(30, 40, 0.1, 0.1);
  const Image f = fixtures::random_image(40, 30, 5);
  EXPECT_LT(fixtures::rel_err(resample_field(f, g, Transform::rotation(0.0, 1.0, 1.0)), f), 1e-14);
  // 180 degrees about a pixel centre is an exact index flip.
  const Image r = resample_field(f, g, Transform::rotation(180.0, g.lateral_mm(15), g.axial_mm(20)));
  for (int row = 1; row < 40; ++row)
    for (int c = 1; c < 30; ++c) ASSERT_NEAR(r(row, c), f(40 - row, 30 - c), 1e-12);
  EXPECT_EQ(r(0, 0), 0.0);
}

TEST(ResampleField, CompressionOfAxialRamp) {
  const Grid2D g = Grid2D::make(5, 101, 0.1, 0.1);
  Image f(101, 5);
  for (int r = 0; r < 101; ++r) f.row(r).setConstant(g.axial_mm(r));
  const double centre = g.axial_mm(50);
  const Image out = resample_field(f, g, Transform::compression(0.5, 0.2, centre));
  // Output at axial a carries the value from centre + (a - centre) / (1 - e).
  for (int r = 30; r <= 70; ++r) ASSERT_NEAR(out(r, 2), centre + (g.axial_mm(r) - centre) / 0.5, 1e-9);
  EXPECT_EQ(out(0, 2), 0.0);
}

TEST(TransformMask, RotatesDisc) {
  const Grid2D g = Grid2D::make(41, 41, 1.0, 1.0);
  Mask m = Mask::Zero(41, 41);
  for (int r = 0; r < 41; ++r)
    for (int c = 0; c < 41; ++c) m(r, c) = std::hypot(r - 10.0, c - 20.0) <= 5.0;
  const Mask out = transform_mask(m, g, Transform::rotation(90.0, 20.0, 20.0));
  for (int r = 0; r < 41; ++r)
    for (int c = 0; c < 41; ++c) ASSERT_EQ(out(r, c), std::hypot(r - 20.0, c - 30.0) <= 5.0) << r << "," << c;
}
