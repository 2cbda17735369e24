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

#ifndef SCATSIM_GEO_HPP
#define SCATSIM_GEO_HPP

#include <vector>

#include "scatsim/core.hpp"

namespace scatsim {

struct Transform {
  enum class Kind { rotation, axial_compression };

  Kind kind = Kind::rotation;
  double angle_deg = 0.0;
  double strain = 0.0;
  double center_lateral_mm = 0.0;
  double center_axial_mm = 0.0;

  static Transform rotation(double angle_deg, double center_lateral_mm, double center_axial_mm);
  static Transform compression(double strain, double center_lateral_mm, double center_axial_mm);

  void validate() const;
  /// Physical point mapping (lateral, axial) -> (lateral', axial').
  std::pair<double, double> apply(double lateral, double axial) const;
  std::pair<double, double> inverse(double lateral, double axial) const;
};

struct Point {
  double lateral = 0.0;
  double axial = 0.0;
  double amplitude = 0.0;
};

/// Non-zero pixels as point scatterers at their physical coordinates.
std::vector<Point> to_points(const ScattererMap& map);
std::vector<Point> transform_points(const std::vector<Point>& points, const Transform& t);
/// Nearest-pixel binning; colliding amplitudes add up, points off the grid are dropped.
ScattererMap bin_points(const std::vector<Point>& points, const Grid2D& grid);

/// Moves the scatterers as a point set and re-bins them on the same grid.
ScattererMap transform_scatterers(const ScattererMap& map, const Transform& t);

/// Dense bilinear resampling of a field on the deformed grid; zero outside the source.
Image resample_field(const Image& values, const Grid2D& grid, const Transform& t);
TrfMap transform_trf(const TrfMap& trf, const Transform& t);

/// Nearest-neighbour warp of a mask (pixel is set if its pre-image is set).
Mask transform_mask(const Mask& mask, const Grid2D& grid, const Transform& t);

}  // namespace scatsim

#endif  // SCATSIM_GEO_HPP
