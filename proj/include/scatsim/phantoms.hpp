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

#ifndef SCATSIM_PHANTOMS_HPP
#define SCATSIM_PHANTOMS_HPP

#include <vector>

#include "scatsim/core.hpp"

namespace scatsim {

using LabelImage = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Random-shape generator: coarse uniform noise, bilinear upsampling, nested thresholds,
/// connected components, one uniform mean per component.
struct ShapeGenConfig {
  int coarse_rows = 8;
  int coarse_cols = 8;
  int n_levels = 4;
  int threshold_count = 3;
  double mu_min = 0.0;
  double mu_max = 1.0;

  void validate() const;
};

struct RandomShapes {
  ParameterMap map;
  LabelImage labels;              // region id per pixel
  std::vector<double> region_mu;  // indexed by region id
};

RandomShapes generate_random_shapes(const ShapeGenConfig& cfg, const Grid2D& out_grid, Rng& rng);

ParameterMap generate_random_parameter_map(const ShapeGenConfig& cfg, const Grid2D& out_grid, Rng& rng);

struct InclusionPhantomConfig {
  double side_mm = 15.0;
  double inclusion_radius_mm = 1.5;
  double center_lateral_mm = 7.5;
  double center_axial_mm = 7.5;
  double mu_background = 0.35;
  double mu_inclusion = 0.7;

  void validate() const;
};

struct InclusionPhantom {
  ParameterMap map;
  Mask inclusion;
  Mask background;
};

/// Square phantom (side_mm, measured from the grid origin) with one circular inclusion.
/// Pixels outside the square are empty and belong to neither mask.
InclusionPhantom make_inclusion_phantom(const InclusionPhantomConfig& cfg, const Grid2D& grid);

}  // namespace scatsim

#endif  // SCATSIM_PHANTOMS_HPP
