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

#include "scatsim/phantoms.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace scatsim {

namespace {

Image bilinear_resize(const Image& coarse, int rows, int cols) {
  Image out(rows, cols);
  const int cr = static_cast<int>(coarse.rows());
  const int cc = static_cast<int>(coarse.cols());
  for (int r = 0; r < rows; ++r) {
    const double y = rows > 1 ? r * double(cr - 1) / (rows - 1) : 0.0;
    const int y0 = std::min(static_cast<int>(y), cr - 1);
    const int y1 = std::min(y0 + 1, cr - 1);
    const double fy = y - y0;
    for (int c = 0; c < cols; ++c) {
      const double x = cols > 1 ? c * double(cc - 1) / (cols - 1) : 0.0;
      const int x0 = std::min(static_cast<int>(x), cc - 1);
      const int x1 = std::min(x0 + 1, cc - 1);
      const double fx = x - x0;
      out(r, c) = (1 - fy) * ((1 - fx) * coarse(y0, x0) + fx * coarse(y0, x1)) +
                  fy * ((1 - fx) * coarse(y1, x0) + fx * coarse(y1, x1));
    }
  }
  return out;
}

// 4-connected component labelling; returns the number of components.
int label_components(const LabelImage& levels, LabelImage& labels) {
  const int rows = static_cast<int>(levels.rows());
  const int cols = static_cast<int>(levels.cols());
  labels = LabelImage::Constant(rows, cols, -1);
  std::vector<std::pair<int, int>> stack;
  int next = 0;
  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      if (labels(r0, c0) >= 0) continue;
      const int level = levels(r0, c0);
      labels(r0, c0) = next;
      stack.push_back({r0, c0});
      while (!stack.empty()) {
        auto [r, c] = stack.back();
        stack.pop_back();
        const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto& n : nbr) {
          if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
          if (labels(n[0], n[1]) >= 0 || levels(n[0], n[1]) != level) continue;
          labels(n[0], n[1]) = next;
          stack.push_back({n[0], n[1]});
        }
      }
      ++next;
    }
  }
  return next;
}

}  // namespace

void ShapeGenConfig::validate() const {
  if (coarse_rows < 2 || coarse_cols < 2) {
    throw InvalidArgument(fmt::format("coarse pattern must be at least 2x2, got {}x{}", coarse_rows, coarse_cols));
  }
  if (n_levels < 1 || threshold_count < 0) {
    throw InvalidArgument("shape generator needs n_levels >= 1 and threshold_count >= 0");
  }
  if (!(0.0 <= mu_min && mu_min <= mu_max && mu_max <= 1.0)) {
    throw InvalidArgument(fmt::format("mu range [{}, {}] must lie within [0,1]", mu_min, mu_max));
  }
}

RandomShapes generate_random_shapes(const ShapeGenConfig& cfg, const Grid2D& out_grid, Rng& rng) {
  cfg.validate();
  out_grid.validate();
  const int rows = out_grid.n_axial;
  const int cols = out_grid.n_lateral;

  Image coarse(cfg.coarse_rows, cfg.coarse_cols);
  for (Eigen::Index i = 0; i < coarse.size(); ++i) coarse.data()[i] = rng.uniform();
  const Image field = bilinear_resize(coarse, rows, cols);

  const int n_thresholds = std::min(cfg.threshold_count, cfg.n_levels - 1);
  std::vector<double> quantiles(n_thresholds);
  for (double& q : quantiles) q = rng.uniform(0.15, 0.85);
  std::sort(quantiles.begin(), quantiles.end());

  std::vector<double> sorted(field.data(), field.data() + field.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  for (double q : quantiles) {
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
    thresholds.push_back(sorted[idx]);
  }

  LabelImage levels(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = field(r, c);
      levels(r, c) = static_cast<int>(std::count_if(thresholds.begin(), thresholds.end(),
                                                    [v](double t) { return v > t; }));
    }
  }

  RandomShapes out;
  const int n_regions = label_components(levels, out.labels);
  out.region_mu.resize(n_regions);
  for (double& mu : out.region_mu) mu = rng.uniform(cfg.mu_min, cfg.mu_max);

  out.map.grid = out_grid;
  out.map.R = std::max(1, static_cast<int>(std::lround(out_grid.spacing_axial / out_grid.spacing_lateral)));
  out.map.mu.resize(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.map.mu(r, c) = out.region_mu[out.labels(r, c)];
  }
  return out;
}

ParameterMap generate_random_parameter_map(const ShapeGenConfig& cfg, const Grid2D& out_grid, Rng& rng) {
  return generate_random_shapes(cfg, out_grid, rng).map;
}

void InclusionPhantomConfig::validate() const {
  if (!(side_mm > 0.0) || !(inclusion_radius_mm > 0.0)) {
    throw InvalidArgument("phantom side and inclusion radius must be positive");
  }
  if (!(mu_background >= 0.0 && mu_background <= 1.0 && mu_inclusion >= 0.0 && mu_inclusion <= 1.0)) {
    throw InvalidArgument("phantom means must lie in [0,1]");
  }
  const double r = inclusion_radius_mm;
  if (center_lateral_mm - r < 0.0 || center_lateral_mm + r > side_mm || center_axial_mm - r < 0.0 ||
      center_axial_mm + r > side_mm) {
    throw InvalidArgument(fmt::format("inclusion (centre {}, {} mm, radius {} mm) does not fit in a {} mm phantom",
                                      center_lateral_mm, center_axial_mm, r, side_mm));
  }
}

InclusionPhantom make_inclusion_phantom(const InclusionPhantomConfig& cfg, const Grid2D& grid) {
  cfg.validate();
  grid.validate();
  const double r = cfg.inclusion_radius_mm;
  const double cl = grid.origin_lateral + cfg.center_lateral_mm;
  const double ca = grid.origin_axial + cfg.center_axial_mm;
  const double lat_end = grid.lateral_mm(grid.n_lateral - 1);
  const double ax_end = grid.axial_mm(grid.n_axial - 1);
  if (cl - r < grid.origin_lateral || cl + r > lat_end || ca - r < grid.origin_axial || ca + r > ax_end) {
    throw InvalidArgument("inclusion lies outside the phantom grid");
  }

  InclusionPhantom out;
  out.map.grid = grid;
  out.map.R = std::max(1, static_cast<int>(std::lround(grid.spacing_axial / grid.spacing_lateral)));
  out.map.mu = Image::Zero(grid.n_axial, grid.n_lateral);
  out.inclusion = Mask::Constant(grid.n_axial, grid.n_lateral, false);
  out.background = Mask::Constant(grid.n_axial, grid.n_lateral, false);
  for (int row = 0; row < grid.n_axial; ++row) {
    const double a = grid.axial_mm(row);
    if (a - grid.origin_axial >= cfg.side_mm) continue;
    for (int col = 0; col < grid.n_lateral; ++col) {
      const double l = grid.lateral_mm(col);
      if (l - grid.origin_lateral >= cfg.side_mm) continue;
      const bool inside = (l - cl) * (l - cl) + (a - ca) * (a - ca) <= r * r;
      out.inclusion(row, col) = inside;
      out.background(row, col) = !inside;
      out.map.mu(row, col) = inside ? cfg.mu_inclusion : cfg.mu_background;
    }
  }
  return out;
}

}  // namespace scatsim
