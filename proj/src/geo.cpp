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

#include "scatsim/geo.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace scatsim {

Transform Transform::rotation(double angle_deg, double cl, double ca) {
  Transform t{Kind::rotation, angle_deg, 0.0, cl, ca};
  t.validate();
  return t;
}

Transform Transform::compression(double strain, double cl, double ca) {
  Transform t{Kind::axial_compression, 0.0, strain, cl, ca};
  t.validate();
  return t;
}

void Transform::validate() const {
  if (!std::isfinite(angle_deg) || !std::isfinite(center_lateral_mm) || !std::isfinite(center_axial_mm)) {
    throw InvalidArgument("transform parameters must be finite");
  }
  if (!(strain >= 0.0 && strain < 0.9)) {
    throw InvalidArgument(fmt::format("axial strain must lie in [0, 0.9), got {}", strain));
  }
}

std::pair<double, double> Transform::apply(double l, double a) const {
  const double dl = l - center_lateral_mm;
  const double da = a - center_axial_mm;
  if (kind == Kind::rotation) {
    const double th = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    return {center_lateral_mm + c * dl - s * da, center_axial_mm + s * dl + c * da};
  }
  return {l, center_axial_mm + da * (1.0 - strain)};
}

std::pair<double, double> Transform::inverse(double l, double a) const {
  const double dl = l - center_lateral_mm;
  const double da = a - center_axial_mm;
  if (kind == Kind::rotation) {
    const double th = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    return {center_lateral_mm + c * dl + s * da, center_axial_mm - s * dl + c * da};
  }
  return {l, center_axial_mm + da / (1.0 - strain)};
}

std::vector<Point> to_points(const ScattererMap& map) {
  std::vector<Point> pts;
  for (int r = 0; r < map.amplitudes.rows(); ++r) {
    for (int c = 0; c < map.amplitudes.cols(); ++c) {
      const double v = map.amplitudes(r, c);
      if (v != 0.0) pts.push_back({map.grid.lateral_mm(c), map.grid.axial_mm(r), v});
    }
  }
  return pts;
}

std::vector<Point> transform_points(const std::vector<Point>& points, const Transform& t) {
  t.validate();
  std::vector<Point> out;
  out.reserve(points.size());
  for (const Point& p : points) {
    auto [l, a] = t.apply(p.lateral, p.axial);
    out.push_back({l, a, p.amplitude});
  }
  return out;
}

ScattererMap bin_points(const std::vector<Point>& points, const Grid2D& grid) {
  ScattererMap out{grid, Image::Zero(grid.n_axial, grid.n_lateral)};
  for (const Point& p : points) {
    const long c = std::lround(grid.col_at(p.lateral));
    const long r = std::lround(grid.row_at(p.axial));
    if (c < 0 || c >= grid.n_lateral || r < 0 || r >= grid.n_axial) continue;
    out.amplitudes(r, c) += p.amplitude;
  }
  return out;
}

ScattererMap transform_scatterers(const ScattererMap& map, const Transform& t) {
  return bin_points(transform_points(to_points(map), t), map.grid);
}

Image resample_field(const Image& values, const Grid2D& grid, const Transform& t) {
  t.validate();
  const int rows = grid.n_axial;
  const int cols = grid.n_lateral;
  Image out = Image::Zero(rows, cols);
  auto at = [&](long r, long c) -> double {
    if (r < 0 || r >= rows || c < 0 || c >= cols) return 0.0;
    return values(r, c);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      auto [l, a] = t.inverse(grid.lateral_mm(c), grid.axial_mm(r));
      const double x = grid.col_at(l);
      const double y = grid.row_at(a);
      if (x <= -1.0 || y <= -1.0 || x >= cols || y >= rows) continue;
      const long x0 = static_cast<long>(std::floor(x));
      const long y0 = static_cast<long>(std::floor(y));
      const double fx = x - x0;
      const double fy = y - y0;
      out(r, c) = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                  fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
    }
  }
  return out;
}

TrfMap transform_trf(const TrfMap& trf, const Transform& t) {
  return TrfMap{trf.grid, resample_field(trf.values, trf.grid, t)};
}

Mask transform_mask(const Mask& mask, const Grid2D& grid, const Transform& t) {
  Mask out = Mask::Constant(grid.n_axial, grid.n_lateral, false);
  for (int r = 0; r < grid.n_axial; ++r) {
    for (int c = 0; c < grid.n_lateral; ++c) {
      auto [l, a] = t.inverse(grid.lateral_mm(c), grid.axial_mm(r));
      const long cc = std::lround(grid.col_at(l));
      const long rr = std::lround(grid.row_at(a));
      if (cc < 0 || cc >= grid.n_lateral || rr < 0 || rr >= grid.n_axial) continue;
      out(r, c) = mask(rr, cc);
    }
  }
  return out;
}

}  // namespace scatsim
