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

#include "scatsim/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fft.hpp"

namespace scatsim {

Image resample_bilinear(const Image& values, const Grid2D& from, const Grid2D& to) {
  if (!from.matches(values)) throw InvalidArgument("resample: values do not match the source grid");
  if (from.same_as(to)) return values;
  const int rows = from.n_axial;
  const int cols = from.n_lateral;
  Image out(to.n_axial, to.n_lateral);
  for (int r = 0; r < to.n_axial; ++r) {
    const double y = std::clamp(from.row_at(to.axial_mm(r)), 0.0, rows - 1.0);
    const int y0 = std::min(static_cast<int>(y), rows - 1);
    const int y1 = std::min(y0 + 1, rows - 1);
    const double fy = y - y0;
    for (int c = 0; c < to.n_lateral; ++c) {
      const double x = std::clamp(from.col_at(to.lateral_mm(c)), 0.0, cols - 1.0);
      const int x0 = std::min(static_cast<int>(x), cols - 1);
      const int x1 = std::min(x0 + 1, cols - 1);
      const double fx = x - x0;
      out(r, c) = (1 - fy) * ((1 - fx) * values(y0, x0) + fx * values(y0, x1)) +
                  fy * ((1 - fx) * values(y1, x0) + fx * values(y1, x1));
    }
  }
  return out;
}

ScattererMap sample_env(const EnvelopeImage& env, const ScattererModel& model, const Grid2D& grid, Rng& rng) {
  model.validate();
  grid.validate();
  const Image values = resample_bilinear(env.values, env.grid, grid);
  ScattererMap out{grid, Image::Zero(grid.n_axial, grid.n_lateral)};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (rng.bernoulli(model.rho_s)) out.amplitudes.data()[i] = values.data()[i];
  }
  return out;
}

void WienerConfig::validate() const {
  if (nsr && !(*nsr >= 0.0 && std::isfinite(*nsr))) {
    throw InvalidArgument(fmt::format("Wiener nsr must be a finite value >= 0, got {}", *nsr));
  }
}

TrfMap wiener_trf(const RfImage& rf, const PsfKernel& kernel, const WienerConfig& cfg) {
  cfg.validate();
  if (!rf.grid.matches(rf.values)) throw InvalidArgument("RF values do not match their grid");
  const int rows = static_cast<int>(rf.values.rows());
  const int cols = static_cast<int>(rf.values.cols());
  detail::Spectrum h = detail::fft2(detail::embed_centered(kernel.taps, rows, cols));
  detail::Spectrum b = detail::fft2(rf.values);

  double max_h2 = 0.0, min_h2 = std::numeric_limits<double>::infinity();
  for (const auto& v : h.data) {
    max_h2 = std::max(max_h2, std::norm(v));
    min_h2 = std::min(min_h2, std::norm(v));
  }
  if (max_h2 == 0.0) throw NumericError("Wiener filter: PSF spectrum is identically zero");
  const double eps = cfg.nsr.value_or(1e-2 * max_h2);
  if (eps == 0.0 && min_h2 <= 1e-24 * max_h2) {
    throw NumericError("Wiener filter: nsr = 0 but the PSF spectrum vanishes at some frequency");
  }
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    b.data[i] = std::conj(h.data[i]) * b.data[i] / (std::norm(h.data[i]) + eps);
  }
  return TrfMap{rf.grid, detail::ifft2_real(std::move(b))};
}

EnvelopeImage calibrate_intensity(const EnvelopeImage& env, double reference_mean) {
  if (!(reference_mean > 0.0) || !std::isfinite(reference_mean)) {
    throw InvalidArgument(fmt::format("reference mean must be positive, got {}", reference_mean));
  }
  const double m = env.values.size() ? env.values.mean() : 0.0;
  if (!(m > 0.0)) throw InvalidArgument("cannot calibrate an envelope with non-positive mean");
  return EnvelopeImage{env.grid, env.values * (reference_mean / m)};
}

}  // namespace scatsim
