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

#include "scatsim/core.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace scatsim {

namespace {

bool close_rel(double a, double b, double rtol) {
  return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b));
}

// Returns the integer n with |ratio - n| small, or 0 if the ratio is not integral.
int integral_ratio(double ratio) {
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-6 * n) return 0;
  return static_cast<int>(n);
}

}  // namespace

Grid2D Grid2D::make(int n_lateral, int n_axial, double spacing_lateral, double spacing_axial,
                    double origin_lateral, double origin_axial) {
  Grid2D g{n_lateral, n_axial, spacing_lateral, spacing_axial, origin_lateral, origin_axial};
  g.validate();
  return g;
}

void Grid2D::validate() const {
  if (n_lateral < 1 || n_axial < 1) {
    throw InvalidArgument(fmt::format("grid needs at least 1x1 pixels, got {}x{}", n_lateral, n_axial));
  }
  if (!(spacing_lateral > 0.0) || !(spacing_axial > 0.0) || !std::isfinite(spacing_lateral) ||
      !std::isfinite(spacing_axial)) {
    throw InvalidArgument(fmt::format("grid spacings must be positive, got {} / {}",
                                      spacing_lateral, spacing_axial));
  }
}

bool Grid2D::isotropic(double rtol) const {
  return close_rel(spacing_lateral, spacing_axial, rtol);
}

bool Grid2D::same_as(const Grid2D& o, double rtol) const {
  return n_lateral == o.n_lateral && n_axial == o.n_axial &&
         close_rel(spacing_lateral, o.spacing_lateral, rtol) &&
         close_rel(spacing_axial, o.spacing_axial, rtol) &&
         std::abs(origin_lateral - o.origin_lateral) <= rtol * spacing_lateral &&
         std::abs(origin_axial - o.origin_axial) <= rtol * spacing_axial;
}

double scatterer_spacing_mm(double fs_mhz, double c_m_s) {
  if (!(fs_mhz > 0.0) || !(c_m_s > 0.0)) {
    throw InvalidArgument(fmt::format("fs and c must be positive, got {} MHz / {} m/s", fs_mhz, c_m_s));
  }
  // c [m/s] / (2 fs [1/us]) = c * 1e3 mm / (2 fs * 1e6 s^-1)
  return c_m_s * 1e-3 / (2.0 * fs_mhz);
}

Grid2D make_scatterer_grid(int n_lateral, int n_axial, double fs_mhz, double c_m_s) {
  if (n_lateral < 1 || n_axial < 1) {
    throw InvalidArgument(fmt::format("grid size must be positive, got {}x{}", n_lateral, n_axial));
  }
  const double d = scatterer_spacing_mm(fs_mhz, c_m_s);
  return Grid2D::make(n_lateral, n_axial, d, d);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)), seed_(seed) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("Rng::below(0)");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Rng Rng::derive(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

void ScattererModel::validate() const {
  if (!(rho_s >= 0.0 && rho_s <= 1.0)) {
    throw InvalidArgument(fmt::format("rho_s must lie in [0,1], got {}", rho_s));
  }
  if (!(sigma_s >= 0.0) || !std::isfinite(sigma_s)) {
    throw InvalidArgument(fmt::format("sigma_s must be >= 0, got {}", sigma_s));
  }
  if (R < 1) throw InvalidArgument(fmt::format("axial coarsening R must be >= 1, got {}", R));
}

void Psf::validate() const {
  if (!(fc > 0.0) || !(sigma_l2 > 0.0) || !(sigma_a2 > 0.0) || !(fs > 0.0) || !(c > 0.0)) {
    throw InvalidArgument(fmt::format("PSF parameters must be positive (fc={}, sl2={}, sa2={}, fs={}, c={})",
                                      fc, sigma_l2, sigma_a2, fs, c));
  }
  if (!(fc < fs / 2.0)) {
    throw InvalidArgument(fmt::format("PSF centre frequency {} MHz violates Nyquist for fs={} MHz", fc, fs));
  }
}

void ParameterMap::validate() const {
  grid.validate();
  if (!grid.matches(mu)) throw InvalidArgument("parameter map dimensions do not match its grid");
  if (R < 1) throw InvalidArgument(fmt::format("parameter map R must be >= 1, got {}", R));
  if (mu.size() > 0 && (!mu.isFinite().all() || mu.minCoeff() < 0.0 || mu.maxCoeff() > 1.0)) {
    throw InvalidArgument("parameter map values must lie in [0,1]");
  }
}

RayleighDensity check_rayleigh_density(const ScattererModel& model, const Grid2D& grid) {
  if (!grid.isotropic()) {
    throw InvalidArgument("Rayleigh density check needs an isotropic scatterer grid");
  }
  RayleighDensity out;
  out.per_mm2 = model.rho_s / (grid.spacing_lateral * grid.spacing_axial);
  out.pass = out.per_mm2 >= kMinScatterersPerMm2;
  return out;
}

ParameterMap upsample_parameter_map(const ParameterMap& pm, const Grid2D& target) {
  pm.validate();
  target.validate();
  const int fl = integral_ratio(pm.grid.spacing_lateral / target.spacing_lateral);
  const int fa = integral_ratio(pm.grid.spacing_axial / target.spacing_axial);
  if (fl == 0 || fa == 0) {
    throw InvalidArgument(fmt::format(
        "target spacing ({}, {}) mm does not divide parameter-map spacing ({}, {}) mm",
        target.spacing_lateral, target.spacing_axial, pm.grid.spacing_lateral, pm.grid.spacing_axial));
  }
  if (target.n_lateral != pm.grid.n_lateral * fl || target.n_axial != pm.grid.n_axial * fa) {
    throw InvalidArgument(fmt::format("target grid {}x{} is not the {}x{} map replicated by ({}, {})",
                                      target.n_lateral, target.n_axial, pm.grid.n_lateral,
                                      pm.grid.n_axial, fl, fa));
  }
  ParameterMap out;
  out.grid = target;
  out.mu.resize(target.n_axial, target.n_lateral);
  for (int r = 0; r < target.n_axial; ++r) {
    for (int c = 0; c < target.n_lateral; ++c) out.mu(r, c) = pm.mu(r / fa, c / fl);
  }
  out.R = std::max(1, static_cast<int>(std::lround(target.spacing_axial / target.spacing_lateral)));
  return out;
}

}  // namespace scatsim
