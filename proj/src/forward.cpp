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

#include "scatsim/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fft.hpp"

namespace scatsim {

namespace {

// dst[c] += scale * sum_j k[j + half] * src[c - j]
void lateral_convolve_add(const double* src, double* dst, int cols, const double* k, int half,
                          double scale) {
  for (int j = -half; j <= half; ++j) {
    const double w = scale * k[j + half];
    if (w == 0.0) continue;
    const int c_begin = std::max(0, j);
    const int c_end = std::min(cols, cols + j);
    const double* s = src - j;
    for (int c = c_begin; c < c_end; ++c) dst[c] += w * s[c];
  }
}

// dst[c] += scale * sum_j k[j + half] * src[c + j]
void lateral_correlate_add(const double* src, double* dst, int cols, const double* k, int half,
                           double scale) {
  for (int j = -half; j <= half; ++j) {
    const double w = scale * k[j + half];
    if (w == 0.0) continue;
    const int c_begin = std::max(0, -j);
    const int c_end = std::min(cols, cols - j);
    const double* s = src + j;
    for (int c = c_begin; c < c_end; ++c) dst[c] += w * s[c];
  }
}

double density(const Image& values, int row_begin, int row_end) {
  if (row_end <= row_begin) return 0.0;
  const auto block = values.middleRows(row_begin, row_end - row_begin);
  return static_cast<double>((block != 0.0).count()) / static_cast<double>(block.size());
}

// out rows [r0, r1) of the convolution of `in` with one kernel.
void convolve_band(const Image& in, const PsfKernel& k, int r0, int r1, Image& out) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  const int ha = k.half_axial;
  const int hl = k.half_lateral;
  if (!k.separable()) {
    for (int r = r0; r < r1; ++r) {
      for (int i = -ha; i <= ha; ++i) {
        const int s = r - i;
        if (s < 0 || s >= rows) continue;
        lateral_convolve_add(&in(s, 0), &out(r, 0), cols, &k.taps(i + ha, 0), hl, 1.0);
      }
    }
    return;
  }
  // Axial pass into a band buffer, then the lateral pass.
  Image tmp = Image::Zero(r1 - r0, cols);
  const int s0 = std::max(0, r0 - ha);
  const int s1 = std::min(rows, r1 + ha);
  if (density(in, s0, s1) < 0.25) {
    for (int s = s0; s < s1; ++s) {
      const int lo = std::max(r0, s - ha);
      const int hi = std::min(r1, s + ha + 1);
      for (int c = 0; c < cols; ++c) {
        const double v = in(s, c);
        if (v == 0.0) continue;
        for (int r = lo; r < hi; ++r) tmp(r - r0, c) += k.axial[r - s + ha] * v;
      }
    }
  } else {
    for (int r = r0; r < r1; ++r) {
      double* dst = &tmp(r - r0, 0);
      for (int i = -ha; i <= ha; ++i) {
        const int s = r - i;
        if (s < 0 || s >= rows) continue;
        const double w = k.axial[i + ha];
        const double* src = &in(s, 0);
        for (int c = 0; c < cols; ++c) dst[c] += w * src[c];
      }
    }
  }
  for (int r = r0; r < r1; ++r) {
    lateral_convolve_add(&tmp(r - r0, 0), &out(r, 0), cols, k.lateral.data(), hl, 1.0);
  }
}

// Adjoint contribution of the rows [r0, r1) of `in` through one kernel.
void correlate_band(const Image& in, const PsfKernel& k, int r0, int r1, Image& out) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  const int ha = k.half_axial;
  const int hl = k.half_lateral;
  if (!k.separable()) {
    for (int r = r0; r < r1; ++r) {
      for (int i = -ha; i <= ha; ++i) {
        const int s = r - i;
        if (s < 0 || s >= rows) continue;
        lateral_correlate_add(&in(r, 0), &out(s, 0), cols, &k.taps(i + ha, 0), hl, 1.0);
      }
    }
    return;
  }
  Image tmp = Image::Zero(r1 - r0, cols);
  for (int r = r0; r < r1; ++r) {
    lateral_correlate_add(&in(r, 0), &tmp(r - r0, 0), cols, k.lateral.data(), hl, 1.0);
  }
  for (int r = r0; r < r1; ++r) {
    const double* src = &tmp(r - r0, 0);
    for (int i = -ha; i <= ha; ++i) {
      const int s = r - i;
      if (s < 0 || s >= rows) continue;
      const double w = k.axial[i + ha];
      double* dst = &out(s, 0);
      for (int c = 0; c < cols; ++c) dst[c] += w * src[c];
    }
  }
}

void check_bank_input(const Image& values, const DepthPsfBank& bank) {
  if (!bank.grid.matches(values)) {
    throw InvalidArgument(fmt::format("image is {}x{} but the PSF bank grid is {}x{}", values.rows(),
                                      values.cols(), bank.grid.n_axial, bank.grid.n_lateral));
  }
}

}  // namespace

PsfKernel discretize_psf(const Psf& psf, const Grid2D& grid) {
  psf.validate();
  grid.validate();
  if (!grid.isotropic()) throw InvalidArgument("PSF discretisation needs an isotropic grid");
  const double d = grid.spacing_lateral;
  PsfKernel k;
  k.psf = psf;
  k.half_lateral = static_cast<int>(std::ceil(3.0 * std::sqrt(psf.sigma_l2) / d));
  k.half_axial = static_cast<int>(std::ceil(3.0 * std::sqrt(psf.sigma_a2) / d));
  const int nl = 2 * k.half_lateral + 1;
  const int na = 2 * k.half_axial + 1;
  if (nl > 4 * grid.n_lateral || na > 4 * grid.n_axial) {
    throw InvalidArgument(fmt::format("PSF kernel {}x{} (axial x lateral) exceeds 4x the {}x{} image",
                                      na, nl, grid.n_axial, grid.n_lateral));
  }
  const double cycles_per_px = psf.fc / psf.fs;
  k.lateral.resize(nl);
  k.axial.resize(na);
  for (int j = -k.half_lateral; j <= k.half_lateral; ++j) {
    const double l = j * d;
    k.lateral[j + k.half_lateral] = std::exp(-l * l / psf.sigma_l2);
  }
  for (int i = -k.half_axial; i <= k.half_axial; ++i) {
    const double a = i * d;
    k.axial[i + k.half_axial] =
        std::exp(-a * a / psf.sigma_a2) * std::cos(2.0 * std::numbers::pi * cycles_per_px * i);
  }
  auto normalise = [](std::vector<double>& v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double n = std::sqrt(ss);
    for (double& x : v) x /= n;
  };
  normalise(k.lateral);
  normalise(k.axial);
  k.taps.resize(na, nl);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nl; ++j) k.taps(i, j) = k.axial[i] * k.lateral[j];
  }
  return k;
}

PsfKernel kernel_from_taps(const Image& taps) {
  if (taps.rows() % 2 == 0 || taps.cols() % 2 == 0) {
    throw InvalidArgument(fmt::format("kernel must have odd dimensions, got {}x{}", taps.rows(), taps.cols()));
  }
  PsfKernel k;
  k.taps = taps;
  k.half_axial = static_cast<int>(taps.rows()) / 2;
  k.half_lateral = static_cast<int>(taps.cols()) / 2;
  return k;
}

DepthPsfBank DepthPsfBank::single(const Grid2D& grid, PsfKernel kernel) {
  DepthPsfBank bank;
  bank.grid = grid;
  bank.entries.push_back({0, grid.n_axial, std::move(kernel)});
  return bank;
}

DepthPsfBank DepthPsfBank::bands(const Grid2D& grid, const std::vector<Psf>& psfs) {
  if (psfs.empty()) throw InvalidArgument("PSF bank needs at least one PSF");
  if (static_cast<int>(psfs.size()) > grid.n_axial) throw InvalidArgument("more PSF bands than image rows");
  DepthPsfBank bank;
  bank.grid = grid;
  const int n = static_cast<int>(psfs.size());
  for (int i = 0; i < n; ++i) {
    const int r0 = static_cast<int>(static_cast<long>(grid.n_axial) * i / n);
    const int r1 = static_cast<int>(static_cast<long>(grid.n_axial) * (i + 1) / n);
    bank.entries.push_back({r0, r1, discretize_psf(psfs[i], grid)});
  }
  return bank;
}

void DepthPsfBank::validate() const {
  grid.validate();
  if (entries.empty()) throw InvalidArgument("PSF bank is empty");
  int expected = 0;
  for (const auto& e : entries) {
    if (e.row_begin != expected || e.row_end <= e.row_begin) {
      throw InvalidArgument("PSF bank depth intervals must partition the image rows in order");
    }
    expected = e.row_end;
  }
  if (expected != grid.n_axial) throw InvalidArgument("PSF bank depth intervals do not cover the image");
}

const PsfKernel& DepthPsfBank::kernel_at_row(int row) const {
  for (const auto& e : entries) {
    if (row >= e.row_begin && row < e.row_end) return e.kernel;
  }
  throw InvalidArgument(fmt::format("row {} is outside the PSF bank", row));
}

Image apply_bank(const Image& values, const DepthPsfBank& bank) {
  bank.validate();
  check_bank_input(values, bank);
  Image out = Image::Zero(values.rows(), values.cols());
  for (const auto& e : bank.entries) convolve_band(values, e.kernel, e.row_begin, e.row_end, out);
  return out;
}

Image apply_bank_adjoint(const Image& values, const DepthPsfBank& bank) {
  bank.validate();
  check_bank_input(values, bank);
  Image out = Image::Zero(values.rows(), values.cols());
  for (const auto& e : bank.entries) correlate_band(values, e.kernel, e.row_begin, e.row_end, out);
  return out;
}

Image convolve_direct(const Image& values, const Image& taps) {
  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  const int ha = static_cast<int>(taps.rows()) / 2;
  const int hl = static_cast<int>(taps.cols()) / 2;
  Image out = Image::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -ha; i <= ha; ++i) {
        const int s = r - i;
        if (s < 0 || s >= rows) continue;
        for (int j = -hl; j <= hl; ++j) {
          const int t = c - j;
          if (t < 0 || t >= cols) continue;
          acc += taps(i + ha, j + hl) * values(s, t);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Image convolve_fft(const Image& values, const Image& taps) {
  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  const int ha = static_cast<int>(taps.rows()) / 2;
  const int hl = static_cast<int>(taps.cols()) / 2;
  const int pr = rows + static_cast<int>(taps.rows()) - 1;
  const int pc = cols + static_cast<int>(taps.cols()) - 1;
  Image a = Image::Zero(pr, pc);
  a.topLeftCorner(rows, cols) = values;
  Image b = Image::Zero(pr, pc);
  b.topLeftCorner(taps.rows(), taps.cols()) = taps;
  detail::Spectrum fa = detail::fft2(a);
  const detail::Spectrum fb = detail::fft2(b);
  for (std::size_t i = 0; i < fa.data.size(); ++i) fa.data[i] *= fb.data[i];
  const Image full = detail::ifft2_real(std::move(fa));
  return full.block(ha, hl, rows, cols);
}

RfImage convolve(const ScattererMap& scatterers, const DepthPsfBank& bank) {
  if (!scatterers.grid.same_as(bank.grid)) {
    throw InvalidArgument("scatterer grid does not match the PSF bank grid");
  }
  return RfImage{scatterers.grid, apply_bank(scatterers.amplitudes, bank)};
}

ScattererMap sample_scatterers(const ParameterMap& pm, const ScattererModel& model, const Grid2D& grid,
                               Rng& rng) {
  model.validate();
  const ParameterMap fine = pm.grid.same_as(grid) ? pm : upsample_parameter_map(pm, grid);
  ScattererMap out{grid, Image::Zero(grid.n_axial, grid.n_lateral)};
  for (Eigen::Index i = 0; i < out.amplitudes.size(); ++i) {
    if (rng.uniform() < model.rho_s) {
      const double amp = fine.mu.data()[i] + model.sigma_s * rng.normal();
      out.amplitudes.data()[i] = std::max(0.0, amp);
    }
  }
  return out;
}

RfImage add_noise(const RfImage& rf, const NoiseModel& noise, Rng& rng) {
  if (!(noise.level >= 0.0)) throw InvalidArgument(fmt::format("noise level must be >= 0, got {}", noise.level));
  RfImage out = rf;
  if (noise.level == 0.0 || rf.values.size() == 0) return out;
  const double sd = noise.level * rf.values.abs().mean();
  if (sd == 0.0) return out;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values.data()[i] += sd * rng.normal();
  return out;
}

EnvelopeImage envelope(const RfImage& rf) {
  const int rows = static_cast<int>(rf.values.rows());
  const int cols = static_cast<int>(rf.values.cols());
  if (rows < 2) throw InvalidArgument("envelope detection needs at least two axial samples");
  detail::Spectrum s{rows, cols, {}};
  s.data.resize(static_cast<std::size_t>(rf.values.size()));
  for (Eigen::Index i = 0; i < rf.values.size(); ++i) s.data[i] = rf.values.data()[i];
  detail::fft_columns_inplace(s, false);
  // One-sided spectrum: keep DC (and Nyquist), double positive, drop negative frequencies.
  for (int k = 1; k < rows; ++k) {
    double w;
    if (2 * k < rows) {
      w = 2.0;
    } else if (2 * k == rows) {
      w = 1.0;
    } else {
      w = 0.0;
    }
    for (int c = 0; c < cols; ++c) s(k, c) *= w;
  }
  detail::fft_columns_inplace(s, true);
  EnvelopeImage env{rf.grid, Image(rows, cols)};
  const double scale = 1.0 / rows;
  for (Eigen::Index i = 0; i < env.values.size(); ++i) env.values.data()[i] = std::abs(s.data[i]) * scale;
  return env;
}

Image bmode(const EnvelopeImage& env, double dynamic_range_db) {
  if (!(dynamic_range_db > 0.0)) throw InvalidArgument("dynamic range must be positive");
  const double peak = env.values.size() > 0 ? env.values.maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw InvalidArgument("B-mode conversion of an all-zero envelope");
  Image out(env.values.rows(), env.values.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double v = env.values.data()[i];
    const double db = v > 0.0 ? 20.0 * std::log10(v / peak) : -dynamic_range_db;
    out.data()[i] = (std::clamp(db, -dynamic_range_db, 0.0) + dynamic_range_db) / dynamic_range_db;
  }
  return out;
}

Simulation simulate(const ParameterMap& pm, const ScattererModel& model, const DepthPsfBank& bank,
                    const NoiseModel& noise, Rng& rng) {
  Simulation sim;
  sim.scatterers = sample_scatterers(pm, model, bank.grid, rng);
  sim.rf = add_noise(convolve(sim.scatterers, bank), noise, rng);
  sim.envelope = envelope(sim.rf);
  return sim;
}

}  // namespace scatsim
