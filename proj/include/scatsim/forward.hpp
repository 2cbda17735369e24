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

#ifndef SCATSIM_FORWARD_HPP
#define SCATSIM_FORWARD_HPP

#include <vector>

#include "scatsim/core.hpp"

namespace scatsim {

/**
 * A PSF sampled on the scatterer grid.
 *
 * taps has (2 * half_axial + 1) rows and (2 * half_lateral + 1) columns and unit l2 norm.
 * Kernels produced by discretize_psf are separable; `axial` and `lateral` then hold the
 * 1D factors whose outer product equals taps. Measured kernels leave them empty.
 */
struct PsfKernel {
  Psf psf;
  Image taps;
  int half_lateral = 0;
  int half_axial = 0;
  std::vector<double> axial;
  std::vector<double> lateral;

  bool separable() const { return !axial.empty() && !lateral.empty(); }
};

/// Samples exp(-l^2/sl2 - a^2/sa2) cos(2 pi fc/fs k_a) over +-ceil(3 sigma / spacing) and
/// normalises to unit l2 norm. The grid must be isotropic and at least a quarter of the
/// kernel size per axis.
PsfKernel discretize_psf(const Psf& psf, const Grid2D& grid);

/// Wraps a measured odd-sized kernel (not normalised, not assumed separable).
PsfKernel kernel_from_taps(const Image& taps);

/// Patchwise-invariant PSF: each axial row band uses its own kernel.
struct DepthPsfBank {
  struct Entry {
    int row_begin = 0;
    int row_end = 0;  // exclusive
    PsfKernel kernel;
  };

  Grid2D grid;
  std::vector<Entry> entries;

  static DepthPsfBank single(const Grid2D& grid, PsfKernel kernel);
  /// Equal-height bands, one per PSF, ordered by depth.
  static DepthPsfBank bands(const Grid2D& grid, const std::vector<Psf>& psfs);

  void validate() const;
  const PsfKernel& kernel_at_row(int row) const;
  /// Kernel used at the centre depth of the field of view.
  const PsfKernel& center_kernel() const { return kernel_at_row(grid.n_axial / 2); }
};

/// Depth-dependent "same"-size convolution with zero padding (the forward operator A).
Image apply_bank(const Image& values, const DepthPsfBank& bank);
/// Adjoint of apply_bank.
Image apply_bank_adjoint(const Image& values, const DepthPsfBank& bank);

/// Spatial "same"-size convolution with zero padding, straight from the definition.
Image convolve_direct(const Image& values, const Image& taps);
/// Same result as convolve_direct, computed through zero-padded FFTs.
Image convolve_fft(const Image& values, const Image& taps);

RfImage convolve(const ScattererMap& scatterers, const DepthPsfBank& bank);

/// Bernoulli(rho_s) occupancy with N(mu, sigma_s) amplitudes clamped at zero.
ScattererMap sample_scatterers(const ParameterMap& pm, const ScattererModel& model, const Grid2D& grid,
                               Rng& rng);

/// Adds i.i.d. N(0, (level * mean|rf|)^2) noise.
RfImage add_noise(const RfImage& rf, const NoiseModel& noise, Rng& rng);

/// Magnitude of the axial analytic signal of every lateral line.
EnvelopeImage envelope(const RfImage& rf);

/// Log compression: 20 log10(env / max) clipped to [-dr, 0] and mapped to [0, 1].
Image bmode(const EnvelopeImage& env, double dynamic_range_db);

struct Simulation {
  ScattererMap scatterers;
  RfImage rf;
  EnvelopeImage envelope;
};

/// Sampling, convolution, noise and envelope detection on the bank's grid.
Simulation simulate(const ParameterMap& pm, const ScattererModel& model, const DepthPsfBank& bank,
                    const NoiseModel& noise, Rng& rng);

}  // namespace scatsim

#endif  // SCATSIM_FORWARD_HPP
