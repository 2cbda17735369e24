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

#ifndef SCATSIM_ESTIMATORS_HPP
#define SCATSIM_ESTIMATORS_HPP

#include <optional>
#include <vector>

#include "scatsim/core.hpp"
#include "scatsim/forward.hpp"

namespace scatsim {

class NetworkWeights;

/// Bilinear resampling of an image onto another grid by physical position, clamped at the edges.
Image resample_bilinear(const Image& values, const Grid2D& from, const Grid2D& to);

/// Bernoulli(rho_s) positions on `grid`; each keeps the envelope value found there.
ScattererMap sample_env(const EnvelopeImage& env, const ScattererModel& model, const Grid2D& grid, Rng& rng);

struct WienerConfig {
  /// Regulariser added to |H|^2. Unset: 1e-2 * max |H|^2.
  std::optional<double> nsr;

  void validate() const;
};

/// Regulariser for a known relative noise level.
inline double wiener_nsr_for_noise(double noise_level) { return noise_level * noise_level; }

/// Circulant Wiener deconvolution conj(H) B / (|H|^2 + nsr) on the RF grid.
TrfMap wiener_trf(const RfImage& rf, const PsfKernel& kernel, const WienerConfig& cfg);

struct RladConfig {
  double lambda_rel = 0.1;
  int max_iters = 500;
  double tol = 1e-4;      // relative primal-dual gap
  int power_iters = 20;
  int gap_every = 10;

  void validate() const;
};

struct RladResult {
  ScattererMap map;
  /// Best objective reached up to each iteration.
  std::vector<double> objective;
  /// Objective of the raw iterate at each iteration.
  std::vector<double> iterate_objective;
  double lambda = 0.0;
  double operator_norm = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// min |A x - b|_1 + lambda |x|_1 subject to x >= 0, with A the bank convolution on out_grid
/// followed by integer decimation onto the RF grid. lambda = lambda_rel * |A^T sign(b)|_inf,
/// the smallest weight for which x = 0 is optimal, so the problem is invariant to RF gain.
RladResult scat_rec(const RfImage& rf, const DepthPsfBank& bank, const Grid2D& out_grid,
                    const RladConfig& cfg);

/// RLAD objective for a given x (same operator as scat_rec).
double rlad_objective(const Image& x, const Image& b, const DepthPsfBank& bank, const Grid2D& rf_grid,
                      double lambda);

/// Scales env so its mean equals reference_mean.
EnvelopeImage calibrate_intensity(const EnvelopeImage& env, double reference_mean);

struct PsfFit {
  Psf psf;
  double residual = 0.0;  // relative l2 misfit of the normalised kernels
};

/// Least-squares fit of (fc, sigma_l2, sigma_a2) to a centred, odd-sized measured kernel
/// on an isotropic grid; fs and c are taken from `base`.
PsfFit fit_psf_params(const Image& measured, const Grid2D& grid, const Psf& base = {});

struct ScatParamResult {
  ParameterMap parameters;  // clamped to [0,1], coarse axial grid
  ScattererMap scatterers;  // sampled on the envelope grid
};

/// Network estimate of the parameter map, clamped, then one scatterer realisation.
ScatParamResult scat_param(const EnvelopeImage& env, const NetworkWeights& weights,
                           const ScattererModel& model, Rng& rng);

}  // namespace scatsim

#endif  // SCATSIM_ESTIMATORS_HPP
