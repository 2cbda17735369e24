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

#ifndef SCATSIM_METRICS_HPP
#define SCATSIM_METRICS_HPP

#include <vector>

#include "scatsim/core.hpp"

namespace scatsim {

/// Two disjoint, non-empty contrasting regions.
struct RegionPair {
  Mask region1;
  Mask region2;

  void validate(Eigen::Index rows, Eigen::Index cols) const;
};

struct HistogramConfig {
  int bins = 50;
  double epsilon = 1e-10;

  void validate() const;
};

/// sim * (sum truth / sum sim).
Image brightness_equalize(const Image& sim, const Image& truth);

/// |I_t - I_s| / I_t on mean intensities.
double delta_intensity(const Image& truth, const Image& sim);

/// Relative SNR (mean / std) mismatch after brightness equalisation.
double delta_snr(const Image& truth, const Image& sim);

/// CNR = |mu1 - mu2| / (sigma1 + sigma2); relative mismatch after equalisation.
double contrast_to_noise(const Image& image, const RegionPair& regions);
double delta_cnr(const Image& truth, const Image& sim, const RegionPair& regions);

/// KL(p || q) of two histograms after epsilon smoothing and normalisation.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q, double epsilon);

/// Histograms of two samples over shared bins spanning their pooled range.
std::pair<std::vector<double>, std::vector<double>> shared_histograms(const std::vector<double>& a,
                                                                      const std::vector<double>& b,
                                                                      int bins);

struct PatchwiseKl {
  double mean = 0.0;
  std::vector<double> patches;  // row-major over the patch tiling
};

/// Mean of KL(h_sim || h_truth) over non-overlapping square patches of patch_mm side.
/// Partial patches at the right/bottom edges are dropped.
PatchwiseKl kl_patchwise(const Image& truth, const Image& sim, const Grid2D& grid, double patch_mm,
                         const HistogramConfig& cfg = {});

struct RayleighFit {
  double scale = 0.0;  // sigma_hat
  double ks = 0.0;     // Kolmogorov-Smirnov statistic against the fitted law
};

/// Maximum-likelihood Rayleigh scale sqrt(sum v^2 / 2n) and its KS statistic.
RayleighFit rayleigh_fit(const std::vector<double>& values);

/// mean / std of a Rayleigh law: sqrt(pi / (4 - pi)).
double rayleigh_snr();

double image_snr(const Image& image);

}  // namespace scatsim

#endif  // SCATSIM_METRICS_HPP
