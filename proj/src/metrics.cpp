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

#include "scatsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace scatsim {

namespace {

void check_same_shape(const Image& a, const Image& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(fmt::format("images differ in size: {}x{} vs {}x{}", a.rows(), a.cols(), b.rows(),
                                      b.cols()));
  }
  if (a.size() == 0) throw InvalidArgument("empty image");
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments masked_moments(const Image& img, const Mask& mask) {
  double s = 0.0;
  long n = 0;
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    if (mask.data()[i]) {
      s += img.data()[i];
      ++n;
    }
  }
  const double mean = s / static_cast<double>(n);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    if (mask.data()[i]) ss += (img.data()[i] - mean) * (img.data()[i] - mean);
  }
  return {mean, std::sqrt(ss / static_cast<double>(n))};
}

Moments moments(const Image& img) {
  const double mean = img.mean();
  return {mean, std::sqrt((img - mean).square().mean())};
}

}  // namespace

void RegionPair::validate(Eigen::Index rows, Eigen::Index cols) const {
  if (region1.rows() != rows || region1.cols() != cols || region2.rows() != rows || region2.cols() != cols) {
    throw InvalidArgument("region masks do not match the image size");
  }
  if (!region1.any() || !region2.any()) throw InvalidArgument("CNR regions must be non-empty");
  if ((region1 && region2).any()) throw InvalidArgument("CNR regions must be disjoint");
}

void HistogramConfig::validate() const {
  if (bins < 2) throw InvalidArgument(fmt::format("histograms need at least 2 bins, got {}", bins));
  if (!(epsilon > 0.0)) throw InvalidArgument("histogram smoothing epsilon must be positive");
}

Image brightness_equalize(const Image& sim, const Image& truth) {
  check_same_shape(sim, truth);
  const double ss = sim.sum();
  if (!(ss > 0.0)) throw InvalidArgument("cannot equalise an image with non-positive total intensity");
  return sim * (truth.sum() / ss);
}

double delta_intensity(const Image& truth, const Image& sim) {
  check_same_shape(truth, sim);
  const double it = truth.mean();
  if (it == 0.0) throw InvalidArgument("ground-truth mean intensity is zero");
  return std::abs(it - sim.mean()) / std::abs(it);
}

double image_snr(const Image& image) {
  const Moments m = moments(image);
  if (!(m.stddev > 0.0)) throw InvalidArgument("SNR of a constant image is undefined");
  return m.mean / m.stddev;
}

double delta_snr(const Image& truth, const Image& sim) {
  const Image eq = brightness_equalize(sim, truth);
  const double st = image_snr(truth);
  return std::abs(st - image_snr(eq)) / std::abs(st);
}

double contrast_to_noise(const Image& image, const RegionPair& regions) {
  regions.validate(image.rows(), image.cols());
  const Moments m1 = masked_moments(image, regions.region1);
  const Moments m2 = masked_moments(image, regions.region2);
  const double denom = m1.stddev + m2.stddev;
  if (!(denom > 0.0)) throw InvalidArgument("CNR undefined: both regions have zero variance");
  return std::abs(m1.mean - m2.mean) / denom;
}

double delta_cnr(const Image& truth, const Image& sim, const RegionPair& regions) {
  const double ct = contrast_to_noise(truth, regions);
  if (ct == 0.0) throw InvalidArgument("ground-truth CNR is zero");
  const double cs = contrast_to_noise(brightness_equalize(sim, truth), regions);
  return std::abs(ct - cs) / ct;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q, double epsilon) {
  if (p.size() != q.size() || p.empty()) throw InvalidArgument("histograms must have equal, non-zero length");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i] + epsilon;
    sq += q[i] + epsilon;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = (p[i] + epsilon) / sp;
    const double b = (q[i] + epsilon) / sq;
    kl += a * std::log(a / b);
  }
  return std::max(0.0, kl);
}

std::pair<std::vector<double>, std::vector<double>> shared_histograms(const std::vector<double>& a,
                                                                      const std::vector<double>& b,
                                                                      int bins) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  std::vector<double> ha(bins, 0.0), hb(bins, 0.0);
  const double width = hi - lo;
  auto bin_of = [&](double v) {
    if (!(width > 0.0)) return 0;
    return std::clamp(static_cast<int>((v - lo) / width * bins), 0, bins - 1);
  };
  for (double v : a) ha[bin_of(v)] += 1.0;
  for (double v : b) hb[bin_of(v)] += 1.0;
  return {ha, hb};
}

PatchwiseKl kl_patchwise(const Image& truth, const Image& sim, const Grid2D& grid, double patch_mm,
                         const HistogramConfig& cfg) {
  cfg.validate();
  check_same_shape(truth, sim);
  if (!grid.matches(truth)) throw InvalidArgument("KL grid does not match the images");
  const int pl = static_cast<int>(std::lround(patch_mm / grid.spacing_lateral));
  const int pa = static_cast<int>(std::lround(patch_mm / grid.spacing_axial));
  const int nl = pl > 0 ? grid.n_lateral / pl : 0;
  const int na = pa > 0 ? grid.n_axial / pa : 0;
  if (nl == 0 || na == 0) {
    throw InvalidArgument(fmt::format("image ({:.3f} x {:.3f} mm) is smaller than one {} mm patch",
                                      grid.width_mm(), grid.depth_mm(), patch_mm));
  }
  const Image eq = brightness_equalize(sim, truth);
  PatchwiseKl out;
  std::vector<double> t, s;
  for (int pr = 0; pr < na; ++pr) {
    for (int pc = 0; pc < nl; ++pc) {
      t.clear();
      s.clear();
      for (int r = pr * pa; r < (pr + 1) * pa; ++r) {
        for (int c = pc * pl; c < (pc + 1) * pl; ++c) {
          t.push_back(truth(r, c));
          s.push_back(eq(r, c));
        }
      }
      auto [hs, ht] = shared_histograms(s, t, cfg.bins);
      out.patches.push_back(kl_divergence(hs, ht, cfg.epsilon));
    }
  }
  double sum = 0.0;
  for (double v : out.patches) sum += v;
  out.mean = sum / static_cast<double>(out.patches.size());
  return out;
}

RayleighFit rayleigh_fit(const std::vector<double>& values) {
  if (values.size() < 100) throw InvalidArgument(fmt::format("Rayleigh fit needs >= 100 samples, got {}", values.size()));
  double ss = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw InvalidArgument("Rayleigh fit received a negative or NaN sample");
    ss += v * v;
  }
  const double n = static_cast<double>(values.size());
  RayleighFit fit;
  fit.scale = std::sqrt(ss / (2.0 * n));
  if (!(fit.scale > 0.0)) throw InvalidArgument("Rayleigh fit of an all-zero sample");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double inv2s2 = 1.0 / (2.0 * fit.scale * fit.scale);
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = 1.0 - std::exp(-sorted[i] * sorted[i] * inv2s2);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  fit.ks = d;
  return fit;
}

double rayleigh_snr() { return std::sqrt(std::numbers::pi / (4.0 - std::numbers::pi)); }

}  // namespace scatsim
