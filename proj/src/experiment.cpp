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

#include "scatsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "config.hpp"
#include "fft.hpp"
#include "scatsim/forward.hpp"
#include "scatsim/tensor_io.hpp"

namespace scatsim {

namespace {

using detail::json;

std::string fmt_num(double v) { return fmt::format("{:.9g}", v); }

Image crop(const Image& img, const Roi& roi) { return img.block(roi.row0, roi.col0, roi.rows, roi.cols); }

Mask crop(const Mask& m, const Roi& roi) { return m.block(roi.row0, roi.col0, roi.rows, roi.cols); }

Transform make_transform(const ExperimentConfig& cfg, double v) {
  const double cx = 0.5 * cfg.phantom.side_mm;
  const double cy = 0.5 * cfg.phantom.side_mm;
  return cfg.kind == ExperimentKind::rotation ? Transform::rotation(v, cx, cy) : Transform::compression(v, cx, cy);
}

SummaryStat stat_of(std::vector<double> v) {
  SummaryStat s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.max = *std::max_element(v.begin(), v.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  return s;
}

// Runs body(i) for i in [0, n); sequential when deterministic or single-core.
template <class F>
void for_each_index(int n, bool deterministic, F&& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = deterministic ? 1 : static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Representation {
  Method method = Method::sample_env;
  ScattererMap points;
  TrfMap field;
};

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::sample_env: return "sample-env";
    case Method::trf: return "trf";
    case Method::scat_rec: return "scat-rec";
    case Method::scat_param: return "scat-param";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::sample_env, Method::trf, Method::scat_rec, Method::scat_param}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument(fmt::format("unknown method '{}' (expected sample-env, trf, scat-rec or scat-param)", name));
}

std::vector<double> Sweep::values() const {
  if (!(step > 0.0) || !(stop >= start) || !std::isfinite(start) || !std::isfinite(stop)) {
    throw InvalidArgument(fmt::format("sweep [{}, {}] step {} is invalid", start, stop, step));
  }
  const int n = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(start + i * step);
  return v;
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig e;
  e.kind = kind;
  e.psf_bank = {Psf{6.0, 0.3, 0.03}, Psf{6.0, 0.2, 0.03}, Psf{6.0, 0.3, 0.03}};
  if (kind == ExperimentKind::compression) e.sweep = {0.1, 0.5, 0.1};
  return e;
}

void ExperimentConfig::validate() const {
  if (grid_size < 16) throw InvalidArgument("grid_size must be >= 16");
  if (psf_bank.empty()) throw InvalidArgument("psf_bank needs at least one PSF");
  for (const auto& p : psf_bank) p.validate();
  phantom.validate();
  model.validate();
  if (!(noise_level >= 0.0)) throw InvalidArgument("noise_level must be >= 0");
  const auto vals = sweep.values();
  if (kind == ExperimentKind::compression) {
    for (double v : vals) {
      if (!(v >= 0.0 && v < 0.9)) throw InvalidArgument(fmt::format("strain {} outside [0, 0.9)", v));
    }
  }
  if (methods.empty()) throw InvalidArgument("at least one method is required");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (methods[i] == methods[j]) throw InvalidArgument("methods must not repeat");
    }
    if (methods[i] == Method::scat_param && weights.empty()) {
      throw InvalidArgument("scat-param needs a weights file");
    }
  }
  wiener.validate();
  rlad.validate();
  histogram.validate();
  if (!(roi_margin_mm >= 0.0) || !(patch_mm > 0.0)) throw InvalidArgument("roi_margin_mm and patch_mm are invalid");
  if (!(aliasing_band_energy > 0.0 && aliasing_band_energy < 1.0) || !(aliasing_threshold > 0.0)) {
    throw InvalidArgument("aliasing settings are invalid");
  }
  if (!(dynamic_range_db > 0.0)) throw InvalidArgument("dynamic_range_db must be positive");
  if (grid().width_mm() + 1e-9 < phantom.side_mm) {
    throw InvalidArgument(fmt::format("grid of {} px ({:.3f} mm) does not cover the {} mm phantom", grid_size,
                                      grid().width_mm(), phantom.side_mm));
  }
}

Grid2D ExperimentConfig::grid() const { return make_scatterer_grid(grid_size, grid_size, fs, c); }

ExperimentConfig experiment_config_from_json(std::string_view text) {
  return detail::experiment_from_json(detail::parse_json(text, "experiment config"), "experiment");
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) { return detail::to_json(cfg).dump(); }

Roi evaluation_roi(const ExperimentConfig& cfg) {
  const Grid2D grid = cfg.grid();
  const double side = cfg.phantom.side_mm;
  const double lo = cfg.roi_margin_mm;
  const double hi = side - cfg.roi_margin_mm;
  const double cx = 0.5 * side, cy = 0.5 * side;
  std::vector<Transform> ts{Transform::rotation(0.0, cx, cy)};
  for (double v : cfg.sweep.values()) ts.push_back(make_transform(cfg, v));

  auto inside = [&](double l, double a) {
    for (const auto& t : ts) {
      auto [pl, pa] = t.inverse(l, a);
      if (pl < lo || pl > hi || pa < lo || pa > hi) return false;
    }
    return true;
  };
  auto fits = [&](double hl, double ha) {
    return inside(cx - hl, cy - ha) && inside(cx + hl, cy - ha) && inside(cx - hl, cy + ha) && inside(cx + hl, cy + ha);
  };

  double best_area = -1.0, best_hl = 0.0, best_ha = 0.0;
  for (int k = -24; k <= 24; ++k) {
    const double aspect = std::pow(8.0, k / 24.0);  // lateral / axial
    double a0 = 0.0, a1 = 0.5 * side;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (a0 + a1);
      (fits(aspect * mid, mid) ? a0 : a1) = mid;
    }
    const double area = aspect * a0 * a0;
    if (area > best_area) {
      best_area = area;
      best_hl = aspect * a0;
      best_ha = a0;
    }
  }
  Roi roi;
  roi.col0 = std::max(0, static_cast<int>(std::ceil(grid.col_at(cx - best_hl) - 1e-9)));
  roi.row0 = std::max(0, static_cast<int>(std::ceil(grid.row_at(cy - best_ha) - 1e-9)));
  const int col1 = std::min(grid.n_lateral - 1, static_cast<int>(std::floor(grid.col_at(cx + best_hl) + 1e-9)));
  const int row1 = std::min(grid.n_axial - 1, static_cast<int>(std::floor(grid.row_at(cy + best_ha) + 1e-9)));
  roi.cols = col1 - roi.col0 + 1;
  roi.rows = row1 - roi.row0 + 1;
  if (roi.rows < 2 || roi.cols < 2) throw InvalidArgument("no evaluation region survives every sweep transform");
  return roi;
}

double energy_above_band(const Image& before, const Image& after, double band_energy) {
  if (before.rows() != after.rows() || before.cols() != after.cols()) {
    throw InvalidArgument("spectral comparison needs equal image sizes");
  }
  const int rows = static_cast<int>(before.rows());
  auto power = [&](const Image& img) {
    detail::Spectrum s{rows, static_cast<int>(img.cols()), {}};
    s.data.assign(img.data(), img.data() + img.size());
    detail::fft_columns_inplace(s, false);
    std::vector<double> p(rows / 2 + 1, 0.0);
    for (int r = 0; r < rows; ++r) {
      const int k = std::min(r, rows - r);
      for (int c = 0; c < s.cols; ++c) p[k] += std::norm(s(r, c));
    }
    return p;
  };
  const auto pb = power(before);
  const auto pa = power(after);
  const double tb = std::accumulate(pb.begin(), pb.end(), 0.0);
  const double ta = std::accumulate(pa.begin(), pa.end(), 0.0);
  if (!(tb > 0.0) || !(ta > 0.0)) throw NumericError("spectral comparison of an all-zero image");
  std::size_t edge = 0;
  double acc = 0.0;
  for (; edge < pb.size(); ++edge) {
    acc += pb[edge];
    if (acc >= band_energy * tb) break;
  }
  double above = 0.0;
  for (std::size_t k = edge + 1; k < pa.size(); ++k) above += pa[k];
  return above / ta;
}

std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<Method> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
  }
  for (Method m : order) {
    std::vector<double> di, ds, dc, kl;
    for (const auto& r : rows) {
      if (r.method != m) continue;
      di.push_back(r.delta_i);
      ds.push_back(r.delta_snr);
      dc.push_back(r.delta_cnr);
      kl.push_back(r.kl);
    }
    out.push_back({m, stat_of(di), stat_of(ds), stat_of(dc), stat_of(kl)});
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const NetworkWeights* weights, bool deterministic) {
  cfg.validate();
  const Grid2D grid = cfg.grid();
  const InclusionPhantom phantom = make_inclusion_phantom(cfg.phantom, grid);
  const DepthPsfBank bank = DepthPsfBank::bands(grid, cfg.psf_bank);
  const NoiseModel noise{cfg.noise_level};
  const Rng root(cfg.seed);

  Rng truth_rng = root.derive(1);
  const ScattererMap truth = sample_scatterers(phantom.map, cfg.model, grid, truth_rng);
  Rng noise_rng = root.derive(2);
  const RfImage rf0 = add_noise(convolve(truth, bank), noise, noise_rng);
  const EnvelopeImage env0 = envelope(rf0);

  ExperimentResult res;
  std::vector<Representation> reps;
  for (std::size_t j = 0; j < cfg.methods.size(); ++j) {
    Representation rep;
    rep.method = cfg.methods[j];
    Rng rng = root.derive(10 + j);
    switch (rep.method) {
      case Method::sample_env:
        rep.points = sample_env(env0, cfg.model, grid, rng);
        break;
      case Method::trf: {
        WienerConfig w = cfg.wiener;
        if (!w.nsr && cfg.noise_level > 0.0) w.nsr = wiener_nsr_for_noise(cfg.noise_level);
        rep.field = wiener_trf(rf0, bank.center_kernel(), w);
        break;
      }
      case Method::scat_rec: {
        const RladResult r = scat_rec(rf0, bank, grid, cfg.rlad);
        res.rlad_gap = r.gap;
        res.rlad_iterations = r.iterations;
        rep.points = r.map;
        break;
      }
      case Method::scat_param:
        if (!weights) throw InvalidArgument("scat-param needs network weights");
        rep.points = scat_param(env0, *weights, cfg.model, rng).scatterers;
        break;
    }
    reps.push_back(std::move(rep));
  }

  res.roi = evaluation_roi(cfg);
  const Roi roi = res.roi;
  const Grid2D roi_grid = Grid2D::make(roi.cols, roi.rows, grid.spacing_lateral, grid.spacing_axial);
  const std::vector<double> values = cfg.sweep.values();
  const int n_methods = static_cast<int>(reps.size());
  const int n_values = static_cast<int>(values.size());

  std::vector<MetricRow> rows(static_cast<std::size_t>(n_values) * n_methods);
  std::vector<AliasingRow> aliasing(n_values);
  std::vector<std::vector<std::pair<std::string, Image>>> gallery(n_values);

  for_each_index(n_values, deterministic, [&](int i) {
    const double v = values[i];
    const Transform t = make_transform(cfg, v);
    Rng truth_noise = root.derive(100 + i);
    const EnvelopeImage truth_env =
        envelope(add_noise(convolve(transform_scatterers(truth, t), bank), noise, truth_noise));
    const Image truth_c = crop(truth_env.values, roi);
    const RegionPair regions{crop(transform_mask(phantom.inclusion, grid, t), roi),
                             crop(transform_mask(phantom.background, grid, t), roi)};
    const bool keep = cfg.gallery && (i == 0 || i == n_values - 1);
    if (keep) gallery[i].emplace_back(fmt::format("truth_{}", fmt_num(v)), truth_env.values);

    for (int j = 0; j < n_methods; ++j) {
      const Representation& rep = reps[j];
      RfImage rf;
      if (rep.method == Method::trf) {
        const TrfMap moved = transform_trf(rep.field, t);
        rf = RfImage{grid, apply_bank(moved.values, bank)};
        if (cfg.kind == ExperimentKind::compression) {
          const double e = energy_above_band(crop(rep.field.values, roi), crop(moved.values, roi),
                                             cfg.aliasing_band_energy);
          aliasing[i] = {v, e, e > cfg.aliasing_threshold};
        }
      } else {
        rf = convolve(transform_scatterers(rep.points, t), bank);
      }
      Rng method_noise = root.derive(1000 + static_cast<std::uint64_t>(i) * 16 + j);
      const EnvelopeImage env = envelope(add_noise(rf, noise, method_noise));
      const Image sim_c = crop(env.values, roi);
      MetricRow row;
      row.method = rep.method;
      row.value = v;
      row.delta_i = delta_intensity(truth_c, sim_c);
      row.delta_snr = delta_snr(truth_c, sim_c);
      row.delta_cnr = delta_cnr(truth_c, sim_c, regions);
      row.kl = kl_patchwise(truth_c, sim_c, roi_grid, cfg.patch_mm, cfg.histogram).mean;
      rows[static_cast<std::size_t>(i) * n_methods + j] = row;
      if (keep) gallery[i].emplace_back(fmt::format("{}_{}", to_string(rep.method), fmt_num(v)), env.values);
    }
  });

  // Method-major order mirrors the per-method blocks of the summary tables.
  for (int j = 0; j < n_methods; ++j) {
    for (int i = 0; i < n_values; ++i) res.rows.push_back(rows[static_cast<std::size_t>(i) * n_methods + j]);
  }
  res.summary = summarize(res.rows);
  const bool has_trf = std::find(cfg.methods.begin(), cfg.methods.end(), Method::trf) != cfg.methods.end();
  if (cfg.kind == ExperimentKind::compression && has_trf) res.aliasing = aliasing;
  for (auto& g : gallery) {
    for (auto& item : g) res.gallery.push_back(std::move(item));
  }
  return res;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "method,transform_value,delta_I,delta_SNR,delta_CNR,KL_mean\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", to_string(r.method), fmt_num(r.value), fmt_num(r.delta_i),
                       fmt_num(r.delta_snr), fmt_num(r.delta_cnr), fmt_num(r.kl));
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "method";
  for (const char* m : {"delta_I", "delta_SNR", "delta_CNR", "KL"}) {
    for (const char* s : {"mean", "med", "max"}) out += fmt::format(",{}_{}", m, s);
  }
  out += "\n";
  for (const auto& r : rows) {
    out += to_string(r.method);
    for (const SummaryStat* s : {&r.delta_i, &r.delta_snr, &r.delta_cnr, &r.kl}) {
      out += fmt::format(",{},{},{}", fmt_num(s->mean), fmt_num(s->median), fmt_num(s->max));
    }
    out += "\n";
  }
  return out;
}

std::string aliasing_csv(const std::vector<AliasingRow>& rows) {
  std::string out = "transform_value,energy_above_band,aliasing\n";
  for (const auto& r : rows) out += fmt::format("{},{},{}\n", fmt_num(r.value), fmt_num(r.energy_above_band), r.flag ? 1 : 0);
  return out;
}

}  // namespace scatsim
