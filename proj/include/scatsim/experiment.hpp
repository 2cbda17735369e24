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

#ifndef SCATSIM_EXPERIMENT_HPP
#define SCATSIM_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scatsim/core.hpp"
#include "scatsim/estimators.hpp"
#include "scatsim/geo.hpp"
#include "scatsim/metrics.hpp"
#include "scatsim/neural.hpp"
#include "scatsim/phantoms.hpp"
#include "scatsim/training.hpp"

namespace scatsim {

enum class Method { sample_env, trf, scat_rec, scat_param };

const char* to_string(Method m);
Method method_from_string(const std::string& name);

enum class ExperimentKind { rotation, compression };

struct Sweep {
  double start = 0.0;
  double stop = 45.0;
  double step = 5.0;

  std::vector<double> values() const;
};

/// Everything a rotation or compression experiment depends on. Strains are fractions.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::rotation;
  std::uint64_t seed = 1;
  int grid_size = 784;
  double fs = kDefaultSamplingFrequency;
  double c = kDefaultSpeedOfSound;
  InclusionPhantomConfig phantom;
  std::vector<Psf> psf_bank;
  double noise_level = 0.0;
  ScattererModel model;
  std::vector<Method> methods{Method::sample_env, Method::trf, Method::scat_rec, Method::scat_param};
  std::string weights;  // required for scat-param
  Sweep sweep;
  WienerConfig wiener;
  RladConfig rlad;
  double roi_margin_mm = 1.0;
  double patch_mm = 3.0;
  HistogramConfig histogram;
  double aliasing_band_energy = 0.95;
  double aliasing_threshold = 0.10;
  double dynamic_range_db = 50.0;
  bool gallery = true;

  void validate() const;
  Grid2D grid() const;
  /// Defaults for the given kind: 0-45 deg in 5 deg steps, or 10-50 % strain in 10 % steps.
  static ExperimentConfig defaults(ExperimentKind kind);
};

ExperimentConfig experiment_config_from_json(std::string_view text);
/// Canonical JSON (stable key order), the input of the config hash.
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct MetricRow {
  Method method = Method::sample_env;
  double value = 0.0;  // angle in degrees or strain fraction
  double delta_i = 0.0;
  double delta_snr = 0.0;
  double delta_cnr = 0.0;
  double kl = 0.0;
};

struct SummaryStat {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct SummaryRow {
  Method method = Method::sample_env;
  SummaryStat delta_i, delta_snr, delta_cnr, kl;
};

struct AliasingRow {
  double value = 0.0;
  double energy_above_band = 0.0;
  bool flag = false;
};

/// Axis-aligned evaluation rectangle [row0, row0 + rows) x [col0, col0 + cols).
struct Roi {
  int row0 = 0, col0 = 0, rows = 0, cols = 0;
};

struct ExperimentResult {
  std::vector<MetricRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<AliasingRow> aliasing;  // TRF only
  Roi roi;
  double rlad_gap = 0.0;
  int rlad_iterations = 0;
  /// Envelopes kept for the gallery: (name, image) at the first and last sweep values.
  std::vector<std::pair<std::string, Image>> gallery;
};

/// Largest centred rectangle whose pre-images under every sweep transform stay inside the
/// phantom shrunk by the margin.
Roi evaluation_roi(const ExperimentConfig& cfg);

/// Share of axial spectral energy of `after` above the frequency holding `band_energy` of
/// the energy of `before` (mean power spectrum over columns).
double energy_above_band(const Image& before, const Image& after, double band_energy);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const NetworkWeights* weights, bool deterministic);

std::string metrics_csv(const std::vector<MetricRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string aliasing_csv(const std::vector<AliasingRow>& rows);
std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows);

// ---- command layer -------------------------------------------------------------------

struct CommonOptions {
  std::filesystem::path config;  // optional JSON file
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::filesystem::path out;
};

struct EstimateOptions {
  Method method = Method::sample_env;
  std::filesystem::path input;    // RF tensor (envelope accepted for sample-env / scat-param)
  std::filesystem::path weights;  // scat-param
  bool calibrate = false;         // scat-param: rescale input to the training mean
};

struct SimulateOptions {
  std::filesystem::path input;  // parameter map, scatterer map or TRF tensor; empty: zero map
};

struct TransformOptions {
  std::filesystem::path input;
  std::optional<double> rotate_deg;
  std::optional<double> compress;
  std::optional<double> center_lateral_mm;
  std::optional<double> center_axial_mm;
};

struct EvaluateOptions {
  std::filesystem::path truth;
  std::filesystem::path sim;
  std::filesystem::path regions;  // optional label tensor: 1 = region 1, 2 = region 2
  double patch_mm = 3.0;
};

/// Printed by every command.
struct RunInfo {
  std::uint64_t seed = 0;
  std::string config_hash;
};

RunInfo cmd_gen_data(const CommonOptions& common);
RunInfo cmd_train(const CommonOptions& common);
RunInfo cmd_estimate(const CommonOptions& common, const EstimateOptions& opts);
RunInfo cmd_simulate(const CommonOptions& common, const SimulateOptions& opts);
RunInfo cmd_transform(const CommonOptions& common, const TransformOptions& opts);
RunInfo cmd_evaluate(const CommonOptions& common, const EvaluateOptions& opts);
RunInfo cmd_experiment(const CommonOptions& common, std::optional<ExperimentKind> kind = std::nullopt);

}  // namespace scatsim

#endif  // SCATSIM_EXPERIMENT_HPP
