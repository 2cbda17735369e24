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

#include "config.hpp"

#include <fmt/format.h>

namespace scatsim::detail {

JsonReader::JsonReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
  if (!j_.is_object()) throw InvalidArgument(fmt::format("{} must be a JSON object", context_));
}

const json& JsonReader::child(const char* key) {
  used_.insert(key);
  static const json empty = json::object();
  if (!has(key)) return empty;
  return j_.at(key);
}

void JsonReader::finish() const {
  for (const auto& item : j_.items()) {
    if (!used_.count(item.key())) throw InvalidArgument(fmt::format("unknown key {}.{}", context_, item.key()));
  }
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

Psf psf_from_json(const json& j, const std::string& ctx, double fs, double c) {
  Psf p;
  p.fs = fs;
  p.c = c;
  JsonReader r(j, ctx);
  r.get("fc", p.fc);
  r.get("sigma_l2", p.sigma_l2);
  r.get("sigma_a2", p.sigma_a2);
  r.finish();
  p.validate();
  return p;
}

json to_json(const Psf& p) { return {{"fc", p.fc}, {"sigma_l2", p.sigma_l2}, {"sigma_a2", p.sigma_a2}}; }

ScattererModel model_from_json(const json& j, const std::string& ctx) {
  ScattererModel m;
  JsonReader r(j, ctx);
  r.get("rho_s", m.rho_s);
  r.get("sigma_s", m.sigma_s);
  r.get("R", m.R);
  r.finish();
  m.validate();
  return m;
}

json to_json(const ScattererModel& m) { return {{"rho_s", m.rho_s}, {"sigma_s", m.sigma_s}, {"R", m.R}}; }

ShapeGenConfig shapes_from_json(const json& j, const std::string& ctx) {
  ShapeGenConfig s;
  JsonReader r(j, ctx);
  r.get("coarse_rows", s.coarse_rows);
  r.get("coarse_cols", s.coarse_cols);
  r.get("n_levels", s.n_levels);
  r.get("threshold_count", s.threshold_count);
  r.get("mu_min", s.mu_min);
  r.get("mu_max", s.mu_max);
  r.finish();
  s.validate();
  return s;
}

json to_json(const ShapeGenConfig& s) {
  return {{"coarse_rows", s.coarse_rows}, {"coarse_cols", s.coarse_cols}, {"n_levels", s.n_levels},
          {"threshold_count", s.threshold_count}, {"mu_min", s.mu_min}, {"mu_max", s.mu_max}};
}

TrainingDataConfig training_data_from_json(const json& j, const std::string& ctx) {
  TrainingDataConfig d;
  JsonReader r(j, ctx);
  r.get("patch_lateral", d.patch_lateral);
  r.get("patch_axial", d.patch_axial);
  r.get("R", d.R);
  r.get("sigma_l2_min", d.sigma_l2_min);
  r.get("sigma_l2_max", d.sigma_l2_max);
  r.get("sigma_a2_min", d.sigma_a2_min);
  r.get("sigma_a2_max", d.sigma_a2_max);
  r.get("noise_min", d.noise_min);
  r.get("noise_max", d.noise_max);
  r.get("fc", d.fc);
  r.get("fs", d.fs);
  r.get("c", d.c);
  if (r.has("model")) d.model = model_from_json(r.child("model"), r.path("model"));
  if (r.has("shapes")) d.shapes = shapes_from_json(r.child("shapes"), r.path("shapes"));
  r.child("model");
  r.child("shapes");
  r.finish();
  d.model.R = d.R;
  d.validate();
  return d;
}

json to_json(const TrainingDataConfig& d) {
  return {{"patch_lateral", d.patch_lateral}, {"patch_axial", d.patch_axial}, {"R", d.R},
          {"sigma_l2_min", d.sigma_l2_min},   {"sigma_l2_max", d.sigma_l2_max}, {"sigma_a2_min", d.sigma_a2_min},
          {"sigma_a2_max", d.sigma_a2_max},   {"noise_min", d.noise_min},       {"noise_max", d.noise_max},
          {"fc", d.fc},                       {"fs", d.fs},                     {"c", d.c},
          {"model", to_json(d.model)},        {"shapes", to_json(d.shapes)}};
}

NetworkOptions network_from_json(const json& j, const std::string& ctx) {
  NetworkOptions n;
  JsonReader r(j, ctx);
  r.get("R", n.R);
  r.get("encoder_channels", n.encoder_channels);
  r.get("decoder_channels", n.decoder_channels);
  r.get("kernel_lateral", n.kernel_lateral);
  r.get("kernel_axial", n.kernel_axial);
  r.finish();
  n.validate();
  return n;
}

json to_json(const NetworkOptions& n) {
  return {{"R", n.R},
          {"encoder_channels", n.encoder_channels},
          {"decoder_channels", n.decoder_channels},
          {"kernel_lateral", n.kernel_lateral},
          {"kernel_axial", n.kernel_axial}};
}

TrainConfig train_from_json(const json& j, const std::string& ctx) {
  TrainConfig t;
  JsonReader r(j, ctx);
  r.get("learning_rate", t.adam.learning_rate);
  r.get("beta1", t.adam.beta1);
  r.get("beta2", t.adam.beta2);
  r.get("epsilon", t.adam.epsilon);
  r.get("batch_size", t.batch_size);
  r.get("iterations", t.iterations);
  r.get("validation_every", t.validation_every);
  r.get("validation_samples", t.validation_samples);
  r.get("reference_samples", t.reference_samples);
  r.get("queue_depth", t.queue_depth);
  r.get("output_bias", t.output_bias);
  if (r.has("network")) t.network = network_from_json(r.child("network"), r.path("network"));
  r.child("network");
  r.finish();
  return t;
}

json to_json(const TrainConfig& t) {
  return {{"learning_rate", t.adam.learning_rate}, {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},                 {"epsilon", t.adam.epsilon},
          {"batch_size", t.batch_size},            {"iterations", t.iterations},
          {"validation_every", t.validation_every}, {"validation_samples", t.validation_samples},
          {"reference_samples", t.reference_samples}, {"queue_depth", t.queue_depth},
          {"output_bias", t.output_bias},          {"network", to_json(t.network)}};
}

RladConfig rlad_from_json(const json& j, const std::string& ctx) {
  RladConfig c;
  JsonReader r(j, ctx);
  r.get("lambda_rel", c.lambda_rel);
  r.get("max_iters", c.max_iters);
  r.get("tol", c.tol);
  r.get("power_iters", c.power_iters);
  r.get("gap_every", c.gap_every);
  r.finish();
  c.validate();
  return c;
}

json to_json(const RladConfig& c) {
  return {{"lambda_rel", c.lambda_rel}, {"max_iters", c.max_iters}, {"tol", c.tol},
          {"power_iters", c.power_iters}, {"gap_every", c.gap_every}};
}

WienerConfig wiener_from_json(const json& j, const std::string& ctx) {
  WienerConfig w;
  JsonReader r(j, ctx);
  if (r.has("nsr")) {
    double v = 0.0;
    r.get("nsr", v);
    w.nsr = v;
  }
  r.child("nsr");
  r.finish();
  w.validate();
  return w;
}

json to_json(const WienerConfig& w) {
  json j = json::object();
  j["nsr"] = w.nsr ? json(*w.nsr) : json(nullptr);
  return j;
}

InclusionPhantomConfig phantom_from_json(const json& j, const std::string& ctx) {
  InclusionPhantomConfig p;
  JsonReader r(j, ctx);
  r.get("side_mm", p.side_mm);
  r.get("inclusion_radius_mm", p.inclusion_radius_mm);
  r.get("center_lateral_mm", p.center_lateral_mm);
  r.get("center_axial_mm", p.center_axial_mm);
  r.get("mu_background", p.mu_background);
  r.get("mu_inclusion", p.mu_inclusion);
  r.finish();
  p.validate();
  return p;
}

json to_json(const InclusionPhantomConfig& p) {
  return {{"side_mm", p.side_mm},
          {"inclusion_radius_mm", p.inclusion_radius_mm},
          {"center_lateral_mm", p.center_lateral_mm},
          {"center_axial_mm", p.center_axial_mm},
          {"mu_background", p.mu_background},
          {"mu_inclusion", p.mu_inclusion}};
}

ExperimentConfig experiment_from_json(const json& j, const std::string& ctx) {
  JsonReader r(j, ctx);
  ExperimentKind kind = ExperimentKind::rotation;
  if (r.has("kind")) {
    std::string k;
    r.get("kind", k);
    if (k == "rotation") {
      kind = ExperimentKind::rotation;
    } else if (k == "compression") {
      kind = ExperimentKind::compression;
    } else {
      throw InvalidArgument(fmt::format("{}.kind must be rotation or compression, got '{}'", ctx, k));
    }
  }
  r.child("kind");
  ExperimentConfig e = ExperimentConfig::defaults(kind);
  r.get("seed", e.seed);
  r.get("grid_size", e.grid_size);
  r.get("fs", e.fs);
  r.get("c", e.c);
  if (r.has("phantom")) e.phantom = phantom_from_json(r.child("phantom"), r.path("phantom"));
  r.child("phantom");
  if (r.has("psf_bank")) {
    e.psf_bank.clear();
    const json& bank = r.child("psf_bank");
    if (!bank.is_array()) throw InvalidArgument(r.path("psf_bank") + " must be an array");
    for (std::size_t i = 0; i < bank.size(); ++i) {
      e.psf_bank.push_back(psf_from_json(bank[i], fmt::format("{}.psf_bank[{}]", ctx, i), e.fs, e.c));
    }
  } else {
    for (auto& p : e.psf_bank) {
      p.fs = e.fs;
      p.c = e.c;
    }
  }
  r.child("psf_bank");
  r.get("noise_level", e.noise_level);
  if (r.has("model")) e.model = model_from_json(r.child("model"), r.path("model"));
  r.child("model");
  if (r.has("methods")) {
    std::vector<std::string> names;
    r.get("methods", names);
    e.methods.clear();
    for (const auto& n : names) e.methods.push_back(method_from_string(n));
  }
  r.child("methods");
  r.get("weights", e.weights);
  if (r.has("sweep")) {
    JsonReader s(r.child("sweep"), r.path("sweep"));
    s.get("start", e.sweep.start);
    s.get("stop", e.sweep.stop);
    s.get("step", e.sweep.step);
    s.finish();
  }
  r.child("sweep");
  if (r.has("wiener")) e.wiener = wiener_from_json(r.child("wiener"), r.path("wiener"));
  r.child("wiener");
  if (r.has("rlad")) e.rlad = rlad_from_json(r.child("rlad"), r.path("rlad"));
  r.child("rlad");
  r.get("roi_margin_mm", e.roi_margin_mm);
  r.get("patch_mm", e.patch_mm);
  r.get("histogram_bins", e.histogram.bins);
  r.get("histogram_epsilon", e.histogram.epsilon);
  r.get("aliasing_band_energy", e.aliasing_band_energy);
  r.get("aliasing_threshold", e.aliasing_threshold);
  r.get("dynamic_range_db", e.dynamic_range_db);
  r.get("gallery", e.gallery);
  r.finish();
  e.validate();
  return e;
}

json to_json(const ExperimentConfig& e) {
  json bank = json::array();
  for (const auto& p : e.psf_bank) bank.push_back(to_json(p));
  json methods = json::array();
  for (Method m : e.methods) methods.push_back(to_string(m));
  return {{"kind", e.kind == ExperimentKind::rotation ? "rotation" : "compression"},
          {"seed", e.seed},
          {"grid_size", e.grid_size},
          {"fs", e.fs},
          {"c", e.c},
          {"phantom", to_json(e.phantom)},
          {"psf_bank", bank},
          {"noise_level", e.noise_level},
          {"model", to_json(e.model)},
          {"methods", methods},
          {"weights", e.weights},
          {"sweep", {{"start", e.sweep.start}, {"stop", e.sweep.stop}, {"step", e.sweep.step}}},
          {"wiener", to_json(e.wiener)},
          {"rlad", to_json(e.rlad)},
          {"roi_margin_mm", e.roi_margin_mm},
          {"patch_mm", e.patch_mm},
          {"histogram_bins", e.histogram.bins},
          {"histogram_epsilon", e.histogram.epsilon},
          {"aliasing_band_energy", e.aliasing_band_energy},
          {"aliasing_threshold", e.aliasing_threshold},
          {"dynamic_range_db", e.dynamic_range_db},
          {"gallery", e.gallery}};
}

}  // namespace scatsim::detail
