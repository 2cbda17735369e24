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

#include <cmath>
#include <cstdio>

#include <fmt/format.h>

#include "config.hpp"
#include "scatsim/experiment.hpp"
#include "scatsim/forward.hpp"
#include "scatsim/tensor_io.hpp"

namespace scatsim {

namespace {

using detail::json;
using detail::JsonReader;

// Config file contents; a manifest written by a previous run contributes its "config".
json load_config(const CommonOptions& common) {
  if (common.config.empty()) return json::object();
  json j = detail::parse_json(read_file(common.config), common.config.string());
  if (j.is_object() && j.contains("manifest_version")) return j.at("config");
  if (!j.is_object()) throw InvalidArgument(fmt::format("{} must hold a JSON object", common.config.string()));
  return j;
}

std::filesystem::path require_out(const CommonOptions& common) {
  if (common.out.empty()) throw InvalidArgument("--out is required");
  std::error_code ec;
  std::filesystem::create_directories(common.out, ec);
  if (ec) throw InvalidArgument(fmt::format("cannot create output directory '{}': {}", common.out.string(), ec.message()));
  return common.out;
}

struct Manifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  bool deterministic = false;
  json inputs = json::object();
  json outputs = json::object();

  std::string hash() const { return content_digest(config.dump()); }

  void add_output(const std::filesystem::path& dir, const std::string& name, const std::string& bytes) {
    write_file(dir / name, bytes);
    outputs[name] = content_digest(bytes);
  }

  void add_input(const std::filesystem::path& path) {
    if (path.empty()) return;
    inputs[path.string()] = content_digest(read_file(path));
  }

  void write(const std::filesystem::path& dir) const {
    json m = {{"manifest_version", 1}, {"command", command},     {"config", config},
              {"config_hash", hash()}, {"seed", seed},           {"deterministic", deterministic},
              {"inputs", inputs},      {"outputs", outputs}};
    write_file(dir / "manifest.json", m.dump(2) + "\n");
  }
};

// Imaging chain used by estimate and simulate.
struct Imaging {
  double fs = kDefaultSamplingFrequency;
  double c = kDefaultSpeedOfSound;
  std::vector<Psf> psf_bank{Psf{}};
  double noise_level = 0.0;
  ScattererModel model;
  int n_lateral = 256;
  int n_axial = 256;
  WienerConfig wiener;
  RladConfig rlad;

  DepthPsfBank bank(const Grid2D& grid) const { return DepthPsfBank::bands(grid, psf_bank); }
};

Imaging imaging_from(const json& root) {
  Imaging im;
  JsonReader top(root, "config");
  const json& j = top.child("imaging");
  JsonReader r(j, "imaging");
  r.get("fs", im.fs);
  r.get("c", im.c);
  if (r.has("psf_bank")) {
    im.psf_bank.clear();
    const json& bank = r.child("psf_bank");
    if (!bank.is_array()) throw InvalidArgument("imaging.psf_bank must be an array");
    for (std::size_t i = 0; i < bank.size(); ++i) {
      im.psf_bank.push_back(detail::psf_from_json(bank[i], fmt::format("imaging.psf_bank[{}]", i), im.fs, im.c));
    }
  } else {
    for (auto& p : im.psf_bank) {
      p.fs = im.fs;
      p.c = im.c;
    }
  }
  r.child("psf_bank");
  r.get("noise_level", im.noise_level);
  if (r.has("model")) im.model = detail::model_from_json(r.child("model"), "imaging.model");
  r.child("model");
  r.get("n_lateral", im.n_lateral);
  r.get("n_axial", im.n_axial);
  if (r.has("wiener")) im.wiener = detail::wiener_from_json(r.child("wiener"), "imaging.wiener");
  r.child("wiener");
  if (r.has("rlad")) im.rlad = detail::rlad_from_json(r.child("rlad"), "imaging.rlad");
  r.child("rlad");
  r.finish();
  if (!(im.noise_level >= 0.0)) throw InvalidArgument("imaging.noise_level must be >= 0");
  return im;
}

json to_json(const Imaging& im) {
  json bank = json::array();
  for (const auto& p : im.psf_bank) bank.push_back(detail::to_json(p));
  return {{"fs", im.fs},
          {"c", im.c},
          {"psf_bank", bank},
          {"noise_level", im.noise_level},
          {"model", detail::to_json(im.model)},
          {"n_lateral", im.n_lateral},
          {"n_axial", im.n_axial},
          {"wiener", detail::to_json(im.wiener)},
          {"rlad", detail::to_json(im.rlad)}};
}

std::uint64_t seed_from(const json& root, const CommonOptions& common) {
  std::uint64_t seed = 1;
  if (root.contains("seed")) seed = root.at("seed").get<std::uint64_t>();
  if (common.seed) seed = *common.seed;
  return seed;
}

void check_sections(const json& root, std::initializer_list<const char*> allowed) {
  for (const auto& item : root.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw InvalidArgument(fmt::format("unknown config section '{}'", item.key()));
  }
}

EnvelopeImage envelope_of(const TensorFile& t) {
  if (t.role == "rf") return envelope(RfImage{t.grid, t.values});
  if (t.role == "envelope") return EnvelopeImage{t.grid, t.values};
  throw InvalidArgument(fmt::format("expected an 'rf' or 'envelope' tensor, got role '{}'", t.role));
}

}  // namespace

RunInfo cmd_gen_data(const CommonOptions& common) {
  const json root = load_config(common);
  check_sections(root, {"seed", "data", "gen_data"});
  TrainingDataConfig data;
  data.patch_lateral = 64;
  data.patch_axial = 512;
  if (root.contains("data")) data = detail::training_data_from_json(root.at("data"), "data");
  int count = 4000;
  bool with_envelopes = false;
  if (root.contains("gen_data")) {
    JsonReader r(root.at("gen_data"), "gen_data");
    r.get("count", count);
    r.get("with_envelopes", with_envelopes);
    r.finish();
  }
  if (count < 1) throw InvalidArgument("gen_data.count must be >= 1");
  const std::uint64_t seed = seed_from(root, common);
  const auto out = require_out(common);

  Manifest m;
  m.command = "gen-data";
  m.seed = seed;
  m.deterministic = common.deterministic;
  m.config = {{"seed", seed}, {"data", detail::to_json(data)}, {"gen_data", {{"count", count}, {"with_envelopes", with_envelopes}}}};
  const TrainingDataGenerator gen(data, seed);
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    if (with_envelopes) {
      const TrainingSample s = gen.sample(idx);
      const ParameterMap pm = gen.parameter_map(idx);
      m.add_output(out, fmt::format("maps/map_{:05d}.tensor", i),
                   encode_tensor({DType::f64, "parameter_map", pm.grid, pm.mu}));
      m.add_output(out, fmt::format("envelopes/env_{:05d}.tensor", i),
                   encode_tensor({DType::f64, "envelope", data.image_grid(), s.envelope}));
    } else {
      const ParameterMap pm = gen.parameter_map(idx);
      m.add_output(out, fmt::format("maps/map_{:05d}.tensor", i),
                   encode_tensor({DType::f64, "parameter_map", pm.grid, pm.mu}));
    }
  }
  m.write(out);
  return {seed, m.hash()};
}

RunInfo cmd_train(const CommonOptions& common) {
  const json root = load_config(common);
  check_sections(root, {"seed", "data", "train"});
  TrainConfig cfg;
  if (root.contains("train")) cfg = detail::train_from_json(root.at("train"), "train");
  if (root.contains("data")) cfg.data = detail::training_data_from_json(root.at("data"), "data");
  cfg.seed = seed_from(root, common);
  cfg.deterministic = common.deterministic;
  cfg.data.R = cfg.network.R;
  cfg.data.model.R = cfg.network.R;
  cfg.validate();
  const auto out = require_out(common);

  Manifest m;
  m.command = "train";
  m.seed = cfg.seed;
  m.deterministic = cfg.deterministic;
  m.config = {{"seed", cfg.seed}, {"train", detail::to_json(cfg)}, {"data", detail::to_json(cfg.data)}};
  const TrainResult res = train(cfg, [](const LossRecord& r) {
    if (std::isfinite(r.val_loss)) {
      fmt::print(stderr, "iteration {:5d}  train {:.4f}  val {:.4f}\n", r.iteration, r.train_loss, r.val_loss);
    }
  });
  m.add_output(out, "weights.bin", res.weights.encode());
  m.add_output(out, "loss_history.csv", loss_history_csv(res.history));
  m.write(out);
  return {cfg.seed, m.hash()};
}

RunInfo cmd_estimate(const CommonOptions& common, const EstimateOptions& opts) {
  const json root = load_config(common);
  check_sections(root, {"seed", "imaging"});
  const Imaging im = imaging_from(root);
  const std::uint64_t seed = seed_from(root, common);
  if (opts.input.empty()) throw InvalidArgument("--input is required");
  const TensorFile in = load_tensor(opts.input);
  const auto out = require_out(common);

  Manifest m;
  m.command = "estimate";
  m.seed = seed;
  m.deterministic = common.deterministic;
  m.config = {{"seed", seed}, {"imaging", to_json(im)}, {"method", to_string(opts.method)},
              {"calibrate", opts.calibrate}};
  m.add_input(opts.input);
  Rng rng(seed);
  switch (opts.method) {
    case Method::sample_env: {
      const EnvelopeImage env = envelope_of(in);
      const ScattererMap sc = sample_env(env, im.model, env.grid, rng);
      m.add_output(out, "scatterers.tensor", encode_tensor({DType::f64, "scatterer_map", sc.grid, sc.amplitudes}));
      break;
    }
    case Method::trf: {
      if (in.role != "rf") throw InvalidArgument("trf needs an 'rf' tensor");
      WienerConfig w = im.wiener;
      if (!w.nsr && im.noise_level > 0.0) w.nsr = wiener_nsr_for_noise(im.noise_level);
      const TrfMap trf = wiener_trf(RfImage{in.grid, in.values}, im.bank(in.grid).center_kernel(), w);
      m.add_output(out, "trf.tensor", encode_tensor({DType::f64, "trf", trf.grid, trf.values}));
      break;
    }
    case Method::scat_rec: {
      if (in.role != "rf") throw InvalidArgument("scat-rec needs an 'rf' tensor");
      const RladResult r = scat_rec(RfImage{in.grid, in.values}, im.bank(in.grid), in.grid, im.rlad);
      if (!r.converged) {
        fmt::print(stderr, "warning: RLAD stopped after {} iterations with relative gap {:.3g}\n", r.iterations, r.gap);
      }
      std::string csv = "iteration,objective,iterate_objective\n";
      for (std::size_t k = 0; k < r.objective.size(); ++k) {
        csv += fmt::format("{},{:.12g},{:.12g}\n", k + 1, r.objective[k], r.iterate_objective[k]);
      }
      m.add_output(out, "scatterers.tensor", encode_tensor({DType::f64, "scatterer_map", r.map.grid, r.map.amplitudes}));
      m.add_output(out, "objective.csv", csv);
      break;
    }
    case Method::scat_param: {
      if (opts.weights.empty()) throw InvalidArgument("scat-param needs --weights");
      const NetworkWeights w = NetworkWeights::load(opts.weights);
      m.add_input(opts.weights);
      EnvelopeImage env = envelope_of(in);
      if (opts.calibrate) env = calibrate_intensity(env, w.reference_mean);
      ScattererModel model = im.model;
      model.R = w.options.R;
      const ScatParamResult r = scat_param(env, w, model, rng);
      m.add_output(out, "parameter_map.tensor",
                   encode_tensor({DType::f64, "parameter_map", r.parameters.grid, r.parameters.mu}));
      m.add_output(out, "scatterers.tensor",
                   encode_tensor({DType::f64, "scatterer_map", r.scatterers.grid, r.scatterers.amplitudes}));
      break;
    }
  }
  m.write(out);
  return {seed, m.hash()};
}

RunInfo cmd_simulate(const CommonOptions& common, const SimulateOptions& opts) {
  const json root = load_config(common);
  check_sections(root, {"seed", "imaging"});
  const Imaging im = imaging_from(root);
  const std::uint64_t seed = seed_from(root, common);
  const auto out = require_out(common);

  Manifest m;
  m.command = "simulate";
  m.seed = seed;
  m.deterministic = common.deterministic;
  m.config = {{"seed", seed}, {"imaging", to_json(im)}};
  m.add_input(opts.input);
  Rng rng(seed);

  Grid2D grid;
  Image rf_values;
  if (opts.input.empty()) {
    grid = make_scatterer_grid(im.n_lateral, im.n_axial, im.fs, im.c);
    rf_values = Image::Zero(grid.n_axial, grid.n_lateral);
  } else {
    const TensorFile in = load_tensor(opts.input);
    if (in.role == "parameter_map") {
      ParameterMap pm{in.grid, in.values, 1};
      pm.R = std::max(1, static_cast<int>(std::lround(in.grid.spacing_axial / in.grid.spacing_lateral)));
      pm.validate();
      grid = Grid2D::make(in.grid.n_lateral, in.grid.n_axial * pm.R, in.grid.spacing_lateral,
                          in.grid.spacing_axial / pm.R, in.grid.origin_lateral, in.grid.origin_axial);
      const ScattererMap sc = sample_scatterers(pm, im.model, grid, rng);
      m.add_output(out, "scatterers.tensor", encode_tensor({DType::f64, "scatterer_map", grid, sc.amplitudes}));
      rf_values = convolve(sc, im.bank(grid)).values;
    } else if (in.role == "scatterer_map" || in.role == "trf") {
      grid = in.grid;
      rf_values = apply_bank(in.values, im.bank(grid));
    } else {
      throw InvalidArgument(fmt::format("cannot simulate from a tensor with role '{}'", in.role));
    }
  }
  const RfImage rf = add_noise(RfImage{grid, rf_values}, NoiseModel{im.noise_level}, rng);
  const EnvelopeImage env = envelope(rf);
  m.add_output(out, "rf.tensor", encode_tensor({DType::f64, "rf", grid, rf.values}));
  m.add_output(out, "envelope.tensor", encode_tensor({DType::f64, "envelope", grid, env.values}));
  if (env.values.maxCoeff() > 0.0) {
    save_pgm(out / "bmode.pgm", bmode(env, 50.0));
    m.outputs["bmode.pgm"] = content_digest(read_file(out / "bmode.pgm"));
  }
  m.write(out);
  return {seed, m.hash()};
}

RunInfo cmd_transform(const CommonOptions& common, const TransformOptions& opts) {
  if (opts.input.empty()) throw InvalidArgument("--input is required");
  if (opts.rotate_deg.has_value() == opts.compress.has_value()) {
    throw InvalidArgument("give exactly one of --rotate or --compress");
  }
  const json root = load_config(common);
  check_sections(root, {"seed"});
  const std::uint64_t seed = seed_from(root, common);
  const TensorFile in = load_tensor(opts.input);
  const Grid2D& g = in.grid;
  const double cl = opts.center_lateral_mm.value_or(g.lateral_mm(0.5 * (g.n_lateral - 1)));
  const double ca = opts.center_axial_mm.value_or(g.axial_mm(0.5 * (g.n_axial - 1)));
  const Transform t = opts.rotate_deg ? Transform::rotation(*opts.rotate_deg, cl, ca)
                                      : Transform::compression(*opts.compress, cl, ca);
  const auto out = require_out(common);

  Manifest m;
  m.command = "transform";
  m.seed = seed;
  m.deterministic = common.deterministic;
  m.config = {{"seed", seed},
              {"kind", opts.rotate_deg ? "rotation" : "compression"},
              {"value", opts.rotate_deg ? *opts.rotate_deg : *opts.compress},
              {"center_mm", {cl, ca}}};
  m.add_input(opts.input);
  Image moved;
  if (in.role == "scatterer_map") {
    moved = transform_scatterers(ScattererMap{g, in.values}, t).amplitudes;
  } else {
    moved = resample_field(in.values, g, t);
  }
  m.add_output(out, "transformed.tensor", encode_tensor({in.dtype, in.role, g, moved}));
  m.write(out);
  return {seed, m.hash()};
}

RunInfo cmd_evaluate(const CommonOptions& common, const EvaluateOptions& opts) {
  if (opts.truth.empty() || opts.sim.empty()) throw InvalidArgument("--truth and --sim are required");
  const json root = load_config(common);
  check_sections(root, {"seed", "histogram_bins", "histogram_epsilon"});
  HistogramConfig hist;
  if (root.contains("histogram_bins")) hist.bins = root.at("histogram_bins").get<int>();
  if (root.contains("histogram_epsilon")) hist.epsilon = root.at("histogram_epsilon").get<double>();
  hist.validate();
  const std::uint64_t seed = seed_from(root, common);
  const TensorFile truth = load_tensor(opts.truth);
  const TensorFile sim = load_tensor(opts.sim);
  if (!truth.grid.same_as(sim.grid, 1e-6)) throw InvalidArgument("truth and sim grids differ");
  const auto out = require_out(common);

  Manifest m;
  m.command = "evaluate";
  m.seed = seed;
  m.deterministic = common.deterministic;
  m.config = {{"seed", seed}, {"patch_mm", opts.patch_mm}, {"histogram_bins", hist.bins},
              {"histogram_epsilon", hist.epsilon}};
  m.add_input(opts.truth);
  m.add_input(opts.sim);
  m.add_input(opts.regions);
  std::string cnr;
  if (!opts.regions.empty()) {
    const TensorFile reg = load_tensor(opts.regions);
    if (!reg.grid.matches(truth.values)) throw InvalidArgument("region labels do not match the image size");
    const RegionPair regions{reg.values == 1.0, reg.values == 2.0};
    cnr = fmt::format("{:.9g}", delta_cnr(truth.values, sim.values, regions));
  }
  const double di = delta_intensity(truth.values, sim.values);
  const double ds = delta_snr(truth.values, sim.values);
  const double kl = kl_patchwise(truth.values, sim.values, truth.grid, opts.patch_mm, hist).mean;
  m.add_output(out, "metrics.csv",
               fmt::format("delta_I,delta_SNR,delta_CNR,KL_mean\n{:.9g},{:.9g},{},{:.9g}\n", di, ds, cnr, kl));
  m.write(out);
  return {seed, m.hash()};
}

RunInfo cmd_experiment(const CommonOptions& common, std::optional<ExperimentKind> kind) {
  const json root = load_config(common);
  check_sections(root, {"experiment"});
  json section = root.contains("experiment") ? root.at("experiment") : json::object();
  if (kind) {
    const std::string k = *kind == ExperimentKind::rotation ? "rotation" : "compression";
    if (section.contains("kind") && section.at("kind") != k) {
      throw InvalidArgument(fmt::format("--kind {} contradicts the configured kind", k));
    }
    section["kind"] = k;
  }
  if (common.seed) section["seed"] = *common.seed;
  const ExperimentConfig cfg = detail::experiment_from_json(section, "experiment");
  const auto out = require_out(common);

  Manifest m;
  m.command = "experiment";
  m.seed = cfg.seed;
  m.deterministic = common.deterministic;
  m.config = {{"experiment", detail::to_json(cfg)}};
  std::optional<NetworkWeights> weights;
  if (!cfg.weights.empty()) {
    weights = NetworkWeights::load(cfg.weights);
    m.add_input(cfg.weights);
  }
  const ExperimentResult res = run_experiment(cfg, weights ? &*weights : nullptr, common.deterministic);
  m.add_output(out, "metrics.csv", metrics_csv(res.rows));
  m.add_output(out, "summary.csv", summary_csv(res.summary));
  if (!res.aliasing.empty()) m.add_output(out, "aliasing.csv", aliasing_csv(res.aliasing));
  m.outputs["roi"] = {res.roi.row0, res.roi.col0, res.roi.rows, res.roi.cols};
  const Grid2D grid = cfg.grid();
  for (const auto& [name, img] : res.gallery) {
    if (img.maxCoeff() <= 0.0) continue;
    const auto path = out / "gallery" / (name + ".pgm");
    save_pgm(path, bmode(EnvelopeImage{grid, img}, cfg.dynamic_range_db));
    m.outputs["gallery/" + name + ".pgm"] = content_digest(read_file(path));
  }
  m.write(out);
  return {cfg.seed, m.hash()};
}

}  // namespace scatsim
