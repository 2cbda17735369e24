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

// Command-line front end: thin flag parsing over the command layer.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "scatsim/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void add_common(CLI::App* cmd, scatsim::CommonOptions& o, std::optional<std::uint64_t>& seed) {
  cmd->add_option("--config", o.config, "JSON configuration file (or a manifest from a previous run)");
  cmd->add_option("--seed", seed, "Random seed (overrides the config)");
  cmd->add_flag("--deterministic", o.deterministic, "Run sequentially for bitwise reproducibility");
  cmd->add_option("--out", o.out, "Output directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolution-based ultrasound speckle simulation and scatterer estimation"};
  app.require_subcommand(1);

  scatsim::CommonOptions common;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen-data", "Write random parameter maps (and optionally envelopes)");
  add_common(gen, common, seed);

  auto* train = app.add_subcommand("train", "Train the parameter-map network");
  add_common(train, common, seed);

  scatsim::EstimateOptions est;
  std::string method = "sample-env";
  auto* estimate = app.add_subcommand("estimate", "Estimate a scatterer representation from an image");
  add_common(estimate, common, seed);
  estimate->add_option("--method", method, "sample-env | trf | scat-rec | scat-param")
      ->check(CLI::IsMember({"sample-env", "trf", "scat-rec", "scat-param"}));
  estimate->add_option("--input", est.input, "RF (or envelope) tensor file")->required();
  estimate->add_option("--weights", est.weights, "Network weights for scat-param");
  estimate->add_flag("--calibrate", est.calibrate, "Rescale the envelope to the training mean (scat-param)");

  scatsim::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Convolve a map with the PSF bank and detect the envelope");
  add_common(simulate, common, seed);
  simulate->add_option("--input", sim.input, "Parameter map, scatterer map or TRF tensor (default: empty map)");

  scatsim::TransformOptions tr;
  auto* transform = app.add_subcommand("transform", "Rotate or axially compress a map");
  add_common(transform, common, seed);
  transform->add_option("--input", tr.input, "Map tensor file")->required();
  auto* rot = transform->add_option("--rotate", tr.rotate_deg, "Rotation angle in degrees");
  auto* comp = transform->add_option("--compress", tr.compress, "Axial strain as a fraction");
  rot->excludes(comp);
  transform->add_option("--center-lateral", tr.center_lateral_mm, "Centre, lateral mm (default: grid centre)");
  transform->add_option("--center-axial", tr.center_axial_mm, "Centre, axial mm (default: grid centre)");

  scatsim::EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compare a simulated envelope with a reference");
  add_common(evaluate, common, seed);
  evaluate->add_option("--truth", ev.truth, "Reference envelope tensor")->required();
  evaluate->add_option("--sim", ev.sim, "Simulated envelope tensor")->required();
  evaluate->add_option("--regions", ev.regions, "Label tensor: 1 = region 1, 2 = region 2");
  evaluate->add_option("--patch-mm", ev.patch_mm, "KL patch side in mm");

  std::string kind;
  auto* experiment = app.add_subcommand("experiment", "Run a rotation or compression sweep");
  add_common(experiment, common, seed);
  experiment->add_option("--kind", kind, "rotation | compression")->check(CLI::IsMember({"rotation", "compression"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  common.seed = seed;

  try {
    scatsim::RunInfo info;
    if (*gen) {
      info = scatsim::cmd_gen_data(common);
    } else if (*train) {
      info = scatsim::cmd_train(common);
    } else if (*estimate) {
      est.method = scatsim::method_from_string(method);
      info = scatsim::cmd_estimate(common, est);
    } else if (*simulate) {
      info = scatsim::cmd_simulate(common, sim);
    } else if (*transform) {
      info = scatsim::cmd_transform(common, tr);
    } else if (*evaluate) {
      info = scatsim::cmd_evaluate(common, ev);
    } else {
      std::optional<scatsim::ExperimentKind> k;
      if (kind == "rotation") k = scatsim::ExperimentKind::rotation;
      if (kind == "compression") k = scatsim::ExperimentKind::compression;
      info = scatsim::cmd_experiment(common, k);
    }
    fmt::print("seed={} config_hash={}\n", info.seed, info.config_hash);
  } catch (const scatsim::NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kExitNumeric;
  } catch (const scatsim::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return 0;
}
