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

#include <fmt/format.h>

#include "scatsim/estimators.hpp"
#include "scatsim/neural.hpp"

namespace scatsim {

ScatParamResult scat_param(const EnvelopeImage& env, const NetworkWeights& weights, const ScattererModel& model,
                           Rng& rng) {
  model.validate();
  if (!env.grid.matches(env.values)) throw InvalidArgument("envelope values do not match their grid");
  const int R = weights.options.R;
  if (env.grid.n_axial % R != 0) {
    throw InvalidArgument(fmt::format("envelope axial size {} is not divisible by R={}", env.grid.n_axial, R));
  }
  const Image raw = network_predict(weights, env.values);

  ScatParamResult out;
  out.parameters.R = R;
  out.parameters.grid = Grid2D::make(env.grid.n_lateral, env.grid.n_axial / R, env.grid.spacing_lateral,
                                     env.grid.spacing_axial * R, env.grid.origin_lateral, env.grid.origin_axial);
  out.parameters.mu = raw.cwiseMax(0.0).cwiseMin(1.0);
  out.scatterers = sample_scatterers(out.parameters, model, env.grid, rng);
  return out;
}

}  // namespace scatsim
