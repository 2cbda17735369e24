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

#ifndef SCATSIM_TRAINING_HPP
#define SCATSIM_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scatsim/core.hpp"
#include "scatsim/neural.hpp"
#include "scatsim/phantoms.hpp"

namespace scatsim {

/// Distribution of synthetic training pairs (envelope patch, coarse parameter map).
struct TrainingDataConfig {
  int patch_lateral = 32;
  int patch_axial = 256;
  int R = 4;
  double sigma_l2_min = 0.2, sigma_l2_max = 1.0;    // mm^2
  double sigma_a2_min = 0.02, sigma_a2_max = 0.05;  // mm^2
  double noise_min = 0.02, noise_max = 0.2;
  double fc = 6.0;
  double fs = kDefaultSamplingFrequency;
  double c = kDefaultSpeedOfSound;
  ScattererModel model;
  ShapeGenConfig shapes;

  void validate() const;
  Grid2D image_grid() const;
  Grid2D map_grid() const;
};

struct TrainingSample {
  Image envelope;  // patch_axial x patch_lateral
  Image target;    // patch_axial / R x patch_lateral
  Psf psf;
  double noise_level = 0.0;
};

/// Each sample depends only on (seed, index), so batches can be produced in any order.
class TrainingDataGenerator {
 public:
  TrainingDataGenerator(TrainingDataConfig cfg, std::uint64_t seed);

  const TrainingDataConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  TrainingSample sample(std::uint64_t index) const;
  /// The parameter map of sample(index) without simulating its envelope.
  ParameterMap parameter_map(std::uint64_t index) const;
  /// Samples [first, first + count) stacked into network tensors.
  void batch(std::uint64_t first, int count, Tensor<float>& input, Tensor<float>::Mat& target,
             double input_scale) const;
  /// Mean envelope value over n samples drawn from a dedicated stream.
  double reference_mean(int n) const;

 private:
  TrainingDataConfig cfg_;
  std::uint64_t seed_;
};

/// Envelope of a parameter map simulated on a grid padded by the PSF support (edge-replicated
/// map) and cropped back, so patch borders see the same speckle statistics as the interior.
TrainingSample simulate_training_patch(const ParameterMap& coarse, const Psf& psf, double noise_level,
                                       const ScattererModel& model, int R, Rng& rng);

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 16;
  int iterations = 2000;
  std::uint64_t seed = 1;
  int validation_every = 100;
  int validation_samples = 64;
  int reference_samples = 100;
  int queue_depth = 4;
  bool deterministic = false;
  double output_bias = 0.5;
  NetworkOptions network;
  TrainingDataConfig data;

  void validate() const;
};

struct LossRecord {
  int iteration = 0;
  double train_loss = 0.0;  // NaN before the first step
  double val_loss = 0.0;    // NaN when not evaluated
};

struct TrainResult {
  NetworkWeights weights;
  std::vector<LossRecord> history;
  double initial_val_loss = 0.0;
  double final_val_loss = 0.0;
};

using TrainProgress = std::function<void(const LossRecord&)>;

/// Adam on the L1 loss with batches generated on the fly. Aborts with NumericError if a
/// training loss exceeds ten times the first one.
TrainResult train(const TrainConfig& cfg, const TrainProgress& progress = {});

/// Mean absolute error of the raw network output over n validation samples.
double validation_mae(const NetworkWeights& weights, const TrainingDataGenerator& gen, int n);

/// CSV with header iteration,train_loss,val_loss (empty fields for missing values).
std::string loss_history_csv(const std::vector<LossRecord>& history);

/// Seed of the validation generator derived from the training seed.
std::uint64_t validation_seed(std::uint64_t train_seed);

}  // namespace scatsim

#endif  // SCATSIM_TRAINING_HPP
