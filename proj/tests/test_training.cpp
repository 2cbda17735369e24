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

#include <gtest/gtest.h>

#include <cmath>

#include "scatsim/training.hpp"

using namespace scatsim;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.iterations = 6;
  cfg.validation_every = 3;
  cfg.validation_samples = 4;
  cfg.reference_samples = 4;
  cfg.seed = 17;
  cfg.data.patch_lateral = 16;
  cfg.data.patch_axial = 64;
  cfg.adam.learning_rate = 1e-3;
  return cfg;
}

}  // namespace

TEST(TrainingData, SampleShapesAndRanges) {
  const TrainingDataGenerator gen(TrainingDataConfig{}, 3);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const TrainingSample s = gen.sample(i);
    EXPECT_EQ(s.envelope.rows(), 256);
    EXPECT_EQ(s.envelope.cols(), 32);
    EXPECT_EQ(s.target.rows(), 64);
    EXPECT_EQ(s.target.cols(), 32);
    EXPECT_GE(s.psf.sigma_l2, 0.2);
    EXPECT_LE(s.psf.sigma_l2, 1.0);
    EXPECT_GE(s.psf.sigma_a2, 0.02);
    EXPECT_LE(s.psf.sigma_a2, 0.05);
    EXPECT_GE(s.noise_level, 0.02);
    EXPECT_LE(s.noise_level, 0.2);
    EXPECT_GE(s.target.minCoeff(), 0.0);
    EXPECT_LE(s.target.maxCoeff(), 1.0);
    EXPECT_GE(s.envelope.minCoeff(), 0.0);
    EXPECT_TRUE((s.target == gen.parameter_map(i).mu).all());
  }
}

TEST(TrainingData, SamplesDependOnlyOnSeedAndIndex) {
  const TrainingDataGenerator a(TrainingDataConfig{}, 5), b(TrainingDataConfig{}, 5), c(TrainingDataConfig{}, 6);
  EXPECT_TRUE((a.sample(9).envelope == b.sample(9).envelope).all());
  (void)a.sample(3);
  EXPECT_TRUE((a.sample(9).envelope == b.sample(9).envelope).all());
  EXPECT_FALSE((a.sample(9).envelope == c.sample(9).envelope).all());
  EXPECT_FALSE((a.sample(9).target == a.sample(10).target).all());
}

TEST(TrainingData, BatchStacksSamplesInOrder) {
  TrainingDataConfig cfg;
  cfg.patch_axial = 64;
  cfg.patch_lateral = 16;
  const TrainingDataGenerator gen(cfg, 7);
  Tensor<float> input;
  Tensor<float>::Mat target;
  gen.batch(4, 3, input, target, 2.0);
  ASSERT_EQ(input.batch, 3);
  ASSERT_EQ(input.data.cols(), 3 * 64 * 16);
  ASSERT_EQ(target.cols(), 3 * 16 * 16);
  const TrainingSample s = gen.sample(5);
  for (int k = 0; k < 64 * 16; ++k) {
    ASSERT_FLOAT_EQ(input.data(0, 64 * 16 + k), static_cast<float>(2.0 * s.envelope.data()[k]));
  }
  for (int k = 0; k < 16 * 16; ++k) ASSERT_FLOAT_EQ(target(0, 16 * 16 + k), static_cast<float>(s.target.data()[k]));
}

TEST(TrainingData, ReferenceMeanIsPositiveAndRepeatable) {
  const TrainingDataGenerator gen(TrainingDataConfig{}, 8);
  const double m = gen.reference_mean(5);
  EXPECT_GT(m, 0.0);
  EXPECT_EQ(m, gen.reference_mean(5));
}

TEST(TrainingData, PaddedSimulationHasNoDarkBorder) {
  // Homogeneous map: border rows must be as bright as the interior.
  ParameterMap pm{Grid2D::make(32, 64, 0.01925, 0.077), Image::Constant(64, 32, 0.5), 4};
  Rng rng(9);
  double edge = 0.0, mid = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const TrainingSample s = simulate_training_patch(pm, Psf{6.0, 0.5, 0.04}, 0.02, ScattererModel{}, 4, rng);
    edge += s.envelope.topRows(8).mean() + s.envelope.bottomRows(8).mean() + s.envelope.leftCols(2).mean();
    mid += 3.0 * s.envelope.middleRows(96, 64).mean();
  }
  EXPECT_NEAR(edge / mid, 1.0, 0.2);
}

TEST(Train, DeterministicModeIsBitwiseRepeatable) {
  TrainConfig cfg = tiny_config();
  cfg.deterministic = true;
  const TrainResult a = train(cfg), b = train(cfg);
  EXPECT_EQ(a.weights.encode(), b.weights.encode());
  EXPECT_EQ(loss_history_csv(a.history), loss_history_csv(b.history));
}

TEST(Train, BackgroundProducerGivesSameResult) {
  TrainConfig cfg = tiny_config();
  cfg.deterministic = true;
  const TrainResult a = train(cfg);
  cfg.deterministic = false;
  const TrainResult b = train(cfg);
  EXPECT_EQ(a.weights.encode(), b.weights.encode());
}

TEST(Train, HistoryAndMetadata) {
  TrainConfig cfg = tiny_config();
  cfg.deterministic = true;
  std::vector<int> seen;
  const TrainResult r = train(cfg, [&](const LossRecord& rec) { seen.push_back(rec.iteration); });
  EXPECT_FALSE(seen.empty());
  EXPECT_EQ(r.weights.iterations, 6);
  EXPECT_EQ(r.weights.seed, 17u);
  EXPECT_GT(r.weights.reference_mean, 0.0);
  EXPECT_NEAR(r.weights.input_scale * r.weights.reference_mean, 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(r.final_val_loss));
  EXPECT_NEAR(r.final_val_loss,
              validation_mae(r.weights, TrainingDataGenerator(cfg.data, validation_seed(cfg.seed)), cfg.validation_samples),
              1e-6);
  const std::string csv = loss_history_csv(r.history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,train_loss,val_loss");
  EXPECT_NE(validation_seed(1), 1u);
}

TEST(Train, InvalidConfigRejected) {
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 0;
  EXPECT_THROW(train(cfg), InvalidArgument);
  cfg = tiny_config();
  cfg.data.patch_axial = 72;
  EXPECT_THROW(train(cfg), InvalidArgument);
}

TEST(Train, ConstantPredictorBaselineIsAQuarter) {
  // E|U(0,1) - 1/2| = 1/4 for uniform region means; check the generator against it.
  const TrainingDataGenerator gen(TrainingDataConfig{}, 10);
  double sum = 0.0;
  long n = 0;
  for (std::uint64_t i = 0; i < 400; ++i) {
    const ParameterMap pm = gen.parameter_map(i);
    sum += (pm.mu - 0.5).abs().sum();
    n += pm.mu.size();
  }
  EXPECT_NEAR(sum / n, 0.25, 0.02);
}
