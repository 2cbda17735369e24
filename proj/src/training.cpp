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

#include "scatsim/training.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "scatsim/forward.hpp"

namespace scatsim {

namespace {

constexpr int kHilbertMargin = 32;
constexpr std::uint64_t kReferenceStream = 0x7265666d65616eULL;

struct Batch {
  std::uint64_t index = 0;
  Tensor<float> input;
  Tensor<float>::Mat target;
};

// Bounded single-producer queue of batches in index order.
class BatchQueue {
 public:
  explicit BatchQueue(std::size_t depth) : depth_(depth) {}

  void push(Batch b) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < depth_ || stop_; });
    if (stop_) return;
    items_.push_back(std::move(b));
    not_empty_.notify_one();
  }

  Batch pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || error_; });
    if (items_.empty()) std::rethrow_exception(error_);
    Batch b = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return b;
  }

  void fail(std::exception_ptr e) {
    std::lock_guard lock(mu_);
    error_ = e;
    not_empty_.notify_all();
  }

  void stop() {
    std::lock_guard lock(mu_);
    stop_ = true;
    not_full_.notify_all();
  }

  bool stopped() {
    std::lock_guard lock(mu_);
    return stop_;
  }

 private:
  std::size_t depth_;
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<Batch> items_;
  std::exception_ptr error_;
  bool stop_ = false;
};

void check_range(double lo, double hi, const char* what) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw InvalidArgument(fmt::format("{} range [{}, {}] is invalid", what, lo, hi));
  }
}

double mae_on(Network<float>& net, const std::vector<Batch>& batches) {
  double sum = 0.0;
  long n = 0;
  for (const Batch& b : batches) {
    const Tensor<float> y = net.forward(b.input, false);
    sum += static_cast<double>(loss_l1<float>(y.data, b.target, nullptr)) * b.target.size();
    n += b.target.size();
  }
  return sum / static_cast<double>(n);
}

std::vector<Batch> make_batches(const TrainingDataGenerator& gen, int n, int batch_size, double input_scale) {
  std::vector<Batch> out;
  for (int first = 0; first < n; first += batch_size) {
    Batch b;
    b.index = static_cast<std::uint64_t>(first);
    gen.batch(static_cast<std::uint64_t>(first), std::min(batch_size, n - first), b.input, b.target, input_scale);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

void TrainingDataConfig::validate() const {
  if (patch_lateral < 1 || patch_axial < 1) throw InvalidArgument("training patch size must be positive");
  if (R < 1 || patch_axial % R != 0) {
    throw InvalidArgument(fmt::format("patch axial size {} is not divisible by R={}", patch_axial, R));
  }
  check_range(sigma_l2_min, sigma_l2_max, "sigma_l2");
  check_range(sigma_a2_min, sigma_a2_max, "sigma_a2");
  if (!(noise_min >= 0.0) || !(noise_max >= noise_min)) throw InvalidArgument("noise range is invalid");
  Psf{fc, sigma_l2_min, sigma_a2_min, fs, c}.validate();
  model.validate();
  shapes.validate();
}

Grid2D TrainingDataConfig::image_grid() const { return make_scatterer_grid(patch_lateral, patch_axial, fs, c); }

Grid2D TrainingDataConfig::map_grid() const {
  const double d = scatterer_spacing_mm(fs, c);
  return Grid2D::make(patch_lateral, patch_axial / R, d, d * R);
}

TrainingSample simulate_training_patch(const ParameterMap& coarse, const Psf& psf, double noise_level,
                                       const ScattererModel& model, int R, Rng& rng) {
  coarse.validate();
  model.validate();
  const int pl_n = coarse.grid.n_lateral;
  const int pa_n = coarse.grid.n_axial * R;
  const double d = coarse.grid.spacing_lateral;

  // Kernel factors only; the probe grid just has to be large enough for the size check.
  const int need_l = static_cast<int>(std::ceil(3.0 * std::sqrt(psf.sigma_l2) / d));
  const int need_a = static_cast<int>(std::ceil(3.0 * std::sqrt(psf.sigma_a2) / d));
  const PsfKernel k = discretize_psf(psf, Grid2D::make(2 * need_l + 1, 2 * need_a + 1, d, d));
  const int hl = k.half_lateral, ha = k.half_axial;

  const int pad_a = ha + kHilbertMargin;
  const int pad_l = hl;
  const int rows = pa_n + 2 * pad_a;
  const int cols = pl_n + 2 * pad_l;

  Image sc = Image::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int mr = std::clamp((r - pad_a) < 0 ? 0 : (r - pad_a) / R, 0, coarse.grid.n_axial - 1);
    for (int c = 0; c < cols; ++c) {
      const int mc = std::clamp(c - pad_l, 0, pl_n - 1);
      if (rng.bernoulli(model.rho_s)) sc(r, c) = std::max(0.0, rng.normal(coarse.mu(mr, mc), model.sigma_s));
    }
  }

  // RF rows [ha, rows - ha) cover the patch plus the Hilbert margin; only the patch columns.
  const int rf_rows = pa_n + 2 * kHilbertMargin;
  Image axial = Image::Zero(rf_rows, cols);
  for (int s = 0; s < rows; ++s) {
    for (int c = 0; c < cols; ++c) {
      const double v = sc(s, c);
      if (v == 0.0) continue;
      const int lo = std::max(0, s - 2 * ha);
      const int hi = std::min(rf_rows, s + 1);
      for (int r = lo; r < hi; ++r) axial(r, c) += k.axial[static_cast<std::size_t>(r + ha - s + ha)] * v;
    }
  }
  Image rf = Image::Zero(rf_rows, pl_n);
  for (int r = 0; r < rf_rows; ++r) {
    for (int c = 0; c < pl_n; ++c) {
      double acc = 0.0;
      for (int j = -hl; j <= hl; ++j) acc += k.lateral[static_cast<std::size_t>(j + hl)] * axial(r, c + pad_l - j);
      rf(r, c) = acc;
    }
  }
  const double sd = noise_level * rf.abs().mean();
  if (sd > 0.0) {
    for (Eigen::Index i = 0; i < rf.size(); ++i) rf.data()[i] += sd * rng.normal();
  }
  const Grid2D rf_grid = Grid2D::make(pl_n, rf_rows, d, d);
  const EnvelopeImage env = envelope(RfImage{rf_grid, rf});

  TrainingSample out;
  out.envelope = env.values.middleRows(kHilbertMargin, pa_n);
  out.target = coarse.mu;
  out.psf = psf;
  out.noise_level = noise_level;
  return out;
}

TrainingDataGenerator::TrainingDataGenerator(TrainingDataConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed) {
  cfg_.validate();
}

ParameterMap TrainingDataGenerator::parameter_map(std::uint64_t index) const {
  Rng rng = Rng(seed_).derive(index);
  ParameterMap pm = generate_random_parameter_map(cfg_.shapes, cfg_.map_grid(), rng);
  pm.R = cfg_.R;
  return pm;
}

TrainingSample TrainingDataGenerator::sample(std::uint64_t index) const {
  Rng rng = Rng(seed_).derive(index);
  ParameterMap pm = generate_random_parameter_map(cfg_.shapes, cfg_.map_grid(), rng);
  pm.R = cfg_.R;
  Psf psf;
  psf.fc = cfg_.fc;
  psf.fs = cfg_.fs;
  psf.c = cfg_.c;
  psf.sigma_l2 = rng.uniform(cfg_.sigma_l2_min, cfg_.sigma_l2_max);
  psf.sigma_a2 = rng.uniform(cfg_.sigma_a2_min, cfg_.sigma_a2_max);
  const double noise = rng.uniform(cfg_.noise_min, cfg_.noise_max);
  return simulate_training_patch(pm, psf, noise, cfg_.model, cfg_.R, rng);
}

void TrainingDataGenerator::batch(std::uint64_t first, int count, Tensor<float>& input, Tensor<float>::Mat& target,
                                  double input_scale) const {
  if (count < 1) throw InvalidArgument("batch needs at least one sample");
  const int pa = cfg_.patch_axial, pl = cfg_.patch_lateral, ma = pa / cfg_.R;
  input = Tensor<float>::zeros(1, count, pa, pl);
  target.resize(1, static_cast<long>(count) * ma * pl);
  for (int j = 0; j < count; ++j) {
    const TrainingSample s = sample(first + static_cast<std::uint64_t>(j));
    const long in_off = static_cast<long>(j) * pa * pl;
    const long t_off = static_cast<long>(j) * ma * pl;
    for (Eigen::Index i = 0; i < s.envelope.size(); ++i) {
      input.data(0, in_off + i) = static_cast<float>(s.envelope.data()[i] * input_scale);
    }
    for (Eigen::Index i = 0; i < s.target.size(); ++i) target(0, t_off + i) = static_cast<float>(s.target.data()[i]);
  }
}

double TrainingDataGenerator::reference_mean(int n) const {
  if (n < 1) throw InvalidArgument("reference mean needs at least one sample");
  const TrainingDataGenerator ref(cfg_, splitmix64(seed_ ^ kReferenceStream));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += ref.sample(static_cast<std::uint64_t>(i)).envelope.mean();
  return sum / n;
}

void TrainConfig::validate() const {
  adam.validate();
  if (batch_size < 1 || iterations < 1) throw InvalidArgument("batch_size and iterations must be >= 1");
  if (validation_every < 1 || validation_samples < 1 || reference_samples < 1 || queue_depth < 1) {
    throw InvalidArgument("validation, reference and queue settings must be >= 1");
  }
  network.validate();
  data.validate();
  if (network.R != data.R) throw InvalidArgument("network R and training data R differ");
  const int div = network_axial_divisor(build_network(network));
  if (data.patch_axial % div != 0) {
    throw InvalidArgument(fmt::format("patch axial size {} is not divisible by {}", data.patch_axial, div));
  }
}

std::uint64_t validation_seed(std::uint64_t train_seed) { return splitmix64(train_seed ^ 0x76616c6964ULL); }

double validation_mae(const NetworkWeights& weights, const TrainingDataGenerator& gen, int n) {
  Network<float> net(weights);
  return mae_on(net, make_batches(gen, n, 16, weights.input_scale));
}

TrainResult train(const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  const TrainingDataGenerator gen(cfg.data, cfg.seed);
  const TrainingDataGenerator val_gen(cfg.data, validation_seed(cfg.seed));

  TrainResult res;
  res.weights = NetworkWeights::initialize(cfg.network, cfg.seed, cfg.output_bias);
  res.weights.reference_mean = gen.reference_mean(cfg.reference_samples);
  if (!(res.weights.reference_mean > 0.0)) throw NumericError("training envelopes have zero mean");
  res.weights.input_scale = 1.0 / res.weights.reference_mean;
  const double scale = res.weights.input_scale;

  Network<float> net(res.weights);
  Adam<float> adam(cfg.adam);
  const std::vector<Batch> val = make_batches(val_gen, cfg.validation_samples, cfg.batch_size, scale);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  res.initial_val_loss = mae_on(net, val);
  res.history.push_back({0, nan, res.initial_val_loss});
  if (progress) progress(res.history.back());

  BatchQueue queue(static_cast<std::size_t>(cfg.queue_depth));
  std::thread producer;
  const auto bs = static_cast<std::uint64_t>(cfg.batch_size);
  if (!cfg.deterministic) {
    producer = std::thread([&] {
      try {
        for (int it = 0; it < cfg.iterations && !queue.stopped(); ++it) {
          Batch b;
          b.index = static_cast<std::uint64_t>(it);
          gen.batch(b.index * bs, cfg.batch_size, b.input, b.target, scale);
          queue.push(std::move(b));
        }
      } catch (...) {
        queue.fail(std::current_exception());
      }
    });
  }
  auto finish = [&] {
    if (producer.joinable()) {
      queue.stop();
      producer.join();
    }
  };

  try {
    double first_loss = 0.0;
    Tensor<float>::Mat grad;
    for (int it = 1; it <= cfg.iterations; ++it) {
      Batch b;
      if (cfg.deterministic) {
        b.index = static_cast<std::uint64_t>(it - 1);
        gen.batch(b.index * bs, cfg.batch_size, b.input, b.target, scale);
      } else {
        b = queue.pop();
      }
      const Tensor<float> y = net.forward(b.input, true);
      const double loss = loss_l1<float>(y.data, b.target, &grad);
      if (!std::isfinite(loss)) throw NumericError(fmt::format("training loss is not finite at iteration {}", it));
      if (it == 1) first_loss = loss;
      if (loss > 10.0 * first_loss) {
        throw NumericError(fmt::format("training diverged at iteration {}: loss {} > 10 x initial {}", it, loss,
                                       first_loss));
      }
      Tensor<float> g;
      g.batch = y.batch;
      g.axial = y.axial;
      g.lateral = y.lateral;
      g.data = std::move(grad);
      net.backward(g);
      adam.step(net.params(), net.grads());

      LossRecord rec{it, loss, nan};
      if (it % cfg.validation_every == 0 || it == cfg.iterations) rec.val_loss = mae_on(net, val);
      res.history.push_back(rec);
      if (progress) progress(rec);
    }
  } catch (...) {
    finish();
    throw;
  }
  finish();

  net.export_params(res.weights);
  res.weights.iterations = cfg.iterations;
  res.final_val_loss = res.history.back().val_loss;
  return res;
}

std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::string out = "iteration,train_loss,val_loss\n";
  auto field = [](double v) { return std::isfinite(v) ? fmt::format("{:.9g}", v) : std::string(); };
  for (const auto& r : history) out += fmt::format("{},{},{}\n", r.iteration, field(r.train_loss), field(r.val_loss));
  return out;
}

}  // namespace scatsim
