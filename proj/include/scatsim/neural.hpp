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

#ifndef SCATSIM_NEURAL_HPP
#define SCATSIM_NEURAL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scatsim/core.hpp"

namespace scatsim {

enum class LayerKind { conv, transposed_conv, activation, skip_concat, linear_output };

const char* to_string(LayerKind kind);

/**
 * One node of the sequential graph. Kernels are (lateral, axial) and always padded to
 * "same"; strides are 1 or 2. A transposed conv with stride s maps axial length n to s*n
 * and is the exact adjoint of the matching strided conv. skip_concat appends, along the
 * channel axis, the output of layer `skip_from`.
 */
struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::string name;
  int channels_in = 1;
  int channels_out = 1;
  int kernel_lateral = 1;
  int kernel_axial = 1;
  int stride_lateral = 1;
  int stride_axial = 1;
  int skip_from = -1;

  bool has_params() const {
    return kind == LayerKind::conv || kind == LayerKind::transposed_conv || kind == LayerKind::linear_output;
  }
  int taps() const { return kernel_lateral * kernel_axial; }
};

struct NetworkOptions {
  int R = 4;
  std::vector<int> encoder_channels{8, 16, 32, 64};
  /// Leading entries are used; one decoder block per factor of two between axial/16 and axial/R.
  std::vector<int> decoder_channels{32, 16, 8};
  int kernel_lateral = 3;
  int kernel_axial = 7;

  void validate() const;
};

/// Encoder of axial-stride-2 convs, decoder of transposed convs with skips, 1x1 linear head.
std::vector<LayerSpec> build_network(const NetworkOptions& options);

/// Axial length divisor every input must honour.
int network_axial_divisor(const std::vector<LayerSpec>& layers);
/// Output (lateral, axial) size for an input size; throws on incompatible sizes.
std::pair<int, int> network_output_shape(const std::vector<LayerSpec>& layers, int lateral, int axial);

std::string architecture_hash(const std::vector<LayerSpec>& layers);

/// Named parameter tensor stored as a row-major matrix.
struct ParamTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
};

class NetworkWeights {
 public:
  NetworkOptions options;
  std::vector<LayerSpec> layers;
  std::vector<ParamTensor> params;  // weight then bias for each parametric layer, in layer order

  double reference_mean = 0.0;  // mean envelope of the training distribution
  double input_scale = 1.0;     // network input = envelope * input_scale
  std::uint64_t seed = 0;
  int iterations = 0;

  /// Uniform fan-in initialisation; the output bias starts at `output_bias`.
  static NetworkWeights initialize(const NetworkOptions& options, std::uint64_t seed, double output_bias = 0.5);

  long parameter_count() const;
  std::string architecture_hash() const { return scatsim::architecture_hash(layers); }
  void validate() const;

  void save(const std::filesystem::path& path) const;
  static NetworkWeights load(const std::filesystem::path& path);
  std::string encode() const;
  static NetworkWeights decode(std::string_view bytes);
};

/// Activations of a batch: channels x (batch * axial * lateral), row-major, so each channel
/// plane is contiguous and positions run lateral-fastest.
template <class T>
struct Tensor {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  int batch = 0;
  int axial = 0;
  int lateral = 0;
  Mat data;

  int channels() const { return static_cast<int>(data.rows()); }
  long positions() const { return static_cast<long>(batch) * axial * lateral; }
  static Tensor zeros(int channels, int batch, int axial, int lateral);
};

template <class T>
class Network {
 public:
  using Mat = typename Tensor<T>::Mat;

  Network() = default;
  explicit Network(const NetworkWeights& weights);

  const std::vector<LayerSpec>& layers() const { return layers_; }

  /// Copies parameters in and out (stored in double).
  void set_weights(const NetworkWeights& weights);
  void export_params(NetworkWeights& weights) const;

  /// Forward pass; with keep_cache the intermediates needed by backward() are retained.
  Tensor<T> forward(const Tensor<T>& input, bool keep_cache = true);
  /// Gradients of every parameter for the loss gradient w.r.t. the last forward output.
  /// Returns the gradient w.r.t. the input.
  Tensor<T> backward(const Tensor<T>& grad_output);

  std::vector<Mat>& params() { return params_; }
  const std::vector<Mat>& params() const { return params_; }
  const std::vector<Mat>& grads() const { return grads_; }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<int> param_index_;  // first parameter slot of each layer, -1 if none
  std::vector<Mat> params_;
  std::vector<Mat> grads_;
  std::vector<Tensor<T>> acts_;   // acts_[i] is the input of layer i
  std::vector<Mat> cols_;         // im2col buffers of conv layers
  bool cached_ = false;
};

/// Mean absolute error and its subgradient sign(pred - target) / N with sign(0) = 0.
template <class T>
T loss_l1(const typename Tensor<T>::Mat& pred, const typename Tensor<T>::Mat& target,
          typename Tensor<T>::Mat* grad);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

template <class T>
class Adam {
 public:
  using Mat = typename Tensor<T>::Mat;

  explicit Adam(AdamConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  /// One bias-corrected step; throws NumericError on non-finite gradients.
  void step(std::vector<Mat>& params, const std::vector<Mat>& grads);

  int steps() const { return t_; }
  const std::vector<Mat>& first_moment() const { return m_; }
  const std::vector<Mat>& second_moment() const { return v_; }

 private:
  AdamConfig cfg_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  int t_ = 0;
};

/// Runs a trained network on one envelope image; returns the raw (unclamped) map values on
/// an (axial / R) x lateral grid.
Image network_predict(const NetworkWeights& weights, const Image& envelope);

}  // namespace scatsim

#endif  // SCATSIM_NEURAL_HPP
