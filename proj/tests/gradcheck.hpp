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

#ifndef SCATSIM_TESTS_GRADCHECK_HPP
#define SCATSIM_TESTS_GRADCHECK_HPP

// Central finite-difference checks of Network<double>::backward.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "scatsim/neural.hpp"

namespace scatsim::fixtures {

using Net = Network<double>;
using T64 = Tensor<double>;

inline std::pair<int, int> param_shape(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv: return {s.channels_out, s.channels_in * s.taps()};
    case LayerKind::transposed_conv: return {s.channels_in, s.channels_out * s.taps()};
    default: return {s.channels_out, s.channels_in};
  }
}

/// Weights for an arbitrary layer list, uniform in [-scale, scale] (biases included).
inline NetworkWeights random_weights(const std::vector<LayerSpec>& layers, std::uint64_t seed, double scale = 0.5) {
  NetworkWeights w;
  w.layers = layers;
  Rng rng(seed);
  for (const auto& s : layers) {
    if (!s.has_params()) continue;
    auto [rows, cols] = param_shape(s);
    ParamTensor wt{s.name + ".weight", rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
    ParamTensor bt{s.name + ".bias", s.channels_out, 1, std::vector<double>(s.channels_out)};
    for (double& v : wt.values) v = rng.uniform(-scale, scale);
    for (double& v : bt.values) v = rng.uniform(-scale, scale);
    w.params.push_back(std::move(wt));
    w.params.push_back(std::move(bt));
  }
  return w;
}

inline T64 random_tensor(int channels, int batch, int axial, int lateral, std::uint64_t seed) {
  T64 t = T64::zeros(channels, batch, axial, lateral);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = rng.uniform(-1.0, 1.0);
  return t;
}

struct GradCheck {
  double worst = 0.0;   // largest relative error over all checked tensors
  std::string where;    // tensor that produced it
};

inline double rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

/**
 * Checks parameter and input gradients of L = <net(x), g> for a random projection g.
 * At most max_entries entries per tensor are perturbed (evenly strided).
 */
inline GradCheck check_gradients(Net& net, const T64& x, std::uint64_t seed, double h = 1e-5,
                                 long max_entries = 400) {
  const T64 y0 = net.forward(x, true);
  const T64 g = random_tensor(y0.channels(), y0.batch, y0.axial, y0.lateral, seed);
  const T64 dx = net.backward(g);
  auto loss = [&](const T64& input) { return net.forward(input, false).data.cwiseProduct(g.data).sum(); };

  GradCheck out;
  auto record = [&](double err, const std::string& name) {
    if (err > out.worst || out.where.empty()) {
      out.worst = std::max(out.worst, err);
      out.where = name;
    }
  };

  const std::vector<Net::Mat> grads = net.grads();
  for (std::size_t k = 0; k < net.params().size(); ++k) {
    Net::Mat& p = net.params()[k];
    const long n = p.size(), stride = std::max(1L, n / max_entries);
    std::vector<double> a, num;
    for (long i = 0; i < n; i += stride) {
      const double v = p.data()[i];
      p.data()[i] = v + h;
      const double lp = loss(x);
      p.data()[i] = v - h;
      const double lm = loss(x);
      p.data()[i] = v;
      a.push_back(grads[k].data()[i]);
      num.push_back((lp - lm) / (2.0 * h));
    }
    record(rel_error(Eigen::Map<Eigen::VectorXd>(a.data(), a.size()), Eigen::Map<Eigen::VectorXd>(num.data(), num.size())),
           "param " + std::to_string(k));
  }

  T64 xp = x;
  const long n = xp.data.size(), stride = std::max(1L, n / max_entries);
  std::vector<double> a, num;
  for (long i = 0; i < n; i += stride) {
    const double v = xp.data.data()[i];
    xp.data.data()[i] = v + h;
    const double lp = loss(xp);
    xp.data.data()[i] = v - h;
    const double lm = loss(xp);
    xp.data.data()[i] = v;
    a.push_back(dx.data.data()[i]);
    num.push_back((lp - lm) / (2.0 * h));
  }
  record(rel_error(Eigen::Map<Eigen::VectorXd>(a.data(), a.size()), Eigen::Map<Eigen::VectorXd>(num.data(), num.size())),
         "input");
  return out;
}

inline LayerSpec conv_layer(std::string name, int ci, int co, int kl, int ka, int sl, int sa) {
  LayerSpec s;
  s.kind = LayerKind::conv;
  s.name = std::move(name);
  s.channels_in = ci;
  s.channels_out = co;
  s.kernel_lateral = kl;
  s.kernel_axial = ka;
  s.stride_lateral = sl;
  s.stride_axial = sa;
  return s;
}

inline LayerSpec tconv_layer(std::string name, int ci, int co, int kl, int ka, int sl, int sa) {
  LayerSpec s = conv_layer(std::move(name), ci, co, kl, ka, sl, sa);
  s.kind = LayerKind::transposed_conv;
  return s;
}

inline LayerSpec elu_layer(std::string name, int c) {
  LayerSpec s;
  s.kind = LayerKind::activation;
  s.name = std::move(name);
  s.channels_in = s.channels_out = c;
  return s;
}

inline LayerSpec concat_layer(std::string name, int c, int skip_from, int skip_channels) {
  LayerSpec s;
  s.kind = LayerKind::skip_concat;
  s.name = std::move(name);
  s.channels_in = c;
  s.channels_out = c + skip_channels;
  s.skip_from = skip_from;
  return s;
}

inline LayerSpec linear_layer(std::string name, int ci, int co) {
  LayerSpec s;
  s.kind = LayerKind::linear_output;
  s.name = std::move(name);
  s.channels_in = ci;
  s.channels_out = co;
  return s;
}

struct LayerCase {
  std::string name;
  std::vector<LayerSpec> layers;
  int in_channels;
  int axial;
  int lateral;
};

/// One isolated case per layer type (plus stride variants) and a two-layer micro-net.
inline std::vector<LayerCase> gradient_cases() {
  std::vector<LayerCase> cases;
  cases.push_back({"conv stride 1", {conv_layer("c", 2, 3, 3, 7, 1, 1)}, 2, 16, 5});
  cases.push_back({"conv axial stride 2", {conv_layer("c", 2, 3, 3, 7, 1, 2)}, 2, 16, 5});
  cases.push_back({"conv stride 2x2", {conv_layer("c", 2, 2, 3, 5, 2, 2)}, 2, 12, 6});
  cases.push_back({"transposed conv axial stride 2", {tconv_layer("t", 3, 2, 3, 7, 1, 2)}, 3, 8, 5});
  cases.push_back({"transposed conv stride 2x2", {tconv_layer("t", 2, 2, 3, 5, 2, 2)}, 2, 6, 3});
  cases.push_back({"elu", {elu_layer("e", 3)}, 3, 10, 4});
  cases.push_back({"skip concat", {conv_layer("c", 2, 3, 3, 3, 1, 1), concat_layer("s", 3, 0, 3)}, 2, 8, 4});
  cases.push_back({"linear output", {linear_layer("o", 4, 1)}, 4, 8, 4});
  cases.push_back({"micro-net",
                   {conv_layer("c1", 1, 4, 3, 7, 1, 2), elu_layer("e1", 4), linear_layer("o", 4, 1)},
                   1, 16, 6});
  return cases;
}

}  // namespace scatsim::fixtures

#endif  // SCATSIM_TESTS_GRADCHECK_HPP
