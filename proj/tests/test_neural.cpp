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
#include <filesystem>

#include "gradcheck.hpp"
#include "scatsim/neural.hpp"
#include "scatsim/tensor_io.hpp"

using namespace scatsim;
using scatsim::fixtures::T64;

namespace {

NetworkOptions wide_widths() {
  NetworkOptions o;
  o.encoder_channels = {16, 32, 64, 128};
  o.decoder_channels = {64, 32, 16};
  return o;
}

// Direct strided "same" convolution with the layer's weight layout [co][ci][ka][kl].
T64 conv_oracle(const T64& x, const LayerSpec& s, const ParamTensor& w, const ParamTensor& b) {
  const int pa = s.kernel_axial / 2, pl = s.kernel_lateral / 2;
  const int oa = (x.axial - 1) / s.stride_axial + 1, ol = (x.lateral - 1) / s.stride_lateral + 1;
  T64 y = T64::zeros(s.channels_out, x.batch, oa, ol);
  for (int co = 0; co < s.channels_out; ++co)
    for (int n = 0; n < x.batch; ++n)
      for (int a = 0; a < oa; ++a)
        for (int l = 0; l < ol; ++l) {
          double acc = b.values[co];
          for (int ci = 0; ci < s.channels_in; ++ci)
            for (int ia = 0; ia < s.kernel_axial; ++ia)
              for (int il = 0; il < s.kernel_lateral; ++il) {
                const int sa = a * s.stride_axial + ia - pa, sl = l * s.stride_lateral + il - pl;
                if (sa < 0 || sa >= x.axial || sl < 0 || sl >= x.lateral) continue;
                acc += w.values[(static_cast<std::size_t>(co) * s.channels_in + ci) * s.taps() + ia * s.kernel_lateral + il] *
                       x.data(ci, (static_cast<long>(n) * x.axial + sa) * x.lateral + sl);
              }
          y.data(co, (static_cast<long>(n) * oa + a) * ol + l) = acc;
        }
  return y;
}

}  // namespace

TEST(BuildNetwork, OutputShapeForFourfoldCoarsening) {
  const auto layers = build_network(NetworkOptions{});
  EXPECT_EQ(network_output_shape(layers, 64, 512), std::make_pair(64, 128));
  EXPECT_EQ(network_axial_divisor(layers), 16);
  EXPECT_EQ(layers.back().kind, LayerKind::linear_output);
  EXPECT_EQ(layers.back().channels_out, 1);
}

TEST(BuildNetwork, StrideProductEqualsCoarsening) {
  for (int R : {2, 4, 8}) {
    NetworkOptions o;
    o.R = R;
    const auto layers = build_network(o);
    int down = 1, up = 1;
    for (const auto& s : layers) {
      EXPECT_EQ(s.stride_lateral, 1);
      if (s.kind == LayerKind::conv) down *= s.stride_axial;
      if (s.kind == LayerKind::transposed_conv) up *= s.stride_axial;
    }
    EXPECT_EQ(down / up, R);
    EXPECT_EQ(network_output_shape(layers, 32, 256).second, 256 / R);
  }
}

TEST(BuildNetwork, ShapeAlgebraOverAxialSizes) {
  const auto layers = build_network(NetworkOptions{});
  for (int axial = 64; axial <= 1024; axial += 16) {
    const auto [l, a] = network_output_shape(layers, 7, axial);
    ASSERT_EQ(l, 7);
    ASSERT_EQ(a * 4, axial);
  }
  for (int axial : {72, 100, 1020}) EXPECT_THROW(network_output_shape(layers, 7, axial), InvalidArgument);
}

TEST(BuildNetwork, ParameterCountsUnderMillion) {
  for (const NetworkOptions& o : {NetworkOptions{}, wide_widths()}) {
    const NetworkWeights w = NetworkWeights::initialize(o, 1);
    long count = 0;
    for (const auto& p : w.params) count += static_cast<long>(p.values.size());
    EXPECT_EQ(w.parameter_count(), count);
    EXPECT_LT(count, 1000000);
  }
  // 3x7 kernels, 1 -> 16 -> 32 -> 64 -> 128, decoder 64 and 32 with skips, then 1x1 head.
  const long expected = (16 * 1 * 21 + 16) + (32 * 16 * 21 + 32) + (64 * 32 * 21 + 64) + (128 * 64 * 21 + 128) +
                        (128 * 64 * 21 + 64) + ((64 + 64) * 32 * 21 + 32) + (32 + 32) * 1 + 1;
  EXPECT_EQ(NetworkWeights::initialize(wide_widths(), 1).parameter_count(), expected);
}

TEST(BuildNetwork, InvalidOptionsRejected) {
  NetworkOptions o;
  o.R = 3;
  EXPECT_THROW(build_network(o), InvalidArgument);
  o = {};
  o.kernel_axial = 6;
  EXPECT_THROW(build_network(o), InvalidArgument);
}

TEST(Forward, ZeroWeightsGiveOutputBias) {
  NetworkWeights w = NetworkWeights::initialize(NetworkOptions{}, 3, 0.37);
  for (auto& p : w.params)
    if (p.name != "out.bias") std::fill(p.values.begin(), p.values.end(), 0.0);
  Network<double> net(w);
  const T64 y = net.forward(fixtures::random_tensor(1, 2, 64, 9, 4), false);
  EXPECT_EQ(y.axial, 16);
  for (Eigen::Index i = 0; i < y.data.size(); ++i) ASSERT_DOUBLE_EQ(y.data.data()[i], 0.37);
}

TEST(Forward, ConvLayerMatchesDirectSum) {
  for (const auto& s : {fixtures::conv_layer("c", 2, 3, 3, 7, 1, 2), fixtures::conv_layer("c", 3, 2, 5, 3, 2, 1)}) {
    const NetworkWeights w = fixtures::random_weights({s}, 5);
    Network<double> net(w);
    const T64 x = fixtures::random_tensor(s.channels_in, 2, 12, 6, 6);
    const T64 y = net.forward(x, false);
    const T64 ref = conv_oracle(x, s, w.params[0], w.params[1]);
    ASSERT_EQ(y.axial, ref.axial);
    ASSERT_EQ(y.lateral, ref.lateral);
    EXPECT_LT((y.data - ref.data).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, TransposedConvIsAdjointOfStridedConv) {
  const LayerSpec c = fixtures::conv_layer("c", 2, 3, 3, 7, 1, 2);
  const LayerSpec t = fixtures::tconv_layer("t", 3, 2, 3, 7, 1, 2);
  NetworkWeights wc = fixtures::random_weights({c}, 7);
  std::fill(wc.params[1].values.begin(), wc.params[1].values.end(), 0.0);
  NetworkWeights wt = fixtures::random_weights({t}, 8);
  wt.params[0].values = wc.params[0].values;
  wt.params[1].values.assign(2, 0.0);
  Network<double> nc(wc), nt(wt);
  const T64 u = fixtures::random_tensor(2, 1, 16, 5, 9);
  const T64 v = fixtures::random_tensor(3, 1, 8, 5, 10);
  const double lhs = nc.forward(u, false).data.cwiseProduct(v.data).sum();
  const double rhs = u.data.cwiseProduct(nt.forward(v, false).data).sum();
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
}

TEST(Forward, EluValues) {
  Network<double> net(fixtures::random_weights({fixtures::elu_layer("e", 1)}, 1));
  T64 x = T64::zeros(1, 1, 1, 3);
  x.data << -1.0, 0.0, 2.0;
  const T64 y = net.forward(x, false);
  EXPECT_NEAR(y.data(0, 0), std::exp(-1.0) - 1.0, 1e-15);
  EXPECT_EQ(y.data(0, 1), 0.0);
  EXPECT_EQ(y.data(0, 2), 2.0);
}

TEST(Forward, LateralLocality) {
  const NetworkWeights w = NetworkWeights::initialize(NetworkOptions{}, 11);
  Network<double> net(w);
  const T64 x = fixtures::random_tensor(1, 1, 128, 16, 12);
  // Mirror the image laterally to double its width; the shared interior must not change.
  T64 wide = T64::zeros(1, 1, 128, 48);
  for (int a = 0; a < 128; ++a)
    for (int l = 0; l < 48; ++l) {
      const int src = l < 16 ? 15 - l : (l < 32 ? l - 16 : 47 - l);
      wide.data(0, a * 48 + l) = x.data(0, a * 16 + src);
    }
  const T64 y = net.forward(x, false), yw = net.forward(wide, false);
  EXPECT_EQ(yw.lateral, 48);
  // Lateral receptive-field half-width: one tap per 3-wide conv, five convs deep at most.
  const int halo = 6;
  double worst = 0.0;
  for (int a = 0; a < y.axial; ++a)
    for (int l = halo; l < 16 - halo; ++l) worst = std::max(worst, std::abs(y.data(0, a * 16 + l) - yw.data(0, a * 48 + 16 + l)));
  EXPECT_LE(worst, 1e-6);
}

TEST(Forward, FloatTracksDouble) {
  const NetworkWeights w = NetworkWeights::initialize(NetworkOptions{}, 13);
  Network<double> nd(w);
  Network<float> nf(w);
  const T64 x = fixtures::random_tensor(1, 1, 64, 8, 14);
  Tensor<float> xf = Tensor<float>::zeros(1, 1, 64, 8);
  xf.data = x.data.cast<float>();
  const T64 yd = nd.forward(x, false);
  const Tensor<float> yf = nf.forward(xf, false);
  EXPECT_LT((yd.data - yf.data.cast<double>()).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Gradients, EveryLayerTypeMatchesFiniteDifferences) {
  for (const auto& c : fixtures::gradient_cases()) {
    Network<double> net(fixtures::random_weights(c.layers, 21));
    const auto r = fixtures::check_gradients(net, fixtures::random_tensor(c.in_channels, 2, c.axial, c.lateral, 22), 23);
    EXPECT_LT(r.worst, 1e-4) << c.name << " (" << r.where << ")";
  }
}

TEST(Gradients, FullNetworkMatchesFiniteDifferences) {
  Network<double> net(NetworkWeights::initialize(NetworkOptions{}, 31));
  const auto r = fixtures::check_gradients(net, fixtures::random_tensor(1, 1, 64, 4, 32), 33, 1e-5, 60);
  EXPECT_LT(r.worst, 1e-4) << r.where;
}

TEST(Gradients, ZeroOutputGradientGivesZeroGradients) {
  Network<double> net(NetworkWeights::initialize(NetworkOptions{}, 41));
  const T64 y = net.forward(fixtures::random_tensor(1, 1, 32, 4, 42), true);
  const T64 dx = net.backward(T64::zeros(1, y.batch, y.axial, y.lateral));
  for (const auto& g : net.grads()) EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(dx.data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gradients, BackwardWithoutCacheFails) {
  Network<double> net(NetworkWeights::initialize(NetworkOptions{}, 43));
  const T64 y = net.forward(fixtures::random_tensor(1, 1, 32, 4, 44), false);
  EXPECT_THROW(net.backward(y), InvalidArgument);
}

TEST(LossL1, ValuesAndSubgradient) {
  using Mat = Tensor<double>::Mat;
  Mat p = Mat::Random(3, 40), g;
  EXPECT_EQ(loss_l1<double>(p, p, &g), 0.0);
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
  const Mat q = (p.array() + 0.1).matrix();
  EXPECT_NEAR(loss_l1<double>(q, p, &g), 0.1, 1e-12);
  EXPECT_NEAR(g(1, 3), 1.0 / 120.0, 1e-15);
  const Mat t = Mat::Random(3, 40);
  double brute = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 40; ++j) brute += std::abs(p(i, j) - t(i, j));
  EXPECT_NEAR(loss_l1<double>(p, t, nullptr), brute / 120.0, 1e-12);
  EXPECT_THROW(loss_l1<double>(p, Mat::Zero(2, 40), nullptr), InvalidArgument);
}

TEST(AdamOptimizer, ZeroGradientsLeaveWeightsAndDecayMoments) {
  using Mat = Tensor<double>::Mat;
  std::vector<Mat> params{Mat::Random(3, 4)};
  const std::vector<Mat> start = params;
  Adam<double> adam(AdamConfig{});
  adam.step(params, {Mat::Zero(3, 4)});
  EXPECT_EQ((params[0] - start[0]).cwiseAbs().maxCoeff(), 0.0);
  adam.step(params, {Mat::Ones(3, 4)});
  const Mat m1 = adam.first_moment()[0], v1 = adam.second_moment()[0];
  const Mat p1 = params[0];
  adam.step(params, {Mat::Zero(3, 4)});
  EXPECT_NEAR(adam.first_moment()[0](0, 0), 0.9 * m1(0, 0), 1e-15);
  EXPECT_NEAR(adam.second_moment()[0](0, 0), 0.999 * v1(0, 0), 1e-15);
  EXPECT_EQ(adam.steps(), 3);
}

TEST(AdamOptimizer, FirstStepIsLearningRateTimesSign) {
  using Mat = Tensor<double>::Mat;
  std::vector<Mat> params{Mat::Zero(2, 50)};
  Mat g = Mat::Random(2, 50) * 10.0;
  AdamConfig cfg;
  cfg.learning_rate = 1e-3;
  Adam<double> adam(cfg);
  adam.step(params, {g});
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double dw = params[0].data()[i];
    ASSERT_LE(std::abs(dw), cfg.learning_rate * (1.0 + 1e-6));
    ASSERT_NEAR(dw, -cfg.learning_rate * g.data()[i] / (std::abs(g.data()[i]) + 1e-8), 1e-12);
  }
}

TEST(AdamOptimizer, NonFiniteGradientAborts) {
  using Mat = Tensor<double>::Mat;
  std::vector<Mat> params{Mat::Zero(1, 2)};
  Mat g = Mat::Zero(1, 2);
  g(0, 1) = std::nan("");
  Adam<double> adam(AdamConfig{});
  EXPECT_THROW(adam.step(params, {g}), NumericError);
}

TEST(AdamOptimizer, RepeatableOverHundredSteps) {
  auto run = [] {
    Network<double> net(NetworkWeights::initialize(NetworkOptions{}, 51));
    Adam<double> adam(AdamConfig{});
    const T64 x = fixtures::random_tensor(1, 2, 32, 4, 52);
    for (int i = 0; i < 100; ++i) {
      const T64 y = net.forward(x, true);
      Tensor<double>::Mat g;
      loss_l1<double>(y.data, Tensor<double>::Mat::Constant(y.data.rows(), y.data.cols(), 0.3), &g);
      T64 gy = y;
      gy.data = g;
      net.backward(gy);
      adam.step(net.params(), net.grads());
    }
    return net.params();
  };
  const auto a = run(), b = run();
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_TRUE(a[k] == b[k]);
}

TEST(Weights, InitialisationIsSeededAndBounded) {
  const NetworkWeights a = NetworkWeights::initialize(NetworkOptions{}, 5);
  const NetworkWeights b = NetworkWeights::initialize(NetworkOptions{}, 5);
  const NetworkWeights c = NetworkWeights::initialize(NetworkOptions{}, 6);
  EXPECT_EQ(a.encode(), b.encode());
  EXPECT_NE(a.encode(), c.encode());
  const LayerSpec& first = a.layers.front();
  const double bound = std::sqrt(3.0 / (first.channels_in * first.taps()));
  for (double v : a.params[0].values) ASSERT_LE(std::abs(v), bound);
}

TEST(Weights, EncodeDecodeRoundTrip) {
  NetworkWeights w = NetworkWeights::initialize(NetworkOptions{}, 61);
  w.reference_mean = 0.123;
  w.input_scale = 1.0 / 0.123;
  w.iterations = 77;
  const std::string bytes = w.encode();
  const NetworkWeights back = NetworkWeights::decode(bytes);
  EXPECT_EQ(back.encode(), bytes);
  EXPECT_EQ(back.reference_mean, 0.123);
  EXPECT_EQ(back.iterations, 77);
  EXPECT_EQ(back.seed, 61u);
  EXPECT_EQ(back.architecture_hash(), w.architecture_hash());
  for (std::size_t k = 0; k < w.params.size(); ++k) ASSERT_EQ(back.params[k].values, w.params[k].values);

  const auto path = std::filesystem::temp_directory_path() / "scatsim_weights_test.bin";
  w.save(path);
  EXPECT_EQ(NetworkWeights::load(path).encode(), bytes);
  std::filesystem::remove(path);
}

TEST(Weights, CorruptedFilesRejected) {
  const NetworkWeights w = NetworkWeights::initialize(NetworkOptions{}, 62);
  const std::string bytes = w.encode();
  EXPECT_THROW(NetworkWeights::decode(bytes.substr(0, bytes.size() - 8)), InvalidArgument);
  std::string tampered = bytes;
  const auto pos = tampered.find(w.architecture_hash());
  ASSERT_NE(pos, std::string::npos);
  tampered[pos] = tampered[pos] == '0' ? '1' : '0';
  EXPECT_THROW(NetworkWeights::decode(tampered), InvalidArgument);
}

TEST(NetworkPredict, ShapeAndFiniteness) {
  NetworkWeights w = NetworkWeights::initialize(NetworkOptions{}, 71);
  Rng rng(72);
  Image env(512, 64);
  for (Eigen::Index i = 0; i < env.size(); ++i) env.data()[i] = std::abs(rng.normal());
  const Image out = network_predict(w, env);
  EXPECT_EQ(out.rows(), 128);
  EXPECT_EQ(out.cols(), 64);
  EXPECT_TRUE(out.allFinite());
  EXPECT_THROW(network_predict(w, Image::Ones(100, 64)), InvalidArgument);
}
