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

#include "scatsim/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <json.hpp>

#include "scatsim/tensor_io.hpp"

namespace scatsim {

namespace {

using nlohmann::json;

// Geometry of a "same"-padded strided convolution from (in_a, in_l) to (out_a, out_l).
struct ConvGeom {
  int channels = 1;
  int batch = 1;
  int ka = 1, kl = 1;
  int sa = 1, sl = 1;
  int pa = 0, pl = 0;
  int in_a = 0, in_l = 0;
  int out_a = 0, out_l = 0;
};

ConvGeom conv_geom(const LayerSpec& s, int channels, int batch, int in_a, int in_l) {
  ConvGeom g;
  g.channels = channels;
  g.batch = batch;
  g.ka = s.kernel_axial;
  g.kl = s.kernel_lateral;
  g.sa = s.stride_axial;
  g.sl = s.stride_lateral;
  g.pa = g.ka / 2;
  g.pl = g.kl / 2;
  g.in_a = in_a;
  g.in_l = in_l;
  g.out_a = (in_a + 2 * g.pa - g.ka) / g.sa + 1;
  g.out_l = (in_l + 2 * g.pl - g.kl) / g.sl + 1;
  return g;
}

template <class Mat>
void im2col(const Mat& x, const ConvGeom& g, Mat& cols) {
  const long out_pos = static_cast<long>(g.batch) * g.out_a * g.out_l;
  cols.resize(static_cast<long>(g.channels) * g.ka * g.kl, out_pos);
  using T = typename Mat::Scalar;
  for (int c = 0; c < g.channels; ++c) {
    const T* src = x.row(c).data();
    for (int ia = 0; ia < g.ka; ++ia) {
      for (int il = 0; il < g.kl; ++il) {
        T* dst = cols.row((static_cast<long>(c) * g.ka + ia) * g.kl + il).data();
        for (int n = 0; n < g.batch; ++n) {
          for (int oa = 0; oa < g.out_a; ++oa) {
            const int a = oa * g.sa + ia - g.pa;
            T* d = dst + (static_cast<long>(n) * g.out_a + oa) * g.out_l;
            if (a < 0 || a >= g.in_a) {
              std::fill(d, d + g.out_l, T(0));
              continue;
            }
            const T* s = src + (static_cast<long>(n) * g.in_a + a) * g.in_l;
            for (int ol = 0; ol < g.out_l; ++ol) {
              const int l = ol * g.sl + il - g.pl;
              d[ol] = (l >= 0 && l < g.in_l) ? s[l] : T(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates columns back into an input-shaped buffer.
template <class Mat>
void col2im(const Mat& cols, const ConvGeom& g, Mat& x) {
  x.setZero(g.channels, static_cast<long>(g.batch) * g.in_a * g.in_l);
  using T = typename Mat::Scalar;
  for (int c = 0; c < g.channels; ++c) {
    T* dst = x.row(c).data();
    for (int ia = 0; ia < g.ka; ++ia) {
      for (int il = 0; il < g.kl; ++il) {
        const T* src = cols.row((static_cast<long>(c) * g.ka + ia) * g.kl + il).data();
        for (int n = 0; n < g.batch; ++n) {
          for (int oa = 0; oa < g.out_a; ++oa) {
            const int a = oa * g.sa + ia - g.pa;
            if (a < 0 || a >= g.in_a) continue;
            const T* s = src + (static_cast<long>(n) * g.out_a + oa) * g.out_l;
            T* d = dst + (static_cast<long>(n) * g.in_a + a) * g.in_l;
            for (int ol = 0; ol < g.out_l; ++ol) {
              const int l = ol * g.sl + il - g.pl;
              if (l >= 0 && l < g.in_l) d[l] += s[ol];
            }
          }
        }
      }
    }
  }
}

// Parameter shapes of a layer: (weight rows, weight cols), bias rows.
std::pair<int, int> weight_shape(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv:
      return {s.channels_out, s.channels_in * s.taps()};
    case LayerKind::transposed_conv:
      return {s.channels_in, s.channels_out * s.taps()};
    case LayerKind::linear_output:
      return {s.channels_out, s.channels_in};
    default:
      return {0, 0};
  }
}

LayerKind kind_from_string(const std::string& s) {
  for (LayerKind k : {LayerKind::conv, LayerKind::transposed_conv, LayerKind::activation, LayerKind::skip_concat,
                      LayerKind::linear_output}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidArgument(fmt::format("unknown layer kind '{}'", s));
}

json layer_to_json(const LayerSpec& s) {
  return json{{"kind", to_string(s.kind)},          {"name", s.name},
              {"channels_in", s.channels_in},        {"channels_out", s.channels_out},
              {"kernel", {s.kernel_lateral, s.kernel_axial}}, {"stride", {s.stride_lateral, s.stride_axial}},
              {"skip_from", s.skip_from}};
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec s;
  s.kind = kind_from_string(j.at("kind").get<std::string>());
  s.name = j.at("name").get<std::string>();
  s.channels_in = j.at("channels_in").get<int>();
  s.channels_out = j.at("channels_out").get<int>();
  s.kernel_lateral = j.at("kernel").at(0).get<int>();
  s.kernel_axial = j.at("kernel").at(1).get<int>();
  s.stride_lateral = j.at("stride").at(0).get<int>();
  s.stride_axial = j.at("stride").at(1).get<int>();
  s.skip_from = j.at("skip_from").get<int>();
  return s;
}

void validate_layers(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) throw InvalidArgument("network has no layers");
  int channels = layers.front().channels_in;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& s = layers[i];
    if (s.channels_in != channels) {
      throw InvalidArgument(fmt::format("layer {} expects {} channels but receives {}", i, s.channels_in, channels));
    }
    if (s.kernel_lateral < 1 || s.kernel_axial < 1 || s.kernel_lateral % 2 == 0 || s.kernel_axial % 2 == 0) {
      throw InvalidArgument(fmt::format("layer {} kernel must be odd per axis", i));
    }
    for (int st : {s.stride_lateral, s.stride_axial}) {
      if (st != 1 && st != 2) throw InvalidArgument(fmt::format("layer {} stride must be 1 or 2", i));
    }
    if (s.kind == LayerKind::skip_concat) {
      if (s.skip_from < 0 || s.skip_from >= static_cast<int>(i)) {
        throw InvalidArgument(fmt::format("layer {} skips from an invalid layer {}", i, s.skip_from));
      }
      if (s.channels_out != s.channels_in + layers[s.skip_from].channels_out) {
        throw InvalidArgument(fmt::format("layer {} concat channel count mismatch", i));
      }
    } else if (s.kind == LayerKind::activation) {
      if (s.channels_out != s.channels_in) throw InvalidArgument("activation cannot change channel count");
    } else if (s.kind == LayerKind::linear_output) {
      if (s.taps() != 1 || s.stride_axial != 1 || s.stride_lateral != 1) {
        throw InvalidArgument("linear output layer must be 1x1 with unit stride");
      }
    }
    channels = s.channels_out;
  }
}

template <class T>
T elu(T x) {
  return x > T(0) ? x : std::expm1(x);
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::transposed_conv: return "transposed_conv";
    case LayerKind::activation: return "elu";
    case LayerKind::skip_concat: return "skip_concat";
    case LayerKind::linear_output: return "linear_output";
  }
  return "?";
}

void NetworkOptions::validate() const {
  if (R != 2 && R != 4 && R != 8 && R != 16) throw InvalidArgument(fmt::format("R must be 2, 4, 8 or 16, got {}", R));
  if (encoder_channels.size() != 4) throw InvalidArgument("the encoder has exactly four blocks");
  const int n_dec = 4 - std::countr_zero(static_cast<unsigned>(R));
  if (static_cast<int>(decoder_channels.size()) < n_dec) {
    throw InvalidArgument(fmt::format("R={} needs {} decoder widths", R, n_dec));
  }
  for (int c : encoder_channels) if (c < 1) throw InvalidArgument("channel widths must be positive");
  for (int c : decoder_channels) if (c < 1) throw InvalidArgument("channel widths must be positive");
  if (kernel_lateral < 1 || kernel_axial < 1 || kernel_lateral % 2 == 0 || kernel_axial % 2 == 0) {
    throw InvalidArgument("kernel sizes must be odd");
  }
}

std::vector<LayerSpec> build_network(const NetworkOptions& o) {
  o.validate();
  std::vector<LayerSpec> layers;
  std::vector<int> level_out(5, -1);  // layer whose output sits at axial / 2^level
  int ch = 1;
  for (int e = 0; e < 4; ++e) {
    layers.push_back({LayerKind::conv, fmt::format("enc{}", e + 1), ch, o.encoder_channels[e], o.kernel_lateral,
                      o.kernel_axial, 1, 2, -1});
    ch = o.encoder_channels[e];
    layers.push_back({LayerKind::activation, fmt::format("enc{}.elu", e + 1), ch, ch, 1, 1, 1, 1, -1});
    level_out[e + 1] = static_cast<int>(layers.size()) - 1;
  }
  const int n_dec = 4 - std::countr_zero(static_cast<unsigned>(o.R));
  for (int d = 0; d < n_dec; ++d) {
    const int out = o.decoder_channels[d];
    layers.push_back({LayerKind::transposed_conv, fmt::format("dec{}", d + 1), ch, out, o.kernel_lateral,
                      o.kernel_axial, 1, 2, -1});
    layers.push_back({LayerKind::activation, fmt::format("dec{}.elu", d + 1), out, out, 1, 1, 1, 1, -1});
    const int src = level_out[3 - d];
    const int skip_ch = layers[src].channels_out;
    layers.push_back({LayerKind::skip_concat, fmt::format("dec{}.skip", d + 1), out, out + skip_ch, 1, 1, 1, 1, src});
    ch = out + skip_ch;
  }
  layers.push_back({LayerKind::linear_output, "out", ch, 1, 1, 1, 1, 1, -1});
  validate_layers(layers);
  return layers;
}

int network_axial_divisor(const std::vector<LayerSpec>& layers) {
  int d = 1, cur = 1;
  for (const auto& s : layers) {
    if (s.kind == LayerKind::conv) {
      cur *= s.stride_axial;
      d = std::max(d, cur);
    } else if (s.kind == LayerKind::transposed_conv) {
      cur /= s.stride_axial;
    }
  }
  return d;
}

std::pair<int, int> network_output_shape(const std::vector<LayerSpec>& layers, int lateral, int axial) {
  validate_layers(layers);
  if (lateral < 1 || axial < 1) throw InvalidArgument("input size must be positive");
  std::vector<std::pair<int, int>> shape;  // output of each layer
  int l = lateral, a = axial;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& s = layers[i];
    if (s.kind == LayerKind::conv) {
      if (a % s.stride_axial != 0 || l % s.stride_lateral != 0) {
        throw InvalidArgument(fmt::format("input {}x{} (lateral x axial) is not divisible by {} axially", lateral,
                                          axial, network_axial_divisor(layers)));
      }
      a /= s.stride_axial;
      l /= s.stride_lateral;
    } else if (s.kind == LayerKind::transposed_conv) {
      a *= s.stride_axial;
      l *= s.stride_lateral;
    } else if (s.kind == LayerKind::skip_concat) {
      if (shape[s.skip_from] != std::make_pair(l, a)) {
        throw InvalidArgument(fmt::format("skip connection at layer {} joins mismatched sizes", i));
      }
    }
    shape.emplace_back(l, a);
  }
  return shape.back();
}

std::string architecture_hash(const std::vector<LayerSpec>& layers) {
  json j = json::array();
  for (const auto& s : layers) j.push_back(layer_to_json(s));
  return content_digest(j.dump());
}

NetworkWeights NetworkWeights::initialize(const NetworkOptions& options, std::uint64_t seed, double output_bias) {
  NetworkWeights w;
  w.options = options;
  w.layers = build_network(options);
  w.seed = seed;
  const Rng root(seed);
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    const LayerSpec& s = w.layers[i];
    if (!s.has_params()) continue;
    auto [rows, cols] = weight_shape(s);
    double fan_in = static_cast<double>(s.channels_in) * s.taps();
    if (s.kind == LayerKind::transposed_conv) fan_in /= s.stride_axial * s.stride_lateral;
    const double bound = std::sqrt(3.0 / fan_in);
    Rng rng = root.derive(i);
    ParamTensor wt{s.name + ".weight", rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
    for (double& v : wt.values) v = rng.uniform(-bound, bound);
    const double b0 = s.kind == LayerKind::linear_output ? output_bias : 0.0;
    ParamTensor bt{s.name + ".bias", s.channels_out, 1, std::vector<double>(s.channels_out, b0)};
    w.params.push_back(std::move(wt));
    w.params.push_back(std::move(bt));
  }
  return w;
}

long NetworkWeights::parameter_count() const {
  long n = 0;
  for (const auto& p : params) n += static_cast<long>(p.values.size());
  return n;
}

void NetworkWeights::validate() const {
  validate_layers(layers);
  std::size_t k = 0;
  for (const auto& s : layers) {
    if (!s.has_params()) continue;
    auto [rows, cols] = weight_shape(s);
    if (k + 2 > params.size()) throw InvalidArgument("weights are missing parameter tensors");
    const ParamTensor& w = params[k];
    const ParamTensor& b = params[k + 1];
    if (w.rows != rows || w.cols != cols || b.rows != s.channels_out || b.cols != 1 ||
        w.values.size() != static_cast<std::size_t>(rows) * cols || b.values.size() != static_cast<std::size_t>(b.rows)) {
      throw InvalidArgument(fmt::format("parameter shapes of layer '{}' do not match its spec", s.name));
    }
    for (const auto* p : {&w, &b}) {
      for (double v : p->values) {
        if (!std::isfinite(v)) throw InvalidArgument(fmt::format("parameter '{}' is not finite", p->name));
      }
    }
    k += 2;
  }
  if (k != params.size()) throw InvalidArgument("weights have extra parameter tensors");
}

std::string NetworkWeights::encode() const {
  validate();
  json manifest;
  manifest["format"] = "scatsim-weights-1";
  json arch = json::array();
  for (const auto& s : layers) arch.push_back(layer_to_json(s));
  manifest["architecture"] = arch;
  manifest["architecture_hash"] = architecture_hash();
  manifest["options"] = {{"R", options.R},
                         {"encoder_channels", options.encoder_channels},
                         {"decoder_channels", options.decoder_channels},
                         {"kernel", {options.kernel_lateral, options.kernel_axial}}};
  manifest["R"] = options.R;
  manifest["reference_mean"] = reference_mean;
  manifest["input_scale"] = input_scale;
  manifest["seed"] = seed;
  manifest["iterations"] = iterations;
  std::string blobs;
  json entries = json::array();
  for (const auto& p : params) {
    TensorFile t{DType::f64, p.name, Grid2D::make(p.cols, p.rows, 1.0, 1.0),
                 Eigen::Map<const Image>(p.values.data(), p.rows, p.cols)};
    const std::string bytes = encode_tensor(t);
    entries.push_back({{"name", p.name}, {"shape", {p.rows, p.cols}}, {"offset", blobs.size()}, {"length", bytes.size()}});
    blobs += bytes;
  }
  manifest["entries"] = entries;
  const std::string text = manifest.dump(1);
  std::string out(8, '\0');
  std::uint64_t n = text.size();
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((n >> (8 * i)) & 0xff);
  return out + text + blobs;
}

NetworkWeights NetworkWeights::decode(std::string_view bytes) {
  if (bytes.size() < 8) throw InvalidArgument("weights file truncated");
  std::uint64_t n = 0;
  for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  if (n > bytes.size() - 8) throw InvalidArgument("weights manifest length exceeds file size");
  NetworkWeights w;
  try {
    const json m = json::parse(bytes.substr(8, n));
    if (m.at("format") != "scatsim-weights-1") throw InvalidArgument("unsupported weights format");
    for (const auto& j : m.at("architecture")) w.layers.push_back(layer_from_json(j));
    const json& o = m.at("options");
    w.options.R = o.at("R").get<int>();
    w.options.encoder_channels = o.at("encoder_channels").get<std::vector<int>>();
    w.options.decoder_channels = o.at("decoder_channels").get<std::vector<int>>();
    w.options.kernel_lateral = o.at("kernel").at(0).get<int>();
    w.options.kernel_axial = o.at("kernel").at(1).get<int>();
    w.reference_mean = m.at("reference_mean").get<double>();
    w.input_scale = m.at("input_scale").get<double>();
    w.seed = m.at("seed").get<std::uint64_t>();
    w.iterations = m.at("iterations").get<int>();
    if (m.at("architecture_hash").get<std::string>() != w.architecture_hash()) {
      throw InvalidArgument("weights architecture hash does not match the stored layers");
    }
    const std::string_view blobs = bytes.substr(8 + n);
    for (const auto& e : m.at("entries")) {
      const auto off = e.at("offset").get<std::size_t>();
      const auto len = e.at("length").get<std::size_t>();
      if (off > blobs.size() || len > blobs.size() - off) throw InvalidArgument("weights entry out of range");
      TensorFile t = decode_tensor(blobs.substr(off, len));
      ParamTensor p{e.at("name").get<std::string>(), static_cast<int>(t.values.rows()),
                    static_cast<int>(t.values.cols()), {}};
      p.values.assign(t.values.data(), t.values.data() + t.values.size());
      w.params.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("malformed weights manifest: {}", e.what()));
  }
  w.validate();
  return w;
}

void NetworkWeights::save(const std::filesystem::path& path) const { write_file(path, encode()); }

NetworkWeights NetworkWeights::load(const std::filesystem::path& path) {
  try {
    return decode(read_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(fmt::format("{}: {}", path.string(), e.what()));
  }
}

template <class T>
Tensor<T> Tensor<T>::zeros(int channels, int batch, int axial, int lateral) {
  Tensor t;
  t.batch = batch;
  t.axial = axial;
  t.lateral = lateral;
  t.data.setZero(channels, static_cast<long>(batch) * axial * lateral);
  return t;
}

template <class T>
Network<T>::Network(const NetworkWeights& weights) {
  set_weights(weights);
}

template <class T>
void Network<T>::set_weights(const NetworkWeights& weights) {
  weights.validate();
  layers_ = weights.layers;
  param_index_.assign(layers_.size(), -1);
  params_.clear();
  std::size_t k = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].has_params()) continue;
    param_index_[i] = static_cast<int>(params_.size());
    for (int j = 0; j < 2; ++j, ++k) {
      const ParamTensor& p = weights.params[k];
      params_.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                            p.values.data(), p.rows, p.cols)
                            .template cast<T>());
    }
  }
  grads_.clear();
  for (const auto& p : params_) grads_.push_back(Mat::Zero(p.rows(), p.cols()));
  cached_ = false;
}

template <class T>
void Network<T>::export_params(NetworkWeights& weights) const {
  if (weights.params.size() != params_.size()) throw InvalidArgument("weights do not match this network");
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& dst = weights.params[k].values;
    const Mat& src = params_[k];
    for (Eigen::Index i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src.data()[i]);
  }
}

template <class T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, bool keep_cache) {
  if (layers_.empty()) throw InvalidArgument("network has no layers");
  if (input.channels() != layers_.front().channels_in) throw InvalidArgument("input channel count mismatch");
  network_output_shape(layers_, input.lateral, input.axial);
  acts_.assign(1, input);
  cols_.assign(layers_.size(), Mat());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& s = layers_[i];
    const Tensor<T>& x = acts_[i];
    Tensor<T> y;
    y.batch = x.batch;
    switch (s.kind) {
      case LayerKind::conv: {
        const ConvGeom g = conv_geom(s, s.channels_in, x.batch, x.axial, x.lateral);
        Mat cols;
        im2col(x.data, g, cols);
        const Mat& w = params_[param_index_[i]];
        const Mat& b = params_[param_index_[i] + 1];
        y.axial = g.out_a;
        y.lateral = g.out_l;
        y.data.noalias() = w * cols;
        y.data.colwise() += b.col(0);
        if (keep_cache) cols_[i] = std::move(cols);
        break;
      }
      case LayerKind::transposed_conv: {
        const ConvGeom g = conv_geom(s, s.channels_out, x.batch, x.axial * s.stride_axial, x.lateral * s.stride_lateral);
        const Mat& w = params_[param_index_[i]];
        const Mat& b = params_[param_index_[i] + 1];
        Mat cols = w.transpose() * x.data;
        y.axial = g.in_a;
        y.lateral = g.in_l;
        col2im(cols, g, y.data);
        y.data.colwise() += b.col(0);
        break;
      }
      case LayerKind::activation:
        y.axial = x.axial;
        y.lateral = x.lateral;
        y.data = x.data.unaryExpr([](T v) { return elu(v); });
        break;
      case LayerKind::skip_concat: {
        const Tensor<T>& skip = acts_[s.skip_from + 1];
        y.axial = x.axial;
        y.lateral = x.lateral;
        y.data.resize(x.channels() + skip.channels(), x.data.cols());
        y.data.topRows(x.channels()) = x.data;
        y.data.bottomRows(skip.channels()) = skip.data;
        break;
      }
      case LayerKind::linear_output: {
        const Mat& w = params_[param_index_[i]];
        const Mat& b = params_[param_index_[i] + 1];
        y.axial = x.axial;
        y.lateral = x.lateral;
        y.data.noalias() = w * x.data;
        y.data.colwise() += b.col(0);
        break;
      }
    }
    acts_.push_back(std::move(y));
  }
  cached_ = keep_cache;
  Tensor<T> out = acts_.back();
  if (!keep_cache) {
    acts_.clear();
    cols_.clear();
  }
  return out;
}

template <class T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_output) {
  if (!cached_) throw InvalidArgument("backward() needs a preceding forward() with keep_cache");
  const Tensor<T>& out = acts_.back();
  if (grad_output.data.rows() != out.data.rows() || grad_output.data.cols() != out.data.cols()) {
    throw InvalidArgument("output gradient shape mismatch");
  }
  std::vector<Mat> d(acts_.size());
  d.back() = grad_output.data;
  for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
    const LayerSpec& s = layers_[i];
    const Tensor<T>& x = acts_[i];
    Mat& dy = d[i + 1];
    if (dy.size() == 0) dy.setZero(acts_[i + 1].data.rows(), acts_[i + 1].data.cols());
    Mat dx;
    switch (s.kind) {
      case LayerKind::conv: {
        const ConvGeom g = conv_geom(s, s.channels_in, x.batch, x.axial, x.lateral);
        const int p = param_index_[i];
        grads_[p].noalias() = dy * cols_[i].transpose();
        grads_[p + 1] = dy.rowwise().sum();
        const Mat dcols = params_[p].transpose() * dy;
        col2im(dcols, g, dx);
        break;
      }
      case LayerKind::transposed_conv: {
        const ConvGeom g = conv_geom(s, s.channels_out, x.batch, x.axial * s.stride_axial, x.lateral * s.stride_lateral);
        const int p = param_index_[i];
        Mat dcols;
        im2col(dy, g, dcols);
        grads_[p].noalias() = x.data * dcols.transpose();
        grads_[p + 1] = dy.rowwise().sum();
        dx.noalias() = params_[p] * dcols;
        break;
      }
      case LayerKind::activation: {
        const Mat& y = acts_[i + 1].data;
        dx.resize(dy.rows(), dy.cols());
        for (Eigen::Index k = 0; k < dx.size(); ++k) {
          const T v = x.data.data()[k];
          dx.data()[k] = dy.data()[k] * (v > T(0) ? T(1) : y.data()[k] + T(1));
        }
        break;
      }
      case LayerKind::skip_concat: {
        const int c = x.channels();
        dx = dy.topRows(c);
        Mat& ds = d[s.skip_from + 1];
        const auto part = dy.bottomRows(dy.rows() - c);
        if (ds.size() == 0) {
          ds = part;
        } else {
          ds += part;
        }
        break;
      }
      case LayerKind::linear_output: {
        const int p = param_index_[i];
        grads_[p].noalias() = dy * x.data.transpose();
        grads_[p + 1] = dy.rowwise().sum();
        dx.noalias() = params_[p].transpose() * dy;
        break;
      }
    }
    if (d[i].size() == 0) {
      d[i] = std::move(dx);
    } else {
      d[i] += dx;
    }
    dy.resize(0, 0);
  }
  Tensor<T> gin;
  gin.batch = acts_[0].batch;
  gin.axial = acts_[0].axial;
  gin.lateral = acts_[0].lateral;
  gin.data = std::move(d[0]);
  return gin;
}

template <class T>
T loss_l1(const typename Tensor<T>::Mat& pred, const typename Tensor<T>::Mat& target, typename Tensor<T>::Mat* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw InvalidArgument(fmt::format("L1 loss shape mismatch: {}x{} vs {}x{}", pred.rows(), pred.cols(),
                                      target.rows(), target.cols()));
  }
  if (pred.size() == 0) throw InvalidArgument("L1 loss of an empty tensor");
  const T n = static_cast<T>(pred.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) sum += std::abs(static_cast<double>(pred.data()[i] - target.data()[i]));
  if (grad) {
    grad->resize(pred.rows(), pred.cols());
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      const T diff = pred.data()[i] - target.data()[i];
      grad->data()[i] = (diff > T(0) ? T(1) : diff < T(0) ? T(-1) : T(0)) / n;
    }
  }
  return static_cast<T>(sum / static_cast<double>(pred.size()));
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw InvalidArgument("invalid Adam configuration");
  }
}

template <class T>
void Adam<T>::step(std::vector<Mat>& params, const std::vector<Mat>& grads) {
  if (params.size() != grads.size()) throw InvalidArgument("Adam: parameter and gradient counts differ");
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!grads[k].allFinite()) throw NumericError(fmt::format("non-finite gradient in parameter tensor {}", k));
    if (grads[k].rows() != params[k].rows() || grads[k].cols() != params[k].cols()) {
      throw InvalidArgument("Adam: gradient shape mismatch");
    }
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Mat::Zero(p.rows(), p.cols()));
      v_.push_back(Mat::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, t_));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, t_));
  const T lr = static_cast<T>(cfg_.learning_rate), eps = static_cast<T>(cfg_.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = b1 * m_[k] + (T(1) - b1) * grads[k];
    v_[k] = b2 * v_[k] + (T(1) - b2) * grads[k].cwiseAbs2();
    params[k].array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
  }
}

Image network_predict(const NetworkWeights& weights, const Image& envelope) {
  Network<float> net(weights);
  const auto [ol, oa] = network_output_shape(weights.layers, static_cast<int>(envelope.cols()),
                                             static_cast<int>(envelope.rows()));
  Tensor<float> x = Tensor<float>::zeros(1, 1, static_cast<int>(envelope.rows()), static_cast<int>(envelope.cols()));
  for (Eigen::Index i = 0; i < envelope.size(); ++i) {
    x.data(0, i) = static_cast<float>(envelope.data()[i] * weights.input_scale);
  }
  const Tensor<float> y = net.forward(x, false);
  Image out(oa, ol);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = static_cast<double>(y.data(0, i));
  return out;
}

template struct Tensor<float>;
template struct Tensor<double>;
template class Network<float>;
template class Network<double>;
template class Adam<float>;
template class Adam<double>;
template float loss_l1<float>(const Tensor<float>::Mat&, const Tensor<float>::Mat&, Tensor<float>::Mat*);
template double loss_l1<double>(const Tensor<double>::Mat&, const Tensor<double>::Mat&, Tensor<double>::Mat*);

}  // namespace scatsim
