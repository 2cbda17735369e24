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

#include "scatsim/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace scatsim {

namespace {

using nlohmann::json;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void append(std::string& out, T v) {
  v = to_little(v);
  const auto* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

template <class T>
T take(std::string_view bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return to_little(v);
}

}  // namespace

std::string encode_tensor(const TensorFile& t) {
  t.grid.validate();
  if (!t.grid.matches(t.values)) {
    throw InvalidArgument(fmt::format("tensor '{}' has {}x{} values but a {}x{} grid", t.role,
                                      t.values.rows(), t.values.cols(), t.grid.n_axial,
                                      t.grid.n_lateral));
  }
  json header;
  header["dtype"] = t.dtype == DType::f32 ? "f32" : "f64";
  header["shape"] = {t.values.rows(), t.values.cols()};
  header["spacing_mm"] = {t.grid.spacing_axial, t.grid.spacing_lateral};
  header["origin_mm"] = {t.grid.origin_axial, t.grid.origin_lateral};
  header["role"] = t.role;
  const std::string text = header.dump();

  std::string out;
  const std::size_t elem = t.dtype == DType::f32 ? 4 : 8;
  out.reserve(8 + text.size() + elem * t.values.size());
  append<std::uint64_t>(out, text.size());
  out += text;
  for (Eigen::Index i = 0; i < t.values.size(); ++i) {
    const double v = t.values.data()[i];
    if (t.dtype == DType::f32) {
      append<float>(out, static_cast<float>(v));
    } else {
      append<double>(out, v);
    }
  }
  return out;
}

TensorFile decode_tensor(std::string_view bytes) {
  if (bytes.size() < 8) throw InvalidArgument("tensor file truncated before header length");
  const auto hlen = take<std::uint64_t>(bytes, 0);
  if (hlen > bytes.size() - 8) throw InvalidArgument("tensor header length exceeds file size");
  json header;
  try {
    header = json::parse(bytes.substr(8, hlen));
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("tensor header is not valid JSON: {}", e.what()));
  }
  TensorFile t;
  try {
    const std::string dtype = header.at("dtype");
    if (dtype == "f32") {
      t.dtype = DType::f32;
    } else if (dtype == "f64") {
      t.dtype = DType::f64;
    } else {
      throw InvalidArgument(fmt::format("unsupported tensor dtype '{}'", dtype));
    }
    const auto& shape = header.at("shape");
    const auto& spacing = header.at("spacing_mm");
    if (shape.size() != 2 || spacing.size() != 2) {
      throw InvalidArgument("tensor shape and spacing_mm must have two entries");
    }
    const long rows = shape[0].get<long>();
    const long cols = shape[1].get<long>();
    double origin_axial = 0.0, origin_lateral = 0.0;
    if (header.contains("origin_mm")) {
      origin_axial = header["origin_mm"].at(0).get<double>();
      origin_lateral = header["origin_mm"].at(1).get<double>();
    }
    t.grid = Grid2D::make(static_cast<int>(cols), static_cast<int>(rows), spacing[1].get<double>(),
                          spacing[0].get<double>(), origin_lateral, origin_axial);
    t.role = header.value("role", std::string{});
  } catch (const json::exception& e) {
    throw InvalidArgument(fmt::format("malformed tensor header: {}", e.what()));
  }

  const std::size_t elem = t.dtype == DType::f32 ? 4 : 8;
  const std::size_t count = static_cast<std::size_t>(t.grid.size());
  const std::size_t offset = 8 + hlen;
  if (bytes.size() != offset + elem * count) {
    throw InvalidArgument(fmt::format("tensor payload has {} bytes, expected {}", bytes.size() - offset,
                                      elem * count));
  }
  t.values.resize(t.grid.n_axial, t.grid.n_lateral);
  for (std::size_t i = 0; i < count; ++i) {
    t.values.data()[i] = t.dtype == DType::f32 ? static_cast<double>(take<float>(bytes, offset + 4 * i))
                                               : take<double>(bytes, offset + 8 * i);
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument(fmt::format("write to '{}' failed", path.string()));
}

void save_tensor(const std::filesystem::path& path, const TensorFile& tensor) {
  write_file(path, encode_tensor(tensor));
}

TensorFile load_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_parameter_map(const std::filesystem::path& path, const ParameterMap& pm) {
  save_tensor(path, TensorFile{DType::f64, "parameter_map", pm.grid, pm.mu});
}

ParameterMap load_parameter_map(const std::filesystem::path& path) {
  TensorFile t = load_tensor(path);
  ParameterMap pm;
  pm.grid = t.grid;
  pm.mu = std::move(t.values);
  pm.R = std::max(1, static_cast<int>(std::lround(pm.grid.spacing_axial / pm.grid.spacing_lateral)));
  pm.validate();
  return pm;
}

void save_image(const std::filesystem::path& path, const Image& values, const Grid2D& grid,
                std::string_view role) {
  save_tensor(path, TensorFile{DType::f64, std::string(role), grid, values});
}

void save_pgm(const std::filesystem::path& path, const Image& unit_values) {
  std::string out = fmt::format("P5\n{} {}\n255\n", unit_values.cols(), unit_values.rows());
  out.reserve(out.size() + unit_values.size());
  for (Eigen::Index i = 0; i < unit_values.size(); ++i) {
    const double v = std::clamp(unit_values.data()[i], 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  write_file(path, out);
}

std::string content_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace scatsim
