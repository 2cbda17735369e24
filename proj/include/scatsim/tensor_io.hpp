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

#ifndef SCATSIM_TENSOR_IO_HPP
#define SCATSIM_TENSOR_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scatsim/core.hpp"

namespace scatsim {

enum class DType { f32, f64 };

/**
 * One 2D tensor file.
 *
 * Layout: 8-byte little-endian header length, UTF-8 JSON header
 * {dtype, shape: [rows, cols], spacing_mm: [axial, lateral], role, origin_mm},
 * then the row-major little-endian payload.
 */
struct TensorFile {
  DType dtype = DType::f64;
  std::string role;
  Grid2D grid;
  Image values;
};

std::string encode_tensor(const TensorFile& tensor);
TensorFile decode_tensor(std::string_view bytes);

void save_tensor(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile load_tensor(const std::filesystem::path& path);

// Typed conveniences; roles follow the artifact-wide naming.
void save_parameter_map(const std::filesystem::path& path, const ParameterMap& pm);
ParameterMap load_parameter_map(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& values, const Grid2D& grid,
                std::string_view role);

/// 8-bit binary portable graymap of values in [0,1].
void save_pgm(const std::filesystem::path& path, const Image& unit_values);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// 64-bit FNV-1a digest rendered as 16 hex characters.
std::string content_digest(std::string_view bytes);

}  // namespace scatsim

#endif  // SCATSIM_TENSOR_IO_HPP
