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

#ifndef SCATSIM_SRC_FFT_HPP
#define SCATSIM_SRC_FFT_HPP

#include <complex>
#include <vector>

#include "scatsim/core.hpp"

namespace scatsim::detail {

using Complex = std::complex<double>;

/// Row-major complex 2D array.
struct Spectrum {
  int rows = 0;
  int cols = 0;
  std::vector<Complex> data;

  Complex& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const Complex& operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

/// Unnormalised forward / inverse 2D DFT in place.
void fft2_inplace(Spectrum& s, bool inverse);

Spectrum fft2(const Image& real);
/// Real part of the normalised inverse transform.
Image ifft2_real(Spectrum s);

/// Unnormalised 1D DFT of every column (along the row index) in place.
void fft_columns_inplace(Spectrum& s, bool inverse);

/// Circular embedding of a centred odd-sized kernel into a rows x cols array so that
/// tap (half_a, half_l) lands on index (0, 0). Taps beyond the array wrap around.
Image embed_centered(const Image& taps, int rows, int cols);

}  // namespace scatsim::detail

#endif  // SCATSIM_SRC_FFT_HPP
