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

#include "fft.hpp"

#include <cstring>
#include <mutex>

#include <fftw3.h>

namespace scatsim::detail {

namespace {

// FFTW's planner is not thread safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : ptr(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))), size(n) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  fftw_complex* ptr;
  std::size_t size;
};

struct Plan {
  explicit Plan(fftw_plan p) : plan(p) {}
  ~Plan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  fftw_plan plan;
};

void run(Spectrum& s, bool inverse, bool columns_only) {
  if (s.rows == 0 || s.cols == 0) return;
  FftwBuffer buf(s.data.size());
  std::memcpy(buf.ptr, s.data.data(), sizeof(fftw_complex) * s.data.size());
  const int sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (columns_only) {
      int n[] = {s.rows};
      p = fftw_plan_many_dft(1, n, s.cols, buf.ptr, nullptr, s.cols, 1, buf.ptr, nullptr, s.cols, 1,
                             sign, FFTW_ESTIMATE);
    } else {
      p = fftw_plan_dft_2d(s.rows, s.cols, buf.ptr, buf.ptr, sign, FFTW_ESTIMATE);
    }
  }
  Plan plan(p);
  fftw_execute(plan.plan);
  std::memcpy(static_cast<void*>(s.data.data()), buf.ptr, sizeof(fftw_complex) * s.data.size());
}

}  // namespace

void fft2_inplace(Spectrum& s, bool inverse) { run(s, inverse, false); }

void fft_columns_inplace(Spectrum& s, bool inverse) { run(s, inverse, true); }

Spectrum fft2(const Image& real) {
  Spectrum s{static_cast<int>(real.rows()), static_cast<int>(real.cols()), {}};
  s.data.resize(static_cast<std::size_t>(real.size()));
  for (Eigen::Index i = 0; i < real.size(); ++i) s.data[i] = Complex(real.data()[i], 0.0);
  fft2_inplace(s, false);
  return s;
}

Image ifft2_real(Spectrum s) {
  fft2_inplace(s, true);
  Image out(s.rows, s.cols);
  const double scale = 1.0 / (static_cast<double>(s.rows) * s.cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = s.data[i].real() * scale;
  return out;
}

Image embed_centered(const Image& taps, int rows, int cols) {
  Image out = Image::Zero(rows, cols);
  const int ha = static_cast<int>(taps.rows()) / 2;
  const int hl = static_cast<int>(taps.cols()) / 2;
  for (int r = 0; r < taps.rows(); ++r) {
    const int rr = ((r - ha) % rows + rows) % rows;
    for (int c = 0; c < taps.cols(); ++c) {
      const int cc = ((c - hl) % cols + cols) % cols;
      out(rr, cc) += taps(r, c);
    }
  }
  return out;
}

}  // namespace scatsim::detail
