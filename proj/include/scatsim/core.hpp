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

#ifndef SCATSIM_CORE_HPP
#define SCATSIM_CORE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace scatsim {

// Rows are axial samples (depth increases with row index), columns are lateral lines.
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, malformed configuration or unusable files.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Divergence, NaN, division hazards.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultSpeedOfSound = 1540.0;  // m/s
inline constexpr double kDefaultSamplingFrequency = 40.0;  // MHz
inline constexpr double kMinScatterersPerMm2 = 100.0;

/**
 * Regular 2D sampling grid in millimetres.
 *
 * Pixel (row, col) sits at lateral = origin_lateral + col * spacing_lateral and
 * axial = origin_axial + row * spacing_axial.
 */
struct Grid2D {
  int n_lateral = 1;
  int n_axial = 1;
  double spacing_lateral = 1.0;
  double spacing_axial = 1.0;
  double origin_lateral = 0.0;
  double origin_axial = 0.0;

  /// Validating constructor.
  static Grid2D make(int n_lateral, int n_axial, double spacing_lateral, double spacing_axial,
                     double origin_lateral = 0.0, double origin_axial = 0.0);

  void validate() const;

  double lateral_mm(double col) const { return origin_lateral + col * spacing_lateral; }
  double axial_mm(double row) const { return origin_axial + row * spacing_axial; }
  double col_at(double lateral) const { return (lateral - origin_lateral) / spacing_lateral; }
  double row_at(double axial) const { return (axial - origin_axial) / spacing_axial; }

  double width_mm() const { return n_lateral * spacing_lateral; }
  double depth_mm() const { return n_axial * spacing_axial; }
  long size() const { return static_cast<long>(n_lateral) * n_axial; }

  bool isotropic(double rtol = 1e-9) const;
  bool same_as(const Grid2D& other, double rtol = 1e-9) const;
  bool matches(const Image& values) const {
    return values.rows() == n_axial && values.cols() == n_lateral;
  }
};

/// Scatterer pixel pitch c / (2 fs) in mm for fs in MHz and c in m/s.
double scatterer_spacing_mm(double fs_mhz, double c_m_s);

/// Isotropic grid at the native axial resolution of the RF data.
Grid2D make_scatterer_grid(int n_lateral, int n_axial, double fs_mhz, double c_m_s);

/// Seeded generator with a platform-independent stream.
///
/// The engine is std::mt19937_64 (bit-exact by the standard); distributions are
/// implemented here because the standard library ones are implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  Rng(Rng&&) = default;
  Rng& operator=(Rng&&) = default;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Marsaglia polar method).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Independent generator for a numbered sub-stream; depends only on the seed.
  Rng derive(std::uint64_t stream) const;

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Scatterer amplitude/density model. The per-pixel mean lives in ParameterMap.
struct ScattererModel {
  double rho_s = 0.05;
  double sigma_s = 0.05;
  int R = 4;  // axial coarsening of parameter maps

  void validate() const;
};

/// Parametric pulse-echo PSF: Gaussian envelope with an axial cosine carrier.
struct Psf {
  double fc = 6.0;          // MHz
  double sigma_l2 = 0.2;    // mm^2
  double sigma_a2 = 0.03;   // mm^2
  double fs = kDefaultSamplingFrequency;  // MHz
  double c = kDefaultSpeedOfSound;        // m/s

  void validate() const;
};

struct NoiseModel {
  double level = 0.0;  // fraction of mean |rf|
};

struct ScattererMap {
  Grid2D grid;
  Image amplitudes;
};

/// Unconstrained (signed) deconvolution result on the image grid.
struct TrfMap {
  Grid2D grid;
  Image values;
};

struct ParameterMap {
  Grid2D grid;
  Image mu;
  int R = 1;

  void validate() const;
};

struct RfImage {
  Grid2D grid;
  Image values;
};

struct EnvelopeImage {
  Grid2D grid;
  Image values;
};

struct RayleighDensity {
  double per_mm2 = 0.0;
  bool pass = false;
};

/// Scatterer density implied by rho_s on an isotropic grid, checked against 100 / mm^2.
RayleighDensity check_rayleigh_density(const ScattererModel& model, const Grid2D& grid);

/// Nearest-neighbour replication of a coarse map onto a grid whose spacings divide it.
ParameterMap upsample_parameter_map(const ParameterMap& pm, const Grid2D& target);

}  // namespace scatsim

#endif  // SCATSIM_CORE_HPP
