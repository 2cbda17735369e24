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

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>
#include <fmt/format.h>

#include "scatsim/estimators.hpp"

namespace scatsim {

namespace {

struct KernelShape {
  int half_l = 0;
  int half_a = 0;
  double spacing = 0.0;
  double fs = 0.0;
};

Eigen::VectorXd lateral_factor(const KernelShape& k, double sigma_l2) {
  Eigen::VectorXd u(2 * k.half_l + 1);
  for (int j = -k.half_l; j <= k.half_l; ++j) {
    const double l = j * k.spacing;
    u[j + k.half_l] = std::exp(-l * l / sigma_l2);
  }
  return u;
}

Eigen::VectorXd axial_factor(const KernelShape& k, double fc, double sigma_a2) {
  Eigen::VectorXd w(2 * k.half_a + 1);
  for (int i = -k.half_a; i <= k.half_a; ++i) {
    const double a = i * k.spacing;
    w[i + k.half_a] = std::exp(-a * a / sigma_a2) * std::cos(2.0 * std::numbers::pi * fc / k.fs * i);
  }
  return w;
}

// Parameters: (fc, log sigma_l2, log sigma_a2). Residual: unit-norm data minus best-scaled model.
struct FitFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const Eigen::MatrixXd* m = nullptr;  // rows axial, unit Frobenius norm
  KernelShape shape;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(m->size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    const double fc = std::clamp(p[0], 1e-3, 0.5 * shape.fs);
    const Eigen::VectorXd w = axial_factor(shape, fc, std::exp(p[2]));
    const Eigen::VectorXd u = lateral_factor(shape, std::exp(p[1]));
    const Eigen::MatrixXd model = w * u.transpose();
    const double nn = model.squaredNorm();
    const double s = nn > 0.0 ? (m->cwiseProduct(model)).sum() / nn : 0.0;
    const Eigen::MatrixXd r = *m - s * model;
    f = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
    return 0;
  }
};

}  // namespace

PsfFit fit_psf_params(const Image& measured, const Grid2D& grid, const Psf& base) {
  base.validate();
  grid.validate();
  if (!grid.isotropic()) throw InvalidArgument("PSF fitting needs an isotropic grid");
  if (measured.rows() % 2 == 0 || measured.cols() % 2 == 0) {
    throw InvalidArgument("measured PSF must have odd dimensions and be centred");
  }
  if (!measured.isFinite().all()) throw InvalidArgument("measured PSF contains non-finite values");
  const double norm = std::sqrt(measured.square().sum());
  if (norm == 0.0) throw InvalidArgument("measured PSF is all zero");

  KernelShape shape{static_cast<int>(measured.cols() / 2), static_cast<int>(measured.rows() / 2),
                    grid.spacing_axial, base.fs};
  const Eigen::MatrixXd m = measured.matrix() / norm;

  // Coarse search on the correlation u^T M^T w / (|u| |w|), which is separable.
  double best_corr = -1.0;
  Eigen::Vector3d best(base.fc, std::log(base.sigma_l2), std::log(base.sigma_a2));
  const int n_fc = 60, n_sl = 24, n_sa = 24;
  std::vector<Eigen::VectorXd> lat;
  std::vector<double> sl_values;
  for (int i = 0; i < n_sl; ++i) {
    const double s = 0.01 * std::pow(500.0, i / (n_sl - 1.0));
    sl_values.push_back(s);
    Eigen::VectorXd u = lateral_factor(shape, s);
    lat.push_back(u / u.norm());
  }
  for (int ifc = 0; ifc < n_fc; ++ifc) {
    const double fc = 0.45 * base.fs * (ifc + 1.0) / n_fc;
    for (int ia = 0; ia < n_sa; ++ia) {
      const double sa = 0.002 * std::pow(250.0, ia / (n_sa - 1.0));
      Eigen::VectorXd w = axial_factor(shape, fc, sa);
      const double wn = w.norm();
      if (wn == 0.0) continue;
      const Eigen::VectorXd mw = m.transpose() * (w / wn);
      for (int il = 0; il < n_sl; ++il) {
        const double corr = std::abs(lat[il].dot(mw));
        if (corr > best_corr) {
          best_corr = corr;
          best = {fc, std::log(sl_values[il]), std::log(sa)};
        }
      }
    }
  }

  FitFunctor fn;
  fn.m = &m;
  fn.shape = shape;
  Eigen::NumericalDiff<FitFunctor> diff(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<FitFunctor>> lm(diff);
  Eigen::VectorXd p = best;
  lm.parameters.maxfev = 400;
  lm.minimize(p);

  PsfFit out;
  out.psf = base;
  out.psf.fc = std::clamp(p[0], 1e-3, 0.5 * base.fs);
  out.psf.sigma_l2 = std::exp(p[1]);
  out.psf.sigma_a2 = std::exp(p[2]);
  Eigen::VectorXd r;
  fn(p, r);
  out.residual = r.norm();
  return out;
}

}  // namespace scatsim
