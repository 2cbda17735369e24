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
#include <limits>

#include <fmt/format.h>

#include "scatsim/estimators.hpp"

namespace scatsim {

namespace {

int integral_factor(double ratio, const char* axis) {
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-6 * n) {
    throw InvalidArgument(fmt::format("RF {} spacing must be an integer multiple of the output spacing", axis));
  }
  return static_cast<int>(n);
}

// A = decimate o bank, with its adjoint.
class RladOperator {
 public:
  RladOperator(const DepthPsfBank& bank, const Grid2D& rf_grid) : bank_(bank) {
    bank.validate();
    const Grid2D& g = bank.grid;
    fl_ = integral_factor(rf_grid.spacing_lateral / g.spacing_lateral, "lateral");
    fa_ = integral_factor(rf_grid.spacing_axial / g.spacing_axial, "axial");
    if (rf_grid.n_lateral * fl_ != g.n_lateral || rf_grid.n_axial * fa_ != g.n_axial) {
      throw InvalidArgument(fmt::format("output grid {}x{} is not the {}x{} RF grid refined by ({}, {})",
                                        g.n_lateral, g.n_axial, rf_grid.n_lateral, rf_grid.n_axial, fl_, fa_));
    }
    rows_ = rf_grid.n_axial;
    cols_ = rf_grid.n_lateral;
  }

  Image apply(const Image& x) const {
    Image full = apply_bank(x, bank_);
    if (fl_ == 1 && fa_ == 1) return full;
    Image out(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) out(r, c) = full(r * fa_, c * fl_);
    }
    return out;
  }

  Image adjoint(const Image& y) const {
    if (fl_ == 1 && fa_ == 1) return apply_bank_adjoint(y, bank_);
    Image up = Image::Zero(bank_.grid.n_axial, bank_.grid.n_lateral);
    for (int r = 0; r < rows_; ++r) {
      for (int c = 0; c < cols_; ++c) up(r * fa_, c * fl_) = y(r, c);
    }
    return apply_bank_adjoint(up, bank_);
  }

 private:
  const DepthPsfBank& bank_;
  int fl_ = 1, fa_ = 1, rows_ = 0, cols_ = 0;
};

double l1(const Image& v) { return v.abs().sum(); }

}  // namespace

void RladConfig::validate() const {
  if (!(lambda_rel > 0.0) || !std::isfinite(lambda_rel)) {
    throw InvalidArgument(fmt::format("lambda_rel must be positive, got {}", lambda_rel));
  }
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(tol >= 0.0)) throw InvalidArgument("tol must be >= 0");
  if (power_iters < 1) throw InvalidArgument("power_iters must be >= 1");
  if (gap_every < 1) throw InvalidArgument("gap_every must be >= 1");
}

double rlad_objective(const Image& x, const Image& b, const DepthPsfBank& bank, const Grid2D& rf_grid,
                      double lambda) {
  const RladOperator op(bank, rf_grid);
  return l1(op.apply(x) - b) + lambda * l1(x);
}

RladResult scat_rec(const RfImage& rf, const DepthPsfBank& bank, const Grid2D& out_grid, const RladConfig& cfg) {
  cfg.validate();
  if (!rf.grid.matches(rf.values)) throw InvalidArgument("RF values do not match their grid");
  if (!bank.grid.same_as(out_grid, 1e-6)) throw InvalidArgument("PSF bank must be defined on the output grid");
  const RladOperator op(bank, rf.grid);
  if (!rf.values.isFinite().all()) throw NumericError("RF image contains non-finite values");

  RladResult res;
  res.map = ScattererMap{out_grid, Image::Zero(out_grid.n_axial, out_grid.n_lateral)};
  const double b_norm = l1(rf.values);
  if (b_norm == 0.0) {
    res.objective = {0.0};
    res.iterate_objective = {0.0};
    res.converged = true;
    return res;
  }

  res.lambda = cfg.lambda_rel * op.adjoint(rf.values.sign()).abs().maxCoeff();
  const double lambda = res.lambda;
  // Iterate on data of unit mean magnitude so the fixed dual box [-1, 1] and the primal
  // variable are on comparable scales whatever the RF gain; results are scaled back.
  const double gain = b_norm / static_cast<double>(rf.values.size());
  const Image b = rf.values / gain;

  // Operator norm by power iteration on A^T A, from a fixed start.
  Rng rng(0x9a11ce);
  Image v(out_grid.n_axial, out_grid.n_lateral);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
  double norm2 = 0.0;
  for (int k = 0; k < cfg.power_iters; ++k) {
    v /= std::sqrt(v.square().sum());
    Image w = op.adjoint(op.apply(v));
    norm2 = std::sqrt(w.square().sum());
    if (norm2 == 0.0) throw NumericError("RLAD operator is identically zero");
    v = std::move(w);
  }
  res.operator_norm = std::sqrt(norm2);
  const double step = 1.0 / (1.05 * res.operator_norm);

  Image x = res.map.amplitudes;
  Image ax = Image::Zero(b.rows(), b.cols());
  Image ax_bar = ax;
  Image y = Image::Zero(b.rows(), b.cols());
  double best = l1(b);  // objective of x = 0
  double best_dual = -std::numeric_limits<double>::infinity();
  res.objective.reserve(cfg.max_iters);
  res.iterate_objective.reserve(cfg.max_iters);

  for (int k = 1; k <= cfg.max_iters; ++k) {
    y = (y + step * (ax_bar - b)).cwiseMax(-1.0).cwiseMin(1.0);
    const Image aty = op.adjoint(y);
    Image x_new = (x - step * (aty + lambda)).cwiseMax(0.0);
    Image ax_new = op.apply(x_new);
    ax_bar = 2.0 * ax_new - ax;
    x = std::move(x_new);
    ax = std::move(ax_new);

    const double obj = l1(ax - b) + lambda * l1(x);
    if (!std::isfinite(obj)) throw NumericError(fmt::format("RLAD objective became non-finite at iteration {}", k));
    res.iterate_objective.push_back(gain * obj);
    if (obj < best) {
      best = obj;
      res.map.amplitudes = gain * x;
    }
    res.objective.push_back(gain * best);
    res.iterations = k;

    if (k % cfg.gap_every == 0 || k == cfg.max_iters) {
      // Dual feasibility needs A^T y >= -lambda; shrink y until it holds.
      const double worst = -aty.minCoeff();
      const double s = worst > lambda ? lambda / worst : 1.0;
      best_dual = std::max(best_dual, -s * (y * b).sum());
      res.gap = (best - best_dual) / std::max(best, std::numeric_limits<double>::min());
      if (res.gap <= cfg.tol) {
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

}  // namespace scatsim
