// Copyright 2026 The goalinfer Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOALINFER_OPTIMIZE_HPP_
#define GOALINFER_OPTIMIZE_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "goalinfer/error.hpp"

namespace goalinfer {

struct OptimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int n_evals = 0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Nelder-Mead simplex
// ---------------------------------------------------------------------------

struct NelderMeadConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  int max_iters = 400;
  double tol = 1e-6;          // simplex diameter
  double initial_step = 0.5;  // per-coordinate offset of the start simplex
};

// Standard simplex iterations; terminates when the simplex diameter falls
// below tol or the iteration budget runs out. `converged` additionally
// requires that the search improved on the starting point, so a flat
// objective reports converged=false while still returning its best vertex.
template <typename F>
OptimizeResult nelder_mead(const F& f, const std::vector<double>& x0,
                           const NelderMeadConfig& config = {}) {
  const std::size_t n = x0.size();
  if (n == 0) throw DataError("nelder_mead: empty start vector");

  OptimizeResult result;
  auto eval = [&](const std::vector<double>& x) {
    double v = f(x);
    ++result.n_evals;
    return v;
  };

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  values[0] = eval(x0);
  if (!std::isfinite(values[0])) {
    throw NumericError("nelder_mead: objective not finite at start");
  }
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += config.initial_step;
    values[i + 1] = eval(simplex[i + 1]);
  }
  const double initial_best = values[0];

  auto diameter = [&]() {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double diff = simplex[i][j] - simplex[0][j];
        s += diff * diff;
      }
      d = std::max(d, std::sqrt(s));
    }
    return d;
  };

  bool collapsed = false;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    // Order ascending by value.
    std::vector<std::size_t> order(n + 1);
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> sorted_simplex(n + 1);
    std::vector<double> sorted_values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      sorted_simplex[i] = simplex[order[i]];
      sorted_values[i] = values[order[i]];
    }
    simplex = std::move(sorted_simplex);
    values = std::move(sorted_values);

    if (diameter() < config.tol) {
      collapsed = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coeff) {
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) {
        x[j] = centroid[j] + coeff * (simplex[n][j] - centroid[j]);
      }
      return x;
    };

    std::vector<double> reflected = blend(-config.reflection);
    double fr = eval(reflected);

    if (fr < values[0]) {
      std::vector<double> expanded = blend(-config.expansion);
      double fe = eval(expanded);
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      bool outside = fr < values[n];
      std::vector<double> contracted =
          blend(outside ? -config.contraction : config.contraction);
      double fc = eval(contracted);
      if (fc < std::min(fr, values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            simplex[i][j] =
                simplex[0][j] + config.shrink * (simplex[i][j] - simplex[0][j]);
          }
          values[i] = eval(simplex[i]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (values[i] < values[best]) best = i;
  }
  result.x = simplex[best];
  result.f = values[best];
  result.converged = collapsed && values[best] < initial_best;
  return result;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 0.05;
  double beta_m = 0.9;
  double beta_v = 0.999;
  double eps = 1e-8;
  int max_iters = 2000;
  double tol = 1e-9;  // infinity norm of the applied step
};

// First-order optimization with bias-corrected moment estimates.
// f_and_grad(x, grad_out) must return the objective and fill grad_out.
template <typename FG>
OptimizeResult adam(const FG& f_and_grad, const std::vector<double>& x0,
                    const AdamConfig& config = {}) {
  const std::size_t n = x0.size();
  if (n == 0) throw DataError("adam: empty start vector");

  OptimizeResult result;
  std::vector<double> x = x0, grad(n, 0.0), m(n, 0.0), v(n, 0.0);
  double fx = f_and_grad(x, grad);
  ++result.n_evals;
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient");
  }

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    double step_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = config.beta_m * m[i] + (1.0 - config.beta_m) * grad[i];
      v[i] = config.beta_v * v[i] + (1.0 - config.beta_v) * grad[i] * grad[i];
      double mc = m[i] / (1.0 - std::pow(config.beta_m, iter));
      double vc = v[i] / (1.0 - std::pow(config.beta_v, iter));
      double step = config.lr * mc / (std::sqrt(vc) + config.eps);
      x[i] -= step;
      step_norm = std::max(step_norm, std::abs(step));
    }
    fx = f_and_grad(x, grad);
    ++result.n_evals;
    for (double g : grad) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient");
    }
    if (step_norm < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.x = x;
  result.f = fx;
  return result;
}

}  // namespace goalinfer

#endif  // GOALINFER_OPTIMIZE_HPP_
