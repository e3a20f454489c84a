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

#ifndef GOALINFER_GEOMETRY_HPP_
#define GOALINFER_GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "goalinfer/vec3.hpp"

namespace goalinfer {

// Signed distance from a point to an axis-aligned box: positive outside,
// negative inside (depth below the nearest face), zero on the surface.
inline double point_box_signed_distance(const Vec3& p, const Vec3& center,
                                        const Vec3& half) {
  double qx = std::abs(p.x - center.x) - half.x;
  double qy = std::abs(p.y - center.y) - half.y;
  double qz = std::abs(p.z - center.z) - half.z;
  double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0), oz = std::max(qz, 0.0);
  double outside = std::sqrt(ox * ox + oy * oy + oz * oz);
  double inside = std::min(std::max({qx, qy, qz}), 0.0);
  return outside + inside;
}

// Minimum over the segment [a, b] of the point-box signed distance.
//
// Along the segment each |p_i(t) - c_i| - h_i is piecewise linear, so the
// signed distance is piecewise either linear or the norm of an affine
// vector. The minimum therefore lies at a breakpoint of those pieces or at
// the stationary point of one smooth piece; all candidates are enumerated
// and evaluated exactly.
inline double segment_box_signed_distance(const Vec3& a, const Vec3& b,
                                          const Vec3& center,
                                          const Vec3& half) {
  const std::array<double, 3> p0 = {a.x - center.x, a.y - center.y,
                                    a.z - center.z};
  const std::array<double, 3> d = {b.x - a.x, b.y - a.y, b.z - a.z};
  const std::array<double, 3> h = {half.x, half.y, half.z};

  // At most 2 ends + 9 per-coordinate breakpoints + 36 pairwise crossings.
  std::array<double, 48> cuts;
  std::size_t n_cuts = 0;
  cuts[n_cuts++] = 0.0;
  cuts[n_cuts++] = 1.0;
  auto add_cut = [&cuts, &n_cuts](double t) {
    if (t > 0.0 && t < 1.0) cuts[n_cuts++] = t;
  };
  for (int i = 0; i < 3; ++i) {
    if (d[i] != 0.0) {
      add_cut(-p0[i] / d[i]);                // m_i = 0 (abs breakpoint)
      add_cut((h[i] - p0[i]) / d[i]);        // q_i = 0 crossings
      add_cut((-h[i] - p0[i]) / d[i]);
    }
  }
  // Crossings where two face distances swap dominance, for every sign combo.
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      for (double si : {-1.0, 1.0}) {
        for (double sj : {-1.0, 1.0}) {
          double denom = si * d[i] - sj * d[j];
          if (denom != 0.0) {
            add_cut((h[i] - h[j] - si * p0[i] + sj * p0[j]) / denom);
          }
        }
      }
    }
  }
  std::sort(cuts.begin(), cuts.begin() + n_cuts);

  auto eval = [&](double t) {
    Vec3 p{a.x + d[0] * t, a.y + d[1] * t, a.z + d[2] * t};
    return point_box_signed_distance(p, center, half);
  };

  double best = std::min(eval(0.0), eval(1.0));
  for (std::size_t k = 0; k + 1 < n_cuts; ++k) {
    double ta = cuts[k], tb = cuts[k + 1];
    if (!(tb > ta)) continue;
    best = std::min(best, eval(tb));
    double tm = 0.5 * (ta + tb);
    // Active affine pieces q_i(t) = s_i (p0_i + d_i t) - h_i on (ta, tb).
    double sum_ab = 0.0, sum_bb = 0.0;
    bool any_positive = false;
    for (int i = 0; i < 3; ++i) {
      double mi = p0[i] + d[i] * tm;
      double s = mi < 0.0 ? -1.0 : 1.0;
      double qi_mid = s * mi - h[i];
      if (qi_mid > 0.0) {
        any_positive = true;
        double A = s * p0[i] - h[i];
        double B = s * d[i];
        sum_ab += A * B;
        sum_bb += B * B;
      }
    }
    if (any_positive && sum_bb > 0.0) {
      double ts = -sum_ab / sum_bb;
      if (ts > ta && ts < tb) best = std::min(best, eval(ts));
    }
  }
  return best;
}

// Distance from p to the infinite line through `point` with unit direction.
inline double point_line_distance_raw(const Vec3& p, const Vec3& point,
                                      const Vec3& unit_dir) {
  Vec3 v = p - point;
  double along = v.dot(unit_dir);
  return (v - unit_dir * along).norm();
}

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, largest-degree term first.
// Degenerate leading coefficients fall through to the quadratic and linear
// cases. Roots are Newton-polished.
inline int solve_cubic(double c3, double c2, double c1, double c0,
                       std::array<double, 3>& roots) {
  double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1),
                           std::abs(c0), 1e-300});
  c3 /= scale;
  c2 /= scale;
  c1 /= scale;
  c0 /= scale;

  int n = 0;
  constexpr double kTiny = 1e-14;
  if (std::abs(c3) < kTiny) {
    if (std::abs(c2) < kTiny) {
      if (std::abs(c1) < kTiny) return 0;
      roots[0] = -c0 / c1;
      return 1;
    }
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return 0;
    double sq = std::sqrt(disc);
    // Numerically stable quadratic roots.
    double q = -0.5 * (c1 + (c1 >= 0 ? sq : -sq));
    roots[n++] = q / c2;
    if (q != 0.0) roots[n++] = c0 / q;
    else roots[n++] = 0.0;
    return n;
  }

  double b = c2 / c3, c = c1 / c3, dd = c0 / c3;
  double q = (3.0 * c - b * b) / 9.0;
  double r = (9.0 * b * c - 27.0 * dd - 2.0 * b * b * b) / 54.0;
  double disc = q * q * q + r * r;
  double shift = b / 3.0;

  if (disc > 0.0) {
    double sq = std::sqrt(disc);
    double s = std::cbrt(r + sq);
    double t = std::cbrt(r - sq);
    roots[n++] = s + t - shift;
  } else if (disc == 0.0) {
    double r13 = std::cbrt(r);
    roots[n++] = 2.0 * r13 - shift;
    roots[n++] = -r13 - shift;
  } else {
    double mq = -q;
    double theta = std::acos(std::clamp(r / std::sqrt(mq * mq * mq), -1.0, 1.0));
    double m = 2.0 * std::sqrt(mq);
    roots[n++] = m * std::cos(theta / 3.0) - shift;
    roots[n++] = m * std::cos((theta + 2.0 * M_PI) / 3.0) - shift;
    roots[n++] = m * std::cos((theta + 4.0 * M_PI) / 3.0) - shift;
  }

  for (int i = 0; i < n; ++i) {
    double x = roots[i];
    for (int it = 0; it < 2; ++it) {
      double f = ((c3 * x + c2) * x + c1) * x + c0;
      double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
      if (std::abs(df) > 1e-30) x -= f / df;
    }
    if (std::isfinite(x)) roots[i] = x;
  }
  return n;
}

}  // namespace goalinfer

#endif  // GOALINFER_GEOMETRY_HPP_
