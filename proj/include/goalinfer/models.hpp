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

#ifndef GOALINFER_MODELS_HPP_
#define GOALINFER_MODELS_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "goalinfer/alignment.hpp"
#include "goalinfer/error.hpp"
#include "goalinfer/geometry.hpp"
#include "goalinfer/kinematics.hpp"
#include "goalinfer/parallel.hpp"
#include "goalinfer/planner.hpp"
#include "goalinfer/posterior.hpp"
#include "goalinfer/types.hpp"

namespace goalinfer {

// ---------------------------------------------------------------------------
// Model identifiers and parameters
// ---------------------------------------------------------------------------

enum class ModelId { distance, linh, paramh, bodygen };

inline std::string to_string(ModelId m) {
  switch (m) {
    case ModelId::distance: return "distance";
    case ModelId::linh: return "linh";
    case ModelId::paramh: return "paramh";
    case ModelId::bodygen: return "bodygen";
  }
  return "distance";
}

inline ModelId model_from_string(const std::string& s) {
  if (s == "distance") return ModelId::distance;
  if (s == "linh") return ModelId::linh;
  if (s == "paramh") return ModelId::paramh;
  if (s == "bodygen") return ModelId::bodygen;
  throw DataError("unknown model id: " + s);
}

struct DistanceParams {
  double theta = 5.0;  // 1/m
};

struct LinHParams {
  double beta1 = 20.0;  // 1/m
  int h1 = 8;           // look-back history length, frames (>= 2)
  int alpha1 = 2;       // look-back probability length, windows
  bool forward_only = false;  // score the forward ray instead of the line
};

struct ParamHParams {
  double beta2 = 20.0;
  int h2 = 8;  // >= 3, a parabola per coordinate needs three points
  int alpha2 = 2;
  bool forward_only = false;
};

struct BodyGenParams {
  double beta3 = 10.0;
  int q = 15;      // chunk / look-back length, frames (>= 2)
  int n_runs = 5;  // planner repetitions per (goal, chunk)
  PlannerParams planner;  // noise_sigma zeros resolve from the scene body
  double ik_residual_limit = 0.05;  // meters; worse fits skip the chunk
  double plan_align_factor = kPlanAlignFactor;
};

struct ModelParams {
  DistanceParams distance;
  LinHParams linh;
  ParamHParams paramh;
  BodyGenParams bodygen;
};

inline void validate(const DistanceParams& p) {
  if (!(p.theta > 0) || !std::isfinite(p.theta)) {
    throw DataError("distance model: theta must be positive and finite");
  }
}
inline void validate(const LinHParams& p) {
  if (!(p.beta1 > 0)) throw DataError("linh: beta1 must be > 0");
  if (p.h1 < 2) throw DataError("linh: h1 must be >= 2");
  if (p.alpha1 < 0) throw DataError("linh: alpha1 must be >= 0");
}
inline void validate(const ParamHParams& p) {
  if (!(p.beta2 > 0)) throw DataError("paramh: beta2 must be > 0");
  if (p.h2 < 3) throw DataError("paramh: h2 must be >= 3");
  if (p.alpha2 < 0) throw DataError("paramh: alpha2 must be >= 0");
}
inline void validate(const BodyGenParams& p) {
  if (!(p.beta3 > 0)) throw DataError("bodygen: beta3 must be > 0");
  if (p.q < 2) throw DataError("bodygen: q must be >= 2");
  if (p.n_runs < 1) throw DataError("bodygen: n_runs must be >= 1");
}

// Fills in scene-dependent planner defaults (exploration noise per DoF).
inline PlannerParams resolve_planner(PlannerParams p,
                                     const BodyProportions& body) {
  bool missing = false;
  for (double s : p.noise_sigma) {
    if (s <= 0.0) missing = true;
  }
  if (missing) {
    for (int d = 0; d < kNumDof; ++d) {
      p.noise_sigma[d] = 0.4 * speed_cap(body, d);
    }
  }
  return p;
}

// Flags accumulated while scoring a trajectory.
struct ModelStats {
  int windows_used = 0;
  int windows_skipped = 0;  // degenerate (stationary-wrist) fit windows
  int chunks_used = 0;
  int chunks_skipped = 0;   // chunks whose resume-state IK did not fit
};

// ---------------------------------------------------------------------------
// Geometric fits
// ---------------------------------------------------------------------------

struct Line3 {
  Vec3 point;      // centroid of the fitted window
  Vec3 direction;  // unit vector
};

// Orthogonal least-squares line: centroid plus the principal axis of the
// centered points.
inline Line3 fit_line(const std::vector<Vec3>& points) {
  if (points.size() < 2) throw DataError("fit_line: needs >= 2 points");
  Vec3 centroid{0, 0, 0};
  for (const auto& p : points) centroid += p;
  centroid = centroid * (1.0 / static_cast<double>(points.size()));

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double spread = 0.0;
  for (const auto& p : points) {
    Vec3 d = p - centroid;
    spread = std::max(spread, d.squared_norm());
    Eigen::Vector3d v(d.x, d.y, d.z);
    cov += v * v.transpose();
  }
  if (spread < 1e-24) {
    throw DataError("fit_line: all points identical (degenerate window)");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Eigen::Vector3d dir = eig.eigenvectors().col(2);  // largest eigenvalue
  Line3 line;
  line.point = centroid;
  line.direction = normalized({dir(0), dir(1), dir(2)});
  return line;
}

// Shortest Euclidean distance from p to the (infinite) line.
inline double point_line_distance(const Line3& line, const Vec3& p) {
  return point_line_distance_raw(p, line.point, line.direction);
}

struct Parabola3 {
  // coeffs[c] = {a, b, c} per coordinate: x_c(u) = a u^2 + b u + c.
  std::array<std::array<double, 3>, 3> coeffs{};
  double param_origin = 0.0;  // frame-index parameterization
  double param_span = 1.0;

  Vec3 at(double u) const {
    auto eval = [u](const std::array<double, 3>& c) {
      return (c[0] * u + c[1]) * u + c[2];
    };
    return {eval(coeffs[0]), eval(coeffs[1]), eval(coeffs[2])};
  }
};

// Per-coordinate quadratic least squares against u = normalized frame
// offset in [0, 1].
inline Parabola3 fit_parabola(const std::vector<Vec3>& points) {
  const std::size_t n = points.size();
  if (n < 3) throw DataError("fit_parabola: needs >= 3 points");

  Eigen::MatrixXd design(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    double u = static_cast<double>(i) / static_cast<double>(n - 1);
    design(i, 0) = u * u;
    design(i, 1) = u;
    design(i, 2) = 1.0;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) {
    throw DataError("fit_parabola: rank-deficient design");
  }
  Eigen::MatrixXd rhs(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    rhs(i, 0) = points[i].x;
    rhs(i, 1) = points[i].y;
    rhs(i, 2) = points[i].z;
  }
  Eigen::MatrixXd sol = qr.solve(rhs);
  Parabola3 curve;
  for (int c = 0; c < 3; ++c) {
    curve.coeffs[c] = {sol(0, c), sol(1, c), sol(2, c)};
  }
  curve.param_origin = 0.0;
  curve.param_span = static_cast<double>(n - 1);
  return curve;
}

// Shortest Euclidean distance from p to the curve over u in R (or u >= u_min
// when a forward bound is requested). The squared distance is quartic in u;
// its derivative is cubic and all real roots are evaluated.
inline double point_curve_distance(const Parabola3& curve, const Vec3& p,
                                   const double* u_min = nullptr) {
  std::array<double, 3> qa{}, qb{}, qc{};
  for (int c = 0; c < 3; ++c) {
    qa[c] = curve.coeffs[c][0];
    qb[c] = curve.coeffs[c][1];
    qc[c] = curve.coeffs[c][2] - (c == 0 ? p.x : c == 1 ? p.y : p.z);
  }
  double saa = 0, sab = 0, sbb = 0, sac = 0, sbc = 0;
  for (int c = 0; c < 3; ++c) {
    saa += qa[c] * qa[c];
    sab += qa[c] * qb[c];
    sbb += qb[c] * qb[c];
    sac += qa[c] * qc[c];
    sbc += qb[c] * qc[c];
  }
  // Direct evaluation; the expanded quartic cancels badly near the curve.
  auto dist_sq = [&](double u) {
    double s = 0;
    for (int c = 0; c < 3; ++c) {
      double d = (qa[c] * u + qb[c]) * u + qc[c];
      s += d * d;
    }
    return s;
  };

  std::array<double, 3> roots{};
  int n_roots =
      solve_cubic(2.0 * saa, 3.0 * sab, sbb + 2.0 * sac, sbc, roots);

  double best = std::numeric_limits<double>::infinity();
  if (u_min) best = dist_sq(*u_min);
  for (int i = 0; i < n_roots; ++i) {
    double u = roots[i];
    if (!std::isfinite(u)) continue;
    if (u_min && u < *u_min) continue;
    best = std::min(best, dist_sq(u));
  }
  if (!std::isfinite(best)) best = dist_sq(0.0);  // constant curve
  return std::sqrt(std::max(best, 0.0));
}

// ---------------------------------------------------------------------------
// Per-target evidence features
//
// Every model's log-likelihood has the form -rate * feature(g), with the
// feature independent of the rate parameter. The fitting module caches the
// features so that rate-parameter gradients are analytic. When the active
// hand is unannotated each available hand is scored and the per-target
// minimum feature (maximum likelihood) is kept.
// ---------------------------------------------------------------------------

// Distance heuristic feature: Euclidean wrist-to-target distance at the
// final observed frame only.
inline std::map<int, double> distance_features(const Trajectory& traj,
                                               const SceneSpec& scene) {
  if (traj.frames.empty()) throw DataError("distance model: empty trajectory");
  std::map<int, double> features;
  for (const auto& target : scene.targets) {
    double best = std::numeric_limits<double>::infinity();
    for (Hand hand : hands_to_score(traj)) {
      const Vec3* wrist =
          traj.frames.back().find_joint(wrist_joint_name(hand));
      if (!wrist) continue;
      best = std::min(best, distance(*wrist, target.position));
    }
    features[target.id] = best;
  }
  return features;
}

namespace detail {

inline bool window_degenerate(const std::vector<Vec3>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if ((pts[i] - pts[0]).squared_norm() > 1e-24) return false;
  }
  return true;
}

// Sum over look-back windows of a per-window target distance. Windows that
// would start before the first frame are dropped; degenerate windows are
// skipped. A hand with no usable window carries no evidence and is left out
// of the per-target minimum; when no hand has one the features are all-zero
// (uniform likelihood).
template <typename WindowDistance>
std::map<int, double> window_features(const Trajectory& traj,
                                      const SceneSpec& scene, int h, int alpha,
                                      const WindowDistance& window_distance,
                                      ModelStats* stats) {
  const int tau = static_cast<int>(traj.frames.size());
  std::map<int, double> features;
  for (const auto& t : scene.targets) {
    features[t.id] = std::numeric_limits<double>::infinity();
  }

  bool any_hand_scored = false;
  for (Hand hand : hands_to_score(traj)) {
    std::map<int, double> sums;
    for (const auto& t : scene.targets) sums[t.id] = 0.0;
    int used = 0, skipped = 0;
    for (int k = 0; k <= alpha; ++k) {
      // 1-based window [tau-k-h+1, tau-k] -> 0-based [tau-k-h, tau-k-1].
      int first = tau - k - h;
      int last = tau - k - 1;
      if (first < 0) continue;
      std::vector<Vec3> pts = wrist_path(traj, hand, first, last);
      if (window_degenerate(pts)) {
        ++skipped;
        continue;
      }
      for (const auto& t : scene.targets) {
        sums[t.id] += window_distance(pts, t.position);
      }
      ++used;
    }
    if (stats) {
      stats->windows_used += used;
      stats->windows_skipped += skipped;
    }
    if (used == 0) continue;
    for (const auto& [id, s] : sums) {
      features[id] = std::min(features[id], s);
    }
    any_hand_scored = true;
  }
  if (!any_hand_scored) {
    for (auto& [id, f] : features) f = 0.0;
  }
  return features;
}

}  // namespace detail

inline std::map<int, double> linh_features(const Trajectory& traj,
                                           const SceneSpec& scene,
                                           int h1, int alpha1,
                                           bool forward_only = false,
                                           ModelStats* stats = nullptr) {
  return detail::window_features(
      traj, scene, h1, alpha1,
      [forward_only](const std::vector<Vec3>& pts, const Vec3& target) {
        Line3 line = fit_line(pts);
        if (!forward_only) return point_line_distance(line, target);
        // Orient along the window's motion and score the forward ray from
        // the projection of the window's last point.
        Vec3 motion = pts.back() - pts.front();
        Vec3 dir = line.direction;
        if (dir.dot(motion) < 0) dir = -dir;
        Vec3 origin =
            line.point + dir * (pts.back() - line.point).dot(dir);
        Vec3 v = target - origin;
        double along = v.dot(dir);
        if (along < 0) return v.norm();
        return (v - dir * along).norm();
      },
      stats);
}

inline std::map<int, double> paramh_features(const Trajectory& traj,
                                             const SceneSpec& scene,
                                             int h2, int alpha2,
                                             bool forward_only = false,
                                             ModelStats* stats = nullptr) {
  return detail::window_features(
      traj, scene, h2, alpha2,
      [forward_only](const std::vector<Vec3>& pts, const Vec3& target) {
        Parabola3 curve = fit_parabola(pts);
        if (!forward_only) return point_curve_distance(curve, target);
        double u_end = 1.0;  // window end in normalized parameter
        return point_curve_distance(curve, target, &u_end);
      },
      stats);
}

// BodyGen feature: per-target sum over chunks of the mean plan divergence
// (Markov chunking of the observation, Plan() replans from each chunk's
// resume state). Infinite when no plan toward the target ever completes.
inline std::map<int, double> bodygen_features(
    const Trajectory& traj, const SceneSpec& scene, const BodyGenParams& p,
    const TerminalValue* value, std::uint64_t rng_seed,
    ModelStats* stats = nullptr) {
  validate(p);
  const int tau = static_cast<int>(traj.frames.size());
  if (tau < 2) throw DataError("bodygen: trajectory prefix needs >= 2 frames");
  const PlannerParams planner = resolve_planner(p.planner, scene.body);

  std::map<int, double> features;
  for (const auto& t : scene.targets) {
    features[t.id] = std::numeric_limits<double>::infinity();
  }

  const std::vector<Hand> hands = hands_to_score(traj);
  bool any_hand_scored = false;
  for (std::size_t hand_i = 0; hand_i < hands.size(); ++hand_i) {
    Hand hand = hands[hand_i];

    // Resume states per chunk, fitted sequentially so each chunk's IK seeds
    // from the previous solution.
    struct Chunk {
      std::vector<Vec3> observed;
      KinematicState resume;
    };
    std::vector<Chunk> chunks;
    int skipped = 0;
    KinematicState ik_seed = neutral_state(scene, hand);
    for (int t = 2; t <= tau; t += p.q) {
      int chunk_last = std::min(t + p.q - 1, tau);
      const SkeletonFrame& resume_frame = traj.frames[t - 2];
      const Vec3* wrist = resume_frame.find_joint(wrist_joint_name(hand));
      if (!wrist) {
        ++skipped;
        continue;
      }
      std::optional<Vec3> shoulder, elbow;
      const std::string side = hand == Hand::left ? "_left" : "_right";
      if (const Vec3* s = resume_frame.find_joint("shoulder" + side)) {
        shoulder = *s;
      }
      if (const Vec3* e = resume_frame.find_joint("elbow" + side)) {
        elbow = *e;
      }
      IkResult ik = ik_fit_state(*wrist, shoulder, ik_seed, scene.body, elbow);
      if (ik.wrist_residual > p.ik_residual_limit) {
        ++skipped;
        continue;
      }
      ik_seed = ik.state;
      Chunk chunk;
      chunk.resume = ik.state;
      chunk.resume.t = resume_frame.t;
      chunk.observed = wrist_path(traj, hand, t - 1, chunk_last - 1);
      chunks.push_back(std::move(chunk));
    }
    if (stats) {
      stats->chunks_used += static_cast<int>(chunks.size());
      stats->chunks_skipped += skipped;
    }
    if (chunks.empty()) continue;  // this hand carries no usable evidence
    any_hand_scored = true;

    // Targets are independent; the nominal-sequence warm start is carried
    // across chunks per (target, run).
    std::vector<double> sums(scene.targets.size(), 0.0);
    parallel_for(scene.targets.size(), [&](std::size_t gi) {
      const TargetSpec& goal = scene.targets[gi];
      std::vector<MppiContext> run_contexts(p.n_runs);
      double total = 0.0;
      for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
        std::uint64_t seed = derive_seed(
            rng_seed, {static_cast<std::uint64_t>(hand_i),
                       static_cast<std::uint64_t>(ci),
                       static_cast<std::uint64_t>(goal.id)});
        total += mean_plan_divergence(chunks[ci].observed, goal, scene,
                                      chunks[ci].resume, p.n_runs, planner,
                                      value, seed, &run_contexts,
                                      p.plan_align_factor);
      }
      sums[gi] = total;
    });
    for (std::size_t gi = 0; gi < scene.targets.size(); ++gi) {
      double& f = features[scene.targets[gi].id];
      f = std::min(f, sums[gi]);
    }
  }
  if (!any_hand_scored) {
    throw DataError("bodygen: every chunk was skipped (IK could not match "
                    "the observed frames)");
  }
  return features;
}

// ---------------------------------------------------------------------------
// Log-likelihoods (Eq. 2-6 shapes: loglik = -rate * feature)
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<int, double> scale_features(
    const std::map<int, double>& features, double rate) {
  std::map<int, double> loglik;
  for (const auto& [id, f] : features) {
    loglik[id] = std::isinf(f) ? -std::numeric_limits<double>::infinity()
                               : -rate * f;
  }
  return loglik;
}

}  // namespace detail

inline std::map<int, double> distance_loglik(const Trajectory& traj,
                                             const SceneSpec& scene,
                                             const DistanceParams& p) {
  validate(p);
  return detail::scale_features(distance_features(traj, scene), p.theta);
}

inline std::map<int, double> linh_loglik(const Trajectory& traj,
                                         const SceneSpec& scene,
                                         const LinHParams& p,
                                         ModelStats* stats = nullptr) {
  validate(p);
  return detail::scale_features(
      linh_features(traj, scene, p.h1, p.alpha1, p.forward_only, stats),
      p.beta1);
}

inline std::map<int, double> paramh_loglik(const Trajectory& traj,
                                           const SceneSpec& scene,
                                           const ParamHParams& p,
                                           ModelStats* stats = nullptr) {
  validate(p);
  return detail::scale_features(
      paramh_features(traj, scene, p.h2, p.alpha2, p.forward_only, stats),
      p.beta2);
}

inline std::map<int, double> bodygen_loglik(const Trajectory& traj,
                                            const SceneSpec& scene,
                                            const BodyGenParams& p,
                                            const TerminalValue* value,
                                            std::uint64_t rng_seed,
                                            ModelStats* stats = nullptr) {
  return detail::scale_features(
      bodygen_features(traj, scene, p, value, rng_seed, stats), p.beta3);
}

// ---------------------------------------------------------------------------
// Inference entry point (Eq. 1)
// ---------------------------------------------------------------------------

inline GoalPosterior infer(ModelId model, const Trajectory& traj_prefix,
                           const SceneSpec& scene, const ModelParams& params,
                           const Prior& prior,
                           const TerminalValue* value = nullptr,
                           std::uint64_t rng_seed = 0,
                           ModelStats* stats = nullptr) {
  std::map<int, double> loglik;
  switch (model) {
    case ModelId::distance:
      loglik = distance_loglik(traj_prefix, scene, params.distance);
      break;
    case ModelId::linh:
      loglik = linh_loglik(traj_prefix, scene, params.linh, stats);
      break;
    case ModelId::paramh:
      loglik = paramh_loglik(traj_prefix, scene, params.paramh, stats);
      break;
    case ModelId::bodygen:
      loglik = bodygen_loglik(traj_prefix, scene, params.bodygen, value,
                              rng_seed, stats);
      break;
  }
  return combine_posterior(prior, loglik,
                           static_cast<int>(traj_prefix.frames.size()));
}

}  // namespace goalinfer

#endif  // GOALINFER_MODELS_HPP_
