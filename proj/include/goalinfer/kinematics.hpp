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

#ifndef GOALINFER_KINEMATICS_HPP_
#define GOALINFER_KINEMATICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "goalinfer/error.hpp"
#include "goalinfer/geometry.hpp"
#include "goalinfer/types.hpp"
#include "goalinfer/vec3.hpp"

namespace goalinfer {

// ---------------------------------------------------------------------------
// State and actions
// ---------------------------------------------------------------------------

// Velocity command, one entry per DoF. Clamped to the per-joint speed caps
// when applied.
struct Action {
  std::array<double, kNumDof> velocity{};

  bool finite() const {
    for (double v : velocity)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Torso-on-platform plus one active arm. base_z is the platform elevation,
// fixed by the scene's actor_base; only base_x/base_y are actuated.
struct KinematicState {
  double base_x = 0.0;
  double base_y = 0.0;
  double base_z = 0.0;
  double torso_pitch = 0.0;
  double torso_yaw = 0.0;
  std::array<double, 3> shoulder{};  // pitch, abduction, twist
  double elbow = 0.0;
  std::array<double, kNumDof> joint_velocities{};
  double t = 0.0;
  Hand arm = Hand::right;

  double dof(int d) const {
    switch (d) {
      case kBaseX: return base_x;
      case kBaseY: return base_y;
      case kTorsoPitch: return torso_pitch;
      case kTorsoYaw: return torso_yaw;
      case kShoulderPitch: return shoulder[0];
      case kShoulderAbduction: return shoulder[1];
      case kShoulderTwist: return shoulder[2];
      case kElbow: return elbow;
    }
    return 0.0;
  }

  void set_dof(int d, double v) {
    switch (d) {
      case kBaseX: base_x = v; break;
      case kBaseY: base_y = v; break;
      case kTorsoPitch: torso_pitch = v; break;
      case kTorsoYaw: torso_yaw = v; break;
      case kShoulderPitch: shoulder[0] = v; break;
      case kShoulderAbduction: shoulder[1] = v; break;
      case kShoulderTwist: shoulder[2] = v; break;
      case kElbow: elbow = v; break;
    }
  }
};

inline double speed_cap(const BodyProportions& body, int d) {
  if (d == kBaseX || d == kBaseY) return body.max_base_speed;
  return body.max_joint_speed[d];
}

inline void clamp_to_limits(KinematicState& state,
                            const BodyProportions& body) {
  for (int d = 0; d < kNumDof; ++d) {
    state.set_dof(d, std::clamp(state.dof(d), body.joint_limits[d].min,
                                body.joint_limits[d].max));
  }
}

// Neutral standing pose at the scene's actor base, arm hanging down.
inline KinematicState neutral_state(const SceneSpec& scene,
                                    Hand arm = Hand::right) {
  KinematicState s;
  s.base_x = scene.actor_base.x;
  s.base_y = scene.actor_base.y;
  s.base_z = scene.actor_base.z;
  s.arm = arm;
  clamp_to_limits(s, scene.body);
  return s;
}

// ---------------------------------------------------------------------------
// Forward kinematics
// ---------------------------------------------------------------------------

struct BodyPose {
  Vec3 pelvis;
  Vec3 neck;
  Vec3 head;
  Vec3 shoulder;
  Vec3 elbow;
  Vec3 wrist;
};

namespace detail {

struct Mat3 {
  // Column vectors.
  Vec3 cx, cy, cz;

  Vec3 operator*(const Vec3& v) const {
    return cx * v.x + cy * v.y + cz * v.z;
  }
  Mat3 operator*(const Mat3& o) const {
    return {(*this) * o.cx, (*this) * o.cy, (*this) * o.cz};
  }
};

inline Mat3 rot_x(double a) {
  double c = std::cos(a), s = std::sin(a);
  return {{1, 0, 0}, {0, c, s}, {0, -s, c}};
}
inline Mat3 rot_y(double a) {
  double c = std::cos(a), s = std::sin(a);
  return {{c, 0, -s}, {0, 1, 0}, {s, 0, c}};
}
inline Mat3 rot_z(double a) {
  double c = std::cos(a), s = std::sin(a);
  return {{c, s, 0}, {-s, c, 0}, {0, 0, 1}};
}

}  // namespace detail

// Chain geometry. Yaw 0 faces +y; pitch leans the torso toward the facing
// direction; shoulder angles act in the torso frame with the arm hanging
// along -Z at zero; elbow 0 is a straight arm.
inline BodyPose forward_kinematics(const KinematicState& state,
                                   const BodyProportions& body) {
  using detail::Mat3;
  const double psi = state.torso_yaw;
  const double pitch = state.torso_pitch;

  const Vec3 facing{std::sin(psi), std::cos(psi), 0.0};
  const Vec3 right{std::cos(psi), -std::sin(psi), 0.0};
  const Vec3 up{0.0, 0.0, 1.0};

  const Vec3 torso_axis = up * std::cos(pitch) + facing * std::sin(pitch);
  const Vec3 fwd_pitched = facing * std::cos(pitch) - up * std::sin(pitch);
  const Mat3 torso_frame{right, fwd_pitched, torso_axis};

  BodyPose pose;
  pose.pelvis = {state.base_x, state.base_y, state.base_z};
  pose.neck = pose.pelvis + torso_axis * body.torso_length;
  pose.head = pose.neck + torso_axis * body.head_offset;

  const double side = state.arm == Hand::right ? 1.0 : -1.0;
  pose.shoulder = pose.neck + right * (side * 0.5 * body.shoulder_width);

  const Mat3 shoulder_rot = detail::rot_x(state.shoulder[0]) *
                            detail::rot_y(state.shoulder[1]) *
                            detail::rot_z(state.shoulder[2]);
  const Vec3 hang{0.0, 0.0, -1.0};
  const Vec3 upper_dir = torso_frame * (shoulder_rot * hang);
  pose.elbow = pose.shoulder + upper_dir * body.upper_arm_length;

  const Vec3 fore_dir =
      torso_frame * (shoulder_rot * (detail::rot_x(state.elbow) * hang));
  pose.wrist = pose.elbow + fore_dir * body.forearm_length;
  return pose;
}

// ---------------------------------------------------------------------------
// Kinematic integration
// ---------------------------------------------------------------------------

// Applies a velocity command for dt seconds: speeds are clamped to the
// per-joint caps, then positions are clamped to the joint limits.
inline KinematicState step(const KinematicState& state, const Action& action,
                           double dt, const BodyProportions& body) {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw DataError("step: dt must be in (0, 0.1], got " + std::to_string(dt));
  }
  if (!action.finite()) throw NumericError("step: non-finite action");

  KinematicState next = state;
  for (int d = 0; d < kNumDof; ++d) {
    double cap = speed_cap(body, d);
    double v = std::clamp(action.velocity[d], -cap, cap);
    next.set_dof(d, std::clamp(state.dof(d) + v * dt, body.joint_limits[d].min,
                               body.joint_limits[d].max));
    next.joint_velocities[d] = v;
  }
  next.t = state.t + dt;
  return next;
}

// Quadratic effort of one applied step; commanded velocities are clamped to
// the caps first, same as in step().
inline double energy(const Action& action, double dt,
                     const BodyProportions& body) {
  double e = 0.0;
  for (int d = 0; d < kNumDof; ++d) {
    double cap = speed_cap(body, d);
    double v = std::clamp(action.velocity[d], -cap, cap);
    e += body.energy_weights[d] * v * v * dt;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Collision and balance measures
// ---------------------------------------------------------------------------

inline Vec3 box_center(const ObstacleSpec& o) { return o.center; }

// Sum of squared penetration depths of the body capsules (torso, upper arm,
// forearm) against all obstacle boxes and the table volume. Zero when every
// capsule clears every box; surface contact counts as clear.
inline double contact_penalty(const KinematicState& state,
                              const BodyProportions& body,
                              const SceneSpec& scene) {
  const BodyPose pose = forward_kinematics(state, body);
  const double r = body.capsule_radius;

  const std::array<std::pair<Vec3, Vec3>, 3> capsules = {
      std::make_pair(pose.pelvis, pose.neck),
      std::make_pair(pose.shoulder, pose.elbow),
      std::make_pair(pose.elbow, pose.wrist)};

  const Vec3 table_center = (scene.table_min + scene.table_max) * 0.5;
  const Vec3 table_half = (scene.table_max - scene.table_min) * 0.5;

  double penalty = 0.0;
  auto accumulate = [&](const Vec3& center, const Vec3& half) {
    for (const auto& [s0, s1] : capsules) {
      double sd = segment_box_signed_distance(s0, s1, center, half);
      double pen = r - sd;
      if (pen > 0.0) penalty += pen * pen;
    }
  };
  accumulate(table_center, table_half);
  for (const auto& o : scene.obstacles) accumulate(o.center, o.half_extents);
  return penalty;
}

// Head elevation above the tabletop; the planner rewards keeping it up.
inline double head_height(const KinematicState& state,
                          const BodyProportions& body,
                          const SceneSpec& scene) {
  return forward_kinematics(state, body).head.z - scene.table_height;
}

// ---------------------------------------------------------------------------
// Inverse kinematics (observed frame -> planner state)
// ---------------------------------------------------------------------------

struct IkResult {
  KinematicState state;
  double wrist_residual = 0.0;  // meters
};

// Fits the chain to an observed wrist position (plus shoulder and elbow
// when the recording carries them) by damped Gauss-Newton from the given
// seed. The base/torso subspace is underdetermined (a shoulder position can
// be met by translating the platform or by pitching), so those DoF carry a
// weak pull toward the seed, which the caller supplies from the previous
// chunk.
inline IkResult ik_fit_state(const Vec3& wrist_target,
                             const std::optional<Vec3>& shoulder_target,
                             const KinematicState& seed,
                             const BodyProportions& body,
                             const std::optional<Vec3>& elbow_target =
                                 std::nullopt) {
  using Vector8 = Eigen::Matrix<double, kNumDof, 1>;
  using Matrix8 = Eigen::Matrix<double, kNumDof, kNumDof>;

  constexpr double kPostureWeight = 0.02;
  const int n_anchor =
      3 + (shoulder_target ? 3 : 0) + (elbow_target ? 3 : 0);
  const int n_res = n_anchor + 4;  // + base/torso pull toward the seed
  auto residual = [&](const KinematicState& s, Eigen::VectorXd& r) {
    BodyPose pose = forward_kinematics(s, body);
    int i = 0;
    Vec3 we = pose.wrist - wrist_target;
    r(i++) = we.x;
    r(i++) = we.y;
    r(i++) = we.z;
    if (shoulder_target) {
      Vec3 se = pose.shoulder - *shoulder_target;
      r(i++) = se.x;
      r(i++) = se.y;
      r(i++) = se.z;
    }
    if (elbow_target) {
      Vec3 ee = pose.elbow - *elbow_target;
      r(i++) = ee.x;
      r(i++) = ee.y;
      r(i++) = ee.z;
    }
    for (int d : {kBaseX, kBaseY, kTorsoPitch, kTorsoYaw}) {
      r(i++) = kPostureWeight * (s.dof(d) - seed.dof(d));
    }
  };

  KinematicState x = seed;
  Eigen::VectorXd r(n_res), r_trial(n_res);
  residual(x, r);
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < 80 && cost > 1e-14; ++iter) {
    Eigen::MatrixXd jac(n_res, kNumDof);
    const double h = 1e-5;
    for (int d = 0; d < kNumDof; ++d) {
      KinematicState xp = x, xm = x;
      xp.set_dof(d, x.dof(d) + h);
      xm.set_dof(d, x.dof(d) - h);
      Eigen::VectorXd rp(n_res), rm(n_res);
      residual(xp, rp);
      residual(xm, rm);
      jac.col(d) = (rp - rm) / (2.0 * h);
    }
    Matrix8 jtj = jac.transpose() * jac;
    Vector8 jtr = jac.transpose() * r;

    bool improved = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Matrix8 lhs = jtj + lambda * Matrix8::Identity();
      Vector8 delta = lhs.ldlt().solve(-jtr);
      KinematicState trial = x;
      for (int d = 0; d < kNumDof; ++d) trial.set_dof(d, x.dof(d) + delta(d));
      clamp_to_limits(trial, body);
      residual(trial, r_trial);
      double trial_cost = r_trial.squaredNorm();
      if (trial_cost < cost) {
        x = trial;
        r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-9);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }

  IkResult out;
  out.state = x;
  out.state.joint_velocities = {};
  BodyPose pose = forward_kinematics(x, body);
  out.wrist_residual = distance(pose.wrist, wrist_target);
  return out;
}

}  // namespace goalinfer

#endif  // GOALINFER_KINEMATICS_HPP_
