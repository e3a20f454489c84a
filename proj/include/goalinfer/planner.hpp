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

#ifndef GOALINFER_PLANNER_HPP_
#define GOALINFER_PLANNER_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "goalinfer/error.hpp"
#include "goalinfer/kinematics.hpp"
#include "goalinfer/posterior.hpp"
#include "goalinfer/rng.hpp"
#include "goalinfer/types.hpp"

namespace goalinfer {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct PlannerParams {
  // Utility weights: reward = -p1*d + p2*h - p3*energy - p4*contact.
  double p1 = 10.0;
  double p2 = 1.0;
  double p3 = 0.1;
  double p4 = 3000.0;

  int horizon_H = 20;
  int samples_K = 64;
  double temperature_lambda = 3.0;
  std::array<double, kNumDof> noise_sigma{};  // exploration std dev per DoF
  double dt = 1.0 / 30.0;
  int max_steps = 150;
  double stop_radius = 0.03;  // meters
  // Per-step shrink of the nominal action sequence. Without it the nominal
  // random-walks in utility-flat directions and the pose drifts after the
  // reach settles.
  double nominal_decay = 0.92;
};

inline constexpr double kNoiseSigmaFraction = 0.15;  // of each speed cap

inline PlannerParams default_planner_params(const BodyProportions& body) {
  PlannerParams p;
  for (int d = 0; d < kNumDof; ++d) {
    p.noise_sigma[d] = kNoiseSigmaFraction * speed_cap(body, d);
  }
  return p;
}

inline void validate(const PlannerParams& p) {
  if (!(p.p1 >= 0 && p.p2 >= 0 && p.p3 >= 0 && p.p4 >= 0)) {
    throw DataError("planner params: utility weights must be >= 0");
  }
  if (p.horizon_H < 1) throw DataError("planner params: horizon_H must be >= 1");
  if (p.samples_K < 2) throw DataError("planner params: samples_K must be >= 2");
  if (!(p.temperature_lambda > 0)) {
    throw DataError("planner params: temperature_lambda must be > 0");
  }
  for (double s : p.noise_sigma) {
    if (!(s > 0)) throw DataError("planner params: noise_sigma must be > 0");
  }
  if (!(p.dt > 0 && p.dt <= 0.1)) {
    throw DataError("planner params: dt must be in (0, 0.1]");
  }
  if (p.max_steps < 1) throw DataError("planner params: max_steps must be >= 1");
  if (!(p.stop_radius > 0)) {
    throw DataError("planner params: stop_radius must be > 0");
  }
  if (!(p.nominal_decay > 0 && p.nominal_decay <= 1)) {
    throw DataError("planner params: nominal_decay must be in (0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Rollouts
// ---------------------------------------------------------------------------

struct PlanRollout {
  std::vector<KinematicState> states;
  std::vector<Action> actions;          // |actions| = |states| - 1
  std::vector<Vec3> wrist_points;       // FK wrist of each state
  std::vector<double> per_step_utility; // one entry per action
  int goal_id = 0;
  bool complete = false;  // wrist came within stop_radius of the target
};

// Terminal cost supplied at the MPPI horizon tail; the trained network
// ensemble implements this interface.
class TerminalValue {
 public:
  virtual ~TerminalValue() = default;
  virtual double value(const KinematicState& state,
                       const Vec3& goal_position) const = 0;
};

// ---------------------------------------------------------------------------
// Utility
// ---------------------------------------------------------------------------

namespace detail {

inline double contact_penalty_posed(const BodyPose& pose,
                                    const BodyProportions& body,
                                    const SceneSpec& scene) {
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
      double pen = r - segment_box_signed_distance(s0, s1, center, half);
      if (pen > 0.0) penalty += pen * pen;
    }
  };
  accumulate(table_center, table_half);
  for (const auto& o : scene.obstacles) accumulate(o.center, o.half_extents);
  return penalty;
}

inline double step_utility_posed(const BodyPose& next_pose,
                                 const Action& action,
                                 const Vec3& goal_position,
                                 const BodyProportions& body,
                                 const SceneSpec& scene,
                                 const PlannerParams& params) {
  double d = distance(next_pose.wrist, goal_position);
  double h = next_pose.head.z - scene.table_height;
  double e = energy(action, params.dt, body);
  double c = contact_penalty_posed(next_pose, body, scene);
  return -params.p1 * d + params.p2 * h - params.p3 * e - params.p4 * c;
}

}  // namespace detail

// One-step utility of moving into next_state with `action`:
//   -p1 * wrist-to-target distance + p2 * head height
//   -p3 * energy(action, dt)       - p4 * contact penalty.
inline double step_utility(const KinematicState& /*state*/,
                           const KinematicState& next_state,
                           const Action& action, const TargetSpec& goal,
                           const SceneSpec& scene,
                           const PlannerParams& params) {
  BodyPose pose = forward_kinematics(next_state, scene.body);
  return detail::step_utility_posed(pose, action, goal.position, scene.body,
                                    scene, params);
}

// ---------------------------------------------------------------------------
// MPPI
// ---------------------------------------------------------------------------

// Nominal action sequence carried across receding-horizon steps; keeping it
// per goal between planning chunks warm-starts later plans.
struct MppiContext {
  std::vector<Action> nominal;
};

// One MPPI update: samples K noise-perturbed action sequences of length H
// around the nominal sequence, scores each rollout with the step utility
// plus a terminal tail, and soft-max-averages the noise with temperature
// lambda. Returns the first action of the updated nominal sequence and
// shifts the horizon by one step.
inline Action mppi_step(const KinematicState& state, const TargetSpec& goal,
                        const SceneSpec& scene, const PlannerParams& params,
                        const TerminalValue* value, std::uint64_t rng_seed,
                        MppiContext& ctx) {
  const int H = params.horizon_H;
  const int K = params.samples_K;
  const BodyProportions& body = scene.body;

  if (static_cast<int>(ctx.nominal.size()) != H) {
    ctx.nominal.assign(H, Action{});
  }

  // Buffers reused across calls; mppi_step sits inside triple loops.
  thread_local std::vector<double> noise;
  thread_local std::vector<double> returns;
  thread_local std::vector<double> weights;
  noise.resize(static_cast<std::size_t>(K) * H * kNumDof);
  returns.assign(K, 0.0);
  const double decay = params.nominal_decay;

  for (int k = 0; k < K; ++k) {
    Rng rng(derive_seed(rng_seed, {static_cast<std::uint64_t>(k)}));
    double* eps = &noise[static_cast<std::size_t>(k) * H * kNumDof];
    for (int i = 0; i < H * kNumDof; ++i) {
      eps[i] = params.noise_sigma[i % kNumDof] * rng.normal();
    }

    KinematicState s = state;
    double ret = 0.0;
    Action a;
    for (int i = 0; i < H; ++i) {
      for (int d = 0; d < kNumDof; ++d) {
        a.velocity[d] =
            decay * ctx.nominal[i].velocity[d] + eps[i * kNumDof + d];
      }
      KinematicState next = step(s, a, params.dt, body);
      BodyPose pose = forward_kinematics(next, body);
      ret += detail::step_utility_posed(pose, a, goal.position, body, scene,
                                        params);
      s = next;
    }
    if (value) {
      ret += value->value(s, goal.position);
    } else {
      // Long-horizon fallback: pull the tail toward the target.
      BodyPose pose = forward_kinematics(s, body);
      ret += -params.p1 * distance(pose.wrist, goal.position);
    }
    returns[k] = ret;
  }

  double best = -std::numeric_limits<double>::infinity();
  for (double r : returns) {
    if (std::isfinite(r) && r > best) best = r;
  }
  if (best == -std::numeric_limits<double>::infinity()) {
    throw NumericError("mppi_step: every rollout returned a non-finite value");
  }

  double total_weight = 0.0;
  weights.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    if (std::isfinite(returns[k])) {
      weights[k] = std::exp((returns[k] - best) / params.temperature_lambda);
      total_weight += weights[k];
    }
  }

  for (int i = 0; i < H; ++i) {
    for (int d = 0; d < kNumDof; ++d) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        acc += weights[k] *
               noise[(static_cast<std::size_t>(k) * H + i) * kNumDof + d];
      }
      ctx.nominal[i].velocity[d] =
          decay * ctx.nominal[i].velocity[d] + acc / total_weight;
    }
  }

  Action first = ctx.nominal.front();
  Action tail = ctx.nominal.back();
  ctx.nominal.erase(ctx.nominal.begin());
  ctx.nominal.push_back(tail);
  return first;
}

inline Action mppi_step(const KinematicState& state, const TargetSpec& goal,
                        const SceneSpec& scene, const PlannerParams& params,
                        const TerminalValue* value, std::uint64_t rng_seed) {
  MppiContext ctx;
  return mppi_step(state, goal, scene, params, value, rng_seed, ctx);
}

// ---------------------------------------------------------------------------
// Receding-horizon planning
// ---------------------------------------------------------------------------

// Plan(g, w, cs): iterates MPPI until the wrist is within stop_radius of the
// target or max_steps is exhausted. An unreachable goal yields a rollout
// flagged incomplete, not an error. Deterministic given the seed.
//
// step_limit, when positive, caps the number of executed steps below
// params.max_steps; alignment scoring uses it to plan only as far as the
// chunk it compares against.
inline PlanRollout plan(const TargetSpec& goal, const SceneSpec& scene,
                        const KinematicState& start_state,
                        const PlannerParams& params, const TerminalValue* value,
                        std::uint64_t rng_seed, MppiContext* warm_ctx = nullptr,
                        int step_limit = 0) {
  validate(params);
  MppiContext local_ctx;
  MppiContext& ctx = warm_ctx ? *warm_ctx : local_ctx;

  PlanRollout rollout;
  rollout.goal_id = goal.id;
  rollout.states.push_back(start_state);
  rollout.wrist_points.push_back(
      forward_kinematics(start_state, scene.body).wrist);

  int limit = params.max_steps;
  if (step_limit > 0) limit = std::min(limit, step_limit);

  KinematicState state = start_state;
  for (int i = 0; i < limit; ++i) {
    if (distance(rollout.wrist_points.back(), goal.position) <
        params.stop_radius) {
      rollout.complete = true;
      break;
    }
    Action a = mppi_step(state, goal, scene, params, value,
                         derive_seed(rng_seed, {static_cast<std::uint64_t>(i)}),
                         ctx);
    KinematicState next = step(state, a, params.dt, scene.body);
    double u = step_utility(state, next, a, goal, scene, params);
    rollout.actions.push_back(a);
    rollout.per_step_utility.push_back(u);
    rollout.states.push_back(next);
    rollout.wrist_points.push_back(forward_kinematics(next, scene.body).wrist);
    state = next;
  }
  if (!rollout.complete &&
      distance(rollout.wrist_points.back(), goal.position) <
          params.stop_radius) {
    rollout.complete = true;
  }
  return rollout;
}

// Converts a completed rollout into the observation format: one frame per
// planner state carrying wrist/elbow/shoulder/head joints of the active arm.
inline Trajectory synthesize_trajectory(const TargetSpec& goal,
                                        const SceneSpec& scene,
                                        const KinematicState& start_state,
                                        const PlannerParams& params,
                                        const TerminalValue* value,
                                        std::uint64_t rng_seed) {
  PlanRollout rollout = plan(goal, scene, start_state, params, value, rng_seed);
  if (!rollout.complete) {
    throw NumericError("synthesize_trajectory: plan for target " +
                       std::to_string(goal.id) + " did not complete");
  }
  if (rollout.states.size() < 2) {
    throw DataError("synthesize_trajectory: rollout too short to form a "
                    "trajectory");
  }

  Trajectory traj;
  traj.actor_id = "planner";
  traj.true_target = goal.id;
  traj.active_hand = start_state.arm;
  const std::string suffix = start_state.arm == Hand::left ? "_left" : "_right";
  traj.frames.reserve(rollout.states.size());
  for (const auto& s : rollout.states) {
    BodyPose pose = forward_kinematics(s, scene.body);
    SkeletonFrame f;
    f.t = s.t;
    f.joints["wrist" + suffix] = pose.wrist;
    f.joints["elbow" + suffix] = pose.elbow;
    f.joints["shoulder" + suffix] = pose.shoulder;
    f.joints["head"] = pose.head;
    traj.frames.push_back(std::move(f));
  }
  return traj;
}

}  // namespace goalinfer

#endif  // GOALINFER_PLANNER_HPP_
