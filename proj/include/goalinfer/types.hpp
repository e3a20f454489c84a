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

#ifndef GOALINFER_TYPES_HPP_
#define GOALINFER_TYPES_HPP_

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "goalinfer/error.hpp"
#include "goalinfer/vec3.hpp"

namespace goalinfer {

// ---------------------------------------------------------------------------
// Body model dimensions and articulation limits.
//
// The body is a torso on a planar moving platform plus one active arm:
//   base_x, base_y          platform translation (m)
//   torso_pitch, torso_yaw  torso orientation (rad)
//   shoulder_{pitch, abduction, twist}
//   elbow                   flexion, 0 = straight
// ---------------------------------------------------------------------------

enum Dof : int {
  kBaseX = 0,
  kBaseY,
  kTorsoPitch,
  kTorsoYaw,
  kShoulderPitch,
  kShoulderAbduction,
  kShoulderTwist,
  kElbow,
  kNumDof
};

inline const std::array<std::string, kNumDof>& dof_names() {
  static const std::array<std::string, kNumDof> names = {
      "base_x",         "base_y",
      "torso_pitch",    "torso_yaw",
      "shoulder_pitch", "shoulder_abduction",
      "shoulder_twist", "elbow"};
  return names;
}

struct JointLimit {
  double min = 0.0;
  double max = 0.0;
};

struct BodyProportions {
  double torso_length = 0.45;
  double upper_arm_length = 0.30;
  double forearm_length = 0.25;
  double shoulder_width = 0.40;
  double head_offset = 0.22;
  double capsule_radius = 0.05;

  std::array<JointLimit, kNumDof> joint_limits{};
  std::array<double, kNumDof> max_joint_speed{};  // rad/s for angular DoF
  double max_base_speed = 0.5;                    // m/s, caps base_x/base_y

  // Quadratic-effort weights per DoF; walking costs more than reaching.
  std::array<double, kNumDof> energy_weights = {4.0, 4.0, 1.0, 1.0,
                                                1.0, 1.0, 1.0, 1.0};

  double arm_reach() const { return upper_arm_length + forearm_length; }
};

inline BodyProportions default_body() {
  BodyProportions b;
  b.joint_limits[kBaseX] = {-5.0, 5.0};
  b.joint_limits[kBaseY] = {-5.0, 5.0};
  b.joint_limits[kTorsoPitch] = {-0.3, 1.35};
  b.joint_limits[kTorsoYaw] = {-1.3, 1.3};
  b.joint_limits[kShoulderPitch] = {-2.9, 2.9};
  b.joint_limits[kShoulderAbduction] = {-2.9, 2.9};
  b.joint_limits[kShoulderTwist] = {-2.9, 2.9};
  b.joint_limits[kElbow] = {0.0, 2.7};
  b.max_joint_speed = {0.5, 0.5, 1.5, 1.5, 3.0, 3.0, 3.0, 3.5};
  b.max_joint_speed[kBaseX] = b.max_base_speed;
  b.max_joint_speed[kBaseY] = b.max_base_speed;
  return b;
}

inline void validate(const BodyProportions& b) {
  if (!(b.torso_length > 0 && b.upper_arm_length > 0 && b.forearm_length > 0 &&
        b.shoulder_width > 0 && b.head_offset > 0 && b.capsule_radius > 0)) {
    throw DataError("body proportions: all lengths must be > 0");
  }
  for (int d = 0; d < kNumDof; ++d) {
    if (!(b.joint_limits[d].min < b.joint_limits[d].max)) {
      throw DataError("body proportions: joint limit min >= max for " +
                      dof_names()[d]);
    }
    if (!(b.max_joint_speed[d] > 0)) {
      throw DataError("body proportions: non-positive speed cap for " +
                      dof_names()[d]);
    }
  }
  if (!(b.max_base_speed > 0)) {
    throw DataError("body proportions: max_base_speed must be > 0");
  }
}

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

struct TargetSpec {
  int id = 0;  // >= 1, unique within a scene
  Vec3 position;
};

struct ObstacleSpec {
  enum class Kind { box } kind = Kind::box;
  Vec3 center;
  Vec3 half_extents;
};

enum class ConditionTag { standing, sitting, obstacle, custom };

inline std::string to_string(ConditionTag c) {
  switch (c) {
    case ConditionTag::standing: return "standing";
    case ConditionTag::sitting: return "sitting";
    case ConditionTag::obstacle: return "obstacle";
    case ConditionTag::custom: return "custom";
  }
  return "custom";
}

inline ConditionTag condition_from_string(const std::string& s) {
  if (s == "standing") return ConditionTag::standing;
  if (s == "sitting") return ConditionTag::sitting;
  if (s == "obstacle") return ConditionTag::obstacle;
  if (s == "custom") return ConditionTag::custom;
  throw DataError("unknown condition tag: " + s);
}

struct SceneSpec {
  std::vector<TargetSpec> targets;
  std::vector<ObstacleSpec> obstacles;
  double table_height = 0.75;
  Vec3 table_min;  // table volume, an axis-aligned box
  Vec3 table_max;  // table_max.z is the tabletop surface (= table_height)
  Vec3 actor_base;
  BodyProportions body = default_body();
  ConditionTag condition_tag = ConditionTag::custom;

  const TargetSpec* find_target(int id) const {
    for (const auto& t : targets)
      if (t.id == id) return &t;
    return nullptr;
  }

  Vec3 target_position(int id) const {
    const TargetSpec* t = find_target(id);
    if (!t) throw DataError("scene has no target id " + std::to_string(id));
    return t->position;
  }

  std::vector<int> target_ids() const {
    std::vector<int> ids;
    ids.reserve(targets.size());
    for (const auto& t : targets) ids.push_back(t.id);
    return ids;
  }
};

inline void validate(const SceneSpec& scene) {
  if (scene.targets.size() < 2) {
    throw DataError("scene needs at least 2 targets, has " +
                    std::to_string(scene.targets.size()));
  }
  std::map<int, int> seen;
  for (const auto& t : scene.targets) {
    if (t.id < 1) throw DataError("target id must be >= 1");
    if (seen.count(t.id))
      throw DataError("duplicate target id " + std::to_string(t.id));
    seen[t.id] = 1;
    if (!t.position.finite()) throw DataError("non-finite target position");
    if (t.position.z < scene.table_height - 1e-9) {
      throw DataError("target " + std::to_string(t.id) +
                      " lies below the table surface");
    }
  }
  if (!(scene.table_min.x < scene.table_max.x &&
        scene.table_min.y < scene.table_max.y &&
        scene.table_min.z < scene.table_max.z)) {
    throw DataError("table_bounds min must be componentwise < max");
  }
  for (const auto& o : scene.obstacles) {
    if (!(o.half_extents.x > 0 && o.half_extents.y > 0 &&
          o.half_extents.z > 0)) {
      throw DataError("obstacle half_extents must be componentwise > 0");
    }
    if (!o.center.finite() || !o.half_extents.finite()) {
      throw DataError("non-finite obstacle geometry");
    }
  }
  if (!scene.actor_base.finite()) throw DataError("non-finite actor_base");
  validate(scene.body);
}

// ---------------------------------------------------------------------------
// Observed motion
// ---------------------------------------------------------------------------

enum class Hand { left, right };

inline std::string to_string(Hand h) {
  return h == Hand::left ? "left" : "right";
}

inline Hand hand_from_string(const std::string& s) {
  if (s == "left") return Hand::left;
  if (s == "right") return Hand::right;
  throw DataError("unknown hand: " + s);
}

inline std::string wrist_joint_name(Hand h) {
  return h == Hand::left ? "wrist_left" : "wrist_right";
}

struct SkeletonFrame {
  double t = 0.0;  // seconds
  std::map<std::string, Vec3> joints;

  const Vec3* find_joint(const std::string& name) const {
    auto it = joints.find(name);
    return it == joints.end() ? nullptr : &it->second;
  }
};

struct Trajectory {
  std::vector<SkeletonFrame> frames;
  std::string actor_id;
  std::optional<int> true_target;
  std::optional<Hand> active_hand;

  std::size_t size() const { return frames.size(); }

  // Prefix with the first n frames (n >= 2), used for stopping-point cuts.
  Trajectory prefix(std::size_t n) const {
    Trajectory p = *this;
    if (n < p.frames.size()) p.frames.resize(n);
    return p;
  }
};

inline void validate(const Trajectory& traj) {
  if (traj.frames.size() < 2) {
    throw DataError("trajectory needs at least 2 frames, has " +
                    std::to_string(traj.frames.size()));
  }
  double min_dt = 0.0, max_dt = 0.0;
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    const auto& f = traj.frames[i];
    if (!std::isfinite(f.t) || f.t < 0) {
      throw DataError("frame " + std::to_string(i) + ": invalid time");
    }
    bool has_wrist = f.joints.count("wrist_left") > 0 ||
                     f.joints.count("wrist_right") > 0;
    if (!has_wrist) {
      throw DataError("frame " + std::to_string(i) + ": no wrist joint");
    }
    for (const auto& [name, p] : f.joints) {
      if (!p.finite()) {
        throw DataError("frame " + std::to_string(i) + ": non-finite joint " +
                        name);
      }
    }
    if (i > 0) {
      double dt = f.t - traj.frames[i - 1].t;
      if (dt <= 0) {
        throw DataError("frame " + std::to_string(i) +
                        ": time not strictly increasing");
      }
      if (i == 1) {
        min_dt = max_dt = dt;
      } else {
        min_dt = std::min(min_dt, dt);
        max_dt = std::max(max_dt, dt);
      }
    }
  }
  if (traj.frames.size() > 2 && max_dt > 2.0 * min_dt + 1e-12) {
    throw DataError("trajectory frame spacing is too uneven (ratio > 2)");
  }
}

// ---------------------------------------------------------------------------
// Distributions over targets
// ---------------------------------------------------------------------------

struct Prior {
  std::map<int, double> probs;
};

inline Prior uniform_prior(const SceneSpec& scene) {
  Prior p;
  double u = 1.0 / static_cast<double>(scene.targets.size());
  for (const auto& t : scene.targets) p.probs[t.id] = u;
  return p;
}

inline void validate(const Prior& prior) {
  double sum = 0.0;
  for (const auto& [id, p] : prior.probs) {
    if (!(p >= 0) || !std::isfinite(p)) {
      throw DataError("prior has invalid probability for target " +
                      std::to_string(id));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("prior does not sum to 1");
  }
}

struct GoalPosterior {
  std::map<int, double> probs;
  int tau_index = 0;  // 1-based index of the last observed frame
  // Set when all likelihoods vanished and the posterior fell back to uniform.
  bool uniform_fallback = false;

  int argmax() const {
    int best = -1;
    double best_p = -1.0;
    for (const auto& [id, p] : probs) {
      if (p > best_p) {  // map order gives the lowest id on ties
        best_p = p;
        best = id;
      }
    }
    return best;
  }

  double prob(int id) const {
    auto it = probs.find(id);
    return it == probs.end() ? 0.0 : it->second;
  }
};

}  // namespace goalinfer

#endif  // GOALINFER_TYPES_HPP_
