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

#include "goalinfer/planner.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "goalinfer/alignment.hpp"
#include "goalinfer/harness.hpp"
#include "goalinfer/posterior.hpp"
#include "test_util.hpp"

namespace goalinfer {
namespace {

SceneSpec reach_scene() {
  SceneSpec scene = testutil::simple_scene(
      {{0.2, 0.15, 0.9}, {-0.35, 0.2, 1.0}});
  return scene;
}

TEST(StepUtility, BalanceTermOnlyWhenAtTarget) {
  SceneSpec scene = reach_scene();
  PlannerParams params = default_planner_params(scene.body);
  KinematicState s = neutral_state(scene);
  BodyPose pose = forward_kinematics(s, scene.body);
  TargetSpec goal{1, pose.wrist};            // wrist already on the target
  double h = head_height(s, scene.body, scene);
  double u = step_utility(s, s, Action{}, goal, scene, params);
  EXPECT_NEAR(u, params.p2 * h, 1e-12);
}

TEST(StepUtility, LinearInDistanceWeight) {
  SceneSpec scene = reach_scene();
  PlannerParams params = default_planner_params(scene.body);
  KinematicState s = neutral_state(scene);
  BodyPose pose = forward_kinematics(s, scene.body);
  TargetSpec goal{1, scene.targets[0].position};
  double d = distance(pose.wrist, goal.position);

  double u1 = step_utility(s, s, Action{}, goal, scene, params);
  PlannerParams doubled = params;
  doubled.p1 *= 2;
  double u2 = step_utility(s, s, Action{}, goal, scene, doubled);
  EXPECT_NEAR(u2 - u1, -params.p1 * d, 1e-9);
}

TEST(StepUtility, PenetrationLowersUtilityAdditively) {
  SceneSpec scene = reach_scene();
  PlannerParams params = default_planner_params(scene.body);
  KinematicState s = neutral_state(scene);
  TargetSpec goal{1, scene.targets[0].position};
  double u_clear = step_utility(s, s, Action{}, goal, scene, params);

  SceneSpec blocked = scene;
  BodyPose pose = forward_kinematics(s, scene.body);
  ObstacleSpec box;
  // A box overlapping the forearm: penalty strictly positive.
  box.center = (pose.elbow + pose.wrist) * 0.5;
  box.half_extents = {0.05, 0.05, 0.05};
  blocked.obstacles.push_back(box);
  double pen = contact_penalty(s, scene.body, blocked);
  ASSERT_GT(pen, 0.0);
  double u_blocked = step_utility(s, s, Action{}, goal, blocked, params);
  EXPECT_NEAR(u_clear - u_blocked, params.p4 * pen, 1e-9);
}

TEST(MppiStep, NearZeroActionWhenOnTarget) {
  SceneSpec scene = reach_scene();
  PlannerParams params = default_planner_params(scene.body);
  KinematicState s = neutral_state(scene);
  BodyPose pose = forward_kinematics(s, scene.body);
  TargetSpec goal{1, pose.wrist};

  Action a = mppi_step(s, goal, scene, params, nullptr, 20260824);
  for (int d = 0; d < kNumDof; ++d) {
    EXPECT_LT(std::abs(a.velocity[d]), 0.05 * speed_cap(scene.body, d))
        << dof_names()[d];
  }
}

TEST(Plan, ImmediateTerminationAtGoal) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  KinematicState s = neutral_state(scene);
  BodyPose pose = forward_kinematics(s, scene.body);
  TargetSpec goal{1, pose.wrist};

  PlanRollout rollout = plan(goal, scene, s, params, nullptr, 1);
  EXPECT_TRUE(rollout.complete);
  EXPECT_LE(rollout.states.size(), 2u);
  EXPECT_LT(distance(rollout.wrist_points.back(), goal.position),
            params.stop_radius);
}

TEST(Plan, FreeSpaceReachConverges) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  params.stop_radius = 0.015;
  KinematicState s = neutral_state(scene);
  BodyPose start = forward_kinematics(s, scene.body);
  TargetSpec goal{1, scene.targets[0].position};
  ASSERT_GT(distance(start.wrist, goal.position), 0.4);

  PlanRollout rollout = plan(goal, scene, s, params, nullptr, 7);
  ASSERT_TRUE(rollout.complete);
  EXPECT_LT(distance(rollout.wrist_points.back(), goal.position), 0.02);
  EXPECT_LE(rollout.states.size(), 151u);
}

TEST(Plan, DeterministicGivenSeed) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  KinematicState s = neutral_state(scene);
  TargetSpec goal{1, scene.targets[0].position};

  PlanRollout a = plan(goal, scene, s, params, nullptr, 99);
  PlanRollout b = plan(goal, scene, s, params, nullptr, 99);
  ASSERT_EQ(a.wrist_points.size(), b.wrist_points.size());
  for (std::size_t i = 0; i < a.wrist_points.size(); ++i) {
    EXPECT_EQ(a.wrist_points[i].x, b.wrist_points[i].x);
    EXPECT_EQ(a.wrist_points[i].y, b.wrist_points[i].y);
    EXPECT_EQ(a.wrist_points[i].z, b.wrist_points[i].z);
  }
  PlanRollout c = plan(goal, scene, s, params, nullptr, 100);
  bool any_diff = c.wrist_points.size() != a.wrist_points.size();
  for (std::size_t i = 0; !any_diff && i < c.wrist_points.size(); ++i) {
    any_diff = !(c.wrist_points[i] == a.wrist_points[i]);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Plan, UnreachableGoalFlaggedIncomplete) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  params.max_steps = 40;
  KinematicState s = neutral_state(scene);
  TargetSpec goal{1, {8.0, 8.0, 1.0}};  // far outside the reachable range

  PlanRollout rollout = plan(goal, scene, s, params, nullptr, 5);
  EXPECT_FALSE(rollout.complete);
  EXPECT_EQ(rollout.states.size(), 41u);
}

TEST(Plan, NearStraightReachInFreeSpace) {
  SceneSpec scene = reach_scene();
  PlannerParams params = default_planner_params(scene.body);
  params.p2 = 0.0;
  params.p4 = 0.0;
  params.stop_radius = 0.02;
  KinematicState s = neutral_state(scene);
  BodyPose start = forward_kinematics(s, scene.body);
  TargetSpec goal{1, scene.targets[0].position};
  double d0 = distance(start.wrist, goal.position);

  int completed = 0;
  for (int seed = 0; seed < 20; ++seed) {
    PlanRollout rollout = plan(goal, scene, s, params, nullptr, 1000 + seed);
    if (!rollout.complete) continue;
    ++completed;
    double path_len = 0;
    for (std::size_t i = 1; i < rollout.wrist_points.size(); ++i) {
      path_len += distance(rollout.wrist_points[i], rollout.wrist_points[i - 1]);
    }
    EXPECT_LE(path_len, 1.5 * d0) << "seed " << seed;
  }
  EXPECT_EQ(completed, 20);
}

TEST(SynthesizeTrajectory, FramesMirrorRolloutStates) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  KinematicState s = neutral_state(scene);
  TargetSpec goal{2, scene.targets[1].position};

  PlanRollout rollout = plan(goal, scene, s, params, nullptr, 42);
  ASSERT_TRUE(rollout.complete);
  Trajectory traj =
      synthesize_trajectory(goal, scene, s, params, nullptr, 42);
  EXPECT_EQ(traj.frames.size(), rollout.states.size());
  EXPECT_EQ(traj.true_target, 2);
  ASSERT_TRUE(traj.active_hand.has_value());
  EXPECT_EQ(*traj.active_hand, Hand::right);
  EXPECT_NO_THROW(validate(traj));
  EXPECT_LT(distance(traj.frames.back().joints.at("wrist_right"),
                     goal.position),
            params.stop_radius);
}

TEST(MeanPlanDivergence, SelfAlignmentIsTiny) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  KinematicState s = neutral_state(scene);
  TargetSpec goal{1, scene.targets[0].position};

  std::uint64_t seed = derive_seed(555, {0});  // run 0's derived seed
  PlanRollout rollout = plan(goal, scene, s, params, nullptr, seed);
  ASSERT_TRUE(rollout.complete);
  std::vector<Vec3> chunk = rollout.wrist_points;

  double divergence = mean_plan_divergence(chunk, goal, scene, s, 1, params,
                                           nullptr, 555);
  EXPECT_LT(divergence, 1e-6);
}

TEST(MeanPlanDivergence, WrongTargetScoresWorse) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  KinematicState s = neutral_state(scene);
  TargetSpec right_goal{1, scene.targets[0].position};
  TargetSpec wrong_goal{2, scene.targets[1].position};

  PlanRollout rollout =
      plan(right_goal, scene, s, params, nullptr, derive_seed(7, {0}));
  ASSERT_TRUE(rollout.complete);
  std::vector<Vec3> chunk(rollout.wrist_points.begin(),
                          rollout.wrist_points.begin() +
                              std::min<std::size_t>(
                                  12, rollout.wrist_points.size()));

  double d_true = mean_plan_divergence(chunk, right_goal, scene, s, 2, params,
                                       nullptr, 7);
  double d_wrong = mean_plan_divergence(chunk, wrong_goal, scene, s, 2, params,
                                        nullptr, 7);
  EXPECT_LT(d_true, d_wrong);
}

TEST(MeanPlanDivergence, MeanIncludesFirstRun) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  KinematicState s = neutral_state(scene);
  TargetSpec goal{1, scene.targets[0].position};
  PlanRollout rollout =
      plan(goal, scene, s, params, nullptr, derive_seed(11, {0}));
  ASSERT_TRUE(rollout.complete);
  std::vector<Vec3> chunk(rollout.wrist_points.begin(),
                          rollout.wrist_points.begin() +
                              std::min<std::size_t>(
                                  8, rollout.wrist_points.size()));

  double one = mean_plan_divergence(chunk, goal, scene, s, 1, params, nullptr,
                                    11);
  // Recompute the 3-run mean from individually seeded runs.
  double sum = one;
  for (int r = 1; r < 3; ++r) {
    PlanRollout rr = plan(goal, scene, s, params, nullptr,
                          derive_seed(11, {static_cast<std::uint64_t>(r)}));
    ASSERT_TRUE(rr.complete);
    std::vector<Vec3> path = rr.wrist_points;
    std::size_t align_len = static_cast<std::size_t>(
        std::ceil(kPlanAlignFactor * chunk.size()));
    if (path.size() > align_len) path.resize(align_len);
    sum += dtw(chunk, path).normalized_cost;
  }
  double three = mean_plan_divergence(chunk, goal, scene, s, 3, params,
                                      nullptr, 11);
  EXPECT_NEAR(three, sum / 3.0, 1e-12);
}

TEST(MeanPlanDivergence, AllIncompleteIsInfinite) {
  SceneSpec scene = reach_scene();
  PlannerParams params = testutil::small_planner(scene.body);
  params.max_steps = 10;
  KinematicState s = neutral_state(scene);
  TargetSpec goal{1, {9.0, 9.0, 1.0}};
  std::vector<Vec3> chunk = {{0, 0, 1}, {0.1, 0, 1}};
  double d = mean_plan_divergence(chunk, goal, scene, s, 2, params, nullptr, 3);
  EXPECT_TRUE(std::isinf(d));
}

}  // namespace
}  // namespace goalinfer
