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

#include "goalinfer/value_ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace goalinfer {
namespace {

SceneSpec small_scene() {
  SceneSpec scene;
  scene.table_height = 0.75;
  scene.table_min = {-0.65, 0.10, 0.70};
  scene.table_max = {0.65, 0.75, 0.75};
  scene.actor_base = {0.0, -0.30, 0.95};
  scene.targets = {{1, {-0.3, 0.3, 0.82}}, {2, {0.3, 0.3, 0.82}},
                   {3, {0.0, 0.5, 0.82}}};
  return scene;
}

PlannerParams train_planner(const SceneSpec& scene) {
  PlannerParams p = default_planner_params(scene.body);
  p.samples_K = 24;
  p.horizon_H = 12;
  p.max_steps = 60;
  return p;
}

TEST(ValueEnsemble, UntrainedPredictionsAreFinite) {
  SceneSpec scene = small_scene();
  ValueTrainConfig cfg;
  cfg.iterations = 0;
  ValueEnsemble e = train_value_ensemble(scene, train_planner(scene), cfg, 7);
  KinematicState s = neutral_state(scene);
  auto [mean, spread] = e.predict_with_disagreement(s, {0.2, 0.3, 0.82});
  EXPECT_TRUE(std::isfinite(mean));
  EXPECT_TRUE(std::isfinite(spread));
}

TEST(ValueEnsemble, TrainingLossDecreases) {
  SceneSpec scene = small_scene();
  ValueTrainConfig cfg;
  cfg.iterations = 2;
  cfg.rollouts_per_iteration = 6;
  cfg.epochs_per_iteration = 25;
  ValueEnsemble e =
      train_value_ensemble(scene, train_planner(scene), cfg, 20250101);
  const auto& losses = e.training_losses();
  ASSERT_EQ(losses.size(), static_cast<std::size_t>(kEnsembleSize));
  for (int n = 0; n < kEnsembleSize; ++n) {
    // Untrained baseline plus one entry per iteration.
    ASSERT_EQ(losses[n].size(), 3u) << "network " << n;
    EXPECT_LT(losses[n].back(), losses[n].front()) << "network " << n;
  }
}

TEST(ValueEnsemble, HeldOutCorrelation) {
  SceneSpec scene = small_scene();
  PlannerParams planner = train_planner(scene);
  ValueTrainConfig cfg;
  cfg.iterations = 2;
  cfg.rollouts_per_iteration = 10;
  cfg.epochs_per_iteration = 80;
  ValueEnsemble e = train_value_ensemble(scene, planner, cfg, 555);

  // Held-out Monte-Carlo returns from fresh rollouts.
  std::vector<double> predicted, actual;
  for (int r = 0; r < 8; ++r) {
    Rng rng(derive_seed(987, {static_cast<std::uint64_t>(r)}));
    KinematicState start = neutral_state(scene);
    for (int d = kTorsoPitch; d < kNumDof; ++d) {
      const auto& lim = scene.body.joint_limits[d];
      start.set_dof(d, std::clamp(start.dof(d) + rng.uniform(-0.5, 0.5),
                                  lim.min, lim.max));
    }
    const TargetSpec& goal = scene.targets[r % scene.targets.size()];
    PlanRollout rollout = plan(goal, scene, start, planner, nullptr,
                               derive_seed(988, {static_cast<std::uint64_t>(r)}));
    std::vector<double> rtg = discounted_returns(rollout, cfg.return_discount);
    for (std::size_t i = 0; i < rollout.states.size(); i += 3) {
      predicted.push_back(e.value(rollout.states[i], goal.position));
      actual.push_back(rtg[i]);
    }
  }
  ASSERT_GT(predicted.size(), 20u);
  double mp = 0, ma = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    mp += predicted[i];
    ma += actual[i];
  }
  mp /= predicted.size();
  ma /= actual.size();
  double cov = 0, vp = 0, va = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    cov += (predicted[i] - mp) * (actual[i] - ma);
    vp += (predicted[i] - mp) * (predicted[i] - mp);
    va += (actual[i] - ma) * (actual[i] - ma);
  }
  double rho = cov / std::sqrt(vp * va);
  EXPECT_GE(rho, 0.8);
}

TEST(ValueEnsemble, DisagreementReported) {
  SceneSpec scene = small_scene();
  ValueTrainConfig cfg;
  cfg.iterations = 1;
  cfg.rollouts_per_iteration = 4;
  cfg.epochs_per_iteration = 10;
  ValueEnsemble e = train_value_ensemble(scene, train_planner(scene), cfg, 3);
  KinematicState s = neutral_state(scene);
  auto [mean, spread] = e.predict_with_disagreement(s, {0.1, 0.4, 0.82});
  EXPECT_TRUE(std::isfinite(spread));
  EXPECT_GE(spread, 0.0);
}

TEST(ValueEnsemble, SaveLoadRoundTrip) {
  SceneSpec scene = small_scene();
  ValueTrainConfig cfg;
  cfg.iterations = 1;
  cfg.rollouts_per_iteration = 4;
  cfg.epochs_per_iteration = 10;
  ValueEnsemble e = train_value_ensemble(scene, train_planner(scene), cfg, 9);

  std::string path =
      (std::filesystem::temp_directory_path() / "goalinfer_value_test.json")
          .string();
  e.save(path);
  ValueEnsemble loaded = ValueEnsemble::load(path);
  loaded.set_body(scene.body);

  Rng rng(321);
  for (int i = 0; i < 20; ++i) {
    KinematicState s = neutral_state(scene);
    for (int d = 0; d < kNumDof; ++d) {
      const auto& lim = scene.body.joint_limits[d];
      s.set_dof(d, std::clamp(s.dof(d) + rng.uniform(-0.5, 0.5), lim.min,
                              lim.max));
    }
    Vec3 goal = testutil::random_point(rng, -0.4, 0.6);
    EXPECT_EQ(e.value(s, goal), loaded.value(s, goal));
  }
  std::filesystem::remove(path);
}

TEST(ValueEnsemble, LoadRejectsWrongArchitecture) {
  SceneSpec scene = small_scene();
  ValueTrainConfig cfg;
  cfg.iterations = 0;
  ValueEnsemble e = train_value_ensemble(scene, train_planner(scene), cfg, 1);
  std::string path =
      (std::filesystem::temp_directory_path() / "goalinfer_value_bad.json")
          .string();
  e.save(path);

  // Corrupt the architecture fields.
  std::ifstream in(path);
  nlohmann::json doc;
  in >> doc;
  in.close();
  doc["hidden_units"] = 32;
  std::ofstream out(path);
  out << doc.dump();
  out.close();
  EXPECT_THROW(ValueEnsemble::load(path), Error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace goalinfer
