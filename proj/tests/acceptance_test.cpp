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

// Acceptance suite: one behavioral criterion per function, one PASS/FAIL
// line each. Returns nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "goalinfer/fitting.hpp"
#include "goalinfer/harness.hpp"
#include "goalinfer/io.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/parallel.hpp"

namespace goalinfer {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Shared synthetic-data helpers
// ---------------------------------------------------------------------------

SceneSpec random_scene(Rng& rng, int n_targets) {
  SceneSpec scene;
  scene.table_height = 0.0;
  scene.table_min = {-10, -10, -1};
  scene.table_max = {10, 10, 0};
  scene.actor_base = {0, -0.3, 0.95};
  for (int i = 0; i < n_targets; ++i) {
    scene.targets.push_back({i + 1,
                             {rng.uniform(-1, 1), rng.uniform(0.2, 1.2),
                              rng.uniform(0.8, 1.6)}});
  }
  return scene;
}

Trajectory random_trajectory(Rng& rng, int n_frames) {
  Trajectory traj;
  traj.actor_id = "synthetic";
  traj.active_hand = Hand::right;
  Vec3 a{rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.2),
         rng.uniform(0.9, 1.3)};
  Vec3 b{rng.uniform(-0.6, 0.6), rng.uniform(0.2, 1.0),
         rng.uniform(-0.3, 0.3)};
  Vec3 c{rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.3),
         rng.uniform(-0.2, 0.4)};
  for (int i = 0; i < n_frames; ++i) {
    double u = static_cast<double>(i) / (n_frames - 1);
    SkeletonFrame f;
    f.t = i / 30.0;
    f.joints["wrist_right"] = a + b * u + c * (u * u);
    traj.frames.push_back(std::move(f));
  }
  return traj;
}

Trajectory straight_trajectory(const Vec3& from, const Vec3& to, int n) {
  Trajectory traj;
  traj.actor_id = "synthetic";
  traj.active_hand = Hand::right;
  for (int i = 0; i < n; ++i) {
    double u = static_cast<double>(i) / (n - 1);
    SkeletonFrame f;
    f.t = i / 30.0;
    f.joints["wrist_right"] = from + (to - from) * u;
    traj.frames.push_back(std::move(f));
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Criterion 1: posterior hygiene on 1000 randomized cases
// ---------------------------------------------------------------------------

Outcome criterion_posterior_hygiene() {
  Rng rng(10001);
  int cases = 0, failures = 0;
  std::string first_failure;

  auto check_case = [&](ModelId model, const SceneSpec& scene,
                        const Trajectory& traj, ModelParams params,
                        double rate_scale, std::uint64_t seed) {
    ++cases;
    GoalPosterior post =
        infer(model, traj, scene, params, uniform_prior(scene), nullptr, seed);
    double sum = 0;
    for (const auto& [id, p] : post.probs) sum += p;
    bool ok = std::abs(sum - 1.0) <= 1e-9;

    // Prior consistency under constant likelihoods.
    Prior prior;
    double z = 0;
    for (const auto& t : scene.targets) {
      prior.probs[t.id] = rng.uniform(0.05, 1.0);
      z += prior.probs[t.id];
    }
    for (auto& [id, p] : prior.probs) p /= z;
    std::map<int, double> constant;
    double c = rng.uniform(-40, 3);
    for (const auto& t : scene.targets) constant[t.id] = c;
    GoalPosterior from_prior = combine_posterior(prior, constant);
    for (const auto& [id, p] : prior.probs) {
      if (std::abs(from_prior.prob(id) - p) > 1e-9) ok = false;
    }

    // Argmax invariance under rate scaling.
    ModelParams scaled = params;
    scaled.distance.theta *= rate_scale;
    scaled.linh.beta1 *= rate_scale;
    scaled.paramh.beta2 *= rate_scale;
    scaled.bodygen.beta3 *= rate_scale;
    GoalPosterior post2 =
        infer(model, traj, scene, scaled, uniform_prior(scene), nullptr, seed);
    if (post.argmax() != post2.argmax()) ok = false;

    if (!ok) {
      ++failures;
      if (first_failure.empty()) {
        first_failure = "model " + to_string(model) + " case " +
                        std::to_string(cases);
      }
    }
  };

  // 950 cheap-model cases.
  for (int i = 0; i < 950; ++i) {
    ModelId model = static_cast<ModelId>(rng.below(3));
    SceneSpec scene = random_scene(rng, 2 + static_cast<int>(rng.below(5)));
    Trajectory traj = random_trajectory(rng, 5 + static_cast<int>(rng.below(20)));
    ModelParams params;
    params.distance.theta = rng.uniform(0.5, 15);
    params.linh.beta1 = rng.uniform(0.5, 25);
    params.linh.h1 = 2 + static_cast<int>(rng.below(6));
    params.linh.alpha1 = static_cast<int>(rng.below(3));
    params.paramh.beta2 = rng.uniform(0.5, 25);
    params.paramh.h2 = 3 + static_cast<int>(rng.below(5));
    params.paramh.alpha2 = static_cast<int>(rng.below(3));
    check_case(model, scene, traj, params, rng.uniform(0.3, 4.0), i);
  }

  // 50 bodygen cases with a small planning budget.
  for (int i = 0; i < 50; ++i) {
    SceneSpec scene = random_scene(rng, 2 + static_cast<int>(rng.below(3)));
    scene.actor_base = {0, -0.3, 0.95};
    Trajectory traj = random_trajectory(rng, 6 + static_cast<int>(rng.below(6)));
    ModelParams params;
    params.bodygen.q = 32;  // single chunk
    params.bodygen.n_runs = 1;
    params.bodygen.beta3 = rng.uniform(1, 15);
    params.bodygen.planner = default_planner_params(scene.body);
    params.bodygen.planner.samples_K = 12;
    params.bodygen.planner.horizon_H = 8;
    params.bodygen.planner.max_steps = 25;
    params.bodygen.ik_residual_limit = 1.0;  // random wrists may sit far out
    check_case(ModelId::bodygen, scene, traj, params, rng.uniform(0.4, 3.0),
               1000 + i);
  }

  Outcome out;
  out.pass = failures == 0 && cases == 1000;
  out.detail = std::to_string(cases) + " cases, " + std::to_string(failures) +
               " failures" +
               (first_failure.empty() ? "" : " (first: " + first_failure + ")");
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: DTW equals the path-enumeration oracle
// ---------------------------------------------------------------------------

double enumerate_dtw(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                     std::size_t i, std::size_t j, double acc) {
  acc += distance(a[i], b[j]);  // forward accumulation, as in the DP
  if (i + 1 == a.size() && j + 1 == b.size()) return acc;
  double best = std::numeric_limits<double>::infinity();
  if (i + 1 < a.size()) best = std::min(best, enumerate_dtw(a, b, i + 1, j, acc));
  if (j + 1 < b.size()) best = std::min(best, enumerate_dtw(a, b, i, j + 1, acc));
  if (i + 1 < a.size() && j + 1 < b.size()) {
    best = std::min(best, enumerate_dtw(a, b, i + 1, j + 1, acc));
  }
  return best;
}

Outcome criterion_dtw_oracle() {
  Rng rng(20002);
  int pairs = 0, mismatches = 0;
  for (int trial = 0; trial < 220; ++trial) {
    std::size_t n = 1 + rng.below(8), m = 1 + rng.below(8);
    std::vector<Vec3> a, b;
    for (std::size_t i = 0; i < n; ++i)
      a.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    for (std::size_t j = 0; j < m; ++j)
      b.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    ++pairs;
    double oracle = enumerate_dtw(a, b, 0, 0, 0.0);
    double got = dtw(a, b).cost;
    if (std::abs(got - oracle) > 1e-12 * std::max(1.0, oracle)) ++mismatches;
  }
  Outcome out;
  out.pass = mismatches == 0 && pairs >= 200;
  out.detail = std::to_string(pairs) + " pairs, " +
               std::to_string(mismatches) + " mismatches";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: geometric oracles
// ---------------------------------------------------------------------------

Outcome criterion_geometry() {
  int failures = 0;
  std::string detail;

  Line3 x_axis{{0, 0, 0}, {1, 0, 0}};
  if (point_line_distance(x_axis, {5, 3, 4}) != 5.0) ++failures;
  if (point_line_distance(x_axis, {0, 0, 1}) != 1.0) ++failures;
  if (point_line_distance(x_axis, {-2, 6, 8}) != 10.0) ++failures;

  // The pinned value sqrt(7)/2 for curve (u, u^2, 0) against (0, 2, 0).
  Parabola3 pinned;
  pinned.coeffs[0] = {0, 1, 0};
  pinned.coeffs[1] = {1, 0, 0};
  pinned.coeffs[2] = {0, 0, 0};
  double expected = std::sqrt(7.0) / 2.0;
  if (std::abs(point_curve_distance(pinned, {0, 2, 0}) - expected) > 1e-9) {
    ++failures;
    detail += " sqrt7/2 mismatch;";
  }

  // Dense grid (1e-6 final step) + cubic-root oracle on random curves.
  Rng rng(30003);
  auto grid_distance = [](const Parabola3& c, const Vec3& p) {
    auto d2 = [&](double u) { return (c.at(u) - p).squared_norm(); };
    double best = 1e300, best_u = 0;
    for (double u = -20; u <= 20; u += 1e-3) {
      double v = d2(u);
      if (v < best) {
        best = v;
        best_u = u;
      }
    }
    for (double u = best_u - 2e-3; u <= best_u + 2e-3; u += 1e-6) {
      best = std::min(best, d2(u));
    }
    return std::sqrt(best);
  };
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Parabola3 c;
    for (int coord = 0; coord < 3; ++coord) {
      c.coeffs[coord] = {rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
    }
    Vec3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    ++checked;
    if (std::abs(point_curve_distance(c, p) - grid_distance(c, p)) > 1e-6) {
      ++failures;
    }
  }

  Outcome out;
  out.pass = failures == 0;
  out.detail = "3 analytic line cases, sqrt(7)/2 pinned, " +
               std::to_string(checked) + " grid-oracle curves; " +
               std::to_string(failures) + " failures" + detail;
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: heuristic exactness and nesting
// ---------------------------------------------------------------------------

Outcome criterion_heuristic_exactness() {
  int failures = 0;

  SceneSpec scene;
  scene.table_height = 0.0;
  scene.table_min = {-10, -10, -1};
  scene.table_max = {10, 10, 0};
  scene.actor_base = {0, -0.3, 0.95};
  scene.targets = {{1, {0, 1.0, 1.0}},
                   {2, {0.45, 0.55, 1.1}},
                   {3, {-0.35, 0.8, 1.35}},
                   {4, {0.3, 1.1, 0.8}}};

  // Straight line through target 1.
  LinHParams lp;
  lp.h1 = 5;
  lp.alpha1 = 1;
  Trajectory line = straight_trajectory({0, 0, 1}, {0, 0.85, 1}, 24);
  for (std::size_t tau = lp.h1; tau <= line.size(); ++tau) {
    Trajectory prefix = line.prefix(tau);
    std::map<int, double> ll = linh_loglik(prefix, scene, lp);
    GoalPosterior post = combine_posterior(uniform_prior(scene), ll);
    if (post.argmax() != 1) ++failures;
    if (std::abs(ll.at(1)) > 1e-9) ++failures;
  }

  // Exact parabolic arc whose extension passes through target 1.
  ParamHParams pp;
  pp.h2 = 5;
  pp.alpha2 = 1;
  Vec3 a{0, 0, 1.0};
  Vec3 b{0.1, 1.3, 0.9};
  Vec3 c{-0.1, -0.3, -0.9};
  SceneSpec arc_scene = scene;
  arc_scene.targets[0].position = a + b + c;  // on the curve at u = 1
  Trajectory arc;
  arc.actor_id = "synthetic";
  arc.active_hand = Hand::right;
  for (int i = 0; i < 24; ++i) {
    double u = 0.75 * i / 23.0;  // apex not yet reached at the end
    SkeletonFrame f;
    f.t = i / 30.0;
    f.joints["wrist_right"] = a + b * u + c * (u * u);
    arc.frames.push_back(std::move(f));
  }
  for (std::size_t tau = pp.h2; tau <= arc.size(); ++tau) {
    Trajectory prefix = arc.prefix(tau);
    GoalPosterior post = infer(ModelId::paramh, prefix, arc_scene,
                               {{}, {}, pp, {}}, uniform_prior(arc_scene));
    if (post.argmax() != 1) ++failures;
  }

  // Nesting: ParamH equals LinH on straight-line data.
  lp.beta1 = 11.0;
  pp.beta2 = 11.0;
  pp.h2 = lp.h1;
  pp.alpha2 = lp.alpha1;
  Trajectory diag = straight_trajectory({-0.2, 0.1, 0.9}, {0.3, 0.9, 1.2}, 20);
  GoalPosterior post_lin =
      infer(ModelId::linh, diag, scene, {{}, lp, {}, {}}, uniform_prior(scene));
  GoalPosterior post_par = infer(ModelId::paramh, diag, scene,
                                 {{}, {}, pp, {}}, uniform_prior(scene));
  for (const auto& [id, p] : post_lin.probs) {
    if (std::abs(p - post_par.prob(id)) > 1e-6) ++failures;
  }

  Outcome out;
  out.pass = failures == 0;
  out.detail = std::to_string(failures) + " failures";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: planner competence
// ---------------------------------------------------------------------------

Outcome criterion_planner_competence() {
  // Free space.
  SceneSpec fs_scene;
  fs_scene.table_height = 0.0;
  fs_scene.table_min = {-10, -10, -1};
  fs_scene.table_max = {10, 10, 0};
  fs_scene.actor_base = {0, -0.3, 0.95};
  fs_scene.targets = {{1, {0.2, 0.15, 0.9}}, {2, {-0.3, 0.25, 1.1}}};
  PlannerParams params = default_planner_params(fs_scene.body);
  params.stop_radius = 0.015;

  int free_ok = 0;
  std::vector<int> free_results(20, 0);
  parallel_for(20, [&](std::size_t seed) {
    TargetSpec goal{1, fs_scene.targets[0].position};
    PlanRollout r = plan(goal, fs_scene, neutral_state(fs_scene), params,
                         nullptr, 100 + seed);
    bool ok = r.complete &&
              distance(r.wrist_points.back(), goal.position) < 0.02 &&
              static_cast<int>(r.actions.size()) <= 150;
    free_results[seed] = ok ? 1 : 0;
  });
  for (int v : free_results) free_ok += v;

  // Obstacle: behind-wall targets, zero contact at every step, apex above
  // the wall top.
  SceneSpec obs = make_obstacle_scene();
  PlannerParams obs_params = default_planner_params(obs.body);
  obs_params.stop_radius = 0.02;
  const double wall_top =
      obs.obstacles[0].center.z + obs.obstacles[0].half_extents.z;
  const std::vector<int> targets = {9, 10, 15, 16};
  int obstacle_ok = 0;
  std::vector<int> obs_results(20, 0);
  parallel_for(20, [&](std::size_t i) {
    int target = targets[i % targets.size()];
    std::uint64_t seed = 500 + i;
    TargetSpec goal{target, obs.target_position(target)};
    PlanRollout r =
        plan(goal, obs, neutral_state(obs), obs_params, nullptr, seed);
    if (!r.complete) return;
    double apex = -1e9;
    bool contact_free = true;
    for (const auto& s : r.states) {
      if (contact_penalty(s, obs.body, obs) > 0) contact_free = false;
      apex = std::max(apex, forward_kinematics(s, obs.body).wrist.z);
    }
    obs_results[i] =
        (contact_free && apex > wall_top + obs.body.capsule_radius) ? 1 : 0;
  });
  for (int v : obs_results) obstacle_ok += v;

  Outcome out;
  out.pass = free_ok == 20 && obstacle_ok >= 18;
  out.detail = "free-space " + std::to_string(free_ok) +
               "/20, obstacle clean " + std::to_string(obstacle_ok) + "/20";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 6: BodyGen self-consistency on 100 synthesized trials
// ---------------------------------------------------------------------------

Outcome criterion_bodygen_self_consistency() {
  SceneSpec scene = make_standing_scene();
  PlannerParams planner = default_planner_params(scene.body);
  ModelParams params;
  params.bodygen.planner = planner;
  params.bodygen.q = 15;
  params.bodygen.n_runs = 3;

  const int n_trials = 100;
  int correct = 0, synthesized = 0;
  for (int trial = 0; trial < n_trials; ++trial) {
    int target_id = 1 + (trial % 18);
    Trajectory traj;
    try {
      traj = synthesize_trajectory(*scene.find_target(target_id), scene,
                                   neutral_state(scene), planner, nullptr,
                                   derive_seed(60000, {(std::uint64_t)trial}));
    } catch (const Error&) {
      continue;  // incomplete plan counts as a failure
    }
    ++synthesized;
    GoalPosterior post =
        infer(ModelId::bodygen, traj, scene, params, uniform_prior(scene),
              nullptr, derive_seed(61000, {(std::uint64_t)trial}));
    if (post.argmax() == target_id) ++correct;
  }

  Outcome out;
  out.pass = correct >= 95;
  out.detail = std::to_string(correct) + "/" + std::to_string(n_trials) +
               " correct (" + std::to_string(synthesized) + " synthesized)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 7: BodyGen vs ParamH ordering on over-obstacle trials
// ---------------------------------------------------------------------------

int posterior_rank(const GoalPosterior& post, int target) {
  double p = post.prob(target);
  int better = 0;
  for (const auto& [id, q] : post.probs) {
    if (q > p) ++better;
  }
  return 1 + better;
}

Outcome criterion_obstacle_ordering() {
  SceneSpec scene = make_obstacle_scene();
  PlannerParams planner = default_planner_params(scene.body);
  ModelParams params;
  params.bodygen.planner = planner;
  params.bodygen.q = 15;
  params.bodygen.n_runs = 3;
  params.paramh.h2 = 8;
  params.paramh.alpha2 = 2;

  // Over-obstacle trials: targets behind the wall.
  const std::vector<int> over_targets = {8, 9, 10, 11, 14, 15, 16, 17};
  const int n_trials = 24;

  struct Trial {
    Trajectory traj;
    int target = 0;
  };
  std::vector<Trial> trials;
  for (int i = 0; i < n_trials; ++i) {
    int target = over_targets[i % over_targets.size()];
    try {
      Trial t;
      t.target = target;
      t.traj = synthesize_trajectory(*scene.find_target(target), scene,
                                     neutral_state(scene), planner, nullptr,
                                     derive_seed(70000, {(std::uint64_t)i}));
      trials.push_back(std::move(t));
    } catch (const Error&) {
    }
  }

  int early_total = 0, early_rank_ok = 0;
  double early_bodygen_lp = 0, early_paramh_lp = 0;
  int late_bodygen_correct = 0, late_paramh_correct = 0, late_total = 0;

  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    for (double fraction : {0.35, 0.45}) {
      Trajectory prefix = t.traj.prefix(prefix_length(t.traj.size(), fraction));
      GoalPosterior body =
          infer(ModelId::bodygen, prefix, scene, params, uniform_prior(scene),
                nullptr, derive_seed(71000, {i, (std::uint64_t)(fraction * 100)}));
      GoalPosterior parm = infer(ModelId::paramh, prefix, scene, params,
                                 uniform_prior(scene));
      ++early_total;
      if (posterior_rank(body, t.target) <= posterior_rank(parm, t.target)) {
        ++early_rank_ok;
      }
      early_bodygen_lp += std::max(std::log(body.prob(t.target)), kLogFloor);
      early_paramh_lp += std::max(std::log(parm.prob(t.target)), kLogFloor);
    }
    {
      double fraction = 0.75;
      Trajectory prefix = t.traj.prefix(prefix_length(t.traj.size(), fraction));
      GoalPosterior body =
          infer(ModelId::bodygen, prefix, scene, params, uniform_prior(scene),
                nullptr, derive_seed(72000, {i}));
      GoalPosterior parm = infer(ModelId::paramh, prefix, scene, params,
                                 uniform_prior(scene));
      ++late_total;
      if (body.argmax() == t.target) ++late_bodygen_correct;
      if (parm.argmax() == t.target) ++late_paramh_correct;
    }
  }

  double rank_fraction =
      early_total ? static_cast<double>(early_rank_ok) / early_total : 0;
  double mean_body = early_bodygen_lp / std::max(early_total, 1);
  double mean_parm = early_paramh_lp / std::max(early_total, 1);
  double late_body_acc =
      static_cast<double>(late_bodygen_correct) / std::max(late_total, 1);
  double late_parm_acc =
      static_cast<double>(late_paramh_correct) / std::max(late_total, 1);

  Outcome out;
  out.pass = trials.size() >= 20 && rank_fraction >= 0.70 &&
             mean_body > mean_parm &&
             late_parm_acc >= late_body_acc - 0.05 - 1e-12;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu trials; early rank<= %.0f%%; mean log post %.3f vs %.3f; "
                "late acc paramh %.2f vs bodygen %.2f",
                trials.size(), 100 * rank_fraction, mean_body, mean_parm,
                late_parm_acc, late_body_acc);
  out.detail = buf;
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 8: fitting recovery and gradients
// ---------------------------------------------------------------------------

struct SyntheticFit {
  DataStore store;
  std::vector<ResponseRecord> records;
};

SyntheticFit synth_choices(ModelId model, const ModelParams& truth,
                           int n_targets, int n_records, std::uint64_t seed) {
  SyntheticFit data;
  Rng geom(derive_seed(seed, {1}));
  std::vector<Vec3> targets;
  for (int i = 0; i < n_targets; ++i) {
    double angle = 2 * M_PI * i / n_targets;
    targets.push_back({0.8 * std::cos(angle), 0.9 + 0.4 * std::sin(angle),
                       1.0 + 0.15 * std::sin(2 * angle)});
  }
  SceneSpec scene;
  scene.table_height = 0.0;
  scene.table_min = {-10, -10, -1};
  scene.table_max = {10, 10, 0};
  scene.actor_base = {0, -0.3, 0.95};
  int id = 1;
  for (const auto& p : targets) scene.targets.push_back({id++, p});
  data.store.scenes["main"] = scene;

  for (int t = 1; t <= n_targets; ++t) {
    for (int v = 0; v < 3; ++v) {
      Vec3 start{geom.uniform(-0.1, 0.1), geom.uniform(-0.1, 0.1),
                 1.0 + geom.uniform(-0.05, 0.05)};
      Vec3 end = scene.target_position(t);
      Vec3 bend{geom.uniform(-0.3, 0.3), geom.uniform(-0.3, 0.3),
                geom.uniform(-0.15, 0.3)};
      Trajectory traj;
      traj.actor_id = "synthetic";
      traj.active_hand = Hand::right;
      for (int i = 0; i < 40; ++i) {
        double u = i / 39.0;
        SkeletonFrame f;
        f.t = i / 30.0;
        f.joints["wrist_right"] =
            start + (end - start - bend) * u + bend * (u * u);
        traj.frames.push_back(std::move(f));
      }
      traj.true_target = t;
      data.store.trajectories["t" + std::to_string(t) + "_" +
                              std::to_string(v)] = traj;
    }
  }

  Rng rng(derive_seed(seed, {2}));
  const std::vector<double> fractions = {0.35, 0.45, 0.55, 0.65, 0.75};
  for (int i = 0; i < n_records; ++i) {
    ResponseRecord r;
    r.subject_id = "s" + std::to_string(i % 25);
    r.trial_id = "trial" + std::to_string(i);
    r.condition = "main";
    r.true_target = 1 + static_cast<int>(rng.below(n_targets));
    r.stopping_fraction = fractions[rng.below(fractions.size())];
    r.trajectory_ref =
        "t" + std::to_string(r.true_target) + "_" + std::to_string(rng.below(3));
    const Trajectory& traj = data.store.trajectory(r.trajectory_ref);
    Trajectory prefix =
        traj.prefix(prefix_length(traj.size(), r.stopping_fraction));
    GoalPosterior post =
        infer(model, prefix, scene, truth, uniform_prior(scene));
    double u = rng.uniform();
    double acc = 0;
    r.chosen_target = post.probs.rbegin()->first;
    for (const auto& [tid, p] : post.probs) {
      acc += p;
      if (u <= acc) {
        r.chosen_target = tid;
        break;
      }
    }
    data.records.push_back(std::move(r));
  }
  return data;
}

Outcome criterion_fitting_recovery() {
  std::string detail;
  bool pass = true;

  // Odd/even split.
  std::vector<int> ids;
  for (int i = 1; i <= 18; ++i) ids.push_back(i);
  TargetSplit split = split_by_target_parity(ids);
  std::set<int> want_train = {1, 3, 5, 7, 9, 11, 13, 15, 17};
  std::set<int> want_test = {2, 4, 6, 8, 10, 12, 14, 16, 18};
  if (split.train != want_train || split.test != want_test) {
    pass = false;
    detail += "split mismatch; ";
  }

  // Distance theta* = 4 within 10% from 2000 softmax-sampled choices.
  {
    ModelParams truth;
    truth.distance.theta = 4.0;
    SyntheticFit data = synth_choices(ModelId::distance, truth, 8, 2000, 81);
    FitConfig config;
    config.seed = 1;
    ModelParams initial;
    initial.distance.theta = 1.0;
    FitResult fit = fit_model(ModelId::distance, initial, data.records,
                              data.store, config);
    double rel = std::abs(fit.params.distance.theta - 4.0) / 4.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "theta=%.3f (%.1f%% off); ",
                  fit.params.distance.theta, rel * 100);
    detail += buf;
    if (rel > 0.10) pass = false;
  }

  // LinH beta1 within 15% (rate fit at the generating windows; a joint
  // window search trades window count against the rate almost exactly).
  {
    ModelParams truth;
    truth.linh.beta1 = 12.0;
    truth.linh.h1 = 8;
    truth.linh.alpha1 = 2;
    SyntheticFit data = synth_choices(ModelId::linh, truth, 8, 1500, 82);
    FitConfig config;
    config.seed = 2;
    config.fit_window_params = false;
    ModelParams initial = truth;
    initial.linh.beta1 = 4.0;
    FitResult fit = fit_model(ModelId::linh, initial, data.records, data.store,
                              config);
    double rel = std::abs(fit.params.linh.beta1 - 12.0) / 12.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "beta1=%.3f (%.1f%% off); ",
                  fit.params.linh.beta1, rel * 100);
    detail += buf;
    if (rel > 0.15) pass = false;
  }

  // Analytic rate gradients vs central finite differences.
  {
    Rng rng(83);
    int checked = 0, bad = 0;
    for (int d = 0; d < 50; ++d) {
      ModelId model = static_cast<ModelId>(rng.below(3));
      SyntheticFit data =
          synth_choices(model, {}, 3 + static_cast<int>(rng.below(5)), 20,
                        derive_seed(84, {(std::uint64_t)d}));
      ModelParams p;
      std::vector<RecordFeatures> features;
      for (const auto& r : data.records) {
        features.push_back(make_record_features(
            model_features(model, p, r, NllMode::responses, data.store,
                           nullptr, 0),
            r.chosen_target));
      }
      double rate = rng.uniform(0.5, 8.0);
      double grad = 0;
      nll_from_features(features, rate, &grad);
      const double h = 1e-5;
      double fd = (nll_from_features(features, rate + h) -
                   nll_from_features(features, rate - h)) /
                  (2 * h);
      ++checked;
      if (std::abs(fd) > 1e-8 &&
          std::abs(grad - fd) / std::max(std::abs(fd), 1e-12) > 1e-4) {
        ++bad;
      }
    }
    detail += "gradients " + std::to_string(checked - bad) + "/" +
              std::to_string(checked) + " ok";
    if (bad > 0) pass = false;
  }

  Outcome out;
  out.pass = pass;
  out.detail = detail;
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: protocol constants
// ---------------------------------------------------------------------------

Outcome criterion_protocol_constants() {
  bool pass = true;
  std::string detail;

  if (stopping_fractions_exp1() !=
      std::vector<double>{0.20, 0.35, 0.50, 0.65, 0.80}) {
    pass = false;
    detail += "exp1 fractions; ";
  }
  if (stopping_fractions_exp2() !=
      std::vector<double>{0.35, 0.45, 0.55, 0.65, 0.75}) {
    pass = false;
    detail += "exp2 fractions; ";
  }
  if (kSittingShift != 0.10) {
    pass = false;
    detail += "sitting shift; ";
  }

  std::vector<TargetSpec> grid = target_layout_grid();
  if (grid.size() != 18) {
    pass = false;
    detail += "grid size; ";
  }

  double chance18 = 1.0 / 18.0;
  if (std::abs(chance18 - 0.0556) > 1e-4) {
    pass = false;
    detail += "chance18; ";
  }

  // Distractor subsampling keeps chance within the reported band.
  SceneSpec scene = make_standing_scene();
  Rng rng(91);
  for (int trial = 0; trial < 40; ++trial) {
    int true_target = 1 + static_cast<int>(rng.below(18));
    int n = 2 + static_cast<int>(rng.below(3));
    SceneSpec sub = subsample_distractors(scene, true_target, n, 900 + trial);
    double chance = 1.0 / static_cast<double>(sub.targets.size());
    if (chance < 0.2 || chance > 0.5) {
      pass = false;
      detail += "subsample chance; ";
      break;
    }
  }

  Outcome out;
  out.pass = pass;
  out.detail = pass ? "fraction sets, +0.10 shift, 18-target grid, "
                      "chance 1/18 ~ 0.0556, subsample chance in [0.2, 0.5]"
                    : detail;
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 10: CLI determinism
// ---------------------------------------------------------------------------

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_cli_determinism() {
  fs::path dir = fs::temp_directory_path() / "goalinfer_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto path = [&](const std::string& name) { return (dir / name).string(); };
  auto run = [&](const std::string& args) {
    std::string cmd = std::string(GOALINFER_CLI_PATH) + " " + args + " > " +
                      path("log.txt") + " 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  bool pass = true;
  std::string detail;

  SceneSpec scene;
  scene.table_height = 0.75;
  scene.table_min = {-0.65, 0.10, 0.70};
  scene.table_max = {0.65, 0.75, 0.75};
  scene.actor_base = {0.0, -0.30, 0.95};
  scene.targets = {{1, {-0.3, 0.3, 0.82}}, {2, {0.3, 0.3, 0.82}},
                   {3, {0.0, 0.5, 0.82}}};
  write_scene(scene, path("scene.json"));

  // simulate twice.
  if (run("simulate --scene " + path("scene.json") +
          " --targets 1,2 --n-per-target 1 --seed 17 --out-dir " +
          path("a")) != 0 ||
      run("simulate --scene " + path("scene.json") +
          " --targets 1,2 --n-per-target 1 --seed 17 --out-dir " +
          path("b")) != 0) {
    pass = false;
    detail += "simulate failed; ";
  } else {
    for (const std::string f :
         {"traj_t01_r00.jsonl", "traj_t02_r00.jsonl", "manifest.json"}) {
      if (slurp(path("a") + "/" + f) != slurp(path("b") + "/" + f)) {
        pass = false;
        detail += "simulate bytes differ (" + f + "); ";
      }
    }
  }

  // infer twice (bodygen exercises the seeded path end to end).
  if (pass) {
    std::string traj = path("a") + "/traj_t01_r00.jsonl";
    std::string infer_args = "infer --scene " + path("scene.json") +
                             " --trajectory " + traj +
                             " --model bodygen --seed 23 --fractions "
                             "0.5,0.8 --out ";
    if (run(infer_args + path("p1.csv")) != 0 ||
        run(infer_args + path("p2.csv")) != 0) {
      pass = false;
      detail += "infer failed; ";
    } else if (slurp(path("p1.csv")) != slurp(path("p2.csv"))) {
      pass = false;
      detail += "infer bytes differ; ";
    }
  }

  // evaluate twice.
  if (pass) {
    Json config;
    config["experiment"]["scenes"] = Json::array({path("scene.json")});
    config["experiment"]["trajectories"] =
        Json::array({path("a") + "/traj_t01_r00.jsonl",
                     path("a") + "/traj_t02_r00.jsonl"});
    config["experiment"]["models"] = Json::array({"distance", "linh"});
    config["experiment"]["stopping_fractions"] = Json::array({0.5, 0.8});
    std::ofstream(path("config.json")) << config.dump(2);
    if (run("evaluate --config " + path("config.json") +
            " --seed 29 --out-stem " + path("m1")) != 0 ||
        run("evaluate --config " + path("config.json") +
            " --seed 29 --out-stem " + path("m2")) != 0) {
      pass = false;
      detail += "evaluate failed; ";
    } else if (slurp(path("m1.csv")) != slurp(path("m2.csv")) ||
               slurp(path("m1.svg")) != slurp(path("m2.svg"))) {
      pass = false;
      detail += "evaluate bytes differ; ";
    }
  }

  fs::remove_all(dir);
  Outcome out;
  out.pass = pass;
  out.detail = pass ? "simulate, infer (bodygen), evaluate byte-identical"
                    : detail;
  return out;
}

}  // namespace
}  // namespace goalinfer

int main(int argc, char** argv) {
  using goalinfer::Outcome;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "posterior hygiene", goalinfer::criterion_posterior_hygiene},
      {2, "DTW oracle equivalence", goalinfer::criterion_dtw_oracle},
      {3, "geometric oracles", goalinfer::criterion_geometry},
      {4, "heuristic exactness", goalinfer::criterion_heuristic_exactness},
      {5, "planner competence", goalinfer::criterion_planner_competence},
      {6, "BodyGen self-consistency",
       goalinfer::criterion_bodygen_self_consistency},
      {7, "obstacle-condition model ordering",
       goalinfer::criterion_obstacle_ordering},
      {8, "fitting recovery", goalinfer::criterion_fitting_recovery},
      {9, "protocol constants", goalinfer::criterion_protocol_constants},
      {10, "CLI determinism", goalinfer::criterion_cli_determinism},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    std::printf("[%s] criterion %2d: %s — %s (%.1f s)\n",
                outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), secs);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
