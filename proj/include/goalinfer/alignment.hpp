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

#ifndef GOALINFER_ALIGNMENT_HPP_
#define GOALINFER_ALIGNMENT_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "goalinfer/dtw.hpp"
#include "goalinfer/error.hpp"
#include "goalinfer/planner.hpp"

namespace goalinfer {

// Fraction of the observed chunk length the plan is allowed to cover before
// alignment: the chunk describes the near future, not the whole reach.
inline constexpr double kPlanAlignFactor = 1.5;

// Mean normalized DTW cost between an observed wrist chunk and n_runs
// replans toward `goal` from the resume state. Each run gets a derived
// seed; runs whose plan never completes are dropped, and if every run is
// dropped the divergence is +infinity (the target is implausible, not an
// error). Reduction over runs is in run order, so parallel evaluation
// cannot change the result.
inline double mean_plan_divergence(
    const std::vector<Vec3>& observed_chunk, const TargetSpec& goal,
    const SceneSpec& scene, const KinematicState& resume_state, int n_runs,
    const PlannerParams& params, const TerminalValue* value,
    std::uint64_t rng_seed, std::vector<MppiContext>* warm_contexts = nullptr,
    double plan_align_factor = kPlanAlignFactor) {
  if (observed_chunk.empty()) {
    throw DataError("mean_plan_divergence: empty observed chunk");
  }
  if (n_runs < 1) {
    throw DataError("mean_plan_divergence: n_runs must be >= 1");
  }
  if (warm_contexts && warm_contexts->size() < static_cast<std::size_t>(n_runs)) {
    warm_contexts->resize(n_runs);
  }

  const std::size_t align_len = static_cast<std::size_t>(
      std::ceil(plan_align_factor * static_cast<double>(observed_chunk.size())));

  double sum = 0.0;
  int used = 0;
  for (int r = 0; r < n_runs; ++r) {
    MppiContext* ctx = warm_contexts ? &(*warm_contexts)[r] : nullptr;
    PlanRollout rollout =
        plan(goal, scene, resume_state, params, value,
             derive_seed(rng_seed, {static_cast<std::uint64_t>(r)}), ctx);
    if (!rollout.complete) continue;
    std::vector<Vec3> plan_path = rollout.wrist_points;
    if (plan_path.size() > align_len) plan_path.resize(align_len);
    sum += dtw(observed_chunk, plan_path).normalized_cost;
    ++used;
  }
  if (used == 0) return std::numeric_limits<double>::infinity();
  return sum / static_cast<double>(used);
}

}  // namespace goalinfer

#endif  // GOALINFER_ALIGNMENT_HPP_
