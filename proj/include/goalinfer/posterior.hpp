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

#ifndef GOALINFER_POSTERIOR_HPP_
#define GOALINFER_POSTERIOR_HPP_

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "goalinfer/error.hpp"
#include "goalinfer/types.hpp"

namespace goalinfer {

// Bayes combination: probs[g] proportional to prior[g] * exp(loglik[g]).
// Likelihoods arrive in log space; the sum is max-shifted so that large
// negative exponents cannot underflow the whole vector at once.
inline GoalPosterior combine_posterior(
    const Prior& prior, const std::map<int, double>& log_likelihoods,
    int tau_index = 0) {
  if (prior.probs.size() != log_likelihoods.size()) {
    throw DataError("combine_posterior: prior and likelihood key sets differ");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double max_score = kNegInf;
  for (const auto& [id, ll] : log_likelihoods) {
    auto it = prior.probs.find(id);
    if (it == prior.probs.end()) {
      throw DataError("combine_posterior: likelihood target " +
                      std::to_string(id) + " missing from prior");
    }
    if (std::isnan(ll) || ll == std::numeric_limits<double>::infinity()) {
      throw NumericError("combine_posterior: invalid log-likelihood for "
                         "target " + std::to_string(id));
    }
    if (it->second > 0 && ll > max_score) max_score = ll;
  }

  GoalPosterior post;
  post.tau_index = tau_index;
  if (max_score == kNegInf) {
    // Every target with prior mass has vanished likelihood.
    post.uniform_fallback = true;
    double u = 1.0 / static_cast<double>(prior.probs.size());
    for (const auto& [id, p] : prior.probs) post.probs[id] = u;
    return post;
  }

  double z = 0.0;
  for (const auto& [id, ll] : log_likelihoods) {
    double w = prior.probs.at(id) * std::exp(ll - max_score);
    post.probs[id] = w;
    z += w;
  }
  for (auto& [id, p] : post.probs) p /= z;
  return post;
}

// Wrist positions of `hand` for frames [first, last] (0-based, inclusive).
inline std::vector<Vec3> wrist_path(const Trajectory& traj, Hand hand,
                                    std::size_t first, std::size_t last) {
  if (first > last || last >= traj.frames.size()) {
    throw DataError("wrist_path: frame range [" + std::to_string(first) +
                    ".." + std::to_string(last) + "] out of bounds");
  }
  const std::string joint = wrist_joint_name(hand);
  std::vector<Vec3> path;
  path.reserve(last - first + 1);
  for (std::size_t i = first; i <= last; ++i) {
    const Vec3* p = traj.frames[i].find_joint(joint);
    if (!p) {
      throw DataError("wrist_path: joint " + joint + " missing in frame " +
                      std::to_string(i));
    }
    path.push_back(*p);
  }
  return path;
}

inline std::vector<Vec3> wrist_path(const Trajectory& traj, Hand hand) {
  return wrist_path(traj, hand, 0, traj.frames.size() - 1);
}

// Hands present in every frame of the trajectory, in {left, right} order.
inline std::vector<Hand> available_hands(const Trajectory& traj) {
  std::vector<Hand> hands;
  for (Hand h : {Hand::left, Hand::right}) {
    const std::string joint = wrist_joint_name(h);
    bool everywhere = true;
    for (const auto& f : traj.frames) {
      if (!f.joints.count(joint)) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) hands.push_back(h);
  }
  return hands;
}

// Hands the models should score: the annotated hand when present, otherwise
// every hand observed in all frames (evidence is combined by per-target max).
inline std::vector<Hand> hands_to_score(const Trajectory& traj) {
  if (traj.active_hand) return {*traj.active_hand};
  std::vector<Hand> hands = available_hands(traj);
  if (hands.empty()) {
    throw DataError("trajectory has no hand observed in every frame");
  }
  return hands;
}

}  // namespace goalinfer

#endif  // GOALINFER_POSTERIOR_HPP_
