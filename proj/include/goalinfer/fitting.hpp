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

#ifndef GOALINFER_FITTING_HPP_
#define GOALINFER_FITTING_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "goalinfer/error.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/optimize.hpp"
#include "goalinfer/posterior.hpp"
#include "goalinfer/types.hpp"

namespace goalinfer {

// ---------------------------------------------------------------------------
// Response data
// ---------------------------------------------------------------------------

struct ResponseRecord {
  std::string subject_id;
  std::string trial_id;
  std::string condition;          // resolves the scene in the data store
  double stopping_fraction = 1.0; // in (0, 1]
  int chosen_target = 0;
  int true_target = 0;
  std::string trajectory_ref;
};

// In-memory resolution of the refs carried by response records.
struct DataStore {
  std::map<std::string, SceneSpec> scenes;        // keyed by condition/name
  std::map<std::string, Trajectory> trajectories; // keyed by trajectory_ref

  const SceneSpec& scene_for(const ResponseRecord& r) const {
    auto it = scenes.find(r.condition);
    if (it == scenes.end()) {
      throw DataError("no scene for condition '" + r.condition + "'");
    }
    return it->second;
  }

  const Trajectory& trajectory(const std::string& ref) const {
    auto it = trajectories.find(ref);
    if (it == trajectories.end()) {
      throw DataError("no trajectory for ref '" + ref + "'");
    }
    return it->second;
  }
};

// Stopping-point prefix length: ceiling of fraction * length, at least 2
// frames so the prefix is a valid trajectory.
inline std::size_t prefix_length(std::size_t n_frames, double fraction) {
  std::size_t n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n_frames)));
  return std::min(std::max<std::size_t>(n, 2), n_frames);
}

// ---------------------------------------------------------------------------
// Train/test split (odd targets train, even targets test)
// ---------------------------------------------------------------------------

struct TargetSplit {
  std::set<int> train;
  std::set<int> test;
  bool empty_test_warning = false;
};

inline TargetSplit split_by_target_parity(const std::vector<int>& target_ids) {
  if (target_ids.empty()) {
    throw DataError("split_by_target_parity: empty target list");
  }
  TargetSplit split;
  for (int id : target_ids) {
    (id % 2 == 1 ? split.train : split.test).insert(id);
  }
  if (split.train.empty()) {
    throw DataError("split_by_target_parity: no odd-indexed targets; "
                    "training set would be empty");
  }
  split.empty_test_warning = split.test.empty();
  return split;
}

// ---------------------------------------------------------------------------
// Negative log-likelihood of response data
// ---------------------------------------------------------------------------

enum class NllMode { responses, ground_truth };

inline NllMode nll_mode_from_string(const std::string& s) {
  if (s == "responses") return NllMode::responses;
  if (s == "ground_truth") return NllMode::ground_truth;
  throw DataError("unknown nll mode: " + s);
}

inline constexpr double kLogFloor = -30.0;

struct NllStats {
  int clamped_records = 0;  // chosen target had (near-)zero posterior
};

// Direct NLL: evaluates the model posterior at each record's stopping-point
// prefix and sums -log posterior of the chosen (or true) target.
inline double nll(ModelId model, const ModelParams& params,
                  const std::vector<ResponseRecord>& dataset, NllMode mode,
                  const DataStore& store, const TerminalValue* value = nullptr,
                  std::uint64_t rng_seed = 0, NllStats* stats = nullptr) {
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ResponseRecord& r = dataset[i];
    const SceneSpec& scene = store.scene_for(r);
    const Trajectory& traj = store.trajectory(r.trajectory_ref);
    Trajectory prefix = traj.prefix(prefix_length(traj.size(), r.stopping_fraction));
    GoalPosterior post =
        infer(model, prefix, scene, params, uniform_prior(scene), value,
              derive_seed(rng_seed, {static_cast<std::uint64_t>(i)}));
    int target = mode == NllMode::responses ? r.chosen_target : r.true_target;
    double p = post.prob(target);
    double lp = p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    if (lp < kLogFloor) {
      lp = kLogFloor;
      if (stats) ++stats->clamped_records;
    }
    total -= lp;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Cached-feature NLL with analytic rate gradient
//
// Every model's log-likelihood is -rate * feature(g) where the feature does
// not depend on the rate parameter (theta, beta1, beta2, beta3). Features
// are extracted once per window/chunk configuration; the rate is then fitted
// by Adam with an exact gradient, without re-running geometry or planner.
// ---------------------------------------------------------------------------

struct RecordFeatures {
  std::vector<double> features;  // aligned with `ids`
  std::vector<int> ids;
  int target_index = -1;  // index of the scored (chosen/true) target
};

inline RecordFeatures make_record_features(const std::map<int, double>& f,
                                           int scored_target) {
  RecordFeatures rf;
  rf.features.reserve(f.size());
  rf.ids.reserve(f.size());
  int i = 0;
  for (const auto& [id, v] : f) {
    rf.ids.push_back(id);
    rf.features.push_back(v);
    if (id == scored_target) rf.target_index = i;
    ++i;
  }
  if (rf.target_index < 0) {
    throw DataError("response record scores target " +
                    std::to_string(scored_target) +
                    " absent from the scene");
  }
  return rf;
}

// NLL over cached features at a given rate; fills d(NLL)/d(rate) when
// grad_out is non-null. Uniform prior over each record's targets.
inline double nll_from_features(const std::vector<RecordFeatures>& records,
                                double rate, double* grad_out = nullptr,
                                NllStats* stats = nullptr) {
  double total = 0.0, grad = 0.0;
  for (const auto& r : records) {
    const std::size_t k = r.features.size();
    double min_f = std::numeric_limits<double>::infinity();
    for (double f : r.features) min_f = std::min(min_f, f);
    if (std::isinf(min_f)) {
      // Every target implausible: uniform fallback posterior.
      total += std::log(static_cast<double>(k));
      continue;
    }
    // log p(c) = -rate*(F_c - min_f) - log sum_g exp(-rate*(F_g - min_f))
    double z = 0.0, weighted_f = 0.0;
    for (double f : r.features) {
      if (std::isinf(f)) continue;
      double w = std::exp(-rate * (f - min_f));
      z += w;
      weighted_f += w * (f - min_f);
    }
    double fc = r.features[r.target_index];
    double lp;
    if (std::isinf(fc)) {
      lp = -std::numeric_limits<double>::infinity();
    } else {
      lp = -rate * (fc - min_f) - std::log(z);
    }
    if (lp < kLogFloor) {
      if (stats) ++stats->clamped_records;
      total -= kLogFloor;
      continue;  // flat region: no gradient contribution
    }
    total -= lp;
    grad += (fc - min_f) - weighted_f / z;
  }
  if (grad_out) *grad_out = grad;
  return total;
}

// Feature extraction per model for one record.
inline std::map<int, double> model_features(
    ModelId model, const ModelParams& params, const ResponseRecord& record,
    NllMode mode, const DataStore& store, const TerminalValue* value,
    std::uint64_t record_seed) {
  const SceneSpec& scene = store.scene_for(record);
  const Trajectory& traj = store.trajectory(record.trajectory_ref);
  Trajectory prefix =
      traj.prefix(prefix_length(traj.size(), record.stopping_fraction));
  switch (model) {
    case ModelId::distance:
      return distance_features(prefix, scene);
    case ModelId::linh:
      return linh_features(prefix, scene, params.linh.h1, params.linh.alpha1,
                           params.linh.forward_only);
    case ModelId::paramh:
      return paramh_features(prefix, scene, params.paramh.h2,
                             params.paramh.alpha2, params.paramh.forward_only);
    case ModelId::bodygen:
      return bodygen_features(prefix, scene, params.bodygen, value,
                              record_seed);
  }
  throw DataError("model_features: unknown model");
}

// ---------------------------------------------------------------------------
// Full fitting protocol
// ---------------------------------------------------------------------------

struct FitConfig {
  NllMode mode = NllMode::responses;
  NelderMeadConfig nelder_mead;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::string config_digest;  // echoed into the result
  // When false the window/chunk parameters stay at their initial values and
  // only the rate parameter is fitted.
  bool fit_window_params = true;
  // Called for every train-record objective evaluation; test hygiene checks
  // hook no test record in here.
  std::function<void(const ResponseRecord&)> on_train_eval;
};

struct FitResult {
  ModelId model = ModelId::distance;
  ModelParams params;
  double train_nll = 0.0;
  double test_nll = 0.0;
  int n_evals = 0;
  bool converged = false;
  std::string config_digest;
  TargetSplit split;
};

namespace detail {

inline std::vector<RecordFeatures> build_features(
    ModelId model, const ModelParams& params,
    const std::vector<ResponseRecord>& records, NllMode mode,
    const DataStore& store, const TerminalValue* value, std::uint64_t seed,
    const std::function<void(const ResponseRecord&)>* hook) {
  std::vector<RecordFeatures> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ResponseRecord& r = records[i];
    if (hook && *hook) (*hook)(r);
    int scored =
        mode == NllMode::responses ? r.chosen_target : r.true_target;
    out.push_back(make_record_features(
        model_features(model, params, r, mode, store, value,
                       derive_seed(seed, {static_cast<std::uint64_t>(i)})),
        scored));
  }
  return out;
}

// Rate fit by Adam in log space (keeps the rate positive) with the analytic
// d(NLL)/d(rate) chained through.
inline OptimizeResult fit_rate(const std::vector<RecordFeatures>& features,
                               double rate0, const AdamConfig& cfg) {
  auto objective = [&features](const std::vector<double>& x,
                               std::vector<double>& grad) {
    double rate = std::exp(x[0]);
    double g_rate = 0.0;
    double f = nll_from_features(features, rate, &g_rate);
    grad[0] = g_rate * rate;
    return f;
  };
  return adam(objective, {std::log(rate0)}, cfg);
}

}  // namespace detail

// Maximum-likelihood fit: window/chunk parameters by Nelder-Mead over a
// continuous relaxation (rounded at evaluation), rate parameters by Adam
// with analytic gradients at each outer evaluation. Trains on odd-target
// records and reports test NLL on even-target records, which are never
// touched during optimization.
inline FitResult fit_model(ModelId model, const ModelParams& initial,
                           const std::vector<ResponseRecord>& dataset,
                           const DataStore& store, const FitConfig& config,
                           const TerminalValue* value = nullptr) {
  if (dataset.empty()) throw DataError("fit_model: empty dataset");

  std::set<int> all_targets;
  for (const auto& r : dataset) all_targets.insert(r.true_target);
  TargetSplit split = split_by_target_parity(
      std::vector<int>(all_targets.begin(), all_targets.end()));

  std::vector<ResponseRecord> train, test;
  for (const auto& r : dataset) {
    (split.train.count(r.true_target) ? train : test).push_back(r);
  }
  if (train.empty()) throw DataError("fit_model: empty training set");

  FitResult result;
  result.model = model;
  result.params = initial;
  result.config_digest = config.config_digest;
  result.split = split;

  const auto* hook = config.on_train_eval ? &config.on_train_eval : nullptr;

  auto rate_of = [&](const ModelParams& p) {
    switch (model) {
      case ModelId::distance: return p.distance.theta;
      case ModelId::linh: return p.linh.beta1;
      case ModelId::paramh: return p.paramh.beta2;
      case ModelId::bodygen: return p.bodygen.beta3;
    }
    return 1.0;
  };
  auto set_rate = [&](ModelParams& p, double rate) {
    switch (model) {
      case ModelId::distance: p.distance.theta = rate; break;
      case ModelId::linh: p.linh.beta1 = rate; break;
      case ModelId::paramh: p.paramh.beta2 = rate; break;
      case ModelId::bodygen: p.bodygen.beta3 = rate; break;
    }
  };

  // Inner fit at fixed window params; returns train NLL at the fitted rate.
  int total_evals = 0;
  auto inner_fit = [&](const ModelParams& p, ModelParams& fitted) {
    std::vector<RecordFeatures> features =
        detail::build_features(model, p, train, config.mode, store, value,
                               config.seed, hook);
    OptimizeResult r = detail::fit_rate(features, rate_of(p), config.adam);
    total_evals += r.n_evals;
    fitted = p;
    set_rate(fitted, std::exp(r.x[0]));
    return r.f;
  };

  ModelParams best = initial;
  bool outer_converged = true;

  if (model == ModelId::distance || !config.fit_window_params) {
    // No window parameters to search: a single rate fit.
    ModelParams fitted;
    result.train_nll = inner_fit(initial, fitted);
    best = fitted;
  } else {
    std::vector<double> x0;
    auto params_at = [&](const std::vector<double>& x) {
      ModelParams p = initial;
      auto round_at_least = [](double v, int lo) {
        return std::max(lo, static_cast<int>(std::lround(v)));
      };
      switch (model) {
        case ModelId::linh:
          p.linh.h1 = round_at_least(x[0], 2);
          p.linh.alpha1 = round_at_least(x[1], 0);
          break;
        case ModelId::paramh:
          p.paramh.h2 = round_at_least(x[0], 3);
          p.paramh.alpha2 = round_at_least(x[1], 0);
          break;
        case ModelId::bodygen:
          p.bodygen.q = round_at_least(x[0], 2);
          break;
        default: break;
      }
      return p;
    };
    switch (model) {
      case ModelId::linh:
        x0 = {static_cast<double>(initial.linh.h1),
              static_cast<double>(initial.linh.alpha1)};
        break;
      case ModelId::paramh:
        x0 = {static_cast<double>(initial.paramh.h2),
              static_cast<double>(initial.paramh.alpha2)};
        break;
      case ModelId::bodygen:
        x0 = {static_cast<double>(initial.bodygen.q)};
        break;
      default: break;
    }

    NelderMeadConfig nm = config.nelder_mead;
    if (nm.initial_step < 1.0) nm.initial_step = 1.0;  // integer-scale moves
    OptimizeResult outer = nelder_mead(
        [&](const std::vector<double>& x) {
          ModelParams fitted;
          return inner_fit(params_at(x), fitted);
        },
        x0, nm);
    total_evals += outer.n_evals;
    outer_converged = outer.converged;

    ModelParams fitted;
    result.train_nll = inner_fit(params_at(outer.x), fitted);
    best = fitted;
  }

  result.params = best;
  result.n_evals = total_evals;
  result.converged = outer_converged;

  // Test NLL, computed once after optimization.
  if (!test.empty()) {
    std::vector<RecordFeatures> test_features = detail::build_features(
        model, best, test, config.mode, store, value,
        derive_seed(config.seed, {0x74657374u}), nullptr);
    result.test_nll = nll_from_features(test_features, rate_of(best));
  } else {
    result.test_nll = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Per-unit model scores and tidy tables
// ---------------------------------------------------------------------------

struct ScoreTable {
  std::vector<ResponseRecord> records;
  std::vector<ModelId> models;
  // log_posterior[record][model] of the chosen target (log-floor clamped).
  std::vector<std::vector<double>> log_posterior;
};

inline ScoreTable score_records(
    const std::vector<std::pair<ModelId, ModelParams>>& models,
    const std::vector<ResponseRecord>& dataset, const DataStore& store,
    NllMode mode = NllMode::responses, const TerminalValue* value = nullptr,
    std::uint64_t rng_seed = 0) {
  ScoreTable table;
  table.records = dataset;
  for (const auto& [id, p] : models) table.models.push_back(id);
  table.log_posterior.assign(dataset.size(),
                             std::vector<double>(models.size(), 0.0));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ResponseRecord& r = dataset[i];
    const SceneSpec& scene = store.scene_for(r);
    const Trajectory& traj = store.trajectory(r.trajectory_ref);
    Trajectory prefix =
        traj.prefix(prefix_length(traj.size(), r.stopping_fraction));
    int target = mode == NllMode::responses ? r.chosen_target : r.true_target;
    for (std::size_t m = 0; m < models.size(); ++m) {
      GoalPosterior post = infer(
          models[m].first, prefix, scene, models[m].second,
          uniform_prior(scene), value,
          derive_seed(rng_seed, {static_cast<std::uint64_t>(i),
                                 static_cast<std::uint64_t>(m)}));
      double p = post.prob(target);
      double lp =
          p > 0 ? std::log(p) : -std::numeric_limits<double>::infinity();
      table.log_posterior[i][m] = std::max(lp, kLogFloor);
    }
  }
  return table;
}

enum class GroupBy { subject, target, stopping_fraction, condition };

inline std::string to_string(GroupBy g) {
  switch (g) {
    case GroupBy::subject: return "subject";
    case GroupBy::target: return "target";
    case GroupBy::stopping_fraction: return "stopping_fraction";
    case GroupBy::condition: return "condition";
  }
  return "subject";
}

struct PerUnitRow {
  std::string group;
  ModelId model = ModelId::distance;
  double mean_log_posterior = 0.0;
  int n = 0;
};

struct PerUnitTable {
  GroupBy group_by = GroupBy::subject;
  std::vector<PerUnitRow> rows;
};

inline std::string group_key(const ResponseRecord& r, GroupBy g) {
  switch (g) {
    case GroupBy::subject: return r.subject_id;
    case GroupBy::target: return std::to_string(r.true_target);
    case GroupBy::stopping_fraction: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", r.stopping_fraction);
      return buf;
    }
    case GroupBy::condition: return r.condition;
  }
  return r.subject_id;
}

// Mean log posterior of the scored target per group, per model.
inline PerUnitTable per_unit_loglik(const ScoreTable& table, GroupBy group_by) {
  PerUnitTable out;
  out.group_by = group_by;
  std::map<std::string, std::pair<std::vector<double>, int>> acc;
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    std::string key = group_key(table.records[i], group_by);
    auto& [sums, n] = acc[key];
    if (sums.empty()) sums.assign(table.models.size(), 0.0);
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      sums[m] += table.log_posterior[i][m];
    }
    ++n;
  }
  for (const auto& [key, entry] : acc) {
    const auto& [sums, n] = entry;
    if (n == 0) continue;  // empty group: row omitted
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      out.rows.push_back({key, table.models[m],
                          sums[m] / static_cast<double>(n), n});
    }
  }
  return out;
}

}  // namespace goalinfer

#endif  // GOALINFER_FITTING_HPP_
