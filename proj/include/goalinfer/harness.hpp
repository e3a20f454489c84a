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

#ifndef GOALINFER_HARNESS_HPP_
#define GOALINFER_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "goalinfer/error.hpp"
#include "goalinfer/fitting.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/numfmt.hpp"
#include "goalinfer/rng.hpp"
#include "goalinfer/types.hpp"

namespace goalinfer {

// Protocol constants: stopping-point sets and the sitting-condition shift.
inline const std::vector<double>& stopping_fractions_exp1() {
  static const std::vector<double> f = {0.20, 0.35, 0.50, 0.65, 0.80};
  return f;
}
inline const std::vector<double>& stopping_fractions_exp2() {
  static const std::vector<double> f = {0.35, 0.45, 0.55, 0.65, 0.75};
  return f;
}
inline constexpr double kSittingShift = 0.10;

// ---------------------------------------------------------------------------
// Scene construction
// ---------------------------------------------------------------------------

// Targets on the table in an n_rows x n_cols layout, row-major ids from 1.
inline std::vector<TargetSpec> target_layout_grid(int n_rows = 3,
                                                  int n_cols = 6,
                                                  double spacing = 0.2,
                                                  Vec3 origin = {-0.5, 0.22,
                                                                 0.82}) {
  if (!(spacing > 0)) throw DataError("target grid: spacing must be > 0");
  if (n_rows < 1 || n_cols < 1) {
    throw DataError("target grid: rows and cols must be >= 1");
  }
  std::vector<TargetSpec> targets;
  targets.reserve(static_cast<std::size_t>(n_rows) * n_cols);
  int id = 1;
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      targets.push_back(
          {id++, {origin.x + c * spacing, origin.y + r * spacing, origin.z}});
    }
  }
  return targets;
}

namespace detail {

inline SceneSpec base_scene() {
  SceneSpec scene;
  scene.table_height = 0.75;
  scene.table_min = {-0.65, 0.10, 0.70};
  scene.table_max = {0.65, 0.75, 0.75};
  scene.targets = target_layout_grid();
  scene.body = default_body();
  return scene;
}

}  // namespace detail

inline SceneSpec make_standing_scene() {
  SceneSpec scene = detail::base_scene();
  scene.actor_base = {0.0, -0.30, 0.95};
  scene.condition_tag = ConditionTag::standing;
  return scene;
}

// A thin transparent wall across the middle of the table; targets beyond it
// require reaching over.
inline SceneSpec make_obstacle_scene() {
  SceneSpec scene = make_standing_scene();
  scene.condition_tag = ConditionTag::obstacle;
  ObstacleSpec wall;
  wall.center = {0.0, 0.28, 0.84};
  wall.half_extents = {0.62, 0.015, 0.09};
  scene.obstacles.push_back(wall);
  return scene;
}

// Actor seated at the right side of the table; reaching the left side
// requires moving the base.
inline SceneSpec make_sitting_scene() {
  SceneSpec scene = detail::base_scene();
  scene.actor_base = {0.55, -0.18, 0.62};
  scene.condition_tag = ConditionTag::sitting;
  return scene;
}

inline SceneSpec make_scene(ConditionTag tag) {
  switch (tag) {
    case ConditionTag::standing: return make_standing_scene();
    case ConditionTag::obstacle: return make_obstacle_scene();
    case ConditionTag::sitting: return make_sitting_scene();
    case ConditionTag::custom: break;
  }
  throw DataError("no preset scene for condition 'custom'");
}

// ---------------------------------------------------------------------------
// Target adjustment and distractor subsampling
// ---------------------------------------------------------------------------

struct AdjustStats {
  std::vector<int> removed_ids;     // adjusted position left the table
  std::vector<int> unadjusted_ids;  // no trajectory ended on the target
};

// Moves each target to the mean final wrist position of the trajectories
// that reached for it; targets whose adjusted position leaves the table
// surface are removed.
inline SceneSpec adjust_targets_to_endpoints(
    const SceneSpec& scene, const std::vector<Trajectory>& trajectories,
    AdjustStats* stats = nullptr) {
  std::map<int, std::vector<Vec3>> endpoints;
  for (const auto& traj : trajectories) {
    if (!traj.true_target || traj.frames.empty()) continue;
    if (!scene.find_target(*traj.true_target)) continue;
    Hand hand = traj.active_hand ? *traj.active_hand
                                 : hands_to_score(traj).front();
    const Vec3* wrist = traj.frames.back().find_joint(wrist_joint_name(hand));
    if (wrist) endpoints[*traj.true_target].push_back(*wrist);
  }

  SceneSpec adjusted = scene;
  adjusted.targets.clear();
  for (const auto& target : scene.targets) {
    auto it = endpoints.find(target.id);
    if (it == endpoints.end()) {
      if (stats) stats->unadjusted_ids.push_back(target.id);
      adjusted.targets.push_back(target);
      continue;
    }
    Vec3 mean{0, 0, 0};
    for (const auto& p : it->second) mean += p;
    mean = mean * (1.0 / static_cast<double>(it->second.size()));
    bool on_table = mean.x >= scene.table_min.x && mean.x <= scene.table_max.x &&
                    mean.y >= scene.table_min.y && mean.y <= scene.table_max.y;
    if (!on_table) {
      if (stats) stats->removed_ids.push_back(target.id);
      continue;
    }
    adjusted.targets.push_back({target.id, mean});
  }
  return adjusted;
}

namespace detail {

// Grid coordinates implied by the row-major 3x6 id layout.
inline std::pair<int, int> grid_cell(int id, int n_cols = 6) {
  return {(id - 1) / n_cols, (id - 1) % n_cols};
}

inline bool grid_adjacent(int a, int b, int n_cols = 6) {
  auto [ra, ca] = grid_cell(a, n_cols);
  auto [rb, cb] = grid_cell(b, n_cols);
  return std::abs(ra - rb) <= 1 && std::abs(ca - cb) <= 1;
}

// Backtracking over a seeded candidate order; finds a placement whenever
// one exists, so failure really means infeasibility.
inline bool pick_distractors(const std::vector<int>& candidates,
                             const std::vector<int>& chosen_so_far,
                             std::size_t start, int remaining,
                             std::vector<int>& out) {
  if (remaining == 0) {
    out = chosen_so_far;
    return true;
  }
  for (std::size_t i = start; i < candidates.size(); ++i) {
    int cand = candidates[i];
    bool ok = true;
    for (int c : chosen_so_far) {
      if (grid_adjacent(cand, c)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::vector<int> next = chosen_so_far;
    next.push_back(cand);
    if (pick_distractors(candidates, next, i + 1, remaining - 1, out)) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Scene with the true target plus n pairwise non-adjacent distractors
// (8-neighborhood on the id grid), sampled deterministically per seed.
inline SceneSpec subsample_distractors(const SceneSpec& scene, int true_target,
                                       int n_distractors,
                                       std::uint64_t rng_seed) {
  if (n_distractors < 2 || n_distractors > 6) {
    throw DataError("subsample_distractors: n_distractors must be in 2..6");
  }
  if (!scene.find_target(true_target)) {
    throw DataError("subsample_distractors: true target " +
                    std::to_string(true_target) + " not in scene");
  }
  std::vector<int> candidates;
  for (const auto& t : scene.targets) {
    if (t.id != true_target && !detail::grid_adjacent(t.id, true_target)) {
      candidates.push_back(t.id);
    }
  }
  if (static_cast<int>(candidates.size()) < n_distractors) {
    throw DataError("subsample_distractors: only " +
                    std::to_string(candidates.size()) +
                    " non-adjacent candidates for " +
                    std::to_string(n_distractors) + " distractors");
  }
  // Seeded shuffle fixes the sampling order.
  Rng rng(derive_seed(rng_seed, {0x646973u}));
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::swap(candidates[i - 1], candidates[rng.below(i)]);
  }
  std::vector<int> chosen;
  if (!detail::pick_distractors(candidates, {}, 0, n_distractors, chosen)) {
    throw DataError(
        "subsample_distractors: no set of " + std::to_string(n_distractors) +
        " pairwise non-adjacent distractors exists in this scene");
  }

  std::set<int> keep(chosen.begin(), chosen.end());
  keep.insert(true_target);
  SceneSpec out = scene;
  out.targets.clear();
  for (const auto& t : scene.targets) {
    if (keep.count(t.id)) out.targets.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::vector<std::string> scene_refs;       // one, or one per trajectory
  std::vector<std::string> trajectory_refs;
  std::vector<double> stopping_fractions;    // strictly increasing
  std::vector<std::pair<ModelId, std::string>> models;  // (model, params ref)
  std::uint64_t seed = 0;
  double sitting_shift = kSittingShift;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.trajectory_refs.empty()) {
    throw DataError("experiment config: no trajectories");
  }
  if (cfg.scene_refs.size() != 1 &&
      cfg.scene_refs.size() != cfg.trajectory_refs.size()) {
    throw DataError("experiment config: scene_refs must be a single ref or "
                    "one per trajectory");
  }
  if (cfg.models.empty()) throw DataError("experiment config: no models");
  if (cfg.stopping_fractions.empty()) {
    throw DataError("experiment config: no stopping fractions");
  }
  for (std::size_t i = 0; i < cfg.stopping_fractions.size(); ++i) {
    double f = cfg.stopping_fractions[i];
    if (!(f > 0 && f <= 1)) {
      throw DataError("experiment config: stopping fractions must be in (0,1]");
    }
    if (i > 0 && f <= cfg.stopping_fractions[i - 1]) {
      throw DataError("experiment config: stopping fractions must be "
                      "strictly increasing");
    }
  }
}

struct MetricsRow {
  std::string condition;
  int target = 0;
  double stopping_fraction = 0.0;
  std::string model;
  double accuracy = 0.0;
  double mean_log_posterior_true = 0.0;
  int n = 0;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
};

// Truncate-infer-score over every trajectory x stopping fraction x model.
// Sitting-condition fractions are shifted forward by sitting_shift (capped
// at 1); rows keep the nominal fraction. Rows are aggregated per
// (condition, true target, fraction, model).
inline MetricsTable run_experiment(
    const ExperimentConfig& cfg, const DataStore& store,
    const std::map<std::string, ModelParams>& params_store,
    const TerminalValue* value = nullptr) {
  validate(cfg);

  // Resolve every ref up front.
  std::vector<const SceneSpec*> scenes;
  std::vector<const Trajectory*> trajectories;
  for (std::size_t i = 0; i < cfg.trajectory_refs.size(); ++i) {
    const std::string& scene_ref =
        cfg.scene_refs.size() == 1 ? cfg.scene_refs[0] : cfg.scene_refs[i];
    auto sit = store.scenes.find(scene_ref);
    if (sit == store.scenes.end()) {
      throw DataError("experiment: unresolvable scene ref '" + scene_ref + "'");
    }
    auto tit = store.trajectories.find(cfg.trajectory_refs[i]);
    if (tit == store.trajectories.end()) {
      throw DataError("experiment: unresolvable trajectory ref '" +
                      cfg.trajectory_refs[i] + "'");
    }
    if (!tit->second.true_target) {
      throw DataError("experiment: trajectory '" + cfg.trajectory_refs[i] +
                      "' has no true_target");
    }
    scenes.push_back(&sit->second);
    trajectories.push_back(&tit->second);
  }
  std::vector<ModelParams> model_params;
  for (const auto& [model, ref] : cfg.models) {
    auto it = params_store.find(ref);
    if (it == params_store.end()) {
      throw DataError("experiment: unresolvable params ref '" + ref + "'");
    }
    model_params.push_back(it->second);
  }

  struct Key {
    std::string condition;
    int target;
    double fraction;
    std::string model;
    bool operator<(const Key& o) const {
      return std::tie(condition, target, fraction, model) <
             std::tie(o.condition, o.target, o.fraction, o.model);
    }
  };
  struct Acc {
    int n = 0;
    int correct = 0;
    double log_post_sum = 0.0;
  };
  std::map<Key, Acc> acc;

  for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
    const SceneSpec& scene = *scenes[ti];
    const Trajectory& traj = *trajectories[ti];
    const int true_target = *traj.true_target;
    const std::string condition = to_string(scene.condition_tag);
    for (std::size_t fi = 0; fi < cfg.stopping_fractions.size(); ++fi) {
      double nominal = cfg.stopping_fractions[fi];
      double effective = nominal;
      if (scene.condition_tag == ConditionTag::sitting) {
        effective = std::min(nominal + cfg.sitting_shift, 1.0);
      }
      Trajectory prefix =
          traj.prefix(prefix_length(traj.size(), effective));
      for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        GoalPosterior post =
            infer(cfg.models[mi].first, prefix, scene, model_params[mi],
                  uniform_prior(scene), value,
                  derive_seed(cfg.seed, {static_cast<std::uint64_t>(ti),
                                         static_cast<std::uint64_t>(fi),
                                         static_cast<std::uint64_t>(mi)}));
        double p = post.prob(true_target);
        double lp = p > 0 ? std::log(p) : kLogFloor;
        Key key{condition, true_target, nominal,
                to_string(cfg.models[mi].first)};
        Acc& a = acc[key];
        ++a.n;
        if (post.argmax() == true_target) ++a.correct;
        a.log_post_sum += std::max(lp, kLogFloor);
      }
    }
  }

  MetricsTable table;
  for (const auto& [key, a] : acc) {
    MetricsRow row;
    row.condition = key.condition;
    row.target = key.target;
    row.stopping_fraction = key.fraction;
    row.model = key.model;
    row.n = a.n;
    row.accuracy = static_cast<double>(a.correct) / a.n;
    row.mean_log_posterior_true = a.log_post_sum / a.n;
    table.rows.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

struct ModelDiffRow {
  std::string unit;  // subject id
  std::string model_a, model_b;
  double diff = 0.0;  // mean log posterior, a minus b
};

struct WinnerRow {
  std::string stopping_fraction;
  std::string model;
  double winner_fraction = 0.0;
  int n_units = 0;
};

struct ComparisonResult {
  std::vector<ModelDiffRow> diffs;      // per subject, per model pair
  std::vector<WinnerRow> winners;       // per stopping point, ties split
};

// Compares >= 2 models scored on the same dataset. Tables must carry
// identical record sequences; winner fractions are computed over subjects
// within each stopping point.
inline ComparisonResult compare_models(const std::vector<ScoreTable>& tables) {
  if (tables.empty()) throw DataError("compare_models: no score tables");
  const auto& base = tables[0].records;
  for (const auto& t : tables) {
    if (t.records.size() != base.size()) {
      throw DataError("compare_models: datasets differ in size");
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      const auto& a = base[i];
      const auto& b = t.records[i];
      if (a.subject_id != b.subject_id || a.trial_id != b.trial_id ||
          a.stopping_fraction != b.stopping_fraction ||
          a.chosen_target != b.chosen_target) {
        throw DataError("compare_models: datasets are mismatched at record " +
                        std::to_string(i));
      }
    }
  }

  // Merge models.
  std::vector<ModelId> models;
  for (const auto& t : tables) {
    models.insert(models.end(), t.models.begin(), t.models.end());
  }
  if (models.size() < 2) {
    throw DataError("compare_models: needs at least 2 models");
  }
  auto log_post = [&](std::size_t record, std::size_t model) {
    for (const auto& t : tables) {
      if (model < t.models.size()) return t.log_posterior[record][model];
      model -= t.models.size();
    }
    throw DataError("compare_models: model index out of range");
  };

  ComparisonResult result;

  // Per-subject mean log posterior per model.
  std::map<std::string, std::pair<std::vector<double>, int>> by_subject;
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto& [sums, n] = by_subject[base[i].subject_id];
    if (sums.empty()) sums.assign(models.size(), 0.0);
    for (std::size_t m = 0; m < models.size(); ++m) {
      sums[m] += log_post(i, m);
    }
    ++n;
  }
  for (const auto& [subject, entry] : by_subject) {
    const auto& [sums, n] = entry;
    for (std::size_t a = 0; a < models.size(); ++a) {
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        result.diffs.push_back({subject, to_string(models[a]),
                                to_string(models[b]),
                                (sums[a] - sums[b]) / n});
      }
    }
  }

  // Winner fractions per stopping point, units are subjects, ties split.
  std::map<std::string, std::map<std::string, std::pair<std::vector<double>, int>>>
      by_fraction;
  for (std::size_t i = 0; i < base.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", base[i].stopping_fraction);
    auto& [sums, n] = by_fraction[buf][base[i].subject_id];
    if (sums.empty()) sums.assign(models.size(), 0.0);
    for (std::size_t m = 0; m < models.size(); ++m) sums[m] += log_post(i, m);
    ++n;
  }
  for (const auto& [fraction, subjects] : by_fraction) {
    std::vector<double> fractions(models.size(), 0.0);
    for (const auto& [subject, entry] : subjects) {
      const auto& sums = entry.first;
      double best = *std::max_element(sums.begin(), sums.end());
      int ties = 0;
      for (double s : sums) {
        if (s == best) ++ties;
      }
      for (std::size_t m = 0; m < models.size(); ++m) {
        if (sums[m] == best) {
          fractions[m] += 1.0 / (ties * static_cast<double>(subjects.size()));
        }
      }
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
      result.winners.push_back({fraction, to_string(models[m]), fractions[m],
                                static_cast<int>(subjects.size())});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Bootstrap confidence intervals
// ---------------------------------------------------------------------------

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
};

// Percentile bootstrap of the mean; 1000 seeded resamples.
inline BootstrapCi bootstrap_ci(const std::vector<double>& values,
                                std::uint64_t seed, int n_resamples = 1000,
                                double lo_pct = 0.025, double hi_pct = 0.975) {
  if (values.empty()) throw DataError("bootstrap_ci: empty sample");
  Rng rng(derive_seed(seed, {0x626f6f74u}));
  std::vector<double> means(n_resamples);
  for (int r = 0; r < n_resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum += values[rng.below(values.size())];
    }
    means[r] = sum / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  auto pick = [&](double pct) {
    int idx = static_cast<int>(pct * (n_resamples - 1));
    return means[std::clamp(idx, 0, n_resamples - 1)];
  };
  return {pick(lo_pct), pick(hi_pct)};
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline std::string metrics_to_csv(const MetricsTable& table) {
  std::string out =
      "condition,target,stopping_fraction,model,accuracy,"
      "mean_log_posterior_true,n\n";
  for (const auto& r : table.rows) {
    out += r.condition + ',' + std::to_string(r.target) + ',' +
           format_double(r.stopping_fraction) + ',' + r.model + ',' +
           format_double(r.accuracy) + ',' +
           format_double(r.mean_log_posterior_true) + ',' +
           std::to_string(r.n) + '\n';
  }
  return out;
}

inline MetricsTable metrics_from_csv(const std::string& text) {
  MetricsTable table;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("metrics csv: empty input");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw DataError("metrics csv line " + std::to_string(line_no) +
                      ": expected 7 columns");
    }
    const std::string what = "metrics csv line " + std::to_string(line_no);
    MetricsRow row;
    row.condition = cells[0];
    row.target = parse_int(cells[1], what);
    row.stopping_fraction = parse_double(cells[2], what);
    row.model = cells[3];
    row.accuracy = parse_double(cells[4], what);
    row.mean_log_posterior_true = parse_double(cells[5], what);
    row.n = parse_int(cells[6], what);
    table.rows.push_back(row);
  }
  return table;
}

namespace detail {

// Minimal deterministic SVG assembly.
class SvgBuilder {
 public:
  SvgBuilder(double width, double height) : w_(width), h_(height) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
             format_double(w_) + "\" height=\"" + format_double(h_) +
             "\" viewBox=\"0 0 " + format_double(w_) + " " +
             format_double(h_) + "\">\n";
    body_ += "<rect width=\"" + format_double(w_) + "\" height=\"" +
             format_double(h_) + "\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& color, double width = 1.0) {
    body_ += "<line x1=\"" + format_double(x1) + "\" y1=\"" +
             format_double(y1) + "\" x2=\"" + format_double(x2) + "\" y2=\"" +
             format_double(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" +
             format_double(width) + "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color) {
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" points=\"";
    for (const auto& [x, y] : pts) {
      body_ += format_double(x) + "," + format_double(y) + " ";
    }
    body_ += "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& color) {
    body_ += "<circle cx=\"" + format_double(x) + "\" cy=\"" +
             format_double(y) + "\" r=\"" + format_double(r) + "\" fill=\"" +
             color + "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 11) {
    body_ += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) +
             "\" font-family=\"sans-serif\" font-size=\"" +
             std::to_string(size) + "\">" + s + "</text>\n";
  }

  std::string finish() { return body_ + "</svg>\n"; }

 private:
  double w_, h_;
  std::string body_;
};

inline const std::vector<std::string>& series_palette() {
  static const std::vector<std::string> colors = {
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors;
}

}  // namespace detail

// Accuracy-vs-stopping-fraction lines per (condition, model), plus a
// per-target scatter comparing the first two models when present.
inline std::string metrics_to_svg(const MetricsTable& table) {
  if (table.rows.empty()) throw DataError("metrics svg: empty table");

  // Aggregate accuracy over targets per (condition, model, fraction).
  struct SeriesKey {
    std::string condition, model;
    bool operator<(const SeriesKey& o) const {
      return std::tie(condition, model) < std::tie(o.condition, o.model);
    }
  };
  std::map<SeriesKey, std::map<double, std::pair<double, int>>> series;
  std::set<std::string> models;
  for (const auto& r : table.rows) {
    auto& [sum, n] = series[{r.condition, r.model}][r.stopping_fraction];
    sum += r.accuracy * r.n;
    n += r.n;
    models.insert(r.model);
  }

  const double width = 720, height = 360;
  const double plot_x = 50, plot_y = 20, plot_w = 300, plot_h = 280;
  detail::SvgBuilder svg(width, height);

  auto x_of = [&](double fraction) { return plot_x + fraction * plot_w; };
  auto y_of = [&](double accuracy) {
    return plot_y + (1.0 - accuracy) * plot_h;
  };

  svg.line(plot_x, plot_y + plot_h, plot_x + plot_w, plot_y + plot_h, "black");
  svg.line(plot_x, plot_y, plot_x, plot_y + plot_h, "black");
  svg.text(plot_x + plot_w / 2 - 50, plot_y + plot_h + 30,
           "stopping fraction");
  svg.text(8, plot_y + plot_h / 2, "acc");
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    svg.line(x_of(tick), plot_y + plot_h, x_of(tick), plot_y + plot_h + 4,
             "black");
    svg.text(x_of(tick) - 8, plot_y + plot_h + 16, format_double(tick), 9);
    svg.line(plot_x - 4, y_of(tick), plot_x, y_of(tick), "black");
    svg.text(plot_x - 30, y_of(tick) + 3, format_double(tick), 9);
  }

  int color_i = 0;
  double legend_y = plot_y + 8;
  for (const auto& [key, points] : series) {
    const std::string& color =
        detail::series_palette()[color_i % detail::series_palette().size()];
    std::vector<std::pair<double, double>> pts;
    for (const auto& [fraction, acc] : points) {
      pts.emplace_back(x_of(fraction), y_of(acc.first / acc.second));
    }
    svg.polyline(pts, color);
    for (const auto& [x, y] : pts) svg.circle(x, y, 2.5, color);
    svg.text(plot_x + plot_w + 16, legend_y, key.condition + "/" + key.model,
             9);
    svg.line(plot_x + plot_w + 4, legend_y - 3, plot_x + plot_w + 13,
             legend_y - 3, color, 2.0);
    legend_y += 14;
    ++color_i;
  }

  // Per-target scatter: first model vs second model accuracy.
  if (models.size() >= 2) {
    auto it = models.begin();
    std::string model_a = *it++;
    std::string model_b = *it;
    const double sc_x = 470, sc_y = 40, sc_w = 200, sc_h = 200;
    svg.line(sc_x, sc_y + sc_h, sc_x + sc_w, sc_y + sc_h, "black");
    svg.line(sc_x, sc_y, sc_x, sc_y + sc_h, "black");
    svg.line(sc_x, sc_y + sc_h, sc_x + sc_w, sc_y, "#bbbbbb");
    svg.text(sc_x + sc_w / 2 - 30, sc_y + sc_h + 30, model_a, 10);
    svg.text(sc_x - 30, sc_y - 8, model_b, 10);

    std::map<std::pair<std::string, int>, std::pair<double, double>> acc_ab;
    std::map<std::pair<std::string, int>, std::pair<int, int>> n_ab;
    for (const auto& r : table.rows) {
      auto key = std::make_pair(r.condition, r.target);
      if (r.model == model_a) {
        acc_ab[key].first += r.accuracy * r.n;
        n_ab[key].first += r.n;
      } else if (r.model == model_b) {
        acc_ab[key].second += r.accuracy * r.n;
        n_ab[key].second += r.n;
      }
    }
    for (const auto& [key, acc] : acc_ab) {
      const auto& n = n_ab[key];
      if (n.first == 0 || n.second == 0) continue;
      double ax = acc.first / n.first;
      double by = acc.second / n.second;
      svg.circle(sc_x + ax * sc_w, sc_y + (1.0 - by) * sc_h, 3, "#1f77b4");
    }
  }
  return svg.finish();
}

enum class ReportFormat { csv, svg };

// Writes the table as CSV and/or SVG; returns the written paths.
inline std::vector<std::string> emit_report(const MetricsTable& table,
                                            const std::vector<ReportFormat>& formats,
                                            const std::string& path_stem) {
  if (table.rows.empty()) throw DataError("emit_report: empty table");
  std::vector<std::string> written;
  for (ReportFormat f : formats) {
    std::string path =
        path_stem + (f == ReportFormat::csv ? ".csv" : ".svg");
    std::string content =
        f == ReportFormat::csv ? metrics_to_csv(table) : metrics_to_svg(table);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("emit_report: cannot write " + path);
    out << content;
    if (!out) throw DataError("emit_report: write failed for " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace goalinfer

#endif  // GOALINFER_HARNESS_HPP_
