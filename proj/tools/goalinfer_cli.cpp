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

// Command-line front end: simulate reaching trajectories, run goal
// inference, fit model parameters, and reproduce the evaluation pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "goalinfer/harness.hpp"
#include "goalinfer/io.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/numfmt.hpp"
#include "goalinfer/value_ensemble.hpp"

namespace fs = std::filesystem;
using namespace goalinfer;

namespace {

// Scene argument: a JSON file path or one of the preset names.
SceneSpec load_scene_arg(const std::string& arg) {
  if (arg == "standing" || arg == "sitting" || arg == "obstacle") {
    return make_scene(condition_from_string(arg));
  }
  if (arg.rfind("preset:", 0) == 0) {
    return make_scene(condition_from_string(arg.substr(7)));
  }
  return parse_scene(arg);
}

std::vector<double> parse_fractions(const std::string& arg) {
  std::vector<double> fractions;
  std::istringstream in(arg);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    double f = parse_double(cell, "fractions");
    if (!(f > 0 && f <= 1)) {
      throw DataError("fractions must be in (0, 1], got " + cell);
    }
    fractions.push_back(f);
  }
  if (fractions.empty()) throw DataError("empty fractions list");
  return fractions;
}

PlannerParams planner_from_config(const Json& config,
                                  const BodyProportions& body) {
  PlannerParams p = planner_from_json(config.at("planner"), "config.planner");
  return resolve_planner(p, body);
}

std::optional<ValueEnsemble> maybe_load_value(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return ValueEnsemble::load(path);
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string scene;
  std::string targets = "all";
  int n_per_target = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config_path;
  std::string value_path;
  std::string hand = "right";
};

int cmd_simulate(const SimulateArgs& args) {
  SceneSpec scene = load_scene_arg(args.scene);
  Json config = args.config_path.empty() ? default_config_json()
                                         : load_config(args.config_path);
  PlannerParams planner = planner_from_config(config, scene.body);
  std::optional<ValueEnsemble> value = maybe_load_value(args.value_path);

  std::vector<int> target_ids;
  if (args.targets == "all") {
    target_ids = scene.target_ids();
  } else {
    std::istringstream in(args.targets);
    std::string cell;
    while (std::getline(in, cell, ',')) {
      target_ids.push_back(parse_int(cell, "targets"));
    }
  }

  fs::create_directories(args.out_dir);
  Json manifest;
  manifest["scene"] = args.scene;
  manifest["seed"] = args.seed;
  manifest["entries"] = Json::array();

  int failures = 0, attempts = 0;
  for (int target_id : target_ids) {
    const TargetSpec* goal = scene.find_target(target_id);
    if (!goal) throw DataError("target " + std::to_string(target_id) +
                               " not in scene");
    for (int rep = 0; rep < args.n_per_target; ++rep) {
      ++attempts;
      char name[64];
      std::snprintf(name, sizeof name, "traj_t%02d_r%02d.jsonl", target_id,
                    rep);
      fs::path out_path = fs::path(args.out_dir) / name;
      Json entry;
      entry["target"] = target_id;
      entry["repetition"] = rep;
      entry["file"] = std::string(name);
      try {
        Trajectory traj = synthesize_trajectory(
            *goal, scene, neutral_state(scene, hand_from_string(args.hand)),
            planner, value ? &*value : nullptr,
            derive_seed(args.seed, {static_cast<std::uint64_t>(target_id),
                                    static_cast<std::uint64_t>(rep)}));
        write_trajectory(traj, out_path.string());
        entry["status"] = "ok";
      } catch (const Error& e) {
        entry["status"] = "error";
        entry["error"] = e.what();
        ++failures;
      }
      manifest["entries"].push_back(entry);
    }
  }

  std::ofstream mf(fs::path(args.out_dir) / "manifest.json",
                   std::ios::binary);
  if (!mf) throw DataError("cannot write manifest in " + args.out_dir);
  mf << manifest.dump(2) << "\n";
  std::cout << "simulate: " << (attempts - failures) << "/" << attempts
            << " trajectories written to " << args.out_dir << "\n";
  if (attempts > 0 && failures == attempts) {
    throw NumericError("simulate: every plan failed");
  }
  return 0;
}

// --- infer ----------------------------------------------------------------

struct InferArgs {
  std::string scene;
  std::string trajectory;
  std::string model = "distance";
  std::string params_path;
  std::string fractions;
  std::string out;
  std::string value_path;
  std::uint64_t seed = 0;
};

int cmd_infer(const InferArgs& args) {
  SceneSpec scene = load_scene_arg(args.scene);
  Trajectory traj = parse_trajectory(args.trajectory);
  ModelId model = model_from_string(args.model);
  ModelParams params = args.params_path.empty()
                           ? ModelParams{}
                           : parse_model_params(args.params_path);
  std::optional<ValueEnsemble> value = maybe_load_value(args.value_path);
  Prior prior = uniform_prior(scene);

  std::string csv = "fraction,target_id,probability\n";
  auto emit_posterior = [&](double fraction, const Trajectory& prefix) {
    GoalPosterior post =
        infer(model, prefix, scene, params, prior,
              value ? &*value : nullptr, args.seed);
    for (const auto& [id, p] : post.probs) {
      csv += format_double(fraction) + ',' + std::to_string(id) + ',' +
             format_double(p) + '\n';
    }
  };

  if (args.fractions.empty()) {
    // Per-frame output: one posterior per prefix length.
    for (std::size_t i = 2; i <= traj.size(); ++i) {
      double fraction =
          static_cast<double>(i) / static_cast<double>(traj.size());
      emit_posterior(fraction, traj.prefix(i));
    }
  } else {
    for (double f : parse_fractions(args.fractions)) {
      emit_posterior(f, traj.prefix(prefix_length(traj.size(), f)));
    }
  }

  if (args.out.empty() || args.out == "-") {
    std::cout << csv;
  } else {
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw DataError("cannot write " + args.out);
    out << csv;
  }
  return 0;
}

// --- fit ------------------------------------------------------------------

struct FitArgs {
  std::string model = "distance";
  std::string responses;
  std::string data_dir;
  std::string mode = "responses";
  std::string out;
  std::string config_path;
  std::string value_path;
  std::uint64_t seed = 0;
};

DataStore load_data_dir(const std::string& dir) {
  DataStore store;
  fs::path scenes_dir = fs::path(dir) / "scenes";
  fs::path traj_dir = fs::path(dir) / "trajectories";
  if (!fs::is_directory(scenes_dir) || !fs::is_directory(traj_dir)) {
    throw DataError("data dir must contain scenes/ and trajectories/: " + dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(scenes_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    store.scenes[f.stem().string()] = parse_scene(f.string());
  }
  files.clear();
  for (const auto& entry : fs::directory_iterator(traj_dir)) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    store.trajectories[f.stem().string()] = parse_trajectory(f.string());
  }
  return store;
}

int cmd_fit(const FitArgs& args) {
  std::vector<ResponseRecord> dataset = parse_responses(args.responses);
  DataStore store = load_data_dir(args.data_dir);
  Json config = args.config_path.empty() ? default_config_json()
                                         : load_config(args.config_path);
  std::optional<ValueEnsemble> value = maybe_load_value(args.value_path);

  FitConfig fit_config;
  fit_config.mode = nll_mode_from_string(args.mode);
  const Json& nm = config["fitting"]["nelder_mead"];
  fit_config.nelder_mead.reflection = nm["reflection"].get<double>();
  fit_config.nelder_mead.expansion = nm["expansion"].get<double>();
  fit_config.nelder_mead.contraction = nm["contraction"].get<double>();
  fit_config.nelder_mead.shrink = nm["shrink"].get<double>();
  fit_config.nelder_mead.max_iters = nm["max_iters"].get<int>();
  fit_config.nelder_mead.tol = nm["tol"].get<double>();
  fit_config.nelder_mead.initial_step = nm["initial_step"].get<double>();
  const Json& ad = config["fitting"]["adam"];
  fit_config.adam.lr = ad["lr"].get<double>();
  fit_config.adam.beta_m = ad["beta_m"].get<double>();
  fit_config.adam.beta_v = ad["beta_v"].get<double>();
  fit_config.adam.eps = ad["eps"].get<double>();
  fit_config.adam.max_iters = ad["max_iters"].get<int>();
  fit_config.adam.tol = ad["tol"].get<double>();
  fit_config.seed = args.seed;
  fit_config.config_digest = config_digest(config);

  ModelParams initial =
      model_params_from_json(config["models"], "config.models");
  FitResult result =
      fit_model(model_from_string(args.model), initial, dataset, store,
                fit_config, value ? &*value : nullptr);
  write_fit_result(result, args.out);
  std::cout << "fit: " << args.model << " train_nll="
            << format_double(result.train_nll)
            << " test_nll=" << format_double(result.test_nll) << " evals="
            << result.n_evals << "\n";
  return 0;
}

// --- evaluate ---------------------------------------------------------- --

struct EvaluateArgs {
  std::string config_path;
  std::string out_stem = "metrics";
  std::uint64_t seed = 0;
  std::string value_path;
};

int cmd_evaluate(const EvaluateArgs& args) {
  Json config = load_config(args.config_path);
  const Json& exp = config["experiment"];

  DataStore store;
  ExperimentConfig cfg;
  cfg.seed = args.seed;
  cfg.sitting_shift = exp["sitting_shift"].get<double>();
  for (const auto& f : exp["stopping_fractions"]) {
    cfg.stopping_fractions.push_back(f.get<double>());
  }
  for (const auto& ref : exp["scenes"]) {
    std::string key = ref.get<std::string>();
    store.scenes[key] = load_scene_arg(key);
    cfg.scene_refs.push_back(key);
  }
  for (const auto& ref : exp["trajectories"]) {
    std::string key = ref.get<std::string>();
    store.trajectories[key] = parse_trajectory(key);
    cfg.trajectory_refs.push_back(key);
  }
  ModelParams params = model_params_from_json(config["models"], "config.models");
  std::map<std::string, ModelParams> params_store;
  params_store["config"] = params;
  for (const auto& m : exp["models"]) {
    cfg.models.emplace_back(model_from_string(m.get<std::string>()), "config");
  }
  std::optional<ValueEnsemble> value = maybe_load_value(args.value_path);

  MetricsTable table =
      run_experiment(cfg, store, params_store, value ? &*value : nullptr);
  std::vector<std::string> written = emit_report(
      table, {ReportFormat::csv, ReportFormat::svg}, args.out_stem);
  for (const auto& path : written) std::cout << "wrote " << path << "\n";
  return 0;
}

// --- train-value ------------------------------------------------------- --

struct TrainValueArgs {
  std::string scene;
  std::string out;
  std::uint64_t seed = 0;
  int iterations = 3;
  int rollouts = 16;
  double lr = 1e-3;
  std::string config_path;
};

int cmd_train_value(const TrainValueArgs& args) {
  SceneSpec scene = load_scene_arg(args.scene);
  Json config = args.config_path.empty() ? default_config_json()
                                         : load_config(args.config_path);
  PlannerParams planner = planner_from_config(config, scene.body);
  ValueTrainConfig train;
  train.iterations = args.iterations;
  train.rollouts_per_iteration = args.rollouts;
  train.learning_rate = args.lr;
  ValueEnsemble ensemble =
      train_value_ensemble(scene, planner, train, args.seed);
  ensemble.save(args.out);
  std::cout << "trained value ensemble written to " << args.out << "\n";
  return 0;
}

// --- make-scene ---------------------------------------------------------- -

int cmd_make_scene(const std::string& preset, const std::string& out) {
  SceneSpec scene = make_scene(condition_from_string(preset));
  write_scene(scene, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goal inference for 3D reaching actions"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "synthesize reaching trajectories with the planner");
  simulate->add_option("--scene", sim.scene,
                       "scene JSON path or preset name")->required();
  simulate->add_option("--targets", sim.targets,
                       "'all' or comma-separated target ids");
  simulate->add_option("--n-per-target", sim.n_per_target,
                       "repetitions per target");
  simulate->add_option("--seed", sim.seed, "rng seed")->required();
  simulate->add_option("--out-dir", sim.out_dir, "output directory")
      ->required();
  simulate->add_option("--config", sim.config_path, "config JSON");
  simulate->add_option("--value", sim.value_path, "value ensemble weights");
  simulate->add_option("--hand", sim.hand, "active hand (left|right)");

  InferArgs inf;
  CLI::App* infer_cmd = app.add_subcommand(
      "infer", "posterior over targets for a trajectory");
  infer_cmd->add_option("--scene", inf.scene, "scene JSON path or preset")
      ->required();
  infer_cmd->add_option("--trajectory", inf.trajectory, "trajectory JSONL")
      ->required();
  infer_cmd->add_option("--model", inf.model,
                        "distance|linh|paramh|bodygen");
  infer_cmd->add_option("--params", inf.params_path, "model params JSON");
  infer_cmd->add_option("--fractions", inf.fractions,
                        "comma-separated stopping fractions; omit for "
                        "per-frame output");
  infer_cmd->add_option("--out", inf.out, "output CSV path ('-' for stdout)");
  infer_cmd->add_option("--value", inf.value_path, "value ensemble weights");
  infer_cmd->add_option("--seed", inf.seed, "rng seed (bodygen)");

  FitArgs fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "maximum-likelihood parameter fit");
  fit_cmd->add_option("--model", fit.model, "model id")->required();
  fit_cmd->add_option("--responses", fit.responses, "responses CSV")
      ->required();
  fit_cmd->add_option("--data-dir", fit.data_dir,
                      "directory with scenes/ and trajectories/")
      ->required();
  fit_cmd->add_option("--mode", fit.mode, "responses|ground_truth");
  fit_cmd->add_option("--out", fit.out, "fit result JSON path")->required();
  fit_cmd->add_option("--config", fit.config_path, "config JSON");
  fit_cmd->add_option("--value", fit.value_path, "value ensemble weights");
  fit_cmd->add_option("--seed", fit.seed, "rng seed");

  EvaluateArgs ev;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "run the experiment pipeline");
  evaluate->add_option("--config", ev.config_path, "config JSON")->required();
  evaluate->add_option("--out-stem", ev.out_stem,
                       "output stem for .csv/.svg");
  evaluate->add_option("--seed", ev.seed, "rng seed")->required();
  evaluate->add_option("--value", ev.value_path, "value ensemble weights");

  TrainValueArgs tv;
  CLI::App* train_value = app.add_subcommand(
      "train-value", "train the MPPI terminal value ensemble");
  train_value->add_option("--scene", tv.scene, "scene JSON path or preset")
      ->required();
  train_value->add_option("--out", tv.out, "weights JSON path")->required();
  train_value->add_option("--seed", tv.seed, "rng seed")->required();
  train_value->add_option("--iterations", tv.iterations, "training iterations");
  train_value->add_option("--rollouts", tv.rollouts,
                          "rollouts per iteration");
  train_value->add_option("--lr", tv.lr, "learning rate");
  train_value->add_option("--config", tv.config_path, "config JSON");

  std::string ms_preset, ms_out;
  CLI::App* make_scene_cmd =
      app.add_subcommand("make-scene", "write a preset scene to JSON");
  make_scene_cmd->add_option("--preset", ms_preset,
                             "standing|sitting|obstacle")->required();
  make_scene_cmd->add_option("--out", ms_out, "scene JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (infer_cmd->parsed()) return cmd_infer(inf);
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (train_value->parsed()) return cmd_train_value(tv);
    if (make_scene_cmd->parsed()) return cmd_make_scene(ms_preset, ms_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
