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

#ifndef GOALINFER_IO_HPP_
#define GOALINFER_IO_HPP_

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "goalinfer/error.hpp"
#include "goalinfer/fitting.hpp"
#include "goalinfer/models.hpp"
#include "goalinfer/numfmt.hpp"
#include "goalinfer/types.hpp"

namespace goalinfer {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const std::string& key,
                           const std::string& path) {
  if (!j.contains(key)) {
    throw DataError(path + ": missing field '" + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const std::string& key, const std::string& path) {
  try {
    return require(j, key, path).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const std::string& key, const T& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

inline Vec3 vec3_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw DataError(path + ": expected [x, y, z]");
  }
  Vec3 v{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  if (!v.finite()) throw DataError(path + ": non-finite coordinates");
  return v;
}

inline Json vec3_to(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Scene JSON
// ---------------------------------------------------------------------------

inline Json body_to_json(const BodyProportions& b) {
  Json j;
  j["torso_length"] = b.torso_length;
  j["upper_arm_length"] = b.upper_arm_length;
  j["forearm_length"] = b.forearm_length;
  j["shoulder_width"] = b.shoulder_width;
  j["head_offset"] = b.head_offset;
  j["capsule_radius"] = b.capsule_radius;
  Json limits, speeds, weights;
  for (int d = 0; d < kNumDof; ++d) {
    const std::string& name = dof_names()[d];
    limits[name] = Json::array({b.joint_limits[d].min, b.joint_limits[d].max});
    speeds[name] = b.max_joint_speed[d];
    weights[name] = b.energy_weights[d];
  }
  j["joint_limits"] = limits;
  j["max_joint_speed"] = speeds;
  j["energy_weights"] = weights;
  j["max_base_speed"] = b.max_base_speed;
  return j;
}

inline BodyProportions body_from_json(const Json& j, const std::string& path) {
  BodyProportions b = default_body();
  b.torso_length = detail::get_or(j, "torso_length", b.torso_length);
  b.upper_arm_length = detail::get_or(j, "upper_arm_length", b.upper_arm_length);
  b.forearm_length = detail::get_or(j, "forearm_length", b.forearm_length);
  b.shoulder_width = detail::get_or(j, "shoulder_width", b.shoulder_width);
  b.head_offset = detail::get_or(j, "head_offset", b.head_offset);
  b.capsule_radius = detail::get_or(j, "capsule_radius", b.capsule_radius);
  b.max_base_speed = detail::get_or(j, "max_base_speed", b.max_base_speed);
  if (j.contains("joint_limits")) {
    for (int d = 0; d < kNumDof; ++d) {
      const std::string& name = dof_names()[d];
      if (j["joint_limits"].contains(name)) {
        const auto& lim = j["joint_limits"][name];
        if (!lim.is_array() || lim.size() != 2) {
          throw DataError(path + ".joint_limits." + name +
                          ": expected [min, max]");
        }
        b.joint_limits[d] = {lim[0].get<double>(), lim[1].get<double>()};
      }
    }
  }
  if (j.contains("max_joint_speed")) {
    for (int d = 0; d < kNumDof; ++d) {
      const std::string& name = dof_names()[d];
      if (j["max_joint_speed"].contains(name)) {
        b.max_joint_speed[d] = j["max_joint_speed"][name].get<double>();
      }
    }
  }
  if (j.contains("energy_weights")) {
    for (int d = 0; d < kNumDof; ++d) {
      const std::string& name = dof_names()[d];
      if (j["energy_weights"].contains(name)) {
        b.energy_weights[d] = j["energy_weights"][name].get<double>();
      }
    }
  }
  b.max_joint_speed[kBaseX] = b.max_base_speed;
  b.max_joint_speed[kBaseY] = b.max_base_speed;
  return b;
}

inline Json scene_to_json(const SceneSpec& scene) {
  Json j;
  j["condition_tag"] = to_string(scene.condition_tag);
  j["table_height"] = scene.table_height;
  j["table_bounds"] = {{"min", detail::vec3_to(scene.table_min)},
                       {"max", detail::vec3_to(scene.table_max)}};
  j["actor_base"] = detail::vec3_to(scene.actor_base);
  j["targets"] = Json::array();
  for (const auto& t : scene.targets) {
    j["targets"].push_back(
        {{"id", t.id}, {"position", detail::vec3_to(t.position)}});
  }
  j["obstacles"] = Json::array();
  for (const auto& o : scene.obstacles) {
    j["obstacles"].push_back({{"kind", "box"},
                              {"center", detail::vec3_to(o.center)},
                              {"half_extents", detail::vec3_to(o.half_extents)}});
  }
  j["body"] = body_to_json(scene.body);
  return j;
}

inline SceneSpec scene_from_json(const Json& j, const std::string& path) {
  SceneSpec scene;
  scene.condition_tag = condition_from_string(
      detail::get_or<std::string>(j, "condition_tag", "custom"));
  scene.table_height = detail::get_as<double>(j, "table_height", path);
  const Json& bounds = detail::require(j, "table_bounds", path);
  scene.table_min =
      detail::vec3_from(detail::require(bounds, "min", path + ".table_bounds"),
                        path + ".table_bounds.min");
  scene.table_max =
      detail::vec3_from(detail::require(bounds, "max", path + ".table_bounds"),
                        path + ".table_bounds.max");
  scene.actor_base = detail::vec3_from(
      detail::require(j, "actor_base", path), path + ".actor_base");
  const Json& targets = detail::require(j, "targets", path);
  if (!targets.is_array()) throw DataError(path + ".targets: expected array");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string tpath = path + ".targets[" + std::to_string(i) + "]";
    TargetSpec t;
    t.id = detail::get_as<int>(targets[i], "id", tpath);
    t.position = detail::vec3_from(
        detail::require(targets[i], "position", tpath), tpath + ".position");
    scene.targets.push_back(t);
  }
  if (j.contains("obstacles")) {
    const Json& obstacles = j["obstacles"];
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const std::string opath = path + ".obstacles[" + std::to_string(i) + "]";
      std::string kind = detail::get_as<std::string>(obstacles[i], "kind", opath);
      if (kind != "box") throw DataError(opath + ": unknown obstacle kind");
      ObstacleSpec o;
      o.center = detail::vec3_from(
          detail::require(obstacles[i], "center", opath), opath + ".center");
      o.half_extents = detail::vec3_from(
          detail::require(obstacles[i], "half_extents", opath),
          opath + ".half_extents");
      scene.obstacles.push_back(o);
    }
  }
  if (j.contains("body")) {
    scene.body = body_from_json(j["body"], path + ".body");
  }
  validate(scene);
  return scene;
}

inline SceneSpec parse_scene(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw DataError("cannot open scene file: " + file_path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("scene file " + file_path + ": " + e.what());
  }
  return scene_from_json(j, file_path);
}

inline void write_scene(const SceneSpec& scene, const std::string& file_path) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw DataError("cannot write scene file: " + file_path);
  out << scene_to_json(scene).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Trajectory JSONL: a header line, then one frame per line.
// ---------------------------------------------------------------------------

inline std::string trajectory_to_jsonl(const Trajectory& traj) {
  Json header;
  header["actor_id"] = traj.actor_id;
  if (traj.true_target) {
    header["true_target"] = *traj.true_target;
  } else {
    header["true_target"] = nullptr;
  }
  if (traj.active_hand) {
    header["active_hand"] = to_string(*traj.active_hand);
  } else {
    header["active_hand"] = nullptr;
  }
  std::string out = header.dump() + "\n";
  for (const auto& f : traj.frames) {
    Json line;
    line["t"] = f.t;
    Json joints;
    for (const auto& [name, p] : f.joints) {
      joints[name] = detail::vec3_to(p);
    }
    line["joints"] = joints;
    out += line.dump() + "\n";
  }
  return out;
}

inline Trajectory trajectory_from_jsonl(std::istream& in,
                                        const std::string& what) {
  Trajectory traj;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(what + " line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    const std::string lpath = what + " line " + std::to_string(line_no);
    if (!have_header) {
      traj.actor_id = detail::get_or<std::string>(j, "actor_id", "");
      if (j.contains("true_target") && !j["true_target"].is_null()) {
        traj.true_target = j["true_target"].get<int>();
      }
      if (j.contains("active_hand") && !j["active_hand"].is_null()) {
        traj.active_hand = hand_from_string(j["active_hand"].get<std::string>());
      }
      have_header = true;
      continue;
    }
    SkeletonFrame f;
    f.t = detail::get_as<double>(j, "t", lpath);
    const Json& joints = detail::require(j, "joints", lpath);
    if (!joints.is_object()) {
      throw DataError(lpath + ".joints: expected object");
    }
    for (const auto& [name, v] : joints.items()) {
      f.joints[name] = detail::vec3_from(v, lpath + ".joints." + name);
    }
    traj.frames.push_back(std::move(f));
  }
  if (!have_header) throw DataError(what + ": empty trajectory file");
  validate(traj);
  return traj;
}

inline Trajectory parse_trajectory(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw DataError("cannot open trajectory file: " + file_path);
  return trajectory_from_jsonl(in, file_path);
}

inline void write_trajectory(const Trajectory& traj,
                             const std::string& file_path) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw DataError("cannot write trajectory file: " + file_path);
  out << trajectory_to_jsonl(traj);
}

// ---------------------------------------------------------------------------
// Model parameters JSON, keyed by model id
// ---------------------------------------------------------------------------

inline Json planner_to_json(const PlannerParams& p) {
  Json j;
  j["p1"] = p.p1;
  j["p2"] = p.p2;
  j["p3"] = p.p3;
  j["p4"] = p.p4;
  j["horizon_H"] = p.horizon_H;
  j["samples_K"] = p.samples_K;
  j["temperature_lambda"] = p.temperature_lambda;
  bool has_sigma = false;
  for (double s : p.noise_sigma) {
    if (s > 0) has_sigma = true;
  }
  if (has_sigma) {
    j["noise_sigma"] = std::vector<double>(p.noise_sigma.begin(),
                                           p.noise_sigma.end());
  } else {
    j["noise_sigma"] = nullptr;  // resolved from the scene body
  }
  j["dt"] = p.dt;
  j["max_steps"] = p.max_steps;
  j["stop_radius"] = p.stop_radius;
  j["nominal_decay"] = p.nominal_decay;
  return j;
}

inline PlannerParams planner_from_json(const Json& j, const std::string& path) {
  PlannerParams p;
  p.p1 = detail::get_or(j, "p1", p.p1);
  p.p2 = detail::get_or(j, "p2", p.p2);
  p.p3 = detail::get_or(j, "p3", p.p3);
  p.p4 = detail::get_or(j, "p4", p.p4);
  p.horizon_H = detail::get_or(j, "horizon_H", p.horizon_H);
  p.samples_K = detail::get_or(j, "samples_K", p.samples_K);
  p.temperature_lambda =
      detail::get_or(j, "temperature_lambda", p.temperature_lambda);
  if (j.contains("noise_sigma") && !j["noise_sigma"].is_null()) {
    const auto& sigma = j["noise_sigma"];
    if (!sigma.is_array() || sigma.size() != kNumDof) {
      throw DataError(path + ".noise_sigma: expected " +
                      std::to_string(kNumDof) + " values");
    }
    for (int d = 0; d < kNumDof; ++d) p.noise_sigma[d] = sigma[d].get<double>();
  }
  p.dt = detail::get_or(j, "dt", p.dt);
  p.max_steps = detail::get_or(j, "max_steps", p.max_steps);
  p.stop_radius = detail::get_or(j, "stop_radius", p.stop_radius);
  p.nominal_decay = detail::get_or(j, "nominal_decay", p.nominal_decay);
  return p;
}

inline Json model_params_to_json(const ModelParams& p) {
  Json j;
  j["distance"] = {{"theta", p.distance.theta}};
  j["linh"] = {{"beta1", p.linh.beta1},
               {"h1", p.linh.h1},
               {"alpha1", p.linh.alpha1},
               {"forward_only", p.linh.forward_only}};
  j["paramh"] = {{"beta2", p.paramh.beta2},
                 {"h2", p.paramh.h2},
                 {"alpha2", p.paramh.alpha2},
                 {"forward_only", p.paramh.forward_only}};
  Json bodygen;
  bodygen["beta3"] = p.bodygen.beta3;
  bodygen["q"] = p.bodygen.q;
  bodygen["n_runs"] = p.bodygen.n_runs;
  bodygen["ik_residual_limit"] = p.bodygen.ik_residual_limit;
  bodygen["plan_align_factor"] = p.bodygen.plan_align_factor;
  bodygen["planner"] = planner_to_json(p.bodygen.planner);
  j["bodygen"] = bodygen;
  return j;
}

inline ModelParams model_params_from_json(const Json& j,
                                          const std::string& path) {
  ModelParams p;
  if (j.contains("distance")) {
    p.distance.theta = detail::get_or(j["distance"], "theta", p.distance.theta);
  }
  if (j.contains("linh")) {
    const Json& l = j["linh"];
    p.linh.beta1 = detail::get_or(l, "beta1", p.linh.beta1);
    p.linh.h1 = detail::get_or(l, "h1", p.linh.h1);
    p.linh.alpha1 = detail::get_or(l, "alpha1", p.linh.alpha1);
    p.linh.forward_only = detail::get_or(l, "forward_only", p.linh.forward_only);
  }
  if (j.contains("paramh")) {
    const Json& q = j["paramh"];
    p.paramh.beta2 = detail::get_or(q, "beta2", p.paramh.beta2);
    p.paramh.h2 = detail::get_or(q, "h2", p.paramh.h2);
    p.paramh.alpha2 = detail::get_or(q, "alpha2", p.paramh.alpha2);
    p.paramh.forward_only =
        detail::get_or(q, "forward_only", p.paramh.forward_only);
  }
  if (j.contains("bodygen")) {
    const Json& b = j["bodygen"];
    p.bodygen.beta3 = detail::get_or(b, "beta3", p.bodygen.beta3);
    p.bodygen.q = detail::get_or(b, "q", p.bodygen.q);
    p.bodygen.n_runs = detail::get_or(b, "n_runs", p.bodygen.n_runs);
    p.bodygen.ik_residual_limit =
        detail::get_or(b, "ik_residual_limit", p.bodygen.ik_residual_limit);
    p.bodygen.plan_align_factor =
        detail::get_or(b, "plan_align_factor", p.bodygen.plan_align_factor);
    if (b.contains("planner")) {
      p.bodygen.planner =
          planner_from_json(b["planner"], path + ".bodygen.planner");
    }
  }
  return p;
}

inline ModelParams parse_model_params(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw DataError("cannot open params file: " + file_path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("params file " + file_path + ": " + e.what());
  }
  return model_params_from_json(j, file_path);
}

inline void write_model_params(const ModelParams& p,
                               const std::string& file_path) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw DataError("cannot write params file: " + file_path);
  out << model_params_to_json(p).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Response records CSV
// ---------------------------------------------------------------------------

inline const std::string kResponsesHeader =
    "subject_id,trial_id,condition,stopping_fraction,chosen_target,"
    "true_target,trajectory_ref";

inline std::string responses_to_csv(const std::vector<ResponseRecord>& records) {
  std::string out = kResponsesHeader + "\n";
  for (const auto& r : records) {
    out += r.subject_id + ',' + r.trial_id + ',' + r.condition + ',' +
           format_double(r.stopping_fraction) + ',' +
           std::to_string(r.chosen_target) + ',' +
           std::to_string(r.true_target) + ',' + r.trajectory_ref + '\n';
  }
  return out;
}

inline std::vector<ResponseRecord> responses_from_csv(std::istream& in,
                                                      const std::string& what) {
  std::vector<ResponseRecord> records;
  std::string line;
  if (!std::getline(in, line)) throw DataError(what + ": empty file");
  if (line != kResponsesHeader) {
    throw DataError(what + " line 1: expected header '" + kResponsesHeader +
                    "'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw DataError(what + " line " + std::to_string(line_no) +
                      ": expected 7 columns, got " +
                      std::to_string(cells.size()));
    }
    const std::string lwhat = what + " line " + std::to_string(line_no);
    ResponseRecord r;
    r.subject_id = cells[0];
    r.trial_id = cells[1];
    r.condition = cells[2];
    r.stopping_fraction = parse_double(cells[3], lwhat);
    r.chosen_target = parse_int(cells[4], lwhat);
    r.true_target = parse_int(cells[5], lwhat);
    r.trajectory_ref = cells[6];
    if (!(r.stopping_fraction > 0 && r.stopping_fraction <= 1)) {
      throw DataError(lwhat + ": stopping_fraction must be in (0, 1]");
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<ResponseRecord> parse_responses(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw DataError("cannot open responses file: " + file_path);
  return responses_from_csv(in, file_path);
}

// ---------------------------------------------------------------------------
// FitResult JSON
// ---------------------------------------------------------------------------

inline Json fit_result_to_json(const FitResult& r) {
  Json j;
  j["model"] = to_string(r.model);
  j["params"] = model_params_to_json(r.params);
  j["train_nll"] = r.train_nll;
  if (std::isnan(r.test_nll)) {
    j["test_nll"] = nullptr;
  } else {
    j["test_nll"] = r.test_nll;
  }
  j["n_evals"] = r.n_evals;
  j["converged"] = r.converged;
  j["config_digest"] = r.config_digest;
  j["split"] = {
      {"train", std::vector<int>(r.split.train.begin(), r.split.train.end())},
      {"test", std::vector<int>(r.split.test.begin(), r.split.test.end())}};
  return j;
}

inline void write_fit_result(const FitResult& r, const std::string& file_path) {
  std::ofstream out(file_path, std::ios::binary);
  if (!out) throw DataError("cannot write fit result: " + file_path);
  out << fit_result_to_json(r).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Config file: every tunable with its default; unknown keys rejected.
// ---------------------------------------------------------------------------

inline constexpr int kSpecVersion = 1;

inline Json stopping_fractions_exp2_json() {
  return Json::array({0.35, 0.45, 0.55, 0.65, 0.75});
}

inline Json default_config_json() {
  Json j;
  j["spec_version"] = kSpecVersion;
  j["scene"] = {{"preset", "standing"},
                {"file", nullptr}};
  j["planner"] = planner_to_json(PlannerParams{});
  j["models"] = model_params_to_json(ModelParams{});
  j["fitting"] = {{"mode", "responses"},
                  {"nelder_mead",
                   {{"reflection", 1.0},
                    {"expansion", 2.0},
                    {"contraction", 0.5},
                    {"shrink", 0.5},
                    {"max_iters", 60},
                    {"tol", 0.5},
                    {"initial_step", 2.0}}},
                  {"adam",
                   {{"lr", 0.05},
                    {"beta_m", 0.9},
                    {"beta_v", 0.999},
                    {"eps", 1e-8},
                    {"max_iters", 2000},
                    {"tol", 1e-9}}}};
  j["experiment"] = {{"scenes", Json::array()},
                     {"trajectories", Json::array()},
                     {"models", Json::array({"distance"})},
                     {"stopping_fractions", stopping_fractions_exp2_json()},
                     {"sitting_shift", 0.10}};
  return j;
}

// Recursively verifies that every key in `given` exists in `defaults`.
inline void reject_unknown_keys(const Json& given, const Json& defaults,
                                const std::string& path) {
  if (!given.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    if (!defaults.is_object() || !defaults.contains(key)) {
      throw DataError("config: unknown key '" + path + key + "'");
    }
    if (value.is_object() && defaults.at(key).is_object()) {
      reject_unknown_keys(value, defaults.at(key), path + key + ".");
    }
  }
}

// Overlays user values on the defaults (objects merge, scalars replace).
inline Json merge_config(const Json& defaults, const Json& given) {
  Json merged = defaults;
  for (const auto& [key, value] : given.items()) {
    if (value.is_object() && merged.contains(key) &&
        merged.at(key).is_object()) {
      merged[key] = merge_config(merged.at(key), value);
    } else {
      merged[key] = value;
    }
  }
  return merged;
}

inline Json load_config(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw DataError("cannot open config file: " + file_path);
  Json given;
  try {
    in >> given;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + file_path + ": " + e.what());
  }
  Json defaults = default_config_json();
  reject_unknown_keys(given, defaults, "");
  if (given.contains("spec_version") &&
      given["spec_version"].get<int>() != kSpecVersion) {
    throw DataError("config file " + file_path + ": unsupported spec_version");
  }
  return merge_config(defaults, given);
}

// FNV-1a digest of a canonical dump, echoed into fit results.
inline std::string config_digest(const Json& config) {
  std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace goalinfer

#endif  // GOALINFER_IO_HPP_
