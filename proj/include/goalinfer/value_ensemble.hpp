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

#ifndef GOALINFER_VALUE_ENSEMBLE_HPP_
#define GOALINFER_VALUE_ENSEMBLE_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "goalinfer/error.hpp"
#include "goalinfer/kinematics.hpp"
#include "goalinfer/planner.hpp"
#include "goalinfer/rng.hpp"

namespace goalinfer {

// Feature vector for the value network: joint positions, joint velocities,
// wrist position, goal position, and the wrist-to-goal offset.
inline Eigen::VectorXd value_features(const KinematicState& state,
                                      const Vec3& goal,
                                      const BodyProportions& body) {
  Eigen::VectorXd x(kNumDof * 2 + 9);
  int i = 0;
  for (int d = 0; d < kNumDof; ++d) x(i++) = state.dof(d);
  for (int d = 0; d < kNumDof; ++d) x(i++) = state.joint_velocities[d];
  Vec3 wrist = forward_kinematics(state, body).wrist;
  x(i++) = wrist.x;
  x(i++) = wrist.y;
  x(i++) = wrist.z;
  x(i++) = goal.x;
  x(i++) = goal.y;
  x(i++) = goal.z;
  x(i++) = goal.x - wrist.x;
  x(i++) = goal.y - wrist.y;
  x(i++) = goal.z - wrist.z;
  return x;
}

inline constexpr int kValueFeatureDim = kNumDof * 2 + 9;
inline constexpr int kEnsembleSize = 5;
inline constexpr int kHiddenUnits = 64;

namespace detail {

// Two hidden tanh layers of 64 units, scalar output.
struct Mlp {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2, w3;
  double b3 = 0.0;

  void init(Rng& rng, int input_dim) {
    auto fill = [&rng](Eigen::MatrixXd& m, double bound) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.uniform(-bound, bound);
      }
    };
    w1 = Eigen::MatrixXd(kHiddenUnits, input_dim);
    w2 = Eigen::MatrixXd(kHiddenUnits, kHiddenUnits);
    b1 = Eigen::VectorXd::Zero(kHiddenUnits);
    b2 = Eigen::VectorXd::Zero(kHiddenUnits);
    w3 = Eigen::VectorXd(kHiddenUnits);
    fill(w1, std::sqrt(6.0 / (input_dim + kHiddenUnits)));
    fill(w2, std::sqrt(6.0 / (2.0 * kHiddenUnits)));
    Eigen::MatrixXd w3m(kHiddenUnits, 1);
    fill(w3m, std::sqrt(6.0 / (kHiddenUnits + 1)));
    w3 = w3m.col(0);
    b3 = 0.0;
  }

  double forward(const Eigen::VectorXd& x) const {
    Eigen::VectorXd h1 = (w1 * x + b1).array().tanh();
    Eigen::VectorXd h2 = (w2 * h1 + b2).array().tanh();
    return w3.dot(h2) + b3;
  }
};

// Adam moments matching one Mlp.
struct MlpAdam {
  Eigen::MatrixXd m_w1, v_w1, m_w2, v_w2;
  Eigen::VectorXd m_b1, v_b1, m_b2, v_b2, m_w3, v_w3;
  double m_b3 = 0, v_b3 = 0;
  long step = 0;

  explicit MlpAdam(const Mlp& net)
      : m_w1(Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols())),
        v_w1(m_w1),
        m_w2(Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols())),
        v_w2(m_w2),
        m_b1(Eigen::VectorXd::Zero(net.b1.size())),
        v_b1(m_b1),
        m_b2(Eigen::VectorXd::Zero(net.b2.size())),
        v_b2(m_b2),
        m_w3(Eigen::VectorXd::Zero(net.w3.size())),
        v_w3(m_w3) {}
};

template <typename T>
void adam_update(T& param, T& m, T& v, const T& grad, double lr, long step) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  m = kBeta1 * m + (1.0 - kBeta1) * grad;
  v = (kBeta2 * v.array() + (1.0 - kBeta2) * grad.array().square()).matrix();
  double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  param.array() -=
      lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kEps);
}

inline void adam_update_scalar(double& param, double& m, double& v,
                               double grad, double lr, long step) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  m = kBeta1 * m + (1.0 - kBeta1) * grad;
  v = kBeta2 * v + (1.0 - kBeta2) * grad * grad;
  double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  param -= lr * (m / bc1) / (std::sqrt(v / bc2) + kEps);
}

}  // namespace detail

// Ensemble of exactly five independently initialized networks trained on
// bootstrap-resampled Monte-Carlo returns of planner rollouts. The mean
// prediction serves as the MPPI terminal value; the spread across networks
// measures disagreement.
class ValueEnsemble : public TerminalValue {
 public:
  explicit ValueEnsemble(std::uint64_t init_seed = 0) {
    nets_.resize(kEnsembleSize);
    for (int n = 0; n < kEnsembleSize; ++n) {
      Rng rng(derive_seed(init_seed, {0x76616Cu, static_cast<std::uint64_t>(n)}));
      nets_[n].init(rng, kValueFeatureDim);
    }
    feature_mean_ = Eigen::VectorXd::Zero(kValueFeatureDim);
    feature_std_ = Eigen::VectorXd::Ones(kValueFeatureDim);
    assert_architecture();
  }

  double value(const KinematicState& state,
               const Vec3& goal_position) const override {
    Eigen::VectorXd x = normalize(value_features(state, goal_position, body_));
    double sum = 0.0;
    for (const auto& net : nets_) sum += net.forward(x);
    return denorm_return(sum / kEnsembleSize);
  }

  // Mean prediction and the standard deviation across the five networks.
  std::pair<double, double> predict_with_disagreement(
      const KinematicState& state, const Vec3& goal_position) const {
    Eigen::VectorXd x = normalize(value_features(state, goal_position, body_));
    double raw[kEnsembleSize];
    double mean = 0.0;
    for (int n = 0; n < kEnsembleSize; ++n) {
      raw[n] = denorm_return(nets_[n].forward(x));
      mean += raw[n];
    }
    mean /= kEnsembleSize;
    double var = 0.0;
    for (double r : raw) var += (r - mean) * (r - mean);
    return {mean, std::sqrt(var / kEnsembleSize)};
  }

  // Per network: raw-unit MSE on the accumulated dataset. The first entry
  // is the untrained baseline; one entry follows per training iteration.
  const std::vector<std::vector<double>>& training_losses() const {
    return losses_;
  }

  void set_body(const BodyProportions& body) { body_ = body; }

  void save(const std::string& path) const {
    nlohmann::ordered_json doc;
    doc["format"] = "goalinfer-value-ensemble";
    doc["version"] = 1;
    doc["feature_dim"] = kValueFeatureDim;
    doc["hidden_units"] = kHiddenUnits;
    doc["n_networks"] = kEnsembleSize;
    doc["activation"] = "tanh";
    doc["feature_mean"] = to_vec(feature_mean_);
    doc["feature_std"] = to_vec(feature_std_);
    doc["return_mean"] = return_mean_;
    doc["return_std"] = return_std_;
    doc["networks"] = nlohmann::json::array();
    for (const auto& net : nets_) {
      nlohmann::ordered_json j;
      j["w1_shape"] = {net.w1.rows(), net.w1.cols()};
      j["w1"] = to_vec_rowmajor(net.w1);
      j["b1"] = to_vec(net.b1);
      j["w2_shape"] = {net.w2.rows(), net.w2.cols()};
      j["w2"] = to_vec_rowmajor(net.w2);
      j["b2"] = to_vec(net.b2);
      j["w3"] = to_vec(net.w3);
      j["b3"] = net.b3;
      doc["networks"].push_back(j);
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write value ensemble file: " + path);
    out << doc.dump(2) << "\n";
  }

  static ValueEnsemble load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open value ensemble file: " + path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("value ensemble file " + path + ": " + e.what());
    }
    if (!doc.contains("version")) {
      throw DataError("value ensemble file " + path + ": missing version");
    }
    if (doc["version"].get<int>() != 1) {
      throw DataError("value ensemble file " + path +
                      ": unsupported version");
    }
    if (doc["n_networks"].get<int>() != kEnsembleSize ||
        doc["hidden_units"].get<int>() != kHiddenUnits ||
        doc["feature_dim"].get<int>() != kValueFeatureDim) {
      throw DataError("value ensemble file " + path +
                      ": architecture mismatch");
    }
    ValueEnsemble e;
    e.feature_mean_ = from_vec(doc["feature_mean"]);
    e.feature_std_ = from_vec(doc["feature_std"]);
    e.return_mean_ = doc["return_mean"].get<double>();
    e.return_std_ = doc["return_std"].get<double>();
    const auto& nets = doc["networks"];
    if (nets.size() != kEnsembleSize) {
      throw DataError("value ensemble file " + path + ": expected " +
                      std::to_string(kEnsembleSize) + " networks");
    }
    for (int n = 0; n < kEnsembleSize; ++n) {
      auto& net = e.nets_[n];
      const auto& j = nets[n];
      net.w1 = from_vec_rowmajor(j["w1"], j["w1_shape"][0], j["w1_shape"][1]);
      net.b1 = from_vec(j["b1"]);
      net.w2 = from_vec_rowmajor(j["w2"], j["w2_shape"][0], j["w2_shape"][1]);
      net.b2 = from_vec(j["b2"]);
      net.w3 = from_vec(j["w3"]);
      net.b3 = j["b3"].get<double>();
    }
    e.assert_architecture();
    return e;
  }

  // Internal training hooks (used by train_value_ensemble).
  std::vector<detail::Mlp>& nets() { return nets_; }
  Eigen::VectorXd& feature_mean() { return feature_mean_; }
  Eigen::VectorXd& feature_std() { return feature_std_; }
  double& return_mean() { return return_mean_; }
  double& return_std() { return return_std_; }
  std::vector<std::vector<double>>& losses() { return losses_; }

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
    return ((x - feature_mean_).array() / feature_std_.array()).matrix();
  }
  double denorm_return(double y) const {
    return y * return_std_ + return_mean_;
  }

 private:
  void assert_architecture() const {
    if (nets_.size() != kEnsembleSize) {
      throw DataError("value ensemble must hold exactly 5 networks");
    }
    for (const auto& net : nets_) {
      if (net.w1.rows() != kHiddenUnits || net.w2.rows() != kHiddenUnits ||
          net.w2.cols() != kHiddenUnits || net.w3.size() != kHiddenUnits) {
        throw DataError("value network must be 2 hidden layers of 64 units");
      }
    }
  }

  static std::vector<double> to_vec(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
  }
  static std::vector<double> to_vec_rowmajor(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
  }
  static Eigen::VectorXd from_vec(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
  }
  static Eigen::MatrixXd from_vec_rowmajor(const nlohmann::json& j, int rows,
                                           int cols) {
    if (static_cast<int>(j.size()) != rows * cols) {
      throw DataError("value ensemble file: weight size mismatch");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = j[i++].get<double>();
    }
    return m;
  }

  std::vector<detail::Mlp> nets_;
  Eigen::VectorXd feature_mean_, feature_std_;
  double return_mean_ = 0.0, return_std_ = 1.0;
  std::vector<std::vector<double>> losses_;
  BodyProportions body_ = default_body();
};

struct ValueTrainConfig {
  int iterations = 3;
  int rollouts_per_iteration = 16;
  double learning_rate = 3e-3;
  int epochs_per_iteration = 60;
  int minibatch = 64;
  // Discount on the Monte-Carlo return-to-go. Undiscounted returns mix the
  // remaining-rollout length into the target and regress poorly.
  double return_discount = 0.9;
};

// Discounted return-to-go of every visited state of a rollout.
inline std::vector<double> discounted_returns(const PlanRollout& rollout,
                                              double discount) {
  std::vector<double> rtg(rollout.per_step_utility.size() + 1, 0.0);
  for (int i = static_cast<int>(rollout.per_step_utility.size()) - 1; i >= 0;
       --i) {
    rtg[i] = rollout.per_step_utility[i] + discount * rtg[i + 1];
  }
  return rtg;
}

// Fits the ensemble to Monte-Carlo returns of MPPI rollouts from randomized
// start states and goals. Later iterations plan with the partially trained
// ensemble as terminal value, improving the data distribution. Networks
// differ through their initialization and a bootstrap resample of the data.
inline ValueEnsemble train_value_ensemble(const SceneSpec& scene,
                                          const PlannerParams& params,
                                          const ValueTrainConfig& config,
                                          std::uint64_t rng_seed) {
  ValueEnsemble ensemble(derive_seed(rng_seed, {0x696e6974u}));
  ensemble.set_body(scene.body);
  if (config.iterations <= 0) return ensemble;
  ensemble.losses().assign(kEnsembleSize, {});

  std::vector<Eigen::VectorXd> features;
  std::vector<double> returns;

  for (int iter = 0; iter < config.iterations; ++iter) {
    // Collect rollouts from random contact-free starts and goals.
    for (int r = 0; r < config.rollouts_per_iteration; ++r) {
      Rng rng(derive_seed(rng_seed, {0x726f6cu, static_cast<std::uint64_t>(iter),
                                     static_cast<std::uint64_t>(r)}));
      KinematicState start = neutral_state(scene);
      for (int attempt = 0; attempt < 20; ++attempt) {
        KinematicState candidate = neutral_state(scene);
        candidate.base_x += rng.uniform(-0.15, 0.15);
        candidate.base_y += rng.uniform(-0.15, 0.15);
        for (int d = kTorsoPitch; d < kNumDof; ++d) {
          const auto& lim = scene.body.joint_limits[d];
          candidate.set_dof(d, std::clamp(candidate.dof(d) +
                                              rng.uniform(-0.4, 0.4),
                                          lim.min, lim.max));
        }
        clamp_to_limits(candidate, scene.body);
        if (contact_penalty(candidate, scene.body, scene) == 0.0) {
          start = candidate;
          break;
        }
      }
      const TargetSpec& goal =
          scene.targets[rng.below(scene.targets.size())];
      PlanRollout rollout =
          plan(goal, scene, start, params, iter > 0 ? &ensemble : nullptr,
               derive_seed(rng_seed, {0x706c616eu,
                                      static_cast<std::uint64_t>(iter),
                                      static_cast<std::uint64_t>(r)}));
      std::vector<double> rtg =
          discounted_returns(rollout, config.return_discount);
      for (std::size_t i = 0; i < rollout.states.size(); ++i) {
        features.push_back(
            value_features(rollout.states[i], goal.position, scene.body));
        returns.push_back(rtg[i]);
      }
    }
    if (features.empty()) continue;

    // Refresh normalization over all accumulated data.
    const std::size_t n = features.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kValueFeatureDim);
    for (const auto& x : features) mean += x;
    mean /= static_cast<double>(n);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(kValueFeatureDim);
    for (const auto& x : features) var += (x - mean).array().square().matrix();
    var /= static_cast<double>(n);
    ensemble.feature_mean() = mean;
    ensemble.feature_std() =
        (var.array().sqrt() + 1e-8).matrix();
    double rmean = 0.0;
    for (double r : returns) rmean += r;
    rmean /= static_cast<double>(n);
    double rvar = 0.0;
    for (double r : returns) rvar += (r - rmean) * (r - rmean);
    ensemble.return_mean() = rmean;
    ensemble.return_std() = std::sqrt(rvar / static_cast<double>(n)) + 1e-8;

    Eigen::MatrixXd x_all(kValueFeatureDim, n);
    Eigen::VectorXd y_all(n);
    for (std::size_t i = 0; i < n; ++i) {
      x_all.col(i) = ensemble.normalize(features[i]);
      y_all(i) = (returns[i] - rmean) / ensemble.return_std();
    }

    auto dataset_mse = [&](const detail::Mlp& net) {
      double mse = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double err = ensemble.denorm_return(net.forward(x_all.col(i))) -
                     returns[i];
        mse += err * err;
      }
      return mse / static_cast<double>(n);
    };
    if (iter == 0) {
      for (int net_i = 0; net_i < kEnsembleSize; ++net_i) {
        ensemble.losses()[net_i].push_back(
            dataset_mse(ensemble.nets()[net_i]));
      }
    }

    for (int net_i = 0; net_i < kEnsembleSize; ++net_i) {
      auto& net = ensemble.nets()[net_i];
      detail::MlpAdam adam(net);
      Rng rng(derive_seed(rng_seed, {0x747261696eu,
                                     static_cast<std::uint64_t>(iter),
                                     static_cast<std::uint64_t>(net_i)}));
      // Bootstrap resample.
      std::vector<std::size_t> sample(n);
      for (std::size_t i = 0; i < n; ++i) sample[i] = rng.below(n);

      double epoch_loss = 0.0;
      for (int epoch = 0; epoch < config.epochs_per_iteration; ++epoch) {
        epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t ofs = 0; ofs < n;
             ofs += static_cast<std::size_t>(config.minibatch)) {
          std::size_t bn = std::min<std::size_t>(config.minibatch, n - ofs);
          Eigen::MatrixXd xb(kValueFeatureDim, bn);
          Eigen::VectorXd yb(bn);
          for (std::size_t i = 0; i < bn; ++i) {
            xb.col(i) = x_all.col(sample[ofs + i]);
            yb(i) = y_all(sample[ofs + i]);
          }
          // Forward.
          Eigen::MatrixXd h1 =
              ((net.w1 * xb).colwise() + net.b1).array().tanh();
          Eigen::MatrixXd h2 =
              ((net.w2 * h1).colwise() + net.b2).array().tanh();
          Eigen::VectorXd pred =
              (net.w3.transpose() * h2).transpose().array() + net.b3;
          Eigen::VectorXd err = pred - yb;
          double loss = err.squaredNorm() / static_cast<double>(bn);
          if (!std::isfinite(loss)) {
            throw NumericError("value ensemble training diverged");
          }
          epoch_loss += loss;
          ++batches;
          // Backward.
          double scale = 2.0 / static_cast<double>(bn);
          Eigen::VectorXd g_b3v = err * scale;
          Eigen::VectorXd g_w3 = h2 * g_b3v;
          Eigen::MatrixXd g_h2 = net.w3 * g_b3v.transpose();
          Eigen::MatrixXd d2 = g_h2.array() * (1.0 - h2.array().square());
          Eigen::VectorXd g_b2 = d2.rowwise().sum();
          Eigen::MatrixXd g_w2 = d2 * h1.transpose();
          Eigen::MatrixXd g_h1 = net.w2.transpose() * d2;
          Eigen::MatrixXd d1 = g_h1.array() * (1.0 - h1.array().square());
          Eigen::VectorXd g_b1 = d1.rowwise().sum();
          Eigen::MatrixXd g_w1 = d1 * xb.transpose();
          double g_b3 = g_b3v.sum();

          ++adam.step;
          detail::adam_update(net.w1, adam.m_w1, adam.v_w1, g_w1,
                              config.learning_rate, adam.step);
          detail::adam_update(net.b1, adam.m_b1, adam.v_b1, g_b1,
                              config.learning_rate, adam.step);
          detail::adam_update(net.w2, adam.m_w2, adam.v_w2, g_w2,
                              config.learning_rate, adam.step);
          detail::adam_update(net.b2, adam.m_b2, adam.v_b2, g_b2,
                              config.learning_rate, adam.step);
          detail::adam_update(net.w3, adam.m_w3, adam.v_w3, g_w3,
                              config.learning_rate, adam.step);
          detail::adam_update_scalar(net.b3, adam.m_b3, adam.v_b3, g_b3,
                                     config.learning_rate, adam.step);
        }
        epoch_loss /= static_cast<double>(batches);
      }
      (void)epoch_loss;
      ensemble.losses()[net_i].push_back(dataset_mse(net));
    }
  }
  return ensemble;
}

}  // namespace goalinfer

#endif  // GOALINFER_VALUE_ENSEMBLE_HPP_
