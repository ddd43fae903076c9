// Copyright 2026 The Forge Authors
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

#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace forge {

enum class SpeedKind { Log, Power };

/// f in the speed reward: natural log, or x^alpha.
struct SpeedFn {
  SpeedKind kind = SpeedKind::Log;
  double alpha = 1.0;
};

struct RewardParams {
  double tau = 5.0;      // log-sum-exp temperature over incorrect outputs
  double lambda = 0.1;   // weight temperature over correct outputs
  double beta = 100.0;   // KL penalty scale
  double delta = 0.001;  // KL budget
  SpeedFn f;

  /// Throws InvalidArgument unless every parameter is positive and finite.
  void validate() const;
};

struct Rollout {
  double s = 0;  // average log-likelihood of the output
  bool correct = false;
  double t_torch = 1;
  double t_triton = 1;
};

struct RolloutGroup {
  std::string query_id;
  std::vector<Rollout> outputs;
};

struct EvalRecord {
  bool correct = false;
  std::optional<double> speedup;  // t_torch / t_triton, correct records only
};

struct EvalMetrics {
  double acc = 0;      // percent
  double faster1 = 0;  // percent of all records, correct and speedup > 1
  std::optional<double> geomean_speedup;
};

/// f(t_torch / t_triton). Throws NonpositiveTime.
double speed_reward(double t_torch, double t_triton, const SpeedFn& f = {});

/// Max-shifted softmax of rewards / lambda. Throws EmptySet.
Eigen::ArrayXd correct_weights(const Eigen::ArrayXd& rewards, double lambda);

/// tau * log(mean(exp(s / tau))), max-shifted. Throws EmptySet.
double log_mean_exp(const Eigen::ArrayXd& s, double tau);

/// Weighted correct term, log-mean-exp incorrect term, squared hinge on kl.
/// Throws EmptyGroup.
double drpo_loss(const RolloutGroup& g, double kl, const RewardParams& p);

/// d loss / d s for each output, with the weights held constant.
Eigen::ArrayXd drpo_grad_s(const RolloutGroup& g, double kl, const RewardParams& p);

/// 1 + f(ratio) if correct, else 0. Throws NonpositiveTime.
double grpo_reward(bool correct, double t_torch, double t_triton, const SpeedFn& f = {});

/// (r - mean) / population std, or zeros when std is 0. Throws GroupTooSmall.
Eigen::ArrayXd grpo_advantage(const Eigen::ArrayXd& rewards);

/// Clipped surrogate averaged over tokens then outputs, minus beta_kl * kl.
/// Throws LengthMismatch, InvalidArgument on nonpositive ratios.
double grpo_surrogate(const std::vector<Eigen::ArrayXd>& token_ratios, const Eigen::ArrayXd& advantages, double eps,
                      double beta_kl, double kl);

/// Negative mean log-likelihood. Throws EmptyBatch.
double sft_loss(const Eigen::ArrayXd& avg_logliks);

/// Throws EmptyRecords, InvalidArgument on a correct record without a
/// positive speedup.
EvalMetrics eval_metrics(const std::vector<EvalRecord>& records);

Eigen::ArrayXd to_array(const std::vector<double>& v);

RewardParams reward_params_from_json(const nlohmann::json& j);
RolloutGroup rollout_group_from_json(const nlohmann::json& j);

/// Evaluates every objective on a rollout file:
/// {"params": {...}, "kl": x, "groups": [{"query_id", "outputs": [...]}]}.
nlohmann::json reward_report(const nlohmann::json& input);

nlohmann::json to_json(const EvalMetrics& m);

}  // namespace forge
