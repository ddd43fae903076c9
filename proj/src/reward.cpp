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

#include "forge/reward.hpp"

#include <cmath>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0; }

struct Split {
  Eigen::ArrayXd s_pos, r_pos, s_neg;
  std::vector<Eigen::Index> pos, neg;  // positions in the group
};

Split split(const RolloutGroup& g, const RewardParams& p) {
  if (g.outputs.empty()) throw Error(ErrorCode::EmptyGroup, "rollout group '" + g.query_id + "' has no outputs");
  p.validate();
  Split sp;
  for (size_t i = 0; i < g.outputs.size(); ++i) (g.outputs[i].correct ? sp.pos : sp.neg).push_back(static_cast<Eigen::Index>(i));
  sp.s_pos.resize(static_cast<Eigen::Index>(sp.pos.size()));
  sp.r_pos.resize(sp.s_pos.size());
  sp.s_neg.resize(static_cast<Eigen::Index>(sp.neg.size()));
  for (size_t k = 0; k < sp.pos.size(); ++k) {
    const Rollout& o = g.outputs[static_cast<size_t>(sp.pos[k])];
    sp.s_pos[static_cast<Eigen::Index>(k)] = o.s;
    sp.r_pos[static_cast<Eigen::Index>(k)] = speed_reward(o.t_torch, o.t_triton, p.f);
  }
  for (size_t k = 0; k < sp.neg.size(); ++k) {
    const Rollout& o = g.outputs[static_cast<size_t>(sp.neg[k])];
    if (!std::isfinite(o.t_torch) || !std::isfinite(o.t_triton) || o.t_torch <= 0 || o.t_triton <= 0)
      throw Error(ErrorCode::NonpositiveTime, "execution times must be positive");
    sp.s_neg[static_cast<Eigen::Index>(k)] = o.s;
  }
  return sp;
}

double hinge(double kl, const RewardParams& p) {
  const double h = std::max(0.0, kl - p.delta);
  return p.beta * h * h;
}

}  // namespace

void RewardParams::validate() const {
  if (!positive(tau) || !positive(lambda) || !positive(beta) || !positive(delta))
    throw Error(ErrorCode::InvalidArgument, "tau, lambda, beta and delta must be positive");
  if (f.kind == SpeedKind::Power && !positive(f.alpha))
    throw Error(ErrorCode::InvalidArgument, "power exponent must be positive");
}

double speed_reward(double t_torch, double t_triton, const SpeedFn& f) {
  if (!positive(t_torch) || !positive(t_triton))
    throw Error(ErrorCode::NonpositiveTime, "execution times must be positive");
  const double ratio = t_torch / t_triton;
  if (f.kind == SpeedKind::Log) return std::log(ratio);
  if (!positive(f.alpha)) throw Error(ErrorCode::InvalidArgument, "power exponent must be positive");
  return std::pow(ratio, f.alpha);
}

Eigen::ArrayXd correct_weights(const Eigen::ArrayXd& rewards, double lambda) {
  if (rewards.size() == 0) throw Error(ErrorCode::EmptySet, "no correct outputs to weight");
  if (!positive(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  const Eigen::ArrayXd z = rewards / lambda;
  const Eigen::ArrayXd e = (z - z.maxCoeff()).exp();
  return e / e.sum();
}

double log_mean_exp(const Eigen::ArrayXd& s, double tau) {
  if (s.size() == 0) throw Error(ErrorCode::EmptySet, "log-mean-exp of an empty set");
  const Eigen::ArrayXd z = s / tau;
  const double m = z.maxCoeff();
  return tau * (m + std::log((z - m).exp().mean()));
}

double drpo_loss(const RolloutGroup& g, double kl, const RewardParams& p) {
  const Split sp = split(g, p);
  double loss = 0;
  if (sp.pos.size()) loss -= (correct_weights(sp.r_pos, p.lambda) * sp.s_pos).sum();
  if (sp.neg.size()) loss += log_mean_exp(sp.s_neg, p.tau);
  return loss + hinge(kl, p);
}

Eigen::ArrayXd drpo_grad_s(const RolloutGroup& g, double, const RewardParams& p) {
  const Split sp = split(g, p);
  Eigen::ArrayXd grad = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(g.outputs.size()));
  if (sp.pos.size()) {
    const Eigen::ArrayXd w = correct_weights(sp.r_pos, p.lambda);
    for (size_t k = 0; k < sp.pos.size(); ++k) grad[sp.pos[k]] = -w[static_cast<Eigen::Index>(k)];
  }
  if (sp.neg.size()) {
    const Eigen::ArrayXd soft = correct_weights(sp.s_neg, p.tau);
    for (size_t k = 0; k < sp.neg.size(); ++k) grad[sp.neg[k]] = soft[static_cast<Eigen::Index>(k)];
  }
  return grad;
}

double grpo_reward(bool correct, double t_torch, double t_triton, const SpeedFn& f) {
  const double r = speed_reward(t_torch, t_triton, f);
  return correct ? 1.0 + r : 0.0;
}

Eigen::ArrayXd grpo_advantage(const Eigen::ArrayXd& rewards) {
  if (rewards.size() < 2) throw Error(ErrorCode::GroupTooSmall, "advantage needs at least two outputs");
  const Eigen::ArrayXd centered = rewards - rewards.mean();
  const double sd = std::sqrt(centered.square().mean());
  if (sd == 0) return Eigen::ArrayXd::Zero(rewards.size());
  return centered / sd;
}

double grpo_surrogate(const std::vector<Eigen::ArrayXd>& token_ratios, const Eigen::ArrayXd& advantages, double eps,
                      double beta_kl, double kl) {
  if (static_cast<Eigen::Index>(token_ratios.size()) != advantages.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(token_ratios.size()) + " ratio lists for " +
                                               std::to_string(advantages.size()) + " advantages");
  if (token_ratios.empty()) throw Error(ErrorCode::LengthMismatch, "empty group");
  double total = 0;
  for (size_t i = 0; i < token_ratios.size(); ++i) {
    const Eigen::ArrayXd& r = token_ratios[i];
    if (r.size() == 0) throw Error(ErrorCode::LengthMismatch, "output " + std::to_string(i) + " has no tokens");
    if ((r <= 0).any() || !r.isFinite().all()) throw Error(ErrorCode::InvalidArgument, "ratios must be positive");
    const double a = advantages[static_cast<Eigen::Index>(i)];
    total += (r * a).min(r.cwiseMax(1 - eps).cwiseMin(1 + eps) * a).mean();
  }
  return total / static_cast<double>(token_ratios.size()) - beta_kl * kl;
}

double sft_loss(const Eigen::ArrayXd& avg_logliks) {
  if (avg_logliks.size() == 0) throw Error(ErrorCode::EmptyBatch, "no training pairs");
  return -avg_logliks.mean();
}

EvalMetrics eval_metrics(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptyRecords, "no evaluation records");
  EvalMetrics m;
  int correct = 0, faster = 0;
  double log_sum = 0;
  for (const auto& r : records) {
    if (!r.correct) continue;
    if (!r.speedup || !positive(*r.speedup))
      throw Error(ErrorCode::InvalidArgument, "correct records need a positive speedup");
    ++correct;
    if (*r.speedup > 1) ++faster;
    log_sum += std::log(*r.speedup);
  }
  const double n = static_cast<double>(records.size());
  m.acc = 100.0 * correct / n;
  m.faster1 = 100.0 * faster / n;
  if (correct) m.geomean_speedup = std::exp(log_sum / correct);
  return m;
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RewardParams reward_params_from_json(const json& j) {
  RewardParams p;
  p.tau = j.value("tau", p.tau);
  p.lambda = j.value("lambda", p.lambda);
  p.beta = j.value("beta", p.beta);
  p.delta = j.value("delta", p.delta);
  const std::string f = j.value("f", std::string("log"));
  if (f == "log") {
    p.f.kind = SpeedKind::Log;
  } else if (f == "power") {
    p.f.kind = SpeedKind::Power;
    p.f.alpha = j.value("alpha", 1.0);
  } else {
    throw Error(ErrorCode::InvalidArgument, "f must be log or power, got '" + f + "'");
  }
  p.validate();
  return p;
}

RolloutGroup rollout_group_from_json(const json& j) {
  RolloutGroup g;
  g.query_id = j.value("query_id", std::string());
  for (const auto& o : j.at("outputs"))
    g.outputs.push_back({o.at("s").get<double>(), o.at("correct").get<bool>(), o.at("t_torch").get<double>(),
                         o.at("t_triton").get<double>()});
  return g;
}

json to_json(const EvalMetrics& m) {
  return {{"acc", m.acc},
          {"faster1", m.faster1},
          {"geomean_speedup", m.geomean_speedup ? json(*m.geomean_speedup) : json(nullptr)}};
}

json reward_report(const json& input) {
  const RewardParams p = reward_params_from_json(input.value("params", json::object()));
  const double kl = input.value("kl", 0.0);
  if (!std::isfinite(kl) || kl < 0) throw Error(ErrorCode::InvalidArgument, "kl must be a nonnegative number");
  const auto to_vec = [](const Eigen::ArrayXd& a) { return std::vector<double>(a.data(), a.data() + a.size()); };
  json groups = json::array();
  std::vector<EvalRecord> records;
  for (const auto& gj : input.at("groups")) {
    const RolloutGroup g = rollout_group_from_json(gj);
    std::vector<double> rewards, scores;
    for (const auto& o : g.outputs) {
      scores.push_back(o.s);
      rewards.push_back(grpo_reward(o.correct, o.t_torch, o.t_triton, p.f));
      records.push_back({o.correct, o.correct ? std::optional(o.t_torch / o.t_triton) : std::nullopt});
    }
    json e = {{"query_id", g.query_id},
              {"drpo_loss", drpo_loss(g, kl, p)},
              {"drpo_grad_s", to_vec(drpo_grad_s(g, kl, p))},
              {"grpo_rewards", rewards},
              {"sft_loss", sft_loss(to_array(scores))}};
    e["grpo_advantages"] = rewards.size() >= 2 ? json(to_vec(grpo_advantage(to_array(rewards)))) : json(nullptr);
    groups.push_back(e);
  }
  json out = {{"groups", groups}};
  out["metrics"] = records.empty() ? json(nullptr) : to_json(eval_metrics(records));
  return out;
}

}  // namespace forge
