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
#include <random>

#include "test_util.hpp"

namespace forge {
namespace {

using testing::code_of;

Rollout out(double s, bool correct, double t_torch = 1, double t_triton = 1) { return {s, correct, t_torch, t_triton}; }

TEST(Reward, SpeedReward) {
  EXPECT_DOUBLE_EQ(speed_reward(1, 1), 0.0);
  EXPECT_NEAR(speed_reward(2, 1), 0.6931, 1e-4);
  EXPECT_DOUBLE_EQ(speed_reward(4, 1, {SpeedKind::Power, 0.5}), 2.0);
  EXPECT_EQ(code_of([] { speed_reward(0, 1); }), ErrorCode::NonpositiveTime);
  EXPECT_EQ(code_of([] { speed_reward(1, -1); }), ErrorCode::NonpositiveTime);
}

TEST(Reward, CorrectWeights) {
  const auto w0 = correct_weights(to_array({0, 0}), 0.3);
  EXPECT_DOUBLE_EQ(w0[0], 0.5);
  EXPECT_DOUBLE_EQ(w0[1], 0.5);
  const auto w1 = correct_weights(to_array({std::log(2.0), 0}), 0.1);
  EXPECT_NEAR(w1[0], 0.99902, 1e-5);
  EXPECT_NEAR(w1[1], 0.00098, 1e-5);
  const auto w2 = correct_weights(to_array({std::log(2.0), 0, std::log(0.5), std::log(3.0)}), 1e6);
  for (double w : w2) EXPECT_NEAR(w, 0.25, 1e-6);
  const auto w3 = correct_weights(to_array({1000, 999}), 0.01);
  EXPECT_TRUE(std::isfinite(w3[0]));
  EXPECT_NEAR(w3.sum(), 1.0, 1e-12);
  EXPECT_EQ(code_of([] { correct_weights(Eigen::ArrayXd(0), 0.1); }), ErrorCode::EmptySet);
}

TEST(Reward, DrpoLossExamples) {
  const RewardParams p;
  EXPECT_DOUBLE_EQ(drpo_loss({"q", {out(-1, true)}}, 0, p), 1.0);
  EXPECT_DOUBLE_EQ(drpo_loss({"q", {out(-1, true)}}, p.delta, p), 1.0);
  EXPECT_NEAR(drpo_loss({"q", {out(-2, false), out(-2, false)}}, 0, p), -2.0, 1e-12);
  EXPECT_NEAR(drpo_loss({"q", {out(-1, true)}}, p.delta + 0.01, p), 1.0 + 100 * 0.0001, 1e-12);
  EXPECT_EQ(code_of([&] { drpo_loss({"q", {}}, 0, p); }), ErrorCode::EmptyGroup);
}

TEST(Reward, DrpoGradientExamples) {
  const RewardParams p;
  const auto g = drpo_grad_s({"q", {out(-3, false), out(-3, false)}}, 0, p);
  EXPECT_DOUBLE_EQ(g[0], 0.5);
  EXPECT_DOUBLE_EQ(g[1], 0.5);
  EXPECT_DOUBLE_EQ(drpo_grad_s({"q", {out(-1, true)}}, 0, p)[0], -1.0);
}

// speedups in [0.8, 1.25]
TEST(Reward, DrpoGradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> score(-3, 0), time(0.8, 1.0);
  std::bernoulli_distribution coin(0.5);
  const RewardParams p;
  const double h = 1e-6;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RolloutGroup g{"q", {}};
    for (int i = 0; i < 8; ++i) g.outputs.push_back(out(score(gen), coin(gen), time(gen), time(gen)));
    const double kl = 0.01 * trial / 100.0;
    const auto analytic = drpo_grad_s(g, kl, p);
    for (int i = 0; i < 8; ++i) {
      RolloutGroup up = g, down = g;
      up.outputs[i].s += h;
      down.outputs[i].s -= h;
      const double fd = (drpo_loss(up, kl, p) - drpo_loss(down, kl, p)) / (2 * h);
      const double scale = std::max(std::abs(analytic[i]), std::abs(fd));
      if (scale > 0) worst = std::max(worst, std::abs(fd - analytic[i]) / scale);
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Reward, DrpoGradientWideSpeedupSpread) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> score(-3, 0), time(0.1, 2);
  std::bernoulli_distribution coin(0.5);
  const RewardParams p;
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    RolloutGroup g{"q", {}};
    for (int i = 0; i < 8; ++i) g.outputs.push_back(out(score(gen), coin(gen), time(gen), time(gen)));
    const auto analytic = drpo_grad_s(g, 0.005, p);
    for (int i = 0; i < 8; ++i) {
      RolloutGroup up = g, down = g;
      up.outputs[i].s += h;
      down.outputs[i].s -= h;
      const double fd = (drpo_loss(up, 0.005, p) - drpo_loss(down, 0.005, p)) / (2 * h);
      EXPECT_NEAR(fd, analytic[i], 1e-8);
    }
  }
}

TEST(Reward, DrpoPenalizesLikelyWrongOutputsMore) {
  const RewardParams p;
  const auto g = drpo_grad_s({"q", {out(-1, false), out(-2, false), out(-4, false)}}, 0, p);
  EXPECT_GT(g[0], g[1]);
  EXPECT_GT(g[1], g[2]);
  EXPECT_NEAR(g.sum(), 1.0, 1e-12);
  const auto c = drpo_grad_s({"q", {out(-1, true, 2, 1), out(-1, true, 1, 1)}}, 0, p);
  EXPECT_LT(c[0], c[1]);
}

TEST(Reward, Grpo) {
  EXPECT_DOUBLE_EQ(grpo_reward(true, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(grpo_reward(false, 3, 1), 0.0);
  EXPECT_NEAR(grpo_reward(true, std::exp(1.0), 1), 2.0, 1e-12);

  const auto a = grpo_advantage(to_array({0, 0, 1, 1}));
  EXPECT_EQ(std::vector<double>(a.begin(), a.end()), (std::vector<double>{-1, -1, 1, 1}));
  EXPECT_TRUE((grpo_advantage(to_array({2, 2, 2})) == 0).all());
  EXPECT_EQ(code_of([] { grpo_advantage(to_array({1})); }), ErrorCode::GroupTooSmall);

  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd(3, 5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::ArrayXd r(6);
    for (auto& x : r) x = nd(gen);
    const auto adv = grpo_advantage(r);
    EXPECT_LE(std::abs(adv.mean()), 1e-12);
    EXPECT_NEAR(std::sqrt((adv - adv.mean()).square().mean()), 1.0, 1e-9);
    const auto shifted = grpo_advantage(2.5 * r + 7);
    EXPECT_LE((shifted - adv).abs().maxCoeff(), 1e-9);
  }
}

TEST(Reward, GrpoSurrogate) {
  const double eps = 0.2;
  const Eigen::ArrayXd adv = to_array({1.5, -0.5});
  const std::vector<Eigen::ArrayXd> ones{Eigen::ArrayXd::Ones(3), Eigen::ArrayXd::Ones(5)};
  EXPECT_NEAR(grpo_surrogate(ones, adv, eps, 0.1, 0.3), 0.5 - 0.03, 1e-12);
  EXPECT_NEAR(grpo_surrogate({to_array({1 + 2 * eps})}, to_array({2.0}), eps, 0, 0), (1 + eps) * 2.0, 1e-12);
  EXPECT_NEAR(grpo_surrogate({to_array({1 - 2 * eps})}, to_array({-2.0}), eps, 0, 0), (1 - eps) * -2.0, 1e-12);
  EXPECT_EQ(code_of([&] { grpo_surrogate(ones, to_array({1.0}), eps, 0, 0); }), ErrorCode::LengthMismatch);
}

TEST(Reward, GrpoSurrogateAgreesWithBruteForce) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> ratio(0.3, 1.8), advd(-2, 2);
  std::uniform_int_distribution<int> len(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const double eps = 0.1 + 0.01 * (trial % 20);
    std::vector<Eigen::ArrayXd> rs;
    Eigen::ArrayXd adv(4);
    double expected = 0;
    for (int i = 0; i < 4; ++i) {
      adv[i] = advd(gen);
      Eigen::ArrayXd r(len(gen));
      double sum = 0;
      for (auto& x : r) {
        x = ratio(gen);
        const double clipped = std::min(std::max(x, 1 - eps), 1 + eps);
        sum += std::min(x * adv[i], clipped * adv[i]);
      }
      expected += sum / static_cast<double>(r.size());
      rs.push_back(r);
    }
    EXPECT_NEAR(grpo_surrogate(rs, adv, eps, 0.05, 0.2), expected / 4 - 0.01, 1e-12);
  }
}

TEST(Reward, Sft) {
  EXPECT_DOUBLE_EQ(sft_loss(to_array({-1, -1})), 1.0);
  EXPECT_DOUBLE_EQ(sft_loss(to_array({0})), 0.0);
  EXPECT_DOUBLE_EQ(sft_loss(to_array({-0.5, -1.5, -1.0})), 1.0);
  EXPECT_EQ(code_of([] { sft_loss(Eigen::ArrayXd(0)); }), ErrorCode::EmptyBatch);
}

TEST(Reward, Metrics) {
  auto m = eval_metrics({{true, 2.0}, {true, 0.5}});
  EXPECT_DOUBLE_EQ(m.acc, 100.0);
  EXPECT_DOUBLE_EQ(m.faster1, 50.0);
  ASSERT_TRUE(m.geomean_speedup);
  EXPECT_NEAR(*m.geomean_speedup, 1.0, 1e-12);

  m = eval_metrics({{false, std::nullopt}, {false, std::nullopt}});
  EXPECT_EQ(m.acc, 0.0);
  EXPECT_EQ(m.faster1, 0.0);
  EXPECT_FALSE(m.geomean_speedup);

  m = eval_metrics({{true, 1.5}, {true, 0.8}, {false, std::nullopt}, {false, std::nullopt}});
  EXPECT_DOUBLE_EQ(m.acc, 50.0);
  EXPECT_DOUBLE_EQ(m.faster1, 25.0);
  EXPECT_NEAR(*m.geomean_speedup, 1.0954, 1e-4);

  EXPECT_EQ(code_of([] { eval_metrics({}); }), ErrorCode::EmptyRecords);
  EXPECT_EQ(code_of([] { eval_metrics({{true, std::nullopt}}); }), ErrorCode::InvalidArgument);
}

TEST(Reward, ParamsValidation) {
  RewardParams p;
  EXPECT_NO_THROW(p.validate());
  p.tau = 0;
  EXPECT_EQ(code_of([&] { p.validate(); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { reward_params_from_json({{"f", "cube"}}); }), ErrorCode::InvalidArgument);
  const RewardParams q = reward_params_from_json({{"tau", 2.0}, {"f", "power"}, {"alpha", 0.5}});
  EXPECT_EQ(q.tau, 2.0);
  EXPECT_EQ(q.f.kind, SpeedKind::Power);
  EXPECT_EQ(q.lambda, 0.1);
}

TEST(Reward, ReportCoversEveryObjective) {
  const nlohmann::json input = {
      {"kl", 0.0},
      {"groups",
       {{{"query_id", "a"},
         {"outputs",
          {{{"s", -1.0}, {"correct", true}, {"t_torch", 2.0}, {"t_triton", 1.0}},
           {{"s", -2.0}, {"correct", false}, {"t_torch", 1.0}, {"t_triton", 1.0}}}}}}}};
  const auto report = reward_report(input);
  const std::string text = report.dump();
  for (const char* key : {"drpo", "grpo", "sft"}) EXPECT_NE(text.find(key), std::string::npos) << key;
}

}  // namespace
}  // namespace forge
