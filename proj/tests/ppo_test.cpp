#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chromamix/env.hpp"
#include "chromamix/ppo.hpp"
#include "gradient_check.hpp"

namespace cm = chromamix;

namespace {

cm::PolicyValueNet small_net(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  cm::PolicyValueNet net({inputs, hidden, 30});
  std::mt19937_64 rng(seed);
  net.init_orthogonal(rng);
  return net;
}

// Single-step episodes paying +10 for any action.
struct BonusEnv {
  std::size_t observation_size() const { return 4; }
  static constexpr int action_count() { return 30; }
  std::vector<double> reset() { return {0.1, -0.2, 0.3, 0.0}; }
  cm::StepResult step(int) {
    cm::StepResult r;
    r.observation = reset();
    r.reward = 10.0;
    r.done = true;
    return r;
  }
};

// Episodes of fixed length paying 1 per step; the true discounted value of
// the start state is sum_{t<L} gamma^t.
struct ConstantRewardEnv {
  int length = 5;
  int t = 0;
  std::size_t observation_size() const { return 2; }
  static constexpr int action_count() { return 30; }
  std::vector<double> obs() const { return {static_cast<double>(t) / length, 1.0}; }
  std::vector<double> reset() {
    t = 0;
    return obs();
  }
  cm::StepResult step(int) {
    ++t;
    cm::StepResult r;
    r.reward = 1.0;
    r.done = t >= length;
    r.observation = obs();
    return r;
  }
};

cm::TrainConfig quick_config(long long steps) {
  cm::TrainConfig cfg;
  cfg.total_steps = steps;
  cfg.rollout_length = 256;
  cfg.minibatch = 64;
  cfg.epochs = 4;
  cfg.hidden = 16;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Act, UniformLogitsChiSquare) {
  cm::PolicyValueNet net({3, 8, 30});  // all-zero parameters -> uniform policy
  std::mt19937_64 rng(1);
  const std::vector<double> obs{0.3, 0.1, 0.9};
  const int n = 10000;
  std::vector<int> counts(30, 0);
  for (int i = 0; i < n; ++i) {
    const auto r = cm::act(net, obs, rng);
    ++counts[r.action];
    ASSERT_NEAR(r.log_prob, std::log(1.0 / 30.0), 1e-12);
  }
  const double expected = n / 30.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 29 degrees of freedom; 58.30 is the 0.999 quantile.
  EXPECT_LT(chi2, 58.30);
}

TEST(Act, SaturatedLogitDominates) {
  cm::PolicyValueNet net({1, 1, 30});
  // Logit head bias of action 17 = 50, others 0.
  const std::size_t bias_offset = net.size() - (1 + 1 + 1 + 1 + 1 + 1) - 30;
  net.params()[bias_offset + 17] = 50.0;
  std::mt19937_64 rng(2);
  const std::vector<double> obs{0.5};
  cm::PolicyValueNet::Cache cache;
  net.forward(obs, cache);
  ASSERT_EQ(cm::argmax(cache.logits), 17);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += cm::act(net, obs, rng).action == 17;
  EXPECT_GE(hits, 9990);
  EXPECT_EQ(cm::act(net, obs, rng, true).action, 17);
}

TEST(Act, GreedyIsArgmaxAndProbabilitiesSumToOne) {
  auto net = small_net(9, 64, 4);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (auto& p : net.params()) p += 0.1 * normal(rng);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> obs(9);
    for (double& x : obs) x = normal(rng);
    cm::PolicyValueNet::Cache cache;
    net.forward(obs, cache);
    EXPECT_EQ(cm::act(net, obs, rng, true).action, cm::argmax(cache.logits));
    const auto logp = cm::log_softmax(cache.logits);
    double total = 0.0;
    for (double lp : logp) total += std::exp(lp);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Act, ShapeMismatchThrows) {
  auto net = small_net(9, 8, 1);
  std::mt19937_64 rng(1);
  const std::vector<double> obs(6, 0.0);
  EXPECT_THROW(cm::act(net, obs, rng), std::invalid_argument);
}

TEST(Gae, SingleTerminalStep) {
  const std::vector<double> r{1.0}, v{0.0};
  const std::vector<std::uint8_t> d{1};
  const auto g = cm::compute_gae(r, v, d, 123.0, 0.99, 0.95);
  EXPECT_DOUBLE_EQ(g.advantages[0], 1.0);
  EXPECT_DOUBLE_EQ(g.returns[0], 1.0);
}

TEST(Gae, LambdaZeroIsTdResidual) {
  const std::vector<double> r{0.5, -1.0, 2.0, 0.25}, v{0.1, 0.4, -0.3, 0.7};
  const std::vector<std::uint8_t> d{0, 1, 0, 0};
  const double gamma = 0.9, last = 1.5;
  const auto g = cm::compute_gae(r, v, d, last, gamma, 0.0);
  EXPECT_NEAR(g.advantages[0], 0.5 + gamma * 0.4 - 0.1, 1e-12);
  EXPECT_NEAR(g.advantages[1], -1.0 - 0.4, 1e-12);
  EXPECT_NEAR(g.advantages[2], 2.0 + gamma * 0.7 + 0.3, 1e-12);
  EXPECT_NEAR(g.advantages[3], 0.25 + gamma * last - 0.7, 1e-12);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(g.returns[i], g.advantages[i] + v[i], 1e-12);
}

TEST(Gae, LambdaOneIsRewardToGoWithinEpisode) {
  const std::vector<double> r{1, 2, 3, 4, 5}, v(5, 0.0);
  const std::vector<std::uint8_t> d{0, 0, 1, 0, 1};
  const auto g = cm::compute_gae(r, v, d, 0.0, 1.0, 1.0);
  const std::vector<double> expected{6, 5, 3, 9, 5};
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_DOUBLE_EQ(g.advantages[i], expected[i]);
}

TEST(Gae, LengthMismatchThrows) {
  const std::vector<double> r{1, 2}, v{0};
  const std::vector<std::uint8_t> d{0, 0};
  EXPECT_THROW(cm::compute_gae(r, v, d, 0, 1, 1), std::invalid_argument);
}

TEST(Gae, NormalizationMoments) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(3.0, 7.0);
  std::vector<double> a(2048);
  for (double& x : a) x = normal(rng);
  cm::normalize_advantages(a);
  const double n = static_cast<double>(a.size());
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  EXPECT_LT(std::abs(mean), 1e-6);
  EXPECT_NEAR(std::sqrt(var / n), 1.0, 1e-6);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  const cm::LossCoefficients with_entropy{0.2, 0.5, 0.01};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto net = small_net(9, 12, seed);
    // Move off the orthogonal init so the logit head is not near zero.
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (auto& p : net.params()) p += normal(rng);
    const auto batch = cm::testing::frozen_batch(net, 16, seed + 7);
    const auto check = cm::testing::check_loss_gradient(net, batch, with_entropy);
    EXPECT_EQ(check.checked, net.size());
    EXPECT_LT(check.max_rel_error, 1e-4) << "seed " << seed << " param " << check.worst_index;
  }
}

TEST(Loss, ZeroAdvantagesLeavePolicyHeadStill) {
  auto net = small_net(5, 8, 9);
  auto batch = cm::testing::frozen_batch(net, 32, 10);
  std::fill(batch.advantages.begin(), batch.advantages.end(), 0.0);
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> grad(net.size(), 0.0);
  const auto t = cm::ppo_loss(net, batch, rows, {0.2, 0.5, 0.0}, grad);
  EXPECT_EQ(t.policy, 0.0);
  // The policy tower occupies the front of the parameter vector and gets no
  // gradient; the value tower does.
  const std::size_t pi_size = 5 * 8 + 8 + 8 * 8 + 8 + 8 * 30 + 30;
  for (std::size_t i = 0; i < pi_size; ++i) EXPECT_EQ(grad[i], 0.0);
  double vf = 0.0;
  for (std::size_t i = pi_size; i < grad.size(); ++i) vf += std::abs(grad[i]);
  EXPECT_GT(vf, 0.0);
}

TEST(Loss, WideClipRecoversUnclippedSurrogate) {
  auto net = small_net(5, 8, 11);
  const auto batch = cm::testing::frozen_batch(net, 32, 12);
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto t = cm::ppo_loss(net, batch, rows, {1e9, 0.0, 0.0});
  double expected = 0.0;
  cm::PolicyValueNet::Cache cache;
  for (std::size_t i : rows) {
    net.forward(batch.observation(i), cache);
    const auto logp = cm::log_softmax(cache.logits);
    expected -= std::exp(logp[batch.actions[i]] - batch.log_probs[i]) * batch.advantages[i];
  }
  EXPECT_NEAR(t.policy, expected / rows.size(), 1e-12);
  EXPECT_EQ(t.clip_fraction, 0.0);
}

TEST(Learner, NonFiniteLossAborts) {
  cm::TrainConfig cfg = quick_config(1);
  cm::PpoLearner learner(5, 30, cfg);
  auto batch = cm::testing::frozen_batch(learner.net(), 64, 1);
  batch.returns[3] = std::nan("");
  EXPECT_THROW(learner.update(batch), cm::TrainingAborted);
}

TEST(Train, TrivialBonusConvergesToTen) {
  BonusEnv env;
  const auto result = cm::train(env, quick_config(2048));
  ASSERT_FALSE(result.curve.empty());
  EXPECT_DOUBLE_EQ(result.curve.back().ep_rew_mean, 10.0);
  EXPECT_EQ(result.curve.back().step, 2048);
  for (std::size_t i = 1; i < result.curve.size(); ++i) EXPECT_GT(result.curve[i].step, result.curve[i - 1].step);
}

TEST(Train, ValueHeadLearnsDiscountedReturn) {
  ConstantRewardEnv env;
  auto cfg = quick_config(40000);
  cfg.learning_rate = 1e-3;
  const auto result = cm::train(env, cfg);
  double expected = 0.0;
  for (int t = 0; t < env.length; ++t) expected += std::pow(cfg.gamma, t);
  env.reset();
  cm::PolicyValueNet::Cache cache;
  result.final_net.forward(env.obs(), cache);
  EXPECT_NEAR(cache.value, expected, 0.05 * expected);
}

TEST(Train, DeterministicForFixedSeed) {
  cm::EnvConfig ecfg;
  ecfg.seed = 17;
  auto run = [&] {
    cm::GoalSampledEnv env(ecfg);
    return cm::train(env, quick_config(3000)).curve;
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].step, b[i].step);
    EXPECT_EQ(a[i].ep_rew_mean, b[i].ep_rew_mean);
  }
}

TEST(TrainConfig, ValidationNamesField) {
  cm::TrainConfig cfg;
  cfg.clip_ratio = 0.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("train.clip_ratio"), std::string::npos);
  }
}
