#include <random>
#include <string>

#include <gtest/gtest.h>

#include "chromamix/checkpoint.hpp"
#include "chromamix/config.hpp"

namespace cm = chromamix;

namespace {

const char* kMinimal = R"(# Phase 1, best row
name = p1_target-yes_state4_R1
env.state_variant = 4
env.include_target = true
env.reward = R1
env.horizon = 20
env.tolerance = 10
env.dynamics = LERP
)";

std::string field_of(const std::string& text) {
  try {
    cm::parse_spec(text);
  } catch (const cm::SpecError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(ParseSpec, MinimalUsesDefaults) {
  const auto s = cm::parse_spec(kMinimal);
  EXPECT_EQ(s.name, "p1_target-yes_state4_R1");
  EXPECT_EQ(s.env.state_variant, 4);
  EXPECT_TRUE(s.env.include_target);
  EXPECT_EQ(s.env.reward, cm::RewardId::kR1);
  EXPECT_EQ(s.env.horizon, 20);
  EXPECT_EQ(s.env.tolerance, 10.0);
  EXPECT_EQ(s.env.dynamics, cm::DynamicsModel::kLerp);
  EXPECT_EQ(s.train.rollout_length, 2048);
  EXPECT_EQ(s.train.minibatch, 64);
  EXPECT_EQ(s.train.epochs, 10);
  EXPECT_EQ(s.train.learning_rate, 3e-4);
  EXPECT_EQ(s.seeds, std::vector<std::uint64_t>{0});
  EXPECT_FALSE(s.eval.enabled);
}

TEST(ParseSpec, MissingFieldIsNamed) {
  std::string text = kMinimal;
  text.erase(text.find("env.reward"), std::string("env.reward = R1\n").size());
  EXPECT_EQ(field_of(text), "env.reward");
  try {
    cm::parse_spec(text);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("env.reward"), std::string::npos);
  }
}

TEST(ParseSpec, BadValuesAreNamed) {
  const std::string base = kMinimal;
  EXPECT_EQ(field_of(base + "train.learning_rate = fast\n"), "train.learning_rate");
  EXPECT_EQ(field_of(base + "env.colour = red\n"), "env.colour");
  EXPECT_EQ(field_of(base + "name = again\n"), "name");
  EXPECT_EQ(field_of(base + "env.noise_std = 1,2\n"), "env.noise_std");
  EXPECT_EQ(field_of(base + "eval.targets = X:1,2\n"), "eval.targets");
  std::string bad_reward = base;
  bad_reward.replace(bad_reward.find("= R1"), 4, "= R9");
  EXPECT_EQ(field_of(bad_reward), "env.reward");
  std::string bad_variant = base;
  bad_variant.replace(bad_variant.find("state_variant = 4"), 17, "state_variant = 5");
  EXPECT_THROW(cm::parse_spec(bad_variant), std::invalid_argument);
  EXPECT_THROW(cm::parse_spec(base + "just some words\n"), cm::SpecError);
}

TEST(ParseSpec, RunKeysAreIgnored) {
  const auto s = cm::parse_spec(std::string(kMinimal) + "run.seed = 3\nrun.code_version = 0.0.1\n");
  EXPECT_EQ(s.name, "p1_target-yes_state4_R1");
}

TEST(ParseSpec, OptionalFields) {
  const auto s = cm::parse_spec(std::string(kMinimal) +
                                "seeds = 0, 1,2\n"
                                "env.noise_std = 1.5\n"
                                "env.adv_enabled = no\n"
                                "train.total_steps = 150000\n"
                                "eval.enabled = true\n"
                                "eval.targets = A:1,2,3; B:40,50,60\n"
                                "eval.reps = 8\n");
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(s.env.noise_std, (std::array<double, 3>{1.5, 1.5, 1.5}));
  EXPECT_FALSE(s.env.adv_enabled);
  EXPECT_EQ(s.train.total_steps, 150000);
  EXPECT_TRUE(s.eval.enabled);
  ASSERT_EQ(s.eval.targets.size(), 2u);
  EXPECT_EQ(s.eval.targets[1].name, "B");
  EXPECT_EQ(s.eval.targets[1].color, (cm::Rgb{40, 50, 60}));
  EXPECT_EQ(s.eval.options.reps, 8);
}

TEST(FormatSpec, RoundTrips) {
  auto s = cm::parse_spec(kMinimal);
  s.seeds = {4, 9};
  s.env.reward = cm::RewardId::kR3;
  s.env.dynamics = cm::DynamicsModel::kKm;
  s.env.tolerance = 7.5;
  s.env.noise_std = {0.1, 2.0, 3.25};
  s.train.learning_rate = 1.2345e-4;
  s.train.gamma = 0.995;
  s.eval.enabled = true;
  s.eval.targets = {{"Q", {1.5, 2.25, 200}}};
  s.eval.options.seed = 77;
  const std::string text = cm::format_spec(s);
  const auto back = cm::parse_spec(text);
  EXPECT_EQ(cm::format_spec(back), text);
  EXPECT_EQ(back.train.learning_rate, 1.2345e-4);
  EXPECT_EQ(back.env.noise_std, s.env.noise_std);
  EXPECT_EQ(back.eval.targets[0].color, s.eval.targets[0].color);
}

TEST(Checkpoint, RoundTripsBitExact) {
  cm::PolicyValueNet net({9, 16, 30});
  std::mt19937_64 rng(5);
  net.init_orthogonal(rng);
  const cm::Checkpoint c{"name = x\n", net};
  const auto back = cm::decode_checkpoint(cm::encode_checkpoint(c));
  EXPECT_EQ(back.manifest, c.manifest);
  EXPECT_EQ(back.net.shape(), net.shape());
  ASSERT_EQ(back.net.size(), net.size());
  for (std::size_t i = 0; i < net.size(); ++i) EXPECT_EQ(back.net.params()[i], net.params()[i]);
}

TEST(Checkpoint, RejectsCorruptInput) {
  cm::PolicyValueNet net({3, 4, 30});
  auto bytes = cm::encode_checkpoint({"m", net});
  EXPECT_THROW(cm::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  bytes[0] = 'X';
  EXPECT_THROW(cm::decode_checkpoint(bytes), std::runtime_error);
}
