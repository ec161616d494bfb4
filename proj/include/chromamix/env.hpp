#ifndef CHROMAMIX_ENV_HPP_
#define CHROMAMIX_ENV_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chromamix/color.hpp"
#include "chromamix/dynamics.hpp"

namespace chromamix {

enum class RewardId { kR1, kR2, kR3 };

inline std::string to_string(RewardId r) {
  switch (r) {
    case RewardId::kR1: return "R1";
    case RewardId::kR2: return "R2";
    case RewardId::kR3: return "R3";
  }
  return "?";
}

inline RewardId parse_reward(std::string_view s) {
  if (s == "R1" || s == "r1") return RewardId::kR1;
  if (s == "R2" || s == "r2") return RewardId::kR2;
  if (s == "R3" || s == "r3") return RewardId::kR3;
  throw std::invalid_argument("unknown reward id '" + std::string(s) + "'");
}

inline constexpr double kSuccessBonus = 10.0;
inline constexpr int kMagnitudeLevels = 10;
inline constexpr int kActionCount = static_cast<int>(BaseInks::kCount) * kMagnitudeLevels;
// Variants 0 and 1 report absolute volumes in units of this many µl.
inline constexpr double kAbsoluteVolumeScale = 2000.0;

/// A complete MDP formulation.
struct EnvConfig {
  int state_variant = 4;
  bool include_target = true;
  RewardId reward = RewardId::kR1;
  int horizon = 20;
  double tolerance = 10.0;
  DynamicsModel dynamics = DynamicsModel::kLerp;
  std::array<double, 3> noise_std{2.0, 2.0, 2.0};
  bool adv_enabled = true;
  double adv_prob = 0.8;
  double adv_eps = 3.0;
  double initial_volume = 200.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument(field + ": " + why);
    };
    if (state_variant < 0 || state_variant > 4) fail("env.state_variant", "must be in 0..4");
    if (horizon < 1) fail("env.horizon", "must be >= 1");
    if (!(tolerance > 0.0)) fail("env.tolerance", "must be > 0");
    for (double s : noise_std) {
      if (!(s >= 0.0) || !std::isfinite(s)) fail("env.noise_std", "must be >= 0");
    }
    if (!(adv_prob >= 0.0 && adv_prob <= 1.0)) fail("env.adv_prob", "must be in [0, 1]");
    if (!(adv_eps >= 0.0)) fail("env.adv_eps", "must be >= 0");
    if (!(initial_volume > 0.0)) fail("env.initial_volume", "must be > 0");
  }

  bool fraction_actions() const { return state_variant >= 2; }
  bool noise_enabled() const { return noise_std[0] > 0 || noise_std[1] > 0 || noise_std[2] > 0; }
};

using Observation = std::vector<double>;

inline std::size_t volume_encoding_size(int state_variant) {
  return (state_variant == 0 || state_variant == 2) ? 1 : 3;
}

inline std::size_t observation_size(const EnvConfig& cfg) {
  return kChannels + (cfg.include_target ? kChannels : 0) + volume_encoding_size(cfg.state_variant);
}

// ---------------------------------------------------------------------------
// Actions

struct DecodedAction {
  int ink = 0;
  int magnitude_index = 0;  // 0..9
};

inline DecodedAction decode_action(int index) {
  if (index < 0 || index >= kActionCount) throw std::out_of_range("action index out of range");
  return {index / kMagnitudeLevels, index % kMagnitudeLevels};
}

inline int encode_action(int ink, int magnitude_index) { return ink * kMagnitudeLevels + magnitude_index; }

/// Absolute µl (variants 0-1, 20..200) or a fraction of current volume (variants 2-4, 0.1..1.0).
inline double action_magnitude(const DecodedAction& a, const EnvConfig& cfg) {
  const double level = a.magnitude_index + 1;
  return cfg.fraction_actions() ? 0.1 * level : 20.0 * level;
}

/// Magnitude scaled to [0, 1]; this is V in the action-penalty rewards.
inline double normalized_magnitude(const DecodedAction& a) { return 0.1 * (a.magnitude_index + 1); }

// ---------------------------------------------------------------------------
// State encoding

inline Observation encode_state(const Rgb& observed, const Mixture& mix, const Rgb& target,
                                const EnvConfig& cfg) {
  Observation obs;
  obs.reserve(observation_size(cfg));
  for (std::size_t k = 0; k < kChannels; ++k) obs.push_back(observed[k] / kChannelMax);
  if (cfg.include_target) {
    for (std::size_t k = 0; k < kChannels; ++k) obs.push_back(target[k] / kChannelMax);
  }
  const auto v = ink_volumes(mix);
  const double total = v[0] + v[1] + v[2];
  switch (cfg.state_variant) {
    case 0: obs.push_back(total / kAbsoluteVolumeScale); break;
    case 1: for (double x : v) obs.push_back(x / kAbsoluteVolumeScale); break;
    case 2: obs.push_back(total / cfg.initial_volume); break;
    case 3: for (double x : v) obs.push_back(x / cfg.initial_volume); break;
    case 4: for (double x : v) obs.push_back(x / total); break;
    default: throw std::invalid_argument("env.state_variant: must be in 0..4");
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Rewards

inline double reward_r1(const Rgb& current, const Rgb& target, bool success) {
  return -rgb_distance(current, target) / kMaxRgbDistance + (success ? kSuccessBonus : 0.0);
}

/// Largest pairwise distance between the base inks.
inline double r2_normalizer() {
  double d = 0.0;
  for (std::size_t j = 0; j < BaseInks::kCount; ++j) {
    for (std::size_t k = j + 1; k < BaseInks::kCount; ++k) {
      d = std::max(d, rgb_distance(BaseInks::at(j), BaseInks::at(k)));
    }
  }
  return d;
}

/// Largest distance from any base ink to the target.
inline double r3_normalizer(const Rgb& target) {
  double d = 0.0;
  for (const Rgb& ink : BaseInks::kAll) d = std::max(d, rgb_distance(ink, target));
  return d;
}

/// Action-penalty reward. `magnitude` is the dispensed amount scaled to [0, 1].
inline double reward_r2_r3(const Rgb& added, const Rgb& target, double magnitude, RewardId variant,
                           bool success) {
  const double norm = variant == RewardId::kR3 ? r3_normalizer(target) : r2_normalizer();
  // A target sitting on every ink at once is impossible, but guard the division anyway.
  const double penalty = norm > 0.0 ? rgb_distance(added, target) / norm * magnitude * magnitude : 0.0;
  return -penalty + (success ? kSuccessBonus : 0.0);
}

// ---------------------------------------------------------------------------
// Observation perturbations

template <class Rng>
Rgb apply_observation_noise(const Rgb& c, const std::array<double, 3>& stds, Rng& rng) {
  Rgb out = c;
  for (std::size_t k = 0; k < kChannels; ++k) {
    if (stds[k] > 0.0) {
      std::normal_distribution<double> noise(0.0, stds[k]);
      out[k] += noise(rng);
    }
  }
  return clamp_rgb(out);
}

/// With probability `prob`, shifts every channel by `eps` away from the target.
template <class Rng>
Rgb apply_adversarial(const Rgb& c, const Rgb& target, double prob, double eps, Rng& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!(coin(rng) < prob)) return c;
  Rgb out = c;
  for (std::size_t k = 0; k < kChannels; ++k) {
    out[k] += c[k] < target[k] ? -eps : eps;
  }
  return clamp_rgb(out);
}

/// Base ink nearest to the target (lowest index on ties).
inline int nearest_ink(const Rgb& target) {
  int best = 0;
  double best_d = rgb_distance(BaseInks::at(0), target);
  for (std::size_t i = 1; i < BaseInks::kCount; ++i) {
    const double d = rgb_distance(BaseInks::at(i), target);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

struct StepInfo {
  Rgb true_color;
  Rgb observed_color;
  double distance = 0.0;
  bool success = false;
  int step_count = 0;
  double total_volume = 0.0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// The episodic mixing task for one target. Not safe for concurrent use.
class ColorMixEnv {
 public:
  explicit ColorMixEnv(EnvConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

  const EnvConfig& config() const { return cfg_; }
  std::size_t observation_size() const { return chromamix::observation_size(cfg_); }
  static constexpr int action_count() { return kActionCount; }

  /// Starts an episode; the RNG stream continues from the previous episode.
  Observation reset(const Rgb& target) {
    if (!target.valid()) throw std::invalid_argument("target outside [0, 255]");
    target_ = target;
    start_ink_ = nearest_ink(target);
    mixture_.assign(1, MixComponent{start_ink_, cfg_.initial_volume});
    true_color_ = predict(cfg_.dynamics, mixture_);
    steps_ = 0;
    done_ = false;
    observed_ = perceive(true_color_);
    return encode_state(observed_, mixture_, target_, cfg_);
  }

  /// Starts an episode with a freshly seeded RNG stream.
  Observation reset(const Rgb& target, std::uint64_t seed) {
    rng_.seed(seed);
    return reset(target);
  }

  StepResult step(int action_index) {
    if (done_) throw std::logic_error("episode finished");
    const DecodedAction a = decode_action(action_index);
    const double total = total_volume();
    const double magnitude = action_magnitude(a, cfg_);
    const double added = cfg_.fraction_actions() ? magnitude * total : magnitude;
    mixture_.push_back(MixComponent{a.ink, added});

    true_color_ = predict(cfg_.dynamics, mixture_);
    ++steps_;
    const bool success = within_tolerance(true_color_, target_, cfg_.tolerance);
    done_ = success || steps_ >= cfg_.horizon;

    StepResult r;
    r.reward = cfg_.reward == RewardId::kR1
                   ? reward_r1(true_color_, target_, success)
                   : reward_r2_r3(BaseInks::at(a.ink), target_, normalized_magnitude(a), cfg_.reward, success);
    r.done = done_;
    observed_ = perceive(true_color_);
    r.observation = encode_state(observed_, mixture_, target_, cfg_);
    r.info.true_color = true_color_;
    r.info.observed_color = observed_;
    r.info.distance = rgb_distance(true_color_, target_);
    r.info.success = success;
    r.info.step_count = steps_;
    r.info.total_volume = total + added;
    return r;
  }

  const Mixture& mixture() const { return mixture_; }
  const Rgb& target() const { return target_; }
  const Rgb& true_color() const { return true_color_; }
  int start_ink() const { return start_ink_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  double total_volume() const {
    double t = 0.0;
    for (const auto& c : mixture_) t += c.volume;
    return t;
  }

 private:
  Rgb perceive(const Rgb& c) {
    Rgb seen = c;
    if (cfg_.noise_enabled()) seen = apply_observation_noise(seen, cfg_.noise_std, rng_);
    if (cfg_.adv_enabled) seen = apply_adversarial(seen, target_, cfg_.adv_prob, cfg_.adv_eps, rng_);
    return seen;
  }

  EnvConfig cfg_;
  std::mt19937_64 rng_;
  Mixture mixture_;
  Rgb target_;
  Rgb true_color_;
  Rgb observed_;
  int start_ink_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

/// Uniform point on the simplex of ink weights.
template <class Rng>
InkWeights sample_simplex(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  InkWeights w{};
  double sum = 0.0;
  for (double& x : w) {
    x = -std::log(1.0 - u(rng));
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

/// Training goal: a color the given dynamics can produce from some ink ratio.
template <class Rng>
Rgb sample_reachable_target(DynamicsModel model, Rng& rng) {
  return predict_weights(model, sample_simplex(rng));
}

/// Environment that draws a fresh reachable target on every reset. This is the
/// shape the trainer consumes.
class GoalSampledEnv {
 public:
  explicit GoalSampledEnv(EnvConfig cfg)
      : env_(cfg), goal_rng_(cfg.seed ^ 0x9E3779B97F4A7C15ULL) {}

  std::size_t observation_size() const { return env_.observation_size(); }
  static constexpr int action_count() { return kActionCount; }

  Observation reset() { return env_.reset(sample_reachable_target(env_.config().dynamics, goal_rng_)); }
  StepResult step(int action) { return env_.step(action); }

  ColorMixEnv& inner() { return env_; }

 private:
  ColorMixEnv env_;
  std::mt19937_64 goal_rng_;
};

}  // namespace chromamix

#endif  // CHROMAMIX_ENV_HPP_
