#ifndef CHROMAMIX_PPO_HPP_
#define CHROMAMIX_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chromamix/network.hpp"

namespace chromamix {

struct TrainConfig {
  long long total_steps = 500000;
  int rollout_length = 2048;
  int minibatch = 64;
  int epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  int hidden = 64;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw std::invalid_argument(field + ": " + why);
    };
    if (total_steps < 1) fail("train.total_steps", "must be >= 1");
    if (rollout_length < 1) fail("train.rollout_length", "must be >= 1");
    if (minibatch < 1) fail("train.minibatch", "must be >= 1");
    if (epochs < 1) fail("train.epochs", "must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("train.gamma", "must be in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("train.gae_lambda", "must be in [0, 1]");
    if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) fail("train.clip_ratio", "must be in (0, 1)");
    if (!(learning_rate > 0.0)) fail("train.learning_rate", "must be > 0");
    if (!(value_coef >= 0.0)) fail("train.value_coef", "must be >= 0");
    if (!(entropy_coef >= 0.0)) fail("train.entropy_coef", "must be >= 0");
    if (!(max_grad_norm > 0.0)) fail("train.max_grad_norm", "must be > 0");
    if (hidden < 1) fail("train.hidden", "must be >= 1");
  }
};

/// Raised when a loss or a parameter stops being finite.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurvePoint {
  long long step = 0;
  double ep_rew_mean = 0.0;
};

using TrainingCurve = std::vector<CurvePoint>;

// ---------------------------------------------------------------------------
// Categorical policy helpers

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

/// Queries the policy. Greedy mode returns the most likely action.
template <class Rng>
ActResult act(const PolicyValueNet& net, std::span<const double> obs, Rng& rng, bool greedy = false) {
  PolicyValueNet::Cache cache;
  net.forward(obs, cache);
  const auto logp = log_softmax(cache.logits);
  int a = 0;
  if (greedy) {
    a = argmax(cache.logits);
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double draw = u(rng);
    double acc = 0.0;
    a = static_cast<int>(logp.size()) - 1;
    for (std::size_t i = 0; i < logp.size(); ++i) {
      acc += std::exp(logp[i]);
      if (draw < acc) {
        a = static_cast<int>(i);
        break;
      }
    }
  }
  return {a, logp[a], cache.value};
}

// ---------------------------------------------------------------------------
// Advantage estimation

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation. dones[t] marks that the episode ended at
/// step t; `last_value` bootstraps the step after the final entry when it did
/// not end an episode.
inline GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                             std::span<const std::uint8_t> dones, double last_value, double gamma,
                             double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("compute_gae: sequences differ in length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double next_value = (i + 1 < n) ? values[i + 1] : last_value;
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    running = delta + gamma * lambda * live * running;
    out.advantages[i] = running;
    out.returns[i] = running + values[i];
  }
  return out;
}

/// Shifts and scales to zero mean and unit (population) std.
inline void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = sd > 0.0 ? (a - mean) / sd : 0.0;
}

// ---------------------------------------------------------------------------
// Clipped-surrogate loss

/// Flat rollout storage. Observations are row-major, obs_dim per row.
struct RolloutBatch {
  std::size_t obs_dim = 0;
  std::vector<double> observations;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  std::span<const double> observation(std::size_t i) const {
    return std::span<const double>(observations).subspan(i * obs_dim, obs_dim);
  }
};

struct LossCoefficients {
  double clip_ratio = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
};

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Loss over the selected rows of `batch`; when `grad` is non-empty the
/// gradient is accumulated into it.
///   total = -mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e mean(H)
inline LossTerms ppo_loss(const PolicyValueNet& net, const RolloutBatch& batch, std::span<const std::size_t> rows,
                          const LossCoefficients& coef, std::span<double> grad = {}) {
  LossTerms t;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  const double lo = 1.0 - coef.clip_ratio, hi = 1.0 + coef.clip_ratio;
  PolicyValueNet::Cache cache;
  std::vector<double> d_logits;
  for (std::size_t row : rows) {
    net.forward(batch.observation(row), cache);
    const auto logp = log_softmax(cache.logits);
    const int a = batch.actions[row];
    const double adv = batch.advantages[row];
    const double log_ratio = logp[a] - batch.log_probs[row];
    const double ratio = std::exp(log_ratio);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, lo, hi) * adv;
    t.policy -= std::min(unclipped, clipped) * inv_n;
    if (std::abs(ratio - 1.0) > coef.clip_ratio) t.clip_fraction += inv_n;
    t.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;

    double entropy = 0.0;
    for (double lp : logp) entropy -= std::exp(lp) * lp;
    t.entropy += entropy * inv_n;

    const double err = cache.value - batch.returns[row];
    t.value += err * err * inv_n;

    if (grad.empty()) continue;
    // d(policy term)/d(log pi(a)): only the unclipped branch carries gradient.
    const double d_logp = unclipped <= clipped ? -adv * ratio * inv_n : 0.0;
    d_logits.assign(logp.size(), 0.0);
    for (std::size_t j = 0; j < logp.size(); ++j) {
      const double p = std::exp(logp[j]);
      const double onehot = (static_cast<int>(j) == a) ? 1.0 : 0.0;
      d_logits[j] = d_logp * (onehot - p);
      // dH/dz_j = -p_j (log p_j + H)
      d_logits[j] += coef.entropy_coef * inv_n * p * (logp[j] + entropy);
    }
    const double d_value = coef.value_coef * 2.0 * err * inv_n;
    net.backward(cache, d_logits, d_value, grad);
  }
  t.total = t.policy + coef.value_coef * t.value - coef.entropy_coef * t.entropy;
  return t;
}

inline double grad_norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Owns the network and optimizer state across updates.
class PpoLearner {
 public:
  PpoLearner(std::size_t obs_dim, int actions, const TrainConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed), net_(PolicyValueNet::Shape{obs_dim, static_cast<std::size_t>(cfg.hidden),
                                                              static_cast<std::size_t>(actions)}) {
    cfg_.validate();
    net_.init_orthogonal(rng_);
    adam_ = Adam(net_.size(), cfg_.learning_rate);
  }

  PolicyValueNet& net() { return net_; }
  const PolicyValueNet& net() const { return net_; }
  std::mt19937_64& rng() { return rng_; }
  const TrainConfig& config() const { return cfg_; }

  /// Several epochs of minibatch steps over the batch. Advantages are
  /// normalized over the whole batch first.
  UpdateStats update(RolloutBatch batch) {
    normalize_advantages(batch.advantages);
    const LossCoefficients coef{cfg_.clip_ratio, cfg_.value_coef, cfg_.entropy_coef};
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(net_.size());
    UpdateStats stats;
    int steps = 0;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng_);
      for (std::size_t start = 0; start < order.size(); start += cfg_.minibatch) {
        const std::size_t len = std::min<std::size_t>(cfg_.minibatch, order.size() - start);
        std::fill(grad.begin(), grad.end(), 0.0);
        const LossTerms t = ppo_loss(net_, batch, std::span<const std::size_t>(order).subspan(start, len), coef, grad);
        if (!std::isfinite(t.total)) {
          throw TrainingAborted("non-finite loss (policy " + std::to_string(t.policy) + ", value " +
                                std::to_string(t.value) + ") at update epoch " + std::to_string(epoch));
        }
        const double norm = grad_norm(grad);
        if (!std::isfinite(norm)) throw TrainingAborted("non-finite gradient norm");
        if (norm > cfg_.max_grad_norm) {
          const double scale = cfg_.max_grad_norm / (norm + 1e-6);
          for (double& g : grad) g *= scale;
        }
        adam_.step(net_.params(), grad);
        stats.policy_loss += t.policy;
        stats.value_loss += t.value;
        stats.entropy += t.entropy;
        stats.clip_fraction += t.clip_fraction;
        stats.approx_kl += t.approx_kl;
        ++steps;
      }
    }
    if (!net_.finite()) throw TrainingAborted("non-finite network parameters after update");
    if (steps > 0) {
      stats.policy_loss /= steps;
      stats.value_loss /= steps;
      stats.entropy /= steps;
      stats.clip_fraction /= steps;
      stats.approx_kl /= steps;
    }
    return stats;
  }

 private:
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  PolicyValueNet net_;
  Adam adam_;
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainResult {
  PolicyValueNet final_net;
  PolicyValueNet best_net;
  double best_ep_rew_mean = -INFINITY;
  TrainingCurve curve;
  long long episodes = 0;
};

inline constexpr std::size_t kRewardWindow = 100;

/// Runs collect/update cycles until total_steps environment steps have been
/// taken. `Env` provides observation_size(), action_count(), reset() and
/// step(int) returning {observation, reward, done}. `on_sample` sees every
/// curve point as it is produced.
template <class Env>
TrainResult train(Env& env, const TrainConfig& cfg,
                  const std::function<void(const CurvePoint&, const UpdateStats&)>& on_sample = {}) {
  cfg.validate();
  PpoLearner learner(env.observation_size(), env.action_count(), cfg);
  TrainResult result;
  std::deque<double> recent;
  double episode_return = 0.0;
  long long global_step = 0;

  std::vector<double> obs = env.reset();
  bool best_seen = false;

  while (global_step < cfg.total_steps) {
    RolloutBatch batch;
    batch.obs_dim = obs.size();
    for (int t = 0; t < cfg.rollout_length; ++t) {
      const ActResult a = act(learner.net(), obs, learner.rng());
      auto r = env.step(a.action);
      batch.observations.insert(batch.observations.end(), obs.begin(), obs.end());
      batch.actions.push_back(a.action);
      batch.log_probs.push_back(a.log_prob);
      batch.values.push_back(a.value);
      batch.rewards.push_back(r.reward);
      batch.dones.push_back(r.done ? 1 : 0);
      episode_return += r.reward;
      ++global_step;
      if (r.done) {
        recent.push_back(episode_return);
        if (recent.size() > kRewardWindow) recent.pop_front();
        ++result.episodes;
        episode_return = 0.0;
        obs = env.reset();
      } else {
        obs = std::move(r.observation);
      }
    }

    double last_value = 0.0;
    if (!batch.dones.back()) {
      PolicyValueNet::Cache cache;
      learner.net().forward(obs, cache);
      last_value = cache.value;
    }
    auto gae = compute_gae(batch.rewards, batch.values, batch.dones, last_value, cfg.gamma, cfg.gae_lambda);
    batch.advantages = std::move(gae.advantages);
    batch.returns = std::move(gae.returns);
    const UpdateStats stats = learner.update(std::move(batch));

    if (!recent.empty()) {
      const double mean = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
      const CurvePoint p{global_step, mean};
      result.curve.push_back(p);
      // The policy that produced these episodes is the pre-update one, but the
      // post-update weights are what a checkpoint can offer.
      if (!best_seen || mean > result.best_ep_rew_mean) {
        best_seen = true;
        result.best_ep_rew_mean = mean;
        result.best_net = learner.net();
      }
      if (on_sample) on_sample(p, stats);
    }
  }
  result.final_net = learner.net();
  if (!best_seen) result.best_net = learner.net();
  return result;
}

}  // namespace chromamix

#endif  // CHROMAMIX_PPO_HPP_
