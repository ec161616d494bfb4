#ifndef CHROMAMIX_TESTS_GRADIENT_CHECK_HPP_
#define CHROMAMIX_TESTS_GRADIENT_CHECK_HPP_

// Central finite-difference check of the PPO loss gradient, shared by the unit
// tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "chromamix/ppo.hpp"

namespace chromamix::testing {

/// A random batch whose stored log-probs are offset from the current policy so
/// that both the clipped and the unclipped branch are exercised, while staying
/// well away from the clip boundaries where the loss has a kink.
inline RolloutBatch frozen_batch(const PolicyValueNet& net, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> action(0, static_cast<int>(net.shape().actions) - 1);
  const double offsets[] = {-0.6, -0.05, 0.05, 0.6};
  std::uniform_int_distribution<int> pick(0, 3);

  RolloutBatch b;
  b.obs_dim = net.shape().inputs;
  PolicyValueNet::Cache cache;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x(b.obs_dim);
    for (double& v : x) v = normal(rng);
    net.forward(x, cache);
    const auto logp = log_softmax(cache.logits);
    const int a = action(rng);
    b.observations.insert(b.observations.end(), x.begin(), x.end());
    b.actions.push_back(a);
    b.log_probs.push_back(logp[a] + offsets[pick(rng)]);
    b.values.push_back(cache.value);
    b.advantages.push_back(normal(rng));
    b.returns.push_back(normal(rng));
    b.rewards.push_back(0.0);
    b.dones.push_back(0);
  }
  return b;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares ppo_loss's analytic gradient with central differences for every
/// parameter. Relative error uses max(|analytic|, |numeric|, floor) as the
/// denominator so that parameters with vanishing gradient do not dominate.
inline GradientCheck check_loss_gradient(PolicyValueNet net, const RolloutBatch& batch,
                                         const LossCoefficients& coef, double h = 1e-5,
                                         double floor = 1e-6) {
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<double> analytic(net.size(), 0.0);
  ppo_loss(net, batch, rows, coef, analytic);

  GradientCheck out;
  auto p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = ppo_loss(net, batch, rows, coef).total;
    p[i] = saved - h;
    const double down = ppo_loss(net, batch, rows, coef).total;
    p[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_index = i;
    }
    ++out.checked;
  }
  return out;
}

}  // namespace chromamix::testing

#endif  // CHROMAMIX_TESTS_GRADIENT_CHECK_HPP_
