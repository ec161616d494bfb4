#ifndef CHROMAMIX_METRICS_HPP_
#define CHROMAMIX_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chromamix/env.hpp"
#include "chromamix/ppo.hpp"

namespace chromamix {

inline constexpr double kRewardThreshold = 7.5;
inline constexpr long long kForgettingWindow = 5000;

// ---------------------------------------------------------------------------
// Training-curve metrics

namespace detail {

inline void require_curve(std::span<const CurvePoint> curve) {
  if (curve.empty()) throw std::invalid_argument("empty curve");
}

// Samples whose step lies strictly after `fraction` of the final step.
inline std::vector<double> tail_values(std::span<const CurvePoint> curve, double fraction) {
  const double cut = fraction * static_cast<double>(curve.back().step);
  std::vector<double> v;
  for (const auto& p : curve) {
    if (static_cast<double>(p.step) > cut) v.push_back(p.ep_rew_mean);
  }
  if (v.empty()) v.push_back(curve.back().ep_rew_mean);
  return v;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_std(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace detail

/// Mean reward over the last 10% of training steps.
inline double final_performance(std::span<const CurvePoint> curve) {
  detail::require_curve(curve);
  return detail::mean(detail::tail_values(curve, 0.9));
}

/// First sample step at or above the threshold; nullopt when never reached.
inline std::optional<long long> time_to_threshold(std::span<const CurvePoint> curve,
                                                  double threshold = kRewardThreshold) {
  detail::require_curve(curve);
  for (const auto& p : curve) {
    if (p.ep_rew_mean >= threshold) return p.step;
  }
  return std::nullopt;
}

struct CvResult {
  double value = 0.0;          // std / |mean|
  bool negative_mean = false;  // flagged: the ratio is against a negative mean
};

/// Std over mean of the last 20% of training.
inline CvResult coefficient_of_variation(std::span<const CurvePoint> curve) {
  detail::require_curve(curve);
  const auto tail = detail::tail_values(curve, 0.8);
  const double m = detail::mean(tail);
  if (m == 0.0) throw std::domain_error("undefined CV: tail mean is zero");
  return {detail::population_std(tail) / std::abs(m), m < 0.0};
}

/// Means of consecutive fixed-width step windows; empty windows are skipped.
inline std::vector<double> window_means(std::span<const CurvePoint> curve, long long window = kForgettingWindow) {
  std::map<long long, std::pair<double, int>> acc;
  for (const auto& p : curve) {
    auto& [sum, n] = acc[p.step / window];
    sum += p.ep_rew_mean;
    ++n;
  }
  std::vector<double> means;
  means.reserve(acc.size());
  for (const auto& [idx, sn] : acc) means.push_back(sn.first / sn.second);
  return means;
}

/// Counts windows whose mean falls below 95% of the previous window's mean.
/// Comparisons against a non-positive previous mean are skipped.
inline int forgetting_events_from_means(std::span<const double> means) {
  if (means.size() < 2) throw std::invalid_argument("curve spans fewer than two windows");
  int count = 0;
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (means[i - 1] > 0.0 && means[i] < 0.95 * means[i - 1]) ++count;
  }
  return count;
}

inline int forgetting_events(std::span<const CurvePoint> curve, long long window = kForgettingWindow) {
  detail::require_curve(curve);
  return forgetting_events_from_means(window_means(curve, window));
}

struct CurveMetrics {
  double fp = 0.0;
  std::optional<long long> t75;
  double cv = 0.0;
  bool cv_negative_mean = false;
  double nm = 0.0;
};

inline CurveMetrics curve_metrics(std::span<const CurvePoint> curve) {
  CurveMetrics m;
  m.fp = final_performance(curve);
  m.t75 = time_to_threshold(curve);
  const CvResult cv = coefficient_of_variation(curve);
  m.cv = cv.value;
  m.cv_negative_mean = cv.negative_mean;
  m.nm = forgetting_events(curve);
  return m;
}

/// Seed average. T7.5 averages the seeds that reached the threshold and is
/// NOT_REACHED only if none did.
inline CurveMetrics average_metrics(std::span<const CurveMetrics> runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to average");
  CurveMetrics avg;
  double t_sum = 0.0;
  int t_n = 0;
  for (const auto& r : runs) {
    avg.fp += r.fp;
    avg.cv += r.cv;
    avg.nm += r.nm;
    avg.cv_negative_mean = avg.cv_negative_mean || r.cv_negative_mean;
    if (r.t75) {
      t_sum += static_cast<double>(*r.t75);
      ++t_n;
    }
  }
  const double n = static_cast<double>(runs.size());
  avg.fp /= n;
  avg.cv /= n;
  avg.nm /= n;
  if (t_n > 0) avg.t75 = std::llround(t_sum / t_n);
  return avg;
}

/// Weighted composite over a set of configurations: each metric min-max
/// normalized across the set (FP higher-better, CV/T7.5/NM lower-better),
/// weighted 0.4 / 0.3 / 0.2 / 0.1. NOT_REACHED counts as `total_steps`.
inline std::vector<double> composite_score(std::span<const CurveMetrics> set, long long total_steps) {
  if (set.size() < 2) throw std::invalid_argument("normalization undefined for fewer than two configs");
  const std::size_t n = set.size();
  auto t_of = [total_steps](const CurveMetrics& m) {
    return static_cast<double>(m.t75.value_or(total_steps));
  };
  auto normalized = [n](auto value_of, bool higher_better) {
    double lo = INFINITY, hi = -INFINITY;
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = value_of(i);
      lo = std::min(lo, raw[i]);
      hi = std::max(hi, raw[i]);
    }
    std::vector<double> out(n, 1.0);  // no spread: everyone ties for best
    if (hi > lo) {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = (raw[i] - lo) / (hi - lo);
        out[i] = higher_better ? x : 1.0 - x;
      }
    }
    return out;
  };
  const auto fp = normalized([&](std::size_t i) { return set[i].fp; }, true);
  const auto cv = normalized([&](std::size_t i) { return set[i].cv; }, false);
  const auto t = normalized([&](std::size_t i) { return t_of(set[i]); }, false);
  const auto nm = normalized([&](std::size_t i) { return set[i].nm; }, false);
  std::vector<double> cs(n);
  // Integer weights over 10 keep the endpoints exactly 1 and 0.
  for (std::size_t i = 0; i < n; ++i) cs[i] = (4.0 * fp[i] + 3.0 * cv[i] + 2.0 * t[i] + nm[i]) / 10.0;
  return cs;
}

// ---------------------------------------------------------------------------
// Deployment-style evaluation against a (possibly different) dynamics model

struct NamedTarget {
  std::string name;
  Rgb color;
};

/// Hardware evaluation targets.
inline const std::vector<NamedTarget>& reference_targets() {
  static const std::vector<NamedTarget> kTargets{
      {"C1", {128, 91, 67}}, {"C2", {42, 76, 66}}, {"C3", {39, 52, 56}}, {"C4", {67, 64, 75}}};
  return kTargets;
}

struct EpisodeOutcome {
  double final_distance = 0.0;
  int steps = 0;
  bool success = false;
  Rgb final_color;
};

struct TransferStats {
  std::string name;
  Rgb target;
  int episodes = 0;
  double d_mean = 0.0;
  double d_std = 0.0;
  double s_mean = 0.0;
  double success_rate = 0.0;
};

struct TransferReport {
  DynamicsModel train_dynamics = DynamicsModel::kLerp;
  DynamicsModel eval_dynamics = DynamicsModel::kWgm;
  int horizon = 5;
  double tolerance = 7.5;
  std::vector<TransferStats> per_target;
  TransferStats overall;
  std::vector<std::vector<EpisodeOutcome>> episodes;  // per target
};

struct TransferOptions {
  int reps = 4;
  int horizon = 5;
  double tolerance = 7.5;
  bool noise = true;
  bool adversarial = false;
  std::uint64_t seed = 0;
};

inline TransferStats summarize(const std::string& name, const Rgb& target, std::span<const EpisodeOutcome> eps) {
  TransferStats s;
  s.name = name;
  s.target = target;
  s.episodes = static_cast<int>(eps.size());
  if (eps.empty()) return s;
  std::vector<double> d;
  double steps = 0.0, wins = 0.0;
  for (const auto& e : eps) {
    d.push_back(e.final_distance);
    steps += e.steps;
    wins += e.success ? 1.0 : 0.0;
  }
  s.d_mean = detail::mean(d);
  s.d_std = detail::population_std(d);
  s.s_mean = steps / static_cast<double>(eps.size());
  s.success_rate = wins / static_cast<double>(eps.size());
  return s;
}

/// The evaluation environment: the training formulation with the dynamics,
/// horizon, tolerance and perturbations replaced.
inline EnvConfig transfer_env_config(const EnvConfig& train_cfg, DynamicsModel eval_dynamics,
                                     const TransferOptions& opt) {
  EnvConfig cfg = train_cfg;
  cfg.dynamics = eval_dynamics;
  cfg.horizon = opt.horizon;
  cfg.tolerance = opt.tolerance;
  if (!opt.noise) cfg.noise_std = {0.0, 0.0, 0.0};
  cfg.adv_enabled = opt.adversarial;
  cfg.seed = opt.seed;
  return cfg;
}

/// Runs `reps` episodes per target with `policy(observation) -> action`.
template <class Policy>
TransferReport evaluate_transfer(Policy&& policy, const EnvConfig& train_cfg, DynamicsModel eval_dynamics,
                                 std::span<const NamedTarget> targets, const TransferOptions& opt) {
  if (opt.reps < 0) throw std::invalid_argument("reps must be >= 0");
  TransferReport report;
  report.train_dynamics = train_cfg.dynamics;
  report.eval_dynamics = eval_dynamics;
  report.horizon = opt.horizon;
  report.tolerance = opt.tolerance;
  ColorMixEnv env(transfer_env_config(train_cfg, eval_dynamics, opt));
  std::vector<EpisodeOutcome> all;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::vector<EpisodeOutcome> eps;
    for (int rep = 0; rep < opt.reps; ++rep) {
      Observation obs = env.reset(targets[t].color, opt.seed + 1000003ULL * t + static_cast<std::uint64_t>(rep));
      EpisodeOutcome out;
      for (;;) {
        StepResult r = env.step(policy(std::span<const double>(obs)));
        if (r.done) {
          out.final_distance = r.info.distance;
          out.steps = r.info.step_count;
          out.success = r.info.success;
          out.final_color = r.info.true_color;
          break;
        }
        obs = std::move(r.observation);
      }
      eps.push_back(out);
      all.push_back(out);
    }
    report.per_target.push_back(summarize(targets[t].name, targets[t].color, eps));
    report.episodes.push_back(std::move(eps));
  }
  report.overall = summarize("Avg", Rgb{}, all);
  return report;
}

/// Greedy policy adapter for a trained network.
inline auto greedy_policy(const PolicyValueNet& net) {
  return [&net](std::span<const double> obs) {
    PolicyValueNet::Cache cache;
    net.forward(obs, cache);
    return argmax(cache.logits);
  };
}

}  // namespace chromamix

#endif  // CHROMAMIX_METRICS_HPP_
