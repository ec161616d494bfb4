#ifndef CHROMAMIX_REACHABILITY_HPP_
#define CHROMAMIX_REACHABILITY_HPP_

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chromamix/color.hpp"
#include "chromamix/dynamics.hpp"

namespace chromamix {

// How the "closest achievable color" is chosen before reading off the
// per-channel tolerance it would need.
enum class ReachMode {
  // Minimize Euclidean distance over the weight simplex, then report the
  // largest channel deviation of that color.
  kClosestColor,
  // Minimize the largest channel deviation directly.
  kMinimax,
};

inline std::string to_string(ReachMode m) {
  return m == ReachMode::kClosestColor ? "closest" : "minimax";
}

inline ReachMode parse_reach_mode(std::string_view s) {
  if (s == "closest") return ReachMode::kClosestColor;
  if (s == "minimax") return ReachMode::kMinimax;
  throw std::invalid_argument("unknown reachability mode '" + std::string(s) + "'");
}

struct ReachabilityEntry {
  Rgb target;
  DynamicsModel model = DynamicsModel::kLerp;
  ReachMode mode = ReachMode::kClosestColor;
  double tau_min = 0.0;
  double objective = 0.0;  // minimized quantity: Euclidean distance or tau
  InkWeights weights{};
  Rgb closest;
};

namespace detail {

inline double reach_objective(ReachMode mode, const Rgb& pred, const Rgb& target) {
  return mode == ReachMode::kClosestColor ? rgb_distance(pred, target) : max_channel_deviation(pred, target);
}

// Compass search over (w0, w1) with w2 = 1 - w0 - w1, staying on the simplex.
inline void refine_on_simplex(DynamicsModel model, const Rgb& target, ReachMode mode, double step,
                              InkWeights& w, double& best) {
  static constexpr int kDirs[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
  while (step > 1e-10) {
    bool improved = false;
    for (const auto& d : kDirs) {
      const double a = w[0] + d[0] * step, b = w[1] + d[1] * step;
      const double c = 1.0 - a - b;
      if (a < 0.0 || b < 0.0 || c < -1e-15) continue;
      const InkWeights cand{a, b, std::max(c, 0.0)};
      const double v = reach_objective(mode, predict_weights(model, cand), target);
      if (v < best) {
        best = v;
        w = cand;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace detail

/// Smallest per-channel tolerance at which `target` is reachable under `model`,
/// found by exhaustive search over a simplex grid with spacing `resolution`,
/// optionally polished by a local search around the grid optimum.
inline ReachabilityEntry min_tolerance(DynamicsModel model, const Rgb& target, double resolution = 0.001,
                                       ReachMode mode = ReachMode::kClosestColor, bool refine = true) {
  if (!(resolution > 0.0 && resolution <= 0.1)) throw std::invalid_argument("resolution must be in (0, 0.1]");
  const long long n = std::llround(1.0 / resolution);
  ReachabilityEntry e;
  e.target = target;
  e.model = model;
  e.mode = mode;
  double best = INFINITY;
  InkWeights best_w{1.0, 0.0, 0.0};
  for (long long i = 0; i <= n; ++i) {
    for (long long j = 0; i + j <= n; ++j) {
      const InkWeights w{static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(n - i - j) / n};
      const double v = detail::reach_objective(mode, predict_weights(model, w), target);
      if (v < best) {
        best = v;
        best_w = w;
      }
    }
  }
  if (refine) detail::refine_on_simplex(model, target, mode, 1.0 / static_cast<double>(n), best_w, best);
  e.weights = best_w;
  e.objective = best;
  e.closest = predict_weights(model, best_w);
  e.tau_min = max_channel_deviation(e.closest, target);
  return e;
}

/// Target-major cross product of min_tolerance over models and targets.
inline std::vector<ReachabilityEntry> reachability_table(std::span<const DynamicsModel> models,
                                                         std::span<const Rgb> targets, double resolution = 0.001,
                                                         ReachMode mode = ReachMode::kClosestColor) {
  std::vector<ReachabilityEntry> out;
  out.reserve(models.size() * targets.size());
  for (const Rgb& t : targets) {
    for (DynamicsModel m : models) out.push_back(min_tolerance(m, t, resolution, mode));
  }
  return out;
}

}  // namespace chromamix

#endif  // CHROMAMIX_REACHABILITY_HPP_
