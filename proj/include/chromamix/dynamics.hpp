#ifndef CHROMAMIX_DYNAMICS_HPP_
#define CHROMAMIX_DYNAMICS_HPP_

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chromamix/color.hpp"

namespace chromamix {

// One dispensing event: a volume (µl) of one base ink.
struct MixComponent {
  int ink = 0;
  double volume = 0.0;
};

using Mixture = std::vector<MixComponent>;

/// Per-ink mixing fractions, indexed like BaseInks::kAll. Sums to one.
using InkWeights = std::array<double, BaseInks::kCount>;

enum class DynamicsModel { kLerp, kKm, kWgm };

inline constexpr std::array<DynamicsModel, 3> kAllModels{
    DynamicsModel::kLerp, DynamicsModel::kKm, DynamicsModel::kWgm};

inline std::string to_string(DynamicsModel m) {
  switch (m) {
    case DynamicsModel::kLerp: return "LERP";
    case DynamicsModel::kKm: return "KM";
    case DynamicsModel::kWgm: return "WGM";
  }
  return "?";
}

inline DynamicsModel parse_dynamics(std::string_view s) {
  if (s == "LERP" || s == "lerp") return DynamicsModel::kLerp;
  if (s == "KM" || s == "km") return DynamicsModel::kKm;
  if (s == "WGM" || s == "wgm") return DynamicsModel::kWgm;
  throw std::invalid_argument("unknown dynamics model '" + std::string(s) + "'");
}

/// Total volume of each ink in the mixture.
inline std::array<double, BaseInks::kCount> ink_volumes(const Mixture& mix) {
  std::array<double, BaseInks::kCount> v{};
  for (const auto& c : mix) {
    if (c.ink < 0 || c.ink >= static_cast<int>(BaseInks::kCount)) {
      throw std::invalid_argument("ink index out of range");
    }
    if (!(c.volume > 0.0) || !std::isfinite(c.volume)) {
      throw std::invalid_argument("component volume must be positive");
    }
    v[c.ink] += c.volume;
  }
  return v;
}

/// Volume fractions after merging components of the same ink.
inline InkWeights mix_weights(const Mixture& mix) {
  if (mix.empty()) throw std::invalid_argument("empty mixture");
  const auto v = ink_volumes(mix);
  const double total = v[0] + v[1] + v[2];
  InkWeights w{};
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = v[i] / total;
  return w;
}

// ---------------------------------------------------------------------------
// Mixing rules over arbitrary colors. Zero weights are skipped, so a color that
// does not take part in the mixture never contributes a factor.

inline Rgb lerp_colors(std::span<const Rgb> colors, std::span<const double> weights) {
  Rgb out;
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (weights[i] == 0.0) continue;
    for (std::size_t k = 0; k < kChannels; ++k) out[k] += weights[i] * colors[i][k];
  }
  return clamp_rgb(out);
}

/// Weighted geometric mean of band reflectances.
inline Rgb wgm_colors(std::span<const Rgb> colors, std::span<const double> weights) {
  Reflectance log_mix{};
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const Reflectance s = to_reflectance(colors[i]);
    for (std::size_t k = 0; k < kBands; ++k) log_mix[k] += weights[i] * std::log(s[k]);
  }
  Reflectance mixed;
  for (std::size_t k = 0; k < kBands; ++k) mixed[k] = std::exp(log_mix[k]);
  return from_reflectance(mixed);
}

/// Absorption/scattering ratio K/S of a reflectance (single-constant KM).
inline double km_ratio(double reflectance) {
  const double one_minus = 1.0 - reflectance;
  return one_minus * one_minus / (2.0 * reflectance);
}

/// Inverse of km_ratio on k >= 0.
inline double km_reflectance(double k) {
  // 1 + k - sqrt(k^2 + 2k), written to avoid cancellation for large k.
  return 1.0 / (1.0 + k + std::sqrt(k * k + 2.0 * k));
}

inline Rgb km_colors(std::span<const Rgb> colors, std::span<const double> weights) {
  Reflectance k_mix{};
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const Reflectance s = to_reflectance(colors[i]);
    for (std::size_t k = 0; k < kBands; ++k) k_mix[k] += weights[i] * km_ratio(s[k]);
  }
  Reflectance mixed;
  for (std::size_t k = 0; k < kBands; ++k) mixed[k] = km_reflectance(k_mix[k]);
  return from_reflectance(mixed);
}

// ---------------------------------------------------------------------------
// Base-ink predictions.

inline Rgb predict_weights(DynamicsModel model, const InkWeights& w) {
  const std::span<const Rgb> inks{BaseInks::kAll};
  switch (model) {
    case DynamicsModel::kLerp: return lerp_colors(inks, w);
    case DynamicsModel::kKm: return km_colors(inks, w);
    case DynamicsModel::kWgm: return wgm_colors(inks, w);
  }
  throw std::invalid_argument("unknown dynamics model");
}

inline Rgb mix_lerp(const Mixture& mix) { return predict_weights(DynamicsModel::kLerp, mix_weights(mix)); }
inline Rgb mix_km(const Mixture& mix) { return predict_weights(DynamicsModel::kKm, mix_weights(mix)); }
inline Rgb mix_wgm(const Mixture& mix) { return predict_weights(DynamicsModel::kWgm, mix_weights(mix)); }

inline Rgb predict(DynamicsModel model, const Mixture& mix) {
  return predict_weights(model, mix_weights(mix));
}

}  // namespace chromamix

#endif  // CHROMAMIX_DYNAMICS_HPP_
