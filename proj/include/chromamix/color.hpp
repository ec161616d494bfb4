#ifndef CHROMAMIX_COLOR_HPP_
#define CHROMAMIX_COLOR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>

namespace chromamix {

inline constexpr double kChannelMax = 255.0;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kBands = 3;

/// Largest Euclidean distance between two colors in the RGB cube.
inline const double kMaxRgbDistance = std::sqrt(3.0) * kChannelMax;

/// Smallest reflectance a band may take. Keeps the geometric-mean mixer away
/// from log(0) and the K/S transform away from division by zero.
inline constexpr double kReflectanceFloor = 1.0 / 255.0;

// A color with continuous channels in [0, 255].
struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  constexpr double operator[](std::size_t k) const {
    return k == 0 ? r : (k == 1 ? g : b);
  }
  constexpr double& operator[](std::size_t k) {
    return k == 0 ? r : (k == 1 ? g : b);
  }

  bool valid() const {
    for (std::size_t k = 0; k < kChannels; ++k) {
      const double v = (*this)[k];
      if (!std::isfinite(v) || v < 0.0 || v > kChannelMax) return false;
    }
    return true;
  }

  friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Rgb& c) {
  return os << '[' << c.r << ", " << c.g << ", " << c.b << ']';
}

inline Rgb checked_rgb(double r, double g, double b) {
  Rgb c{r, g, b};
  if (!c.valid()) {
    throw std::invalid_argument("rgb channel outside [0, 255]");
  }
  return c;
}

inline Rgb clamp_rgb(Rgb c) {
  for (std::size_t k = 0; k < kChannels; ++k) {
    c[k] = std::clamp(c[k], 0.0, kChannelMax);
  }
  return c;
}

/// The three measured printer inks. Index order is fixed: cyan, magenta, yellow.
struct BaseInks {
  static constexpr std::size_t kCount = 3;
  static constexpr Rgb kCyan{42.0, 57.0, 101.0};
  static constexpr Rgb kMagenta{101.0, 54.0, 71.0};
  static constexpr Rgb kYellow{184.0, 181.0, 97.0};
  static constexpr std::array<Rgb, kCount> kAll{kCyan, kMagenta, kYellow};

  static constexpr const Rgb& at(std::size_t ink) { return kAll.at(ink); }

  static const char* name(std::size_t ink) {
    static constexpr const char* kNames[kCount] = {"cyan", "magenta", "yellow"};
    return kNames[ink];
  }
};

inline double rgb_distance(const Rgb& a, const Rgb& b) {
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

/// Largest absolute per-channel deviation.
inline double max_channel_deviation(const Rgb& a, const Rgb& b) {
  return std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
}

/// Target reached: every channel within tau of the target.
inline bool within_tolerance(const Rgb& current, const Rgb& target, double tau) {
  for (std::size_t k = 0; k < kChannels; ++k) {
    if (std::abs(current[k] - target[k]) > tau) return false;
  }
  return true;
}

/// Per-band reflectance in (0, 1]. The three bands are the R, G and B channels
/// treated as wide spectral bands.
struct Reflectance {
  std::array<double, kBands> bands{};

  double operator[](std::size_t i) const { return bands[i]; }
  double& operator[](std::size_t i) { return bands[i]; }
};

inline Reflectance to_reflectance(const Rgb& c) {
  Reflectance s;
  for (std::size_t k = 0; k < kBands; ++k) {
    s[k] = std::max(c[k] / kChannelMax, kReflectanceFloor);
  }
  return s;
}

inline Rgb from_reflectance(const Reflectance& s) {
  Rgb c;
  for (std::size_t k = 0; k < kBands; ++k) {
    c[k] = std::clamp(s[k] * kChannelMax, 0.0, kChannelMax);
  }
  return c;
}

/// Parses "r,g,b" into a validated color.
inline Rgb parse_rgb(const std::string& text) {
  std::array<double, 3> v{};
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t comma = text.find(',', pos);
    const bool last = (k == 2);
    if (last != (comma == std::string::npos)) {
      throw std::invalid_argument("expected r,g,b triple: '" + text + "'");
    }
    const std::string field = text.substr(pos, last ? std::string::npos : comma - pos);
    std::size_t used = 0;
    try {
      v[k] = std::stod(field, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("expected r,g,b triple: '" + text + "'");
    }
    if (field.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("expected r,g,b triple: '" + text + "'");
    }
    pos = comma + 1;
  }
  return checked_rgb(v[0], v[1], v[2]);
}

}  // namespace chromamix

#endif  // CHROMAMIX_COLOR_HPP_
