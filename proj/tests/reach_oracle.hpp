#ifndef CHROMAMIX_TESTS_REACH_ORACLE_HPP_
#define CHROMAMIX_TESTS_REACH_ORACLE_HPP_

// Exact answers for the linear mixing model, computed without any grid:
//  - closest color: Euclidean projection of the target onto the ink triangle;
//  - minimax: the linear program min t s.t. |sum_i w_i ink_i,k - g_k| <= t on
//    the simplex, solved by enumerating basic solutions.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "chromamix/color.hpp"

namespace chromamix::testing {

namespace oracle_detail {

using Vec3 = std::array<double, 3>;

inline Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 vec(const Rgb& c) { return {c.r, c.g, c.b}; }

inline Vec3 closest_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = sub(b, a);
  const double t = std::clamp(dot(sub(p, a), ab) / dot(ab, ab), 0.0, 1.0);
  return {a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]};
}

inline std::optional<Vec3> solve3(std::array<std::array<double, 4>, 3> m) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    if (std::abs(m[piv][c]) < 1e-12) return std::nullopt;
    std::swap(m[c], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (int k = c; k < 4; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return Vec3{m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

}  // namespace oracle_detail

/// Channel deviation of the LERP-reachable color nearest (Euclidean) to target.
inline double lerp_closest_tau(const Rgb& target) {
  using namespace oracle_detail;
  const Vec3 a = vec(BaseInks::kCyan), b = vec(BaseInks::kMagenta), c = vec(BaseInks::kYellow), p = vec(target);
  // Barycentric projection onto the plane.
  const Vec3 v0 = sub(b, a), v1 = sub(c, a), v2 = sub(p, a);
  const double d00 = dot(v0, v0), d01 = dot(v0, v1), d11 = dot(v1, v1), d20 = dot(v2, v0), d21 = dot(v2, v1);
  const double den = d00 * d11 - d01 * d01;
  const double v = (d11 * d20 - d01 * d21) / den, w = (d00 * d21 - d01 * d20) / den, u = 1.0 - v - w;
  Vec3 best{};
  if (u >= 0 && v >= 0 && w >= 0) {
    best = {u * a[0] + v * b[0] + w * c[0], u * a[1] + v * b[1] + w * c[1], u * a[2] + v * b[2] + w * c[2]};
  } else {
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [s, e] : {std::pair{a, b}, std::pair{b, c}, std::pair{a, c}}) {
      const Vec3 q = closest_on_segment(p, s, e);
      const Vec3 d = sub(q, p);
      if (dot(d, d) < best_d) {
        best_d = dot(d, d);
        best = q;
      }
    }
  }
  return std::max({std::abs(best[0] - p[0]), std::abs(best[1] - p[1]), std::abs(best[2] - p[2])});
}

/// Optimal value of the minimax LP. Variables x = (w0, w1, t) with w2 = 1 - w0 - w1.
inline double lerp_minimax_tau(const Rgb& target) {
  using namespace oracle_detail;
  // Constraints as rows {a0, a1, a2, b} meaning a.x <= b.
  std::array<std::array<double, 4>, 9> rows{};
  std::size_t n = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double c0 = BaseInks::kCyan[k], c1 = BaseInks::kMagenta[k], c2 = BaseInks::kYellow[k];
    // mix_k = c2 + w0 (c0 - c2) + w1 (c1 - c2)
    const double g = target[k] - c2;
    rows[n++] = {c0 - c2, c1 - c2, -1.0, g};         // mix - g <= t
    rows[n++] = {-(c0 - c2), -(c1 - c2), -1.0, -g};  // g - mix <= t
  }
  rows[n++] = {-1, 0, 0, 0};
  rows[n++] = {0, -1, 0, 0};
  rows[n++] = {1, 1, 0, 1};

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = i + 1; j < 9; ++j) {
      for (std::size_t k = j + 1; k < 9; ++k) {
        const auto x = solve3({rows[i], rows[j], rows[k]});
        if (!x) continue;
        bool feasible = true;
        for (const auto& r : rows) {
          if (r[0] * (*x)[0] + r[1] * (*x)[1] + r[2] * (*x)[2] > r[3] + 1e-9) {
            feasible = false;
            break;
          }
        }
        if (feasible) best = std::min(best, (*x)[2]);
      }
    }
  }
  return best;
}

}  // namespace chromamix::testing

#endif  // CHROMAMIX_TESTS_REACH_ORACLE_HPP_
