#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "atlas/geo/types.hpp"

namespace atlas::geo {

/// Distance from p to the segment [a, b].
inline double segment_distance(const ProjectedPoint& p, const ProjectedPoint& a,
                               const ProjectedPoint& b) noexcept {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

/// Douglas-Peucker with an explicit stack. Endpoints are always kept; a
/// vertex survives when it lies more than `tol` from the chord of its span.
/// tol == 0 returns the input untouched.
inline std::vector<ProjectedPoint> simplify(std::span<const ProjectedPoint> line, double tol) {
  if (tol <= 0.0 || line.size() < 3) return {line.begin(), line.end()};
  std::vector<char> keep(line.size(), 0);
  keep.front() = keep.back() = 1;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, line.size() - 1}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    double dmax = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = segment_distance(line[i], line[lo], line[hi]);
      if (d > dmax) {
        dmax = d;
        at = i;
      }
    }
    if (dmax > tol) {
      keep[at] = 1;
      stack.emplace_back(lo, at);
      stack.emplace_back(at, hi);
    }
  }
  std::vector<ProjectedPoint> out;
  for (std::size_t i = 0; i < line.size(); ++i)
    if (keep[i]) out.push_back(line[i]);
  return out;
}

}  // namespace atlas::geo
