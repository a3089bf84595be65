#pragma once

// Brute-force planar geometry tests, written independently of the cache's
// own clipping and distance code.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "atlas/warehouse/geometry.hpp"
#include "oracles.hpp"

namespace oracle {

using atlas::Box;
using atlas::GeometryKind;
using atlas::PlanarGeometry;
namespace geo = atlas::geo;

// Separating-axis test: segment vs axis-aligned box.
inline bool sat_segment_box(P2 a, P2 b, const Box& q) {
  if (std::max(a.x, b.x) < q.minx || std::min(a.x, b.x) > q.maxx) return false;
  if (std::max(a.y, b.y) < q.miny || std::min(a.y, b.y) > q.maxy) return false;
  const double nx = -(b.y - a.y), ny = b.x - a.x;
  const double d = nx * a.x + ny * a.y;
  double lo = INFINITY, hi = -INFINITY;
  for (auto [x, y] : {std::pair{q.minx, q.miny}, {q.maxx, q.miny}, {q.minx, q.maxy}, {q.maxx, q.maxy}}) {
    const double v = nx * x + ny * y;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo <= d && d <= hi;
}

// Winding number inclusion over all rings of one part.
inline int winding(const std::vector<std::vector<geo::ProjectedPoint>>& rings, P2 p) {
  int wn = 0;
  for (const auto& r : rings)
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      const auto &a = r[i], &b = r[i + 1];
      const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
      if (a.y <= p.y) {
        if (b.y > p.y && cross > 0) ++wn;
      } else if (b.y <= p.y && cross < 0) {
        --wn;
      }
    }
  return wn;
}

inline bool geometry_intersects(const PlanarGeometry& g, const Box& q) {
  for (const auto& part : g.parts) {
    for (const auto& path : part) {
      if (path.size() == 1 && q.contains(path[0].x, path[0].y)) return true;
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        if (sat_segment_box({path[i].x, path[i].y}, {path[i + 1].x, path[i + 1].y}, q)) return true;
    }
    if ((g.kind == GeometryKind::polygon || g.kind == GeometryKind::multipolygon) &&
        winding(part, {(q.minx + q.maxx) / 2, (q.miny + q.maxy) / 2}) != 0)
      return true;
  }
  return false;
}

inline double geometry_distance(const PlanarGeometry& g, P2 p) {
  double best = INFINITY;
  for (const auto& part : g.parts) {
    if ((g.kind == GeometryKind::polygon || g.kind == GeometryKind::multipolygon) && winding(part, p) != 0) return 0.0;
    for (const auto& path : part) {
      if (path.size() == 1) best = std::min(best, std::hypot(path[0].x - p.x, path[0].y - p.y));
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        best = std::min(best, seg_dist(p, {path[i].x, path[i].y}, {path[i + 1].x, path[i + 1].y}));
    }
  }
  return best;
}

}  // namespace oracle
