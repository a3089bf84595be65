#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "atlas/geo/types.hpp"

namespace atlas {

/// Geometry kinds. `image` only ever appears on a LayerSpec: it declares a
/// raster layer whose content is kept outside the warehouse.
enum class GeometryKind : std::uint8_t { point, polyline, polygon, multipolygon, image };

constexpr std::string_view to_string(GeometryKind k) noexcept {
  switch (k) {
    case GeometryKind::point: return "Point";
    case GeometryKind::polyline: return "PolyLine";
    case GeometryKind::polygon: return "Polygon";
    case GeometryKind::multipolygon: return "MultiPolygon";
    case GeometryKind::image: return "Image";
  }
  return "?";
}

inline std::optional<GeometryKind> geometry_kind_from_string(std::string_view s) {
  for (auto k : {GeometryKind::point, GeometryKind::polyline, GeometryKind::polygon,
                 GeometryKind::multipolygon, GeometryKind::image})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

// Planar accessors so the same algorithms run on geographic (lon, lat) and
// projected (x, y) coordinates.
inline double cx(const geo::GeoPoint& p) noexcept { return p.lon(); }
inline double cy(const geo::GeoPoint& p) noexcept { return p.lat(); }
inline double cx(const geo::ProjectedPoint& p) noexcept { return p.x; }
inline double cy(const geo::ProjectedPoint& p) noexcept { return p.y; }

template <typename Coord>
using Path = std::vector<Coord>;

/**
 * Vector geometry, nested as polygons -> rings -> vertices regardless of
 * kind so that one traversal works everywhere:
 *   Point        {{{p}}}
 *   PolyLine     {{{v0, v1, ...}}}
 *   Polygon      {{outer, hole...}}
 *   MultiPolygon {{outer, hole...}, {outer, ...}, ...}
 * Rings repeat their first vertex at the end.
 */
template <typename Coord>
struct BasicGeometry {
  GeometryKind kind = GeometryKind::point;
  std::vector<std::vector<Path<Coord>>> parts;

  static BasicGeometry point(Coord c) { return {GeometryKind::point, {{{c}}}}; }
  static BasicGeometry polyline(Path<Coord> v) { return {GeometryKind::polyline, {{std::move(v)}}}; }
  static BasicGeometry polygon(std::vector<Path<Coord>> rings) {
    return {GeometryKind::polygon, {std::move(rings)}};
  }

  std::size_t vertex_count() const noexcept {
    std::size_t n = 0;
    for (const auto& part : parts)
      for (const auto& path : part) n += path.size();
    return n;
  }

  template <typename F>
  void for_each_path(F&& f) const {
    for (const auto& part : parts)
      for (const auto& path : part) f(path);
  }

  template <typename F>
  void for_each_path(F&& f) {
    for (auto& part : parts)
      for (auto& path : part) f(path);
  }

  bool operator==(const BasicGeometry&) const = default;
};

using GeoGeometry = BasicGeometry<geo::GeoPoint>;
using PlanarGeometry = BasicGeometry<geo::ProjectedPoint>;

struct Box {
  double minx = std::numeric_limits<double>::infinity();
  double miny = std::numeric_limits<double>::infinity();
  double maxx = -std::numeric_limits<double>::infinity();
  double maxy = -std::numeric_limits<double>::infinity();

  bool empty() const noexcept { return minx > maxx || miny > maxy; }
  void expand(double x, double y) noexcept {
    minx = std::min(minx, x);
    miny = std::min(miny, y);
    maxx = std::max(maxx, x);
    maxy = std::max(maxy, y);
  }
  void expand(const Box& b) noexcept {
    if (b.empty()) return;
    expand(b.minx, b.miny);
    expand(b.maxx, b.maxy);
  }
  bool intersects(const Box& b) const noexcept {
    return minx <= b.maxx && b.minx <= maxx && miny <= b.maxy && b.miny <= maxy;
  }
  bool contains(double x, double y) const noexcept {
    return x >= minx && x <= maxx && y >= miny && y <= maxy;
  }
  double width() const noexcept { return maxx - minx; }
  double height() const noexcept { return maxy - miny; }

  bool operator==(const Box&) const = default;
};

template <typename Coord>
Box bounds(const BasicGeometry<Coord>& g) {
  Box b;
  g.for_each_path([&](const auto& path) {
    for (const auto& c : path) b.expand(cx(c), cy(c));
  });
  return b;
}

/// Shoelace signed area; positive for counter-clockwise rings.
template <typename Coord>
double signed_area(std::span<const Coord> ring) noexcept {
  double s = 0.0;
  for (std::size_t i = 1; i < ring.size(); ++i)
    s += cx(ring[i - 1]) * cy(ring[i]) - cx(ring[i]) * cy(ring[i - 1]);
  if (!ring.empty() && !(cx(ring.front()) == cx(ring.back()) && cy(ring.front()) == cy(ring.back())))
    s += cx(ring.back()) * cy(ring.front()) - cx(ring.front()) * cy(ring.back());
  return 0.5 * s;
}

template <typename Coord>
bool is_closed(std::span<const Coord> ring) noexcept {
  return ring.size() >= 2 && cx(ring.front()) == cx(ring.back()) && cy(ring.front()) == cy(ring.back());
}

/// Polygon area of all parts (outer minus holes), planar units.
template <typename Coord>
double planar_area(const BasicGeometry<Coord>& g) noexcept {
  double a = 0.0;
  for (const auto& part : g.parts)
    for (const auto& ring : part) a += signed_area<Coord>(ring);
  return a;
}

template <typename Coord>
double planar_length(const BasicGeometry<Coord>& g) noexcept {
  double len = 0.0;
  g.for_each_path([&](const auto& path) {
    for (std::size_t i = 1; i < path.size(); ++i)
      len += std::hypot(cx(path[i]) - cx(path[i - 1]), cy(path[i]) - cy(path[i - 1]));
  });
  return len;
}

/// Makes outer rings counter-clockwise and holes clockwise. Returns the
/// number of rings reversed.
template <typename Coord>
std::size_t orient_rings(BasicGeometry<Coord>& g) {
  if (g.kind != GeometryKind::polygon && g.kind != GeometryKind::multipolygon) return 0;
  std::size_t n = 0;
  for (auto& part : g.parts)
    for (std::size_t r = 0; r < part.size(); ++r) {
      const double a = signed_area<Coord>(part[r]);
      if ((r == 0 && a < 0.0) || (r > 0 && a > 0.0)) {
        std::reverse(part[r].begin(), part[r].end());
        ++n;
      }
    }
  return n;
}

/// Even-odd point-in-ring test.
template <typename Coord>
bool ring_contains(std::span<const Coord> ring, double x, double y) noexcept {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const double xi = cx(ring[i]), yi = cy(ring[i]), xj = cx(ring[j]), yj = cy(ring[j]);
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

/// Point inside the polygon parts of g (outer ring in, every hole out).
template <typename Coord>
bool polygon_contains(const BasicGeometry<Coord>& g, double x, double y) noexcept {
  if (g.kind != GeometryKind::polygon && g.kind != GeometryKind::multipolygon) return false;
  for (const auto& part : g.parts) {
    if (part.empty() || !ring_contains<Coord>(part[0], x, y)) continue;
    bool in_hole = false;
    for (std::size_t h = 1; h < part.size() && !in_hole; ++h)
      in_hole = ring_contains<Coord>(part[h], x, y);
    if (!in_hole) return true;
  }
  return false;
}

}  // namespace atlas
