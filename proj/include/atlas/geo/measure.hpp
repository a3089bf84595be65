#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "atlas/error.hpp"
#include "atlas/geo/types.hpp"
#include "atlas/tolerances.hpp"

namespace atlas::geo {

// Measuring tools work on the authalic sphere. Against the ellipsoid the
// error stays under 0.5 %, which is fine for an on-screen ruler.

/// Haversine distance in meters.
inline double great_circle_distance(const GeoPoint& a, const GeoPoint& b,
                                    double radius = defaults::authalic_radius_m) {
  const double p1 = a.lat() * deg_to_rad, p2 = b.lat() * deg_to_rad;
  const double dphi = p2 - p1;
  const double dlam = longitude_delta(b.lon(), a.lon()) * deg_to_rad;
  const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlam / 2.0);
  const double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  return 2.0 * radius * std::asin(std::min(1.0, std::sqrt(h)));
}

inline double path_length(std::span<const GeoPoint> path,
                          double radius = defaults::authalic_radius_m) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i)
    total += great_circle_distance(path[i - 1], path[i], radius);
  return total;
}

/// Area enclosed by a closed ring (first vertex repeated last), square
/// meters. Each edge contributes the signed spherical excess of the
/// quadrilateral it forms with the equator; the sum's magnitude is the area,
/// so orientation does not matter. Rings that enclose a pole are not
/// supported.
inline double geodesic_area(std::span<const GeoPoint> ring,
                            double radius = defaults::authalic_radius_m) {
  if (ring.size() < 4) throw error(errc::invalid_argument, "ring needs at least 4 points");
  if (!(ring.front().lon() == ring.back().lon() && ring.front().lat() == ring.back().lat()))
    throw error(errc::invalid_argument, "ring is not closed");
  double excess = 0.0;
  for (std::size_t i = 1; i < ring.size(); ++i) {
    const double dlam = longitude_delta(ring[i].lon(), ring[i - 1].lon()) * deg_to_rad;
    const double t1 = std::tan(ring[i - 1].lat() * deg_to_rad / 2.0);
    const double t2 = std::tan(ring[i].lat() * deg_to_rad / 2.0);
    excess += 2.0 * std::atan(std::tan(dlam / 2.0) * (t1 + t2) / (1.0 + t1 * t2));
  }
  return std::abs(excess) * radius * radius;
}

}  // namespace atlas::geo
