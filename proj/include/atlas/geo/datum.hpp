#pragma once

#include <cmath>

#include "atlas/geo/types.hpp"

namespace atlas::geo {

inline Geocentric geodetic_to_geocentric(const Ellipsoid& e, const GeoPoint& p) {
  const double e2 = e.e2();
  const double phi = p.lat() * deg_to_rad, lam = p.lon() * deg_to_rad;
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double n = e.a / std::sqrt(1.0 - e2 * sphi * sphi);
  return {(n + p.h()) * cphi * std::cos(lam), (n + p.h()) * cphi * std::sin(lam),
          (n * (1.0 - e2) + p.h()) * sphi};
}

/// Iterative inverse. Converges to well below 1e-12 rad in a handful of
/// steps for any terrestrial height.
inline GeoPoint geocentric_to_geodetic(const Ellipsoid& e, const Geocentric& c) {
  const double e2 = e.e2();
  const double p = std::hypot(c.x, c.y);
  const double lon = std::atan2(c.y, c.x) * rad_to_deg;
  if (p < 1e-9 * e.a) {
    const double lat = c.z >= 0.0 ? 90.0 : -90.0;
    return GeoPoint(lon, lat, std::abs(c.z) - e.b());
  }
  double phi = std::atan2(c.z, p * (1.0 - e2));
  double h = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double s = std::sin(phi);
    const double n = e.a / std::sqrt(1.0 - e2 * s * s);
    h = p * std::cos(phi) + c.z * s - e.a * e.a / n;
    const double next = std::atan2(c.z, p * (1.0 - e2 * n / (n + h)));
    const bool done = std::abs(next - phi) < 1e-15;
    phi = next;
    if (done) break;
  }
  const double s = std::sin(phi);
  const double n = e.a / std::sqrt(1.0 - e2 * s * s);
  h = p * std::cos(phi) + c.z * s - e.a * e.a / n;
  return GeoPoint(lon, phi * rad_to_deg, h);
}

/// Position-vector Helmert transform with small-angle rotation matrix:
/// X' = T + (1 + ds) * R * X.
inline Geocentric helmert_shift(const DatumShift& s, const Geocentric& v) {
  const double rx = s.rx * arcsec_to_rad, ry = s.ry * arcsec_to_rad, rz = s.rz * arcsec_to_rad;
  const double m = 1.0 + s.ds * 1e-6;
  return {s.dx + m * (v.x - rz * v.y + ry * v.z),
          s.dy + m * (rz * v.x + v.y - rx * v.z),
          s.dz + m * (-ry * v.x + rx * v.y + v.z)};
}

/// Source datum: its ellipsoid plus the shift that takes it to WGS84.
struct SourceDatum {
  Ellipsoid ellipsoid = wgs84();
  DatumShift to_wgs84{};
};

inline GeoPoint datum_transform(const SourceDatum& src, const GeoPoint& p) {
  if (src.ellipsoid == wgs84() && src.to_wgs84.is_zero()) return p;
  const Geocentric c = helmert_shift(src.to_wgs84, geodetic_to_geocentric(src.ellipsoid, p));
  return geocentric_to_geodetic(wgs84(), c);
}

}  // namespace atlas::geo
