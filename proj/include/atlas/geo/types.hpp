#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "atlas/error.hpp"
#include "atlas/geo/longitude.hpp"

namespace atlas::geo {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double deg_to_rad = pi / 180.0;
inline constexpr double rad_to_deg = 180.0 / pi;
inline constexpr double arcsec_to_rad = deg_to_rad / 3600.0;

/// Geographic position. Longitude lives in [0, 360), latitude in [-90, 90],
/// height is ellipsoidal in meters.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lon, double lat, double h = 0.0)
      : lon_(normalize_longitude(lon)), lat_(lat), h_(h) {
    if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0)
      throw error(errc::invalid_argument, "latitude out of range [-90, 90]");
    if (!std::isfinite(h)) throw error(errc::invalid_argument, "height must be finite");
  }

  /// Bypasses normalization and range checks. Used when reading stored data
  /// so that validation can report what is actually on disk.
  static GeoPoint unchecked(double lon, double lat, double h = 0.0) noexcept {
    GeoPoint p;
    p.lon_ = lon;
    p.lat_ = lat;
    p.h_ = h;
    return p;
  }

  double lon() const noexcept { return lon_; }
  double lat() const noexcept { return lat_; }
  double h() const noexcept { return h_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lon_ = 0.0;
  double lat_ = 0.0;
  double h_ = 0.0;
};

/// Planar easting/northing in meters.
struct ProjectedPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const ProjectedPoint&, const ProjectedPoint&) = default;
};

inline bool is_finite(const ProjectedPoint& p) noexcept {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

struct Ellipsoid {
  std::string name;
  double a = 6378137.0;         // semi-major axis, meters
  double inv_f = 298.257223563;

  double f() const noexcept { return 1.0 / inv_f; }
  double e2() const noexcept { return f() * (2.0 - f()); }
  double b() const noexcept { return a * (1.0 - f()); }

  void check() const {
    if (!(a > 0.0) || !std::isfinite(a))
      throw error(errc::invalid_argument, "ellipsoid semi-major axis must be positive");
    if (!(inv_f > 1.0) || !std::isfinite(inv_f))
      throw error(errc::invalid_argument, "ellipsoid inverse flattening must exceed 1");
  }

  friend bool operator==(const Ellipsoid& l, const Ellipsoid& r) noexcept {
    return l.a == r.a && l.inv_f == r.inv_f;
  }
};

inline Ellipsoid wgs84() { return {"wgs84", 6378137.0, 298.257223563}; }

/// Named reference ellipsoids accepted in spec strings.
inline std::optional<Ellipsoid> ellipsoid_by_name(std::string_view name) {
  if (name == "wgs84") return wgs84();
  if (name == "grs80") return Ellipsoid{"grs80", 6378137.0, 298.257222101};
  if (name == "intl1924") return Ellipsoid{"intl1924", 6378388.0, 297.0};
  if (name == "clarke1866") return Ellipsoid{"clarke1866", 6378206.4, 294.9786982};
  if (name == "clarke1880") return Ellipsoid{"clarke1880", 6378249.145, 293.465};
  if (name == "wgs72") return Ellipsoid{"wgs72", 6378135.0, 298.26};
  return std::nullopt;
}

enum class ProjectionKind {
  transverse_mercator,
  // Plate carree around the central meridian; used for caches whose extent is
  // wider than one TM zone (the regional overview, Kiribati).
  equirectangular,
};

struct ProjectionSpec {
  ProjectionKind kind = ProjectionKind::transverse_mercator;
  double central_meridian = 0.0;  // degrees, [0, 360)
  double lat_origin = 0.0;        // degrees
  double scale_factor = 1.0;
  double false_easting = 0.0;   // meters
  double false_northing = 0.0;  // meters
  Ellipsoid ellipsoid = wgs84();

  void check() const {
    ellipsoid.check();
    if (!(scale_factor > 0.9 && scale_factor <= 1.1))
      throw error(errc::invalid_argument, "scale factor must lie in (0.9, 1.1]");
    if (!(central_meridian >= 0.0 && central_meridian < 360.0))
      throw error(errc::invalid_argument, "central meridian must lie in [0, 360)");
    if (!(lat_origin >= -90.0 && lat_origin <= 90.0))
      throw error(errc::invalid_argument, "latitude of origin out of range");
    if (!std::isfinite(false_easting) || !std::isfinite(false_northing))
      throw error(errc::invalid_argument, "false origin must be finite");
  }

  friend bool operator==(const ProjectionSpec&, const ProjectionSpec&) = default;
};

/// UTM is TM with k0 = 0.9996 and a 500 km false easting. The central
/// meridian here is arbitrary so that custom zones can be expressed.
inline ProjectionSpec utm_like(double central_meridian, bool south, Ellipsoid e = wgs84()) {
  ProjectionSpec s;
  s.central_meridian = normalize_longitude(central_meridian);
  s.scale_factor = 0.9996;
  s.false_easting = 500000.0;
  s.false_northing = south ? 10000000.0 : 0.0;
  s.ellipsoid = std::move(e);
  return s;
}

/// Seven-parameter Helmert shift, position-vector convention. Translations
/// in meters, rotations in arc-seconds, scale in parts per million.
struct DatumShift {
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double rx = 0.0, ry = 0.0, rz = 0.0;
  double ds = 0.0;

  bool is_zero() const noexcept {
    return dx == 0.0 && dy == 0.0 && dz == 0.0 && rx == 0.0 && ry == 0.0 && rz == 0.0 &&
           ds == 0.0;
  }

  void check() const {
    for (double v : {dx, dy, dz, rx, ry, rz, ds})
      if (!std::isfinite(v)) throw error(errc::invalid_argument, "datum shift must be finite");
  }

  friend bool operator==(const DatumShift&, const DatumShift&) = default;
};

/// x' = a*x + b*y + c,  y' = d*x + e*y + f
struct AffineTransform {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  double determinant() const noexcept { return a * e - b * d; }

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

struct ControlPointPair {
  ProjectedPoint source;  // local grid
  ProjectedPoint target;  // known grid
};

struct Geocentric {
  double x = 0.0, y = 0.0, z = 0.0;

  friend bool operator==(const Geocentric&, const Geocentric&) = default;
};

}  // namespace atlas::geo
