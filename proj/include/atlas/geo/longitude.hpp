#pragma once

#include <cmath>

#include "atlas/error.hpp"

namespace atlas::geo {

/// Maps any finite longitude onto [0, 360). Archipelagos that straddle the
/// antimeridian stay contiguous in this domain.
inline double normalize_longitude(double lon) {
  if (!std::isfinite(lon))
    throw error(errc::invalid_argument, "longitude must be finite");
  double r = std::fmod(lon, 360.0);
  if (r < 0.0) r += 360.0;
  // -tiny + 360 rounds to 360
  if (r >= 360.0) r -= 360.0;
  return r == 0.0 ? 0.0 : r;  // drop the sign of -0
}

/// Signed difference lon - ref wrapped into (-180, 180].
inline double longitude_delta(double lon, double ref) {
  double d = std::fmod(lon - ref, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

}  // namespace atlas::geo
