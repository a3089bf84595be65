#pragma once

#include <cmath>
#include <variant>

#include "atlas/geo/transverse_mercator.hpp"
#include "atlas/geo/types.hpp"

namespace atlas::geo {

/// Equidistant cylindrical projection about the central meridian. lat_origin
/// acts as the standard parallel. Valid for every longitude.
class Equirectangular {
 public:
  explicit Equirectangular(const ProjectionSpec& spec) : spec_(spec) {
    spec_.check();
    if (spec_.kind != ProjectionKind::equirectangular)
      throw error(errc::invalid_argument, "projection is not equirectangular");
    kx_ = spec_.scale_factor * spec_.ellipsoid.a * std::cos(spec_.lat_origin * deg_to_rad);
    ky_ = spec_.scale_factor * spec_.ellipsoid.a;
  }

  const ProjectionSpec& spec() const noexcept { return spec_; }

  ProjectedPoint forward(const GeoPoint& p) const {
    const double dlon = longitude_delta(p.lon(), spec_.central_meridian);
    return {spec_.false_easting + kx_ * dlon * deg_to_rad,
            spec_.false_northing + ky_ * p.lat() * deg_to_rad};
  }

  GeoPoint inverse(const ProjectedPoint& q) const {
    if (!is_finite(q)) throw error(errc::invalid_argument, "projected point must be finite");
    const double dlon = (q.x - spec_.false_easting) / kx_ * rad_to_deg;
    const double lat = (q.y - spec_.false_northing) / ky_ * rad_to_deg;
    if (!(std::abs(dlon) <= 180.0) || !(std::abs(lat) <= 90.0))
      throw error(errc::out_of_zone, "projected point outside the projection domain");
    return GeoPoint(spec_.central_meridian + dlon, lat);
  }

 private:
  ProjectionSpec spec_;
  double kx_ = 0.0, ky_ = 0.0;
};

/// Dispatches on ProjectionSpec::kind with coefficients computed once.
class Projector {
 public:
  explicit Projector(const ProjectionSpec& spec) : impl_(make(spec)) {}

  const ProjectionSpec& spec() const noexcept {
    return std::visit([](const auto& p) -> const ProjectionSpec& { return p.spec(); }, impl_);
  }
  ProjectedPoint forward(const GeoPoint& p) const {
    return std::visit([&](const auto& impl) { return impl.forward(p); }, impl_);
  }
  GeoPoint inverse(const ProjectedPoint& q) const {
    return std::visit([&](const auto& impl) { return impl.inverse(q); }, impl_);
  }

 private:
  using Impl = std::variant<TransverseMercator, Equirectangular>;
  static Impl make(const ProjectionSpec& spec) {
    if (spec.kind == ProjectionKind::equirectangular) return Equirectangular(spec);
    return TransverseMercator(spec);
  }
  Impl impl_;
};

}  // namespace atlas::geo
