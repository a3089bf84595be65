#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "atlas/error.hpp"
#include "atlas/geo/types.hpp"
#include "atlas/tolerances.hpp"

namespace atlas::geo {

/**
 * Transverse Mercator on an ellipsoid using Krueger's series in the third
 * flattening n, carried to fourth order. Forward and inverse share the
 * rectifying radius A and the conformal-latitude machinery; the series
 * truncation error is far below a micrometre within the 10 degree zone this
 * class accepts.
 */
class TransverseMercator {
 public:
  explicit TransverseMercator(const ProjectionSpec& spec,
                              double max_offset_deg = defaults::tm_max_offset_deg)
      : spec_(spec), max_offset_deg_(max_offset_deg) {
    spec_.check();
    if (spec_.kind != ProjectionKind::transverse_mercator)
      throw error(errc::invalid_argument, "projection is not transverse mercator");
    const double f = spec_.ellipsoid.f();
    e2_ = f * (2.0 - f);
    e_ = std::sqrt(e2_);
    const double n = f / (2.0 - f);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n;
    rectifying_radius_ = spec_.ellipsoid.a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0);
    alpha_ = {n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
              13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
              61.0 * n3 / 240.0 - 103.0 * n4 / 140.0,
              49561.0 * n4 / 161280.0};
    beta_ = {n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0,
             n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0,
             17.0 * n3 / 480.0 - 37.0 * n4 / 840.0,
             4397.0 * n4 / 161280.0};
    xi_origin_ = gauss_krueger(spec_.lat_origin * deg_to_rad, 0.0).xi;
  }

  const ProjectionSpec& spec() const noexcept { return spec_; }

  ProjectedPoint forward(const GeoPoint& p) const {
    const double dlon = longitude_delta(p.lon(), spec_.central_meridian);
    if (!(std::abs(dlon) < max_offset_deg_))
      throw error(errc::out_of_zone, "point too far from the central meridian",
                  "offset " + std::to_string(dlon) + " deg");
    const auto g = gauss_krueger(p.lat() * deg_to_rad, dlon * deg_to_rad);
    const double k0a = spec_.scale_factor * rectifying_radius_;
    return {spec_.false_easting + k0a * g.eta,
            spec_.false_northing + k0a * (g.xi - xi_origin_)};
  }

  GeoPoint inverse(const ProjectedPoint& q) const {
    if (!is_finite(q)) throw error(errc::invalid_argument, "projected point must be finite");
    const double k0a = spec_.scale_factor * rectifying_radius_;
    const double xi = (q.y - spec_.false_northing) / k0a + xi_origin_;
    const double eta = (q.x - spec_.false_easting) / k0a;
    double xip = xi, etap = eta;
    for (int j = 0; j < 4; ++j) {
      const double m = 2.0 * (j + 1);
      xip -= beta_[j] * std::sin(m * xi) * std::cosh(m * eta);
      etap -= beta_[j] * std::cos(m * xi) * std::sinh(m * eta);
    }
    const double sh = std::sinh(etap), c = std::cos(xip);
    const double dlon = std::atan2(sh, c) * rad_to_deg;
    if (!(std::abs(dlon) < max_offset_deg_) || !std::isfinite(dlon))
      throw error(errc::out_of_zone, "projected point outside the projection zone");
    const double taup = std::sin(xip) / std::hypot(sh, c);
    double lat = std::atan(conformal_to_geodetic(taup)) * rad_to_deg;
    lat = std::clamp(lat, -90.0, 90.0);
    return GeoPoint(spec_.central_meridian + dlon, lat);
  }

 private:
  struct XiEta {
    double xi, eta;
  };

  // tan(conformal latitude) from tan(geodetic latitude)
  double geodetic_to_conformal(double tau) const {
    const double tau1 = std::hypot(1.0, tau);
    const double sig = std::sinh(e_ * std::atanh(e_ * tau / tau1));
    return std::hypot(1.0, sig) * tau - sig * tau1;
  }

  double conformal_to_geodetic(double taup) const {
    const double e2m = 1.0 - e2_;
    double tau = taup / e2m;
    for (int i = 0; i < 8; ++i) {
      const double taupa = geodetic_to_conformal(tau);
      const double dtau = (taup - taupa) * (1.0 + e2m * tau * tau) /
                          (e2m * std::hypot(1.0, tau) * std::hypot(1.0, taupa));
      tau += dtau;
      if (!(std::abs(dtau) >= 1e-15 * std::max(1.0, std::abs(tau)))) break;
    }
    return tau;
  }

  XiEta gauss_krueger(double phi, double lam) const {
    double xip, etap;
    if (std::abs(phi) >= pi / 2.0) {
      xip = std::copysign(pi / 2.0, phi);
      etap = 0.0;
    } else {
      const double taup = geodetic_to_conformal(std::tan(phi));
      const double cl = std::cos(lam);
      xip = std::atan2(taup, cl);
      etap = std::asinh(std::sin(lam) / std::hypot(taup, cl));
    }
    double xi = xip, eta = etap;
    for (int j = 0; j < 4; ++j) {
      const double m = 2.0 * (j + 1);
      xi += alpha_[j] * std::sin(m * xip) * std::cosh(m * etap);
      eta += alpha_[j] * std::cos(m * xip) * std::sinh(m * etap);
    }
    return {xi, eta};
  }

  ProjectionSpec spec_;
  double max_offset_deg_;
  double e2_ = 0.0, e_ = 0.0;
  double rectifying_radius_ = 0.0;
  std::array<double, 4> alpha_{}, beta_{};
  double xi_origin_ = 0.0;
};

inline ProjectedPoint tm_forward(const ProjectionSpec& spec, const GeoPoint& p) {
  return TransverseMercator(spec).forward(p);
}

inline GeoPoint tm_inverse(const ProjectionSpec& spec, const ProjectedPoint& p) {
  return TransverseMercator(spec).inverse(p);
}

}  // namespace atlas::geo
