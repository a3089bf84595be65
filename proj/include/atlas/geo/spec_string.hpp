#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/error.hpp"
#include "atlas/geo/datum.hpp"
#include "atlas/geo/types.hpp"
#include "atlas/io/number.hpp"

// Textual encodings used on the command line and in catalog files:
//
//   tm:cm=<deg>,lat0=<deg>,k=<f>,fe=<m>,fn=<m>,ell=<name>
//   eqc:cm=<deg>,lat0=<deg>,k=<f>,fe=<m>,fn=<m>,ell=<name>
//   geographic[:ell=<name>]
//   shift:dx,dy,dz[,rx,ry,rz,ds]
//   affine:a,b,c,d,e,f
//
// ell may also be given as <a>/<inv_f> for an unnamed ellipsoid.

namespace atlas::geo {

/// Coordinate reference of a source file: geographic on some ellipsoid, or
/// projected with a TM/eqc spec (whose ellipsoid is then the datum's).
struct CrsSpec {
  std::optional<ProjectionSpec> projection;
  Ellipsoid geographic_ellipsoid = wgs84();

  const Ellipsoid& ellipsoid() const noexcept {
    return projection ? projection->ellipsoid : geographic_ellipsoid;
  }
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? s.size() - pos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

[[noreturn]] inline void bad_spec(std::string_view spec, const std::string& why) {
  throw error(errc::invalid_argument, "bad spec string '" + std::string(spec) + "': " + why);
}

inline double number(std::string_view spec, std::string_view text) {
  auto v = io::parse_double(text);
  if (!v) bad_spec(spec, "'" + std::string(text) + "' is not a finite number");
  return *v;
}

inline Ellipsoid ellipsoid(std::string_view spec, std::string_view text) {
  if (auto e = ellipsoid_by_name(text)) return *e;
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) bad_spec(spec, "unknown ellipsoid '" + std::string(text) + "'");
  Ellipsoid e{"", number(spec, text.substr(0, slash)), number(spec, text.substr(slash + 1))};
  try {
    e.check();
  } catch (const error& err) {
    bad_spec(spec, err.what());
  }
  return e;
}

inline std::map<std::string, std::string, std::less<>> keyvals(std::string_view spec,
                                                               std::string_view body) {
  std::map<std::string, std::string, std::less<>> kv;
  if (body.empty()) return kv;
  for (auto item : split(body, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) bad_spec(spec, "expected key=value, got '" + std::string(item) + "'");
    auto key = std::string(io::trim(item.substr(0, eq)));
    if (!kv.emplace(key, std::string(io::trim(item.substr(eq + 1)))).second)
      bad_spec(spec, "duplicate key '" + key + "'");
  }
  return kv;
}

inline std::string ellipsoid_text(const Ellipsoid& e) {
  if (!e.name.empty()) {
    if (auto named = ellipsoid_by_name(e.name); named && *named == e) return e.name;
  }
  return io::format_double(e.a) + "/" + io::format_double(e.inv_f);
}

}  // namespace detail

inline ProjectionSpec parse_projection(std::string_view spec) {
  const auto colon = spec.find(':');
  const auto kind = spec.substr(0, colon);
  ProjectionSpec p;
  if (kind == "tm")
    p.kind = ProjectionKind::transverse_mercator;
  else if (kind == "eqc")
    p.kind = ProjectionKind::equirectangular;
  else
    detail::bad_spec(spec, "expected tm: or eqc:");
  if (colon == std::string_view::npos) detail::bad_spec(spec, "missing parameters");
  auto kv = detail::keyvals(spec, spec.substr(colon + 1));
  bool have_cm = false;
  for (const auto& [k, v] : kv) {
    if (k == "cm") {
      p.central_meridian = normalize_longitude(detail::number(spec, v));
      have_cm = true;
    } else if (k == "lat0") {
      p.lat_origin = detail::number(spec, v);
    } else if (k == "k") {
      p.scale_factor = detail::number(spec, v);
    } else if (k == "fe") {
      p.false_easting = detail::number(spec, v);
    } else if (k == "fn") {
      p.false_northing = detail::number(spec, v);
    } else if (k == "ell") {
      p.ellipsoid = detail::ellipsoid(spec, v);
    } else {
      detail::bad_spec(spec, "unknown key '" + k + "'");
    }
  }
  if (!have_cm) detail::bad_spec(spec, "cm= is required");
  try {
    p.check();
  } catch (const error& e) {
    detail::bad_spec(spec, e.what());
  }
  return p;
}

inline std::string format_projection(const ProjectionSpec& p) {
  using io::format_double;
  return std::string(p.kind == ProjectionKind::equirectangular ? "eqc" : "tm") +
         ":cm=" + format_double(p.central_meridian) + ",lat0=" + format_double(p.lat_origin) +
         ",k=" + format_double(p.scale_factor) + ",fe=" + format_double(p.false_easting) +
         ",fn=" + format_double(p.false_northing) + ",ell=" + detail::ellipsoid_text(p.ellipsoid);
}

inline CrsSpec parse_crs(std::string_view spec) {
  CrsSpec crs;
  if (spec == "geographic" || spec == "wgs84") return crs;
  if (spec.starts_with("geographic:")) {
    auto kv = detail::keyvals(spec, spec.substr(11));
    for (const auto& [k, v] : kv) {
      if (k != "ell") detail::bad_spec(spec, "unknown key '" + k + "'");
      crs.geographic_ellipsoid = detail::ellipsoid(spec, v);
    }
    return crs;
  }
  crs.projection = parse_projection(spec);
  return crs;
}

inline std::string format_crs(const CrsSpec& crs) {
  if (crs.projection) return format_projection(*crs.projection);
  if (crs.geographic_ellipsoid == wgs84()) return "geographic";
  return "geographic:ell=" + detail::ellipsoid_text(crs.geographic_ellipsoid);
}

inline DatumShift parse_shift(std::string_view spec) {
  if (!spec.starts_with("shift:")) detail::bad_spec(spec, "expected shift:");
  auto parts = detail::split(spec.substr(6), ',');
  if (parts.size() != 3 && parts.size() != 7) detail::bad_spec(spec, "expected 3 or 7 values");
  DatumShift s;
  double* fields[] = {&s.dx, &s.dy, &s.dz, &s.rx, &s.ry, &s.rz, &s.ds};
  for (std::size_t i = 0; i < parts.size(); ++i) *fields[i] = detail::number(spec, parts[i]);
  return s;
}

inline std::string format_shift(const DatumShift& s) {
  using io::format_double;
  std::string out = "shift:" + format_double(s.dx) + "," + format_double(s.dy) + "," +
                    format_double(s.dz);
  if (s.rx != 0.0 || s.ry != 0.0 || s.rz != 0.0 || s.ds != 0.0)
    out += "," + format_double(s.rx) + "," + format_double(s.ry) + "," + format_double(s.rz) +
           "," + format_double(s.ds);
  return out;
}

inline AffineTransform parse_affine(std::string_view spec) {
  if (!spec.starts_with("affine:")) detail::bad_spec(spec, "expected affine:");
  auto parts = detail::split(spec.substr(7), ',');
  if (parts.size() != 6) detail::bad_spec(spec, "expected 6 coefficients");
  AffineTransform t;
  double* fields[] = {&t.a, &t.b, &t.c, &t.d, &t.e, &t.f};
  for (std::size_t i = 0; i < 6; ++i) *fields[i] = detail::number(spec, parts[i]);
  if (t.determinant() == 0.0) detail::bad_spec(spec, "transform is not invertible");
  return t;
}

inline std::string format_affine(const AffineTransform& t) {
  using io::format_double;
  return "affine:" + format_double(t.a) + "," + format_double(t.b) + "," + format_double(t.c) +
         "," + format_double(t.d) + "," + format_double(t.e) + "," + format_double(t.f);
}

}  // namespace atlas::geo
