#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "atlas/warehouse/warehouse.hpp"

namespace atlas {

struct ValidationCheck {
  std::string name;
  std::vector<std::string> failures;  // "layer/feature-id: detail"

  bool passed() const noexcept { return failures.empty(); }
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool passed() const noexcept {
    for (const auto& c : checks)
      if (!c.passed()) return false;
    return true;
  }

  const ValidationCheck* find(std::string_view name) const noexcept {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::size_t failure_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.failures.size();
    return n;
  }
};

inline nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back({{"check", c.name}, {"passed", c.passed()}, {"failures", c.failures}});
  return {{"passed", r.passed()}, {"checks", checks}};
}

/// Checks every stored invariant. Each check lists the offending features.
inline ValidationReport validate(const Warehouse& w) {
  enum { lon_domain, lat_range, ring_closure, min_vertices, winding, duplicates, schema, kind, unique_ids, layer_names, n };
  static const char* names[n] = {"longitude-domain", "latitude-range", "ring-closure",
                                 "minimum-vertices", "ring-winding",   "consecutive-duplicates",
                                 "attribute-schema", "geometry-kind",  "unique-ids",
                                 "layer-names"};
  ValidationReport report;
  for (const char* name : names) report.checks.push_back({name, {}});
  auto fail = [&](int check, std::string what) { report.checks[check].failures.push_back(std::move(what)); };

  std::set<std::string, std::less<>> layer_seen;
  for (const auto& layer : w.layers) {
    const auto& spec = layer.spec;
    if (!layer_seen.insert(spec.name).second) fail(layer_names, spec.name + ": duplicate layer name");
    if (!(spec.min_scale_denom <= spec.max_scale_denom)) fail(layer_names, spec.name + ": scale window inverted");
    const bool rings = spec.geometry_kind == GeometryKind::polygon || spec.geometry_kind == GeometryKind::multipolygon;
    std::set<std::string, std::less<>> ids;
    for (const auto& f : layer.features) {
      const auto tag = spec.name + "/" + f.id;
      if (!ids.insert(f.id).second) fail(unique_ids, tag + ": duplicate id");
      if (f.geometry.kind != spec.geometry_kind)
        fail(kind, tag + ": " + std::string(to_string(f.geometry.kind)) + " in " +
                       std::string(to_string(spec.geometry_kind)) + " layer");
      if (auto why = schema_violation(spec, f.attributes); !why.empty()) fail(schema, tag + ": " + why);

      bool lon_bad = false, lat_bad = false, dup = false;
      for (const auto& part : f.geometry.parts)
        for (std::size_t r = 0; r < part.size(); ++r) {
          const auto& path = part[r];
          for (std::size_t i = 0; i < path.size(); ++i) {
            const auto& p = path[i];
            if (!(p.lon() >= 0.0 && p.lon() < 360.0) || !std::isfinite(p.lon())) lon_bad = true;
            if (!(p.lat() >= -90.0 && p.lat() <= 90.0)) lat_bad = true;
            if (i > 0 && p == path[i - 1]) dup = true;
          }
          const std::size_t need = rings ? 4 : (spec.geometry_kind == GeometryKind::polyline ? 2 : 1);
          if (path.size() < need)
            fail(min_vertices, tag + ": path with " + std::to_string(path.size()) + " vertices");
          if (rings) {
            if (!is_closed<geo::GeoPoint>(path)) {
              fail(ring_closure, tag + ": ring " + std::to_string(r) + " is open");
            } else {
              const double a = signed_area<geo::GeoPoint>(path);
              if ((r == 0 && a <= 0.0) || (r > 0 && a >= 0.0))
                fail(winding, tag + ": ring " + std::to_string(r) + (r == 0 ? " should be counter-clockwise"
                                                                            : " should be clockwise"));
            }
          }
        }
      if (f.geometry.parts.empty() || f.geometry.vertex_count() == 0) fail(min_vertices, tag + ": empty geometry");
      if (lon_bad) fail(lon_domain, tag + ": longitude outside [0, 360)");
      if (lat_bad) fail(lat_range, tag + ": latitude outside [-90, 90]");
      if (dup) fail(duplicates, tag + ": consecutive duplicate vertices");
    }
  }
  return report;
}

}  // namespace atlas
