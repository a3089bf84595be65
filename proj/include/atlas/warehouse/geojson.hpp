#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/error.hpp"
#include "atlas/warehouse/geometry.hpp"
#include "atlas/warehouse/schema.hpp"

// GeoJSON (RFC 7946) FeatureCollection reader and writer. Two extensions:
// longitudes may lie in [0, 360), and coordinates may be projected eastings
// and northings when the caller says so (the file itself carries no CRS).
// Every feature must carry an `id`.

namespace atlas::geojson {

using json = nlohmann::json;

/// A feature as read from the file: raw x/y pairs, untyped properties.
struct RawFeature {
  std::string id;
  PlanarGeometry geometry;
  json properties = json::object();
};

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw error(errc::parse_error, where + ": " + what);
}

inline geo::ProjectedPoint position(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) fail(where, "position must be [x, y] or [x, y, z]");
  for (const auto& v : j)
    if (!v.is_number()) fail(where, "position values must be numbers");
  geo::ProjectedPoint p{j[0].get<double>(), j[1].get<double>()};
  if (!geo::is_finite(p)) fail(where, "position values must be finite");
  return p;
}

inline Path<geo::ProjectedPoint> positions(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of positions");
  Path<geo::ProjectedPoint> out;
  out.reserve(j.size());
  for (const auto& p : j) out.push_back(position(p, where));
  return out;
}

inline std::vector<Path<geo::ProjectedPoint>> rings(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "polygon needs at least one ring");
  std::vector<Path<geo::ProjectedPoint>> out;
  for (const auto& r : j) out.push_back(positions(r, where));
  return out;
}

}  // namespace detail

inline PlanarGeometry parse_geometry(const json& g, const std::string& where) {
  using detail::fail;
  if (!g.is_object()) fail(where, "geometry must be an object");
  if (!g.contains("type") || !g["type"].is_string()) fail(where, "geometry type missing");
  if (!g.contains("coordinates")) fail(where, "geometry coordinates missing");
  const auto type = g["type"].get<std::string>();
  const auto& c = g["coordinates"];
  PlanarGeometry out;
  if (type == "Point") {
    out = PlanarGeometry::point(detail::position(c, where));
  } else if (type == "LineString") {
    out = PlanarGeometry::polyline(detail::positions(c, where));
  } else if (type == "Polygon") {
    out = PlanarGeometry::polygon(detail::rings(c, where));
  } else if (type == "MultiPolygon") {
    if (!c.is_array() || c.empty()) fail(where, "MultiPolygon needs at least one polygon");
    out.kind = GeometryKind::multipolygon;
    for (const auto& poly : c) out.parts.push_back(detail::rings(poly, where));
  } else {
    fail(where, "unsupported geometry type '" + type + "'");
  }
  return out;
}

/// Parses a FeatureCollection. Structural problems anywhere in the file make
/// the whole file unparseable.
inline std::vector<RawFeature> parse_feature_collection(std::string_view text) {
  using detail::fail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw error(errc::parse_error, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection")
    fail("document", "top level must be a FeatureCollection");
  if (!doc.contains("features") || !doc["features"].is_array()) fail("document", "'features' must be an array");

  std::vector<RawFeature> out;
  std::size_t index = 0;
  for (const auto& f : doc["features"]) {
    const std::string where = "feature #" + std::to_string(index++);
    if (!f.is_object() || f.value("type", "") != "Feature") fail(where, "expected a Feature object");
    RawFeature rf;
    if (!f.contains("id")) fail(where, "feature id is required");
    const auto& id = f["id"];
    if (id.is_string())
      rf.id = id.get<std::string>();
    else if (id.is_number_integer())
      rf.id = id.dump();
    else
      fail(where, "feature id must be a string or an integer");
    if (rf.id.empty()) fail(where, "feature id is empty");
    if (!f.contains("geometry") || f["geometry"].is_null()) fail(where + " (" + rf.id + ")", "geometry is required");
    rf.geometry = parse_geometry(f["geometry"], where + " (" + rf.id + ")");
    if (f.contains("properties") && !f["properties"].is_null()) {
      if (!f["properties"].is_object()) fail(where, "properties must be an object");
      rf.properties = f["properties"];
    }
    out.push_back(std::move(rf));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writing

template <typename Coord>
json path_json(const Path<Coord>& path) {
  json a = json::array();
  for (const auto& c : path) a.push_back(json::array({cx(c), cy(c)}));
  return a;
}

template <typename Coord>
json geometry_json(const BasicGeometry<Coord>& g) {
  auto rings = [](const std::vector<Path<Coord>>& part) {
    json r = json::array();
    for (const auto& ring : part) r.push_back(path_json(ring));
    return r;
  };
  switch (g.kind) {
    case GeometryKind::point: {
      const auto& c = g.parts.at(0).at(0).at(0);
      return {{"type", "Point"}, {"coordinates", json::array({cx(c), cy(c)})}};
    }
    case GeometryKind::polyline:
      return {{"type", "LineString"}, {"coordinates", path_json(g.parts.at(0).at(0))}};
    case GeometryKind::polygon:
      return {{"type", "Polygon"}, {"coordinates", rings(g.parts.at(0))}};
    case GeometryKind::multipolygon: {
      json polys = json::array();
      for (const auto& part : g.parts) polys.push_back(rings(part));
      return {{"type", "MultiPolygon"}, {"coordinates", polys}};
    }
    case GeometryKind::image: break;
  }
  throw error(errc::internal, "image layers have no vector geometry");
}

inline json attribute_json(const AttributeValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

inline json attributes_json(const Attributes& attrs) {
  json props = json::object();
  for (const auto& [k, v] : attrs) props[k] = attribute_json(v);
  return props;
}

template <typename Coord>
json feature_json(std::string_view id, const BasicGeometry<Coord>& g, const Attributes& attrs) {
  return {{"type", "Feature"}, {"id", id}, {"geometry", geometry_json(g)}, {"properties", attributes_json(attrs)}};
}

}  // namespace atlas::geojson
