#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "atlas/geo/affine.hpp"
#include "atlas/geo/datum.hpp"
#include "atlas/geo/projection.hpp"
#include "atlas/geo/spec_string.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/warehouse/geojson.hpp"
#include "atlas/warehouse/warehouse.hpp"

namespace atlas {

/// How to bring a source file into the warehouse CRS:
/// affine (local grid) -> inverse projection -> datum shift -> normalize.
struct IngestOptions {
  geo::CrsSpec crs;                           // source CRS
  std::optional<geo::DatumShift> datum;       // source datum to WGS84
  std::optional<geo::AffineTransform> affine; // digitizer/local grid to source CRS
  std::string source_name;                    // recorded in provenance
};

/// Converts one raw source coordinate to a stored warehouse position.
class SourceTransform {
 public:
  explicit SourceTransform(const IngestOptions& o)
      : affine_(o.affine), datum_{o.crs.ellipsoid(), o.datum.value_or(geo::DatumShift{})} {
    if (o.crs.projection) projector_.emplace(*o.crs.projection);
    datum_.to_wgs84.check();
  }

  geo::GeoPoint operator()(geo::ProjectedPoint p) const {
    if (affine_) p = geo::apply_affine(*affine_, p);
    geo::GeoPoint g = projector_ ? projector_->inverse(p) : geo::GeoPoint(p.x, p.y);
    g = geo::datum_transform(datum_, g);
    return geo::GeoPoint(g.lon(), g.lat());
  }

 private:
  std::optional<geo::AffineTransform> affine_;
  std::optional<geo::Projector> projector_;
  geo::SourceDatum datum_;
};

namespace detail {

/// Coerces untyped properties to the layer schema. Integers widen to reals;
/// nothing else converts. Unknown keys are dropped and counted.
inline std::string coerce_attributes(const LayerSpec& spec, const nlohmann::json& props, Attributes& out,
                                     std::size_t& dropped) {
  for (const auto& [key, v] : props.items()) {
    const auto* f = spec.field(key);
    if (!f) {
      ++dropped;
      continue;
    }
    if (v.is_null()) continue;
    switch (f->type) {
      case AttributeType::text:
        if (!v.is_string()) return "attribute '" + key + "' must be text";
        out[key] = v.get<std::string>();
        break;
      case AttributeType::integer:
        if (!v.is_number_integer()) return "attribute '" + key + "' must be an integer";
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(INT64_MAX))
          return "attribute '" + key + "' overflows a 64-bit integer";
        out[key] = v.get<std::int64_t>();
        break;
      case AttributeType::real:
        if (!v.is_number()) return "attribute '" + key + "' must be a number";
        out[key] = v.get<double>();
        break;
      case AttributeType::boolean:
        if (!v.is_boolean()) return "attribute '" + key + "' must be a boolean";
        out[key] = v.get<bool>();
        break;
    }
  }
  for (const auto& f : spec.attributes)
    if (f.required && !out.contains(f.name)) return "missing required attribute '" + f.name + "'";
  return {};
}

inline std::string degenerate_reason(const PlanarGeometry& g) {
  if (g.kind == GeometryKind::polyline && g.parts[0][0].size() < 2) return "polyline needs at least 2 vertices";
  if (g.kind == GeometryKind::polygon || g.kind == GeometryKind::multipolygon)
    for (const auto& part : g.parts)
      for (const auto& ring : part)
        if (ring.size() < 3) return "polygon ring needs at least 3 vertices";
  return {};
}

}  // namespace detail

/// Ingests a GeoJSON FeatureCollection into `layer`. A feature that fails
/// (schema, coordinates, duplicate id) is rejected whole and listed in the
/// report; the rest are stored. File-level problems throw and store nothing.
inline CleanReport ingest(Warehouse& w, std::string_view layer_name, std::string_view geojson_text,
                          const IngestOptions& opts) {
  Layer& layer = w.layer(layer_name);
  const auto& spec = layer.spec;
  if (spec.geometry_kind == GeometryKind::image)
    throw error(errc::schema_error, "layer '" + spec.name + "' is a raster layer; rasters are not stored");
  auto raw = geojson::parse_feature_collection(geojson_text);

  for (const auto& rf : raw) {
    auto kind = rf.geometry.kind;
    if (kind == GeometryKind::polygon && spec.geometry_kind == GeometryKind::multipolygon) continue;
    if (kind != spec.geometry_kind)
      throw error(errc::schema_error, "feature " + rf.id + " is " + std::string(to_string(kind)) + " but layer '" +
                                          spec.name + "' holds " + std::string(to_string(spec.geometry_kind)));
  }

  const SourceTransform transform(opts);
  CleanReport report;
  std::set<std::string, std::less<>> seen;
  for (const auto& f : layer.features) seen.insert(f.id);

  std::vector<Feature> accepted;
  for (const auto& rf : raw) {
    if (!seen.insert(rf.id).second) {
      report.reject(rf.id, "duplicate feature id");
      continue;
    }
    Feature f;
    f.id = rf.id;
    if (auto why = detail::coerce_attributes(spec, rf.properties, f.attributes, report.attributes_dropped);
        !why.empty()) {
      report.reject(rf.id, why);
      continue;
    }
    if (auto why = detail::degenerate_reason(rf.geometry); !why.empty()) {
      report.reject(rf.id, why);
      continue;
    }
    try {
      f.geometry.kind = spec.geometry_kind;
      f.geometry.parts.reserve(rf.geometry.parts.size());
      for (const auto& part : rf.geometry.parts) {
        auto& out_part = f.geometry.parts.emplace_back();
        for (const auto& path : part) {
          auto& out_path = out_part.emplace_back();
          out_path.reserve(path.size());
          for (const auto& p : path) out_path.push_back(transform(p));
        }
      }
    } catch (const error& e) {
      report.reject(rf.id, std::string("coordinate transform failed: ") + e.what());
      continue;
    }
    report.rings_reoriented += orient_rings(f.geometry);
    accepted.push_back(std::move(f));
  }

  report.features_stored = accepted.size();
  for (auto& f : accepted) layer.features.push_back(std::move(f));
  layer.sort();
  std::string note = "ingested " + std::to_string(report.features_stored) + " of " + std::to_string(raw.size()) +
                     " features into " + spec.name;
  if (!opts.source_name.empty()) note += " from " + opts.source_name;
  note += " (crs " + geo::format_crs(opts.crs);
  if (opts.datum) note += ", datum " + geo::format_shift(*opts.datum);
  if (opts.affine) note += ", affine " + geo::format_affine(*opts.affine);
  note += ")";
  w.metadata.provenance.push_back(note);
  report.notes.push_back(std::move(note));
  return report;
}

inline CleanReport ingest_file(Warehouse& w, std::string_view layer, const std::filesystem::path& path,
                               IngestOptions opts) {
  if (opts.source_name.empty()) opts.source_name = path.filename().string();
  return ingest(w, layer, io::read_text(path), opts);
}

/// GeoJSON text of a layer, coordinates in [0, 360) longitude.
inline std::string export_layer_text(const Warehouse& w, std::string_view layer_name) {
  const Layer& layer = w.layer(layer_name);
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : layer.features) features.push_back(geojson::feature_json(f.id, f.geometry, f.attributes));
  nlohmann::json doc{{"type", "FeatureCollection"}, {"name", layer.spec.name}, {"features", features}};
  return doc.dump() + "\n";
}

inline std::size_t export_layer(const Warehouse& w, std::string_view layer_name, const std::filesystem::path& path) {
  io::write_text_atomic(path, export_layer_text(w, layer_name));
  return w.layer(layer_name).features.size();
}

}  // namespace atlas
