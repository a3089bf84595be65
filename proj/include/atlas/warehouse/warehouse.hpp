#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/catalog.hpp"
#include "atlas/error.hpp"
#include "atlas/warehouse/geometry.hpp"
#include "atlas/warehouse/schema.hpp"

namespace atlas {

/// Features are kept sorted by id (IdLess).
struct Layer {
  LayerSpec spec;
  std::vector<Feature> features;

  const Feature* find(std::string_view id) const noexcept {
    auto it = std::lower_bound(features.begin(), features.end(), id,
                               [](const Feature& f, std::string_view v) { return id_less(f.id, v); });
    return it != features.end() && it->id == id ? &*it : nullptr;
  }

  void sort() {
    std::sort(features.begin(), features.end(), [](const Feature& a, const Feature& b) { return id_less(a.id, b.id); });
  }

  bool operator==(const Layer&) const = default;
};

struct WarehouseMetadata {
  std::string build_timestamp;  // ISO 8601 UTC
  std::vector<std::string> provenance;

  bool operator==(const WarehouseMetadata&) const = default;
};

/// Per-country vector store. Geographic WGS84, longitudes in [0, 360).
struct Warehouse {
  std::string country_code;
  std::vector<Layer> layers;
  WarehouseMetadata metadata;

  Layer* find_layer(std::string_view name) noexcept {
    for (auto& l : layers)
      if (l.spec.name == name) return &l;
    return nullptr;
  }
  const Layer* find_layer(std::string_view name) const noexcept {
    return const_cast<Warehouse*>(this)->find_layer(name);
  }

  Layer& layer(std::string_view name) {
    if (auto* l = find_layer(name)) return *l;
    throw error(errc::not_found, "warehouse " + country_code + " has no layer '" + std::string(name) + "'");
  }
  const Layer& layer(std::string_view name) const { return const_cast<Warehouse*>(this)->layer(name); }

  std::size_t feature_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.features.size();
    return n;
  }

  bool operator==(const Warehouse&) const = default;
};

inline Warehouse create_warehouse(std::string_view code, std::vector<LayerSpec> specs,
                                  std::string build_timestamp = {}) {
  if (!is_catalog_code(code)) throw error(errc::not_found, "unknown country code '" + std::string(code) + "'");
  Warehouse w;
  w.country_code = std::string(code);
  w.metadata.build_timestamp = std::move(build_timestamp);
  for (auto& s : specs) {
    check_layer_spec(s);
    if (w.find_layer(s.name)) throw error(errc::invalid_argument, "duplicate layer name '" + s.name + "'");
    w.layers.push_back({std::move(s), {}});
  }
  return w;
}

// ---------------------------------------------------------------------------
// Reports

struct Rejection {
  std::string id;
  std::string reason;

  bool operator==(const Rejection&) const = default;
};

/// Outcome of a mutating warehouse operation. `unmerged` lists merge
/// candidates that could not be joined; they are not changes.
struct CleanReport {
  std::size_t features_stored = 0;
  std::size_t duplicates_removed = 0;
  std::size_t rings_closed = 0;
  std::size_t rings_reoriented = 0;
  std::size_t vertices_snapped = 0;
  std::size_t features_merged = 0;
  std::size_t features_rejected = 0;
  std::size_t attributes_dropped = 0;
  std::vector<Rejection> rejections;
  std::vector<std::string> unmerged;
  std::vector<std::string> notes;

  bool changed() const noexcept {
    return duplicates_removed || rings_closed || rings_reoriented || vertices_snapped || features_merged ||
           features_rejected || attributes_dropped;
  }

  void reject(std::string id, std::string reason) {
    ++features_rejected;
    rejections.push_back({std::move(id), std::move(reason)});
  }

  CleanReport& operator+=(const CleanReport& o) {
    features_stored += o.features_stored;
    duplicates_removed += o.duplicates_removed;
    rings_closed += o.rings_closed;
    rings_reoriented += o.rings_reoriented;
    vertices_snapped += o.vertices_snapped;
    features_merged += o.features_merged;
    features_rejected += o.features_rejected;
    attributes_dropped += o.attributes_dropped;
    rejections.insert(rejections.end(), o.rejections.begin(), o.rejections.end());
    unmerged.insert(unmerged.end(), o.unmerged.begin(), o.unmerged.end());
    notes.insert(notes.end(), o.notes.begin(), o.notes.end());
    return *this;
  }
};

inline nlohmann::json to_json(const CleanReport& r) {
  nlohmann::json rej = nlohmann::json::array();
  for (const auto& x : r.rejections) rej.push_back({{"id", x.id}, {"reason", x.reason}});
  return {{"features_stored", r.features_stored},
          {"duplicates_removed", r.duplicates_removed},
          {"rings_closed", r.rings_closed},
          {"rings_reoriented", r.rings_reoriented},
          {"vertices_snapped", r.vertices_snapped},
          {"features_merged", r.features_merged},
          {"features_rejected", r.features_rejected},
          {"attributes_dropped", r.attributes_dropped},
          {"rejections", rej},
          {"unmerged", r.unmerged},
          {"notes", r.notes}};
}

// ---------------------------------------------------------------------------
// Layer specs as JSON (schema files)

inline nlohmann::json layer_spec_to_json(const LayerSpec& s) {
  using nlohmann::json;
  json attrs = json::array();
  for (const auto& f : s.attributes)
    attrs.push_back({{"name", f.name}, {"type", to_string(f.type)}, {"required", f.required}});
  return {{"name", s.name},
          {"geometry", to_string(s.geometry_kind)},
          {"theme_group", to_string(s.theme_group)},
          {"attributes", attrs},
          {"min_scale_denom", s.min_scale_denom},
          {"max_scale_denom", s.max_scale_denom},
          {"default_on", s.default_on},
          {"style",
           {{"stroke", s.style.stroke},
            {"stroke_width", s.style.stroke_width},
            {"fill", s.style.fill},
            {"symbol", s.style.symbol}}}};
}

inline LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  LayerSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    const auto kind = j.at("geometry").get<std::string>();
    auto k = geometry_kind_from_string(kind);
    if (!k) throw error(errc::parse_error, "layer '" + s.name + "': unknown geometry '" + kind + "'");
    s.geometry_kind = *k;
    const auto theme = j.value("theme_group", std::string(to_string(ThemeGroup::general_reference)));
    auto g = theme_group_from_string(theme);
    if (!g) throw error(errc::parse_error, "layer '" + s.name + "': unknown theme group '" + theme + "'");
    s.theme_group = *g;
    for (const auto& a : j.value("attributes", nlohmann::json::array())) {
      AttributeField f;
      f.name = a.at("name").get<std::string>();
      const auto type = a.at("type").get<std::string>();
      auto t = attribute_type_from_string(type);
      if (!t) throw error(errc::parse_error, "attribute '" + f.name + "': unknown type '" + type + "'");
      f.type = *t;
      f.required = a.value("required", false);
      s.attributes.push_back(std::move(f));
    }
    s.min_scale_denom = j.value("min_scale_denom", s.min_scale_denom);
    s.max_scale_denom = j.value("max_scale_denom", s.max_scale_denom);
    s.default_on = j.value("default_on", true);
    if (j.contains("style")) {
      const auto& st = j["style"];
      s.style.stroke = st.value("stroke", s.style.stroke);
      s.style.stroke_width = st.value("stroke_width", s.style.stroke_width);
      s.style.fill = st.value("fill", s.style.fill);
      s.style.symbol = st.value("symbol", s.style.symbol);
    }
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::parse_error, std::string("bad layer spec: ") + e.what());
  }
  check_layer_spec(s);
  return s;
}

/// Schema file: {"layers": [spec, ...]}.
inline std::vector<LayerSpec> layer_specs_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array())
    throw error(errc::parse_error, "schema file must be an object with a 'layers' array");
  std::vector<LayerSpec> out;
  for (const auto& l : j["layers"]) out.push_back(layer_spec_from_json(l));
  return out;
}

inline nlohmann::json layer_specs_to_json(const std::vector<LayerSpec>& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : specs) arr.push_back(layer_spec_to_json(s));
  return {{"layers", arr}};
}

}  // namespace atlas
