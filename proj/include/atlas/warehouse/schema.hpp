#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "atlas/warehouse/geometry.hpp"

namespace atlas {

enum class AttributeType : std::uint8_t { text, integer, real, boolean };

constexpr std::string_view to_string(AttributeType t) noexcept {
  switch (t) {
    case AttributeType::text: return "text";
    case AttributeType::integer: return "integer";
    case AttributeType::real: return "real";
    case AttributeType::boolean: return "boolean";
  }
  return "?";
}

inline std::optional<AttributeType> attribute_type_from_string(std::string_view s) {
  for (auto t : {AttributeType::text, AttributeType::integer, AttributeType::real, AttributeType::boolean})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

/// Alternative order matches AttributeType.
using AttributeValue = std::variant<std::string, std::int64_t, double, bool>;
using Attributes = std::map<std::string, AttributeValue, std::less<>>;

inline AttributeType type_of(const AttributeValue& v) noexcept {
  return static_cast<AttributeType>(v.index());
}

enum class ThemeGroup : std::uint8_t { general_reference, environment, climate, socio_economic };

inline constexpr ThemeGroup all_theme_groups[] = {ThemeGroup::general_reference, ThemeGroup::environment,
                                                  ThemeGroup::climate, ThemeGroup::socio_economic};

constexpr std::string_view to_string(ThemeGroup g) noexcept {
  switch (g) {
    case ThemeGroup::general_reference: return "general-reference";
    case ThemeGroup::environment: return "environment";
    case ThemeGroup::climate: return "climate";
    case ThemeGroup::socio_economic: return "socio-economic";
  }
  return "?";
}

inline std::optional<ThemeGroup> theme_group_from_string(std::string_view s) {
  for (auto g : all_theme_groups)
    if (s == to_string(g)) return g;
  return std::nullopt;
}

struct AttributeField {
  std::string name;
  AttributeType type = AttributeType::text;
  bool required = false;

  bool operator==(const AttributeField&) const = default;
};

struct Style {
  std::string stroke = "#000000";  // #rrggbb
  double stroke_width = 1.0;       // pixels
  std::string fill;                // #rrggbb, empty for none
  std::string symbol = "circle";   // point symbol: circle, square, triangle

  bool operator==(const Style&) const = default;
};

struct LayerSpec {
  std::string name;
  GeometryKind geometry_kind = GeometryKind::polygon;
  ThemeGroup theme_group = ThemeGroup::general_reference;
  std::vector<AttributeField> attributes;
  double min_scale_denom = 1000.0;
  double max_scale_denom = 10000000.0;
  Style style;
  bool default_on = true;

  const AttributeField* field(std::string_view n) const noexcept {
    for (const auto& f : attributes)
      if (f.name == n) return &f;
    return nullptr;
  }

  /// Visibility window, inclusive on both ends.
  bool visible_at(double scale_denom) const noexcept {
    return min_scale_denom <= scale_denom && scale_denom <= max_scale_denom;
  }

  bool operator==(const LayerSpec&) const = default;
};

/// Attribute that marks pieces of one object split across map sheets.
inline constexpr std::string_view sheet_merge_key = "sheet_merge_key";

/// Orders feature ids numerically when both are plain decimal integers and
/// lexicographically otherwise (numbers sort before names).
inline bool id_less(std::string_view a, std::string_view b) noexcept {
  auto numeric = [](std::string_view s) {
    if (s.empty() || s.size() > 18) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return s.size() == 1 || s.front() != '0';
  };
  const bool na = numeric(a), nb = numeric(b);
  if (na && nb) return a.size() != b.size() ? a.size() < b.size() : a < b;
  if (na != nb) return na;
  return a < b;
}

struct IdLess {
  bool operator()(std::string_view a, std::string_view b) const noexcept { return id_less(a, b); }
};

struct Feature {
  std::string id;
  GeoGeometry geometry;
  Attributes attributes;

  bool operator==(const Feature&) const = default;
};

/// Checks that attributes conform exactly to the schema: every key declared,
/// types match, required fields present. Returns an empty string when they
/// do, otherwise the first problem found.
inline std::string schema_violation(const LayerSpec& spec, const Attributes& attrs) {
  for (const auto& [name, value] : attrs) {
    const auto* f = spec.field(name);
    if (!f) return "attribute '" + name + "' is not in the layer schema";
    if (type_of(value) != f->type)
      return "attribute '" + name + "' should be " + std::string(to_string(f->type));
  }
  for (const auto& f : spec.attributes)
    if (f.required && !attrs.contains(f.name)) return "missing required attribute '" + f.name + "'";
  return {};
}

inline void check_layer_spec(const LayerSpec& spec) {
  if (spec.name.empty()) throw error(errc::invalid_argument, "layer name is empty");
  if (!(spec.min_scale_denom <= spec.max_scale_denom))
    throw error(errc::invalid_argument, "layer '" + spec.name + "': min_scale_denom exceeds max_scale_denom");
  for (std::size_t i = 0; i < spec.attributes.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (spec.attributes[i].name == spec.attributes[j].name)
        throw error(errc::invalid_argument,
                    "layer '" + spec.name + "': duplicate attribute '" + spec.attributes[i].name + "'");
}

}  // namespace atlas
