#pragma once

#include <filesystem>
#include <string_view>

#include "atlas/io/binary.hpp"
#include "atlas/warehouse/warehouse.hpp"

// PIWA1 warehouse container. Layout is described in docs/warehouse-format.md.

namespace atlas {

inline constexpr std::string_view warehouse_magic = "PIWA1";
inline constexpr std::uint32_t warehouse_version = 1;

namespace detail {

inline void write_spec(io::ByteWriter& w, const LayerSpec& s) {
  w.str(s.name);
  w.u8(static_cast<std::uint8_t>(s.geometry_kind));
  w.u8(static_cast<std::uint8_t>(s.theme_group));
  w.u32(static_cast<std::uint32_t>(s.attributes.size()));
  for (const auto& f : s.attributes) {
    w.str(f.name);
    w.u8(static_cast<std::uint8_t>(f.type));
    w.u8(f.required ? 1 : 0);
  }
  w.f64(s.min_scale_denom);
  w.f64(s.max_scale_denom);
  w.str(s.style.stroke);
  w.f64(s.style.stroke_width);
  w.str(s.style.fill);
  w.str(s.style.symbol);
  w.u8(s.default_on ? 1 : 0);
}

template <typename E>
E read_enum(io::ByteReader& r, E last, const char* what) {
  const auto v = r.u8();
  if (v > static_cast<std::uint8_t>(last)) throw error(errc::corrupt, std::string("bad ") + what + " tag");
  return static_cast<E>(v);
}

inline LayerSpec read_spec(io::ByteReader& r) {
  LayerSpec s;
  s.name = r.str();
  s.geometry_kind = read_enum(r, GeometryKind::image, "geometry kind");
  s.theme_group = read_enum(r, ThemeGroup::socio_economic, "theme group");
  s.attributes.resize(r.count(r.u32(), 6));
  for (auto& f : s.attributes) {
    f.name = r.str();
    f.type = read_enum(r, AttributeType::boolean, "attribute type");
    f.required = r.u8() != 0;
  }
  s.min_scale_denom = r.f64();
  s.max_scale_denom = r.f64();
  s.style.stroke = r.str();
  s.style.stroke_width = r.f64();
  s.style.fill = r.str();
  s.style.symbol = r.str();
  s.default_on = r.u8() != 0;
  return s;
}

inline void write_value(io::ByteWriter& w, const AttributeValue& v) {
  w.u8(static_cast<std::uint8_t>(v.index()));
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) w.str(x);
        else if constexpr (std::is_same_v<T, std::int64_t>) w.i64(x);
        else if constexpr (std::is_same_v<T, double>) w.f64(x);
        else w.u8(x ? 1 : 0);
      },
      v);
}

inline AttributeValue read_value(io::ByteReader& r) {
  switch (read_enum(r, AttributeType::boolean, "attribute value")) {
    case AttributeType::text: return r.str();
    case AttributeType::integer: return r.i64();
    case AttributeType::real: return r.f64();
    case AttributeType::boolean: return r.u8() != 0;
  }
  throw error(errc::corrupt, "bad attribute value");
}

inline void write_feature(io::ByteWriter& w, const Feature& f) {
  w.str(f.id);
  w.u8(static_cast<std::uint8_t>(f.geometry.kind));
  w.u32(static_cast<std::uint32_t>(f.geometry.parts.size()));
  for (const auto& part : f.geometry.parts) {
    w.u32(static_cast<std::uint32_t>(part.size()));
    for (const auto& ring : part) {
      w.u32(static_cast<std::uint32_t>(ring.size()));
      for (const auto& p : ring) {
        w.f64(p.lon());
        w.f64(p.lat());
      }
    }
  }
  w.u32(static_cast<std::uint32_t>(f.attributes.size()));
  for (const auto& [k, v] : f.attributes) {
    w.str(k);
    write_value(w, v);
  }
}

inline Feature read_feature(io::ByteReader& r) {
  Feature f;
  f.id = r.str();
  f.geometry.kind = read_enum(r, GeometryKind::multipolygon, "feature geometry kind");
  f.geometry.parts.resize(r.count(r.u32(), 4));
  for (auto& part : f.geometry.parts) {
    part.resize(r.count(r.u32(), 4));
    for (auto& ring : part) {
      const auto n = r.count(r.u32(), 16);
      ring.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double lon = r.f64();
        const double lat = r.f64();
        ring.push_back(geo::GeoPoint::unchecked(lon, lat));
      }
    }
  }
  const auto na = r.count(r.u32(), 6);
  for (std::size_t i = 0; i < na; ++i) {
    auto key = r.str();
    f.attributes.emplace(std::move(key), read_value(r));
  }
  return f;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_warehouse(const Warehouse& w) {
  io::ByteWriter out;
  out.bytes(warehouse_magic);
  out.u32(warehouse_version);
  out.str(w.country_code);
  out.str(w.metadata.build_timestamp);
  out.u32(static_cast<std::uint32_t>(w.metadata.provenance.size()));
  for (const auto& p : w.metadata.provenance) out.str(p);
  out.u32(static_cast<std::uint32_t>(w.layers.size()));
  for (const auto& l : w.layers) detail::write_spec(out, l.spec);
  for (const auto& l : w.layers) {
    out.u64(l.features.size());
    for (const auto& f : l.features) detail::write_feature(out, f);
  }
  out.seal();
  return out.take();
}

inline Warehouse decode_warehouse(std::span<const std::uint8_t> data) {
  if (data.size() < warehouse_magic.size() ||
      std::string_view(reinterpret_cast<const char*>(data.data()), warehouse_magic.size()) != warehouse_magic)
    throw error(errc::format_error, "not a warehouse file (bad magic)");
  io::ByteReader head(data.subspan(warehouse_magic.size()));
  if (const auto v = head.u32(); v != warehouse_version)
    throw error(errc::unsupported_version, "unsupported warehouse version " + std::to_string(v));
  auto body = io::verify_sealed(data);
  io::ByteReader r(body.subspan(warehouse_magic.size() + 4));

  Warehouse w;
  w.country_code = r.str();
  w.metadata.build_timestamp = r.str();
  w.metadata.provenance.resize(r.count(r.u32(), 4));
  for (auto& p : w.metadata.provenance) p = r.str();
  w.layers.resize(r.count(r.u32(), 8));
  for (auto& l : w.layers) l.spec = detail::read_spec(r);
  for (auto& l : w.layers) {
    l.features.resize(r.count(r.u64(), 9));
    for (auto& f : l.features) f = detail::read_feature(r);
  }
  if (r.remaining() != 0) throw error(errc::corrupt, "trailing bytes after last layer");
  return w;
}

inline void save_warehouse(const Warehouse& w, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_warehouse(w));
}

inline Warehouse load_warehouse(const std::filesystem::path& path) {
  try {
    return decode_warehouse(io::read_file(path));
  } catch (const error& e) {
    throw error(e.code(), path.string() + ": " + e.what(), e.detail());
  }
}

}  // namespace atlas
