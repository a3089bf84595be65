#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "atlas/catalog.hpp"
#include "atlas/geo.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/io/number.hpp"
#include "atlas/warehouse/geojson.hpp"
#include "atlas/warehouse.hpp"
#include "atlas/warehouse/warehouse.hpp"

// Synthetic archipelago corpus. Everything is a pure function of the seed:
// mt19937_64 output is mapped to numbers by hand rather than through the
// standard distributions, whose algorithms vary between libraries.

namespace atlas::fixtures {

using nlohmann::json;

inline constexpr std::uint64_t default_seed = 20030601;
inline constexpr std::string_view fixture_timestamp = "2004-01-01T00:00:00Z";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return g_() % n; }

 private:
  std::mt19937_64 g_;
};

struct CountryLayout {
  std::string code;
  double lon, lat;    // center, lon in [0, 360)
  double half_w, half_h;
  bool equirectangular = false;
};

/// Approximate real positions; extents are generous boxes, not boundaries.
inline const std::vector<CountryLayout>& layouts() {
  static const std::vector<CountryLayout> v = {
      {"CK", 200.5, -15.5, 2.5, 6.0},   {"FJ", 179.5, -17.5, 3.0, 2.5},
      {"KI", 188.0, -1.0, 16.0, 4.5, true}, {"MH", 168.5, 9.0, 4.0, 4.0},
      {"NR", 166.93, -0.53, 0.1, 0.1},  {"NU", 190.13, -19.05, 0.2, 0.2},
      {"TK", 188.2, -9.0, 0.8, 0.8},    {"TO", 184.8, -19.0, 1.5, 3.0},
      {"TV", 178.5, -8.0, 2.0, 2.0},    {"SB", 161.0, -9.0, 5.0, 2.5},
      {"VU", 167.5, -16.5, 2.0, 3.5},   {"WS", 187.9, -13.8, 1.0, 0.5},
      {"REGION", 180.0, -7.0, 30.0, 17.0, true},
  };
  return v;
}

inline const CountryLayout& layout(std::string_view code) {
  for (const auto& l : layouts())
    if (l.code == code) return l;
  throw error(errc::not_found, "no fixture layout for '" + std::string(code) + "'");
}

inline geo::ProjectionSpec cache_projection(const CountryLayout& l) {
  if (l.equirectangular) {
    geo::ProjectionSpec p;
    p.kind = geo::ProjectionKind::equirectangular;
    p.central_meridian = l.lon;
    return p;
  }
  return geo::utm_like(l.lon, l.lat < 0.0);
}

// ---------------------------------------------------------------------------
// Layer specs

inline LayerSpec spec(std::string name, GeometryKind kind, ThemeGroup group, std::vector<AttributeField> attrs,
                      double min_scale, double max_scale, Style style, bool on = true) {
  LayerSpec s;
  s.name = std::move(name);
  s.geometry_kind = kind;
  s.theme_group = group;
  s.attributes = std::move(attrs);
  s.min_scale_denom = min_scale;
  s.max_scale_denom = max_scale;
  s.style = std::move(style);
  s.default_on = on;
  return s;
}

inline std::vector<LayerSpec> country_layers() {
  using AT = AttributeType;
  using GK = GeometryKind;
  using TG = ThemeGroup;
  const AttributeField merge{std::string(sheet_merge_key), AT::text, false};
  return {
      spec("coastline", GK::polygon, TG::general_reference, {{"name", AT::text, true}, merge}, 1000, 1e7,
           {"#1f4e79", 1.0, "#f2e6c9", "circle"}),
      spec("reefs", GK::polygon, TG::environment, {{"reef_type", AT::text, true}, merge}, 1000, 1e6,
           {"#2a9d8f", 1.0, "#a8dadc", "circle"}),
      spec("rivers", GK::polyline, TG::general_reference,
           {{"name", AT::text, true}, {"order", AT::integer, false}, merge}, 1000, 500000,
           {"#3a86ff", 1.5, "", "circle"}),
      spec("villages", GK::point, TG::socio_economic,
           {{"name", AT::text, true}, {"population", AT::integer, false}, {"is_capital", AT::boolean, false}}, 1000,
           100000, {"#7f1d1d", 1.0, "#d62828", "circle"}),
      spec("rainfall", GK::point, TG::climate, {{"station", AT::text, true}, {"annual_mm", AT::real, true}}, 1000,
           1e7, {"#3c096c", 1.0, "#6a4c93", "triangle"}, false),
      spec("airphotos", GK::image, TG::general_reference, {}, 1000, 50000, {"#000000", 1.0, "", "square"}, false),
  };
}

inline std::vector<LayerSpec> region_layers() {
  using AT = AttributeType;
  using GK = GeometryKind;
  using TG = ThemeGroup;
  return {
      spec("eez", GK::polygon, TG::general_reference, {{"country", AT::text, true}, {"name", AT::text, true}}, 1000,
           1e7, {"#6c757d", 1.0, "#e9f5fb", "circle"}),
      spec("shipping_routes", GK::polyline, TG::socio_economic, {{"operator", AT::text, false}}, 1000, 1e7,
           {"#495057", 1.0, "", "circle"}),
      spec("capitals", GK::point, TG::general_reference, {{"name", AT::text, true}, {"country", AT::text, true}},
           1000, 1e7, {"#000000", 1.0, "#ffb703", "square"}),
  };
}

// ---------------------------------------------------------------------------
// Sources

/// One interchange file plus the transform chain needed to ingest it.
struct SourceFile {
  std::string layer;
  std::string file;   // relative name
  std::string crs = "geographic";
  std::string shift;  // empty: none
  std::string affine; // empty: none
  json collection;
};

struct WarehouseFixture {
  std::string code;
  std::vector<LayerSpec> layers;
  std::vector<SourceFile> sources;
};

struct Corpus {
  AtlasCatalog catalog;
  std::vector<WarehouseFixture> warehouses;
  std::string gcp_pairs_csv;  // local grid -> TM pairs for the Tuvalu villages
};

namespace detail {

using Ring = std::vector<std::pair<double, double>>;

/// Longitude in the [-180, 180] convention most source files use.
inline double signed_lon(double lon) { return lon > 180.0 ? lon - 360.0 : lon; }

inline json coords(const Ring& pts, bool signed_lons = true) {
  json a = json::array();
  for (auto [x, y] : pts) a.push_back({signed_lons ? signed_lon(x) : x, y});
  return a;
}

inline json feature(const std::string& id, json geometry, json props) {
  return {{"type", "Feature"}, {"id", id}, {"geometry", std::move(geometry)}, {"properties", std::move(props)}};
}

inline json polygon_geometry(const std::vector<Ring>& rings) {
  json r = json::array();
  for (const auto& ring : rings) r.push_back(coords(ring));
  return {{"type", "Polygon"}, {"coordinates", r}};
}

inline json empty_collection() { return {{"type", "FeatureCollection"}, {"features", json::array()}}; }

/// Star-shaped ring around (cx, cy), counter-clockwise and closed.
inline Ring blob(Rng& rng, double cx, double cy, double r, int n, double inner = 0.6) {
  Ring out;
  const double phase = rng.range(0, 2 * geo::pi);
  for (int i = 0; i < n; ++i) {
    const double a = phase + 2 * geo::pi * (i + 0.3 * rng.uniform()) / n;
    const double rr = r * (inner + (1 - inner) * rng.uniform());
    out.emplace_back(cx + rr * std::cos(a) / std::cos(cy * geo::deg_to_rad), cy + rr * std::sin(a));
  }
  out.push_back(out.front());
  return out;
}

inline Ring reversed(Ring r) {
  std::reverse(r.begin(), r.end());
  return r;
}

inline Box ring_box(const Ring& r) {
  Box b;
  for (auto [x, y] : r) b.expand(x, y);
  return b;
}

struct SiteCenter {
  double lon, lat, radius;
};

inline std::vector<SiteCenter> site_centers(const CountryLayout& l, std::size_t n) {
  std::vector<SiteCenter> out;
  const bool wide = l.half_w >= l.half_h;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const double zig = (k % 2 ? 0.25 : -0.25);
    double lon = wide ? l.lon - l.half_w + 2 * l.half_w * t : l.lon + zig * l.half_w;
    double lat = wide ? l.lat + zig * l.half_h : l.lat - l.half_h + 2 * l.half_h * t;
    const double span = wide ? 2 * l.half_w / n : 2 * l.half_h / n;
    out.push_back({lon, lat, std::min(0.3 * span, 0.4 * std::min(l.half_w, l.half_h))});
  }
  return out;
}

}  // namespace detail

/**
 * Builds the corpus for all thirteen warehouses. Per country site: three
 * islands (coastline), a reef ring with a lagoon hole around each island,
 * a river and two villages on each island, and one rainfall station.
 * Fiji additionally carries a polygon spanning 178..183 east (written with
 * negative longitudes past the date line), an island and a river split
 * across a map-sheet seam, and its rivers in UTM coordinates (cm 183).
 * Kiribati villages come on the International 1924 ellipsoid with a datum
 * shift; Tuvalu villages in a local digitizer grid with an affine transform.
 */
inline Corpus make_corpus(std::uint64_t seed = default_seed) {
  using detail::Ring;
  Corpus corpus;
  corpus.catalog = builtin_catalog();
  Rng rng(seed);

  for (const auto* entry : corpus.catalog.all()) {
    auto& cat = const_cast<CountryEntry&>(*entry);
    const auto& lay = layout(cat.code);
    cat.extent = Box{lay.lon - lay.half_w, lay.lat - lay.half_h, lay.lon + lay.half_w, lay.lat + lay.half_h};
    cat.projection = geo::format_projection(cache_projection(lay));
    cat.warehouse = cat.code + ".piwa";
    cat.cache = cat.code + ".pisc";

    WarehouseFixture wf;
    wf.code = cat.code;
    if (cat.code == region_code) {
      wf.layers = region_layers();
      json eez = json::array(), caps = json::array(), routes = json::array();
      detail::Ring route;
      int n = 0;
      for (const auto& c : corpus.catalog.countries) {
        const auto& cl = layout(c.code);
        Ring ring;
        for (int i = 0; i < 8; ++i) {
          const double a = 2 * geo::pi * i / 8 + geo::pi / 8;
          ring.emplace_back(cl.lon + (cl.half_w + 1.0) * std::cos(a), cl.lat + (cl.half_h + 1.0) * std::sin(a));
        }
        ring.push_back(ring.front());
        ++n;
        eez.push_back(detail::feature(std::to_string(n), detail::polygon_geometry({ring}),
                                      {{"country", c.code}, {"name", c.name + " EEZ"}}));
        caps.push_back(detail::feature(std::to_string(n),
                                       {{"type", "Point"}, {"coordinates", {detail::signed_lon(cl.lon), cl.lat}}},
                                       {{"name", c.capital.value_or(c.name)}, {"country", c.code}}));
        route.emplace_back(cl.lon, cl.lat);
      }
      // Routes out of Suva to every other capital.
      const auto& fj = layout("FJ");
      for (std::size_t i = 0; i < route.size(); ++i) {
        if (corpus.catalog.countries[i].code == "FJ") continue;
        routes.push_back(detail::feature(
            std::to_string(i + 1),
            {{"type", "LineString"},
             {"coordinates", detail::coords({{fj.lon, fj.lat},
                                             {(fj.lon + route[i].first) / 2, (fj.lat + route[i].second) / 2 + 0.5},
                                             route[i]})}},
            {{"operator", i % 2 ? "Pacific Forum Line" : "Government shipping"}}));
      }
      wf.sources.push_back({"eez", "eez.geojson", "geographic", "", "", {{"type", "FeatureCollection"}, {"features", eez}}});
      wf.sources.push_back({"capitals", "capitals.geojson", "geographic", "", "",
                            {{"type", "FeatureCollection"}, {"features", caps}}});
      wf.sources.push_back({"shipping_routes", "shipping_routes.geojson", "geographic", "", "",
                            {{"type", "FeatureCollection"}, {"features", routes}}});
      cat.sites[0].extent = cat.extent;
      corpus.warehouses.push_back(std::move(wf));
      continue;
    }

    wf.layers = country_layers();
    std::map<std::string, json> files;
    for (const auto& l : wf.layers)
      if (l.geometry_kind != GeometryKind::image) files[l.name] = json::array();
    auto centers = detail::site_centers(lay, cat.sites.size());
    int fid = 0;
    auto next_id = [&] { return std::to_string(++fid); };
    for (std::size_t s = 0; s < cat.sites.size(); ++s) {
      const auto& c = centers[s];
      Box site_box;
      for (int k = 0; k < 3; ++k) {
        const double r = c.radius * (k == 0 ? 0.45 : 0.2);
        const double ox = k == 0 ? 0.0 : (k == 1 ? 0.6 : -0.6) * c.radius;
        const double oy = k == 0 ? 0.0 : (k == 1 ? 0.4 : -0.5) * c.radius;
        const double ix = c.lon + ox / std::cos(c.lat * geo::deg_to_rad), iy = c.lat + oy;
        const auto island = detail::blob(rng, ix, iy, r, 10 + static_cast<int>(rng.below(8)));
        site_box.expand(detail::ring_box(island));
        const std::string island_name = cat.sites[s].name + (k == 0 ? "" : " islet " + std::to_string(k));
        files["coastline"].push_back(
            detail::feature(next_id(), detail::polygon_geometry({island}), {{"name", island_name}}));
        auto outer = detail::blob(rng, ix, iy, r * 1.5, 12, 0.95);
        auto lagoon = detail::blob(rng, ix, iy, r * 1.12, 8, 0.98);
        site_box.expand(detail::ring_box(outer));
        files["reefs"].push_back(detail::feature(next_id(),
                                                 detail::polygon_geometry({outer, detail::reversed(lagoon)}),
                                                 {{"reef_type", k == 0 ? "barrier" : "fringing"}}));
        Ring river;
        for (int v = 0; v < 5; ++v)
          river.emplace_back(ix + 0.5 * r * v / 4 / std::cos(iy * geo::deg_to_rad) + 0.02 * r * rng.uniform(),
                             iy + 0.35 * r * std::sin(v * 0.8));
        files["rivers"].push_back(detail::feature(next_id(), {{"type", "LineString"}, {"coordinates", detail::coords(river)}},
                                                  {{"name", island_name + " river"}, {"order", 1 + int(rng.below(3))}}));
        for (int v = 0; v < 2; ++v) {
          const double vx = ix + (v ? -0.25 : 0.2) * r / std::cos(iy * geo::deg_to_rad);
          const double vy = iy + (v ? 0.15 : -0.2) * r;
          json props{{"name", island_name + " village " + std::to_string(v + 1)},
                     {"population", 50 + int(rng.below(5000))}};
          if (s == 0 && k == 0 && v == 0) props["is_capital"] = true;
          files["villages"].push_back(
              detail::feature(next_id(), {{"type", "Point"}, {"coordinates", {detail::signed_lon(vx), vy}}}, props));
        }
      }
      files["rainfall"].push_back(detail::feature(
          next_id(), {{"type", "Point"}, {"coordinates", {detail::signed_lon(c.lon), c.lat + 0.1 * c.radius}}},
          {{"station", cat.sites[s].name + " met station"}, {"annual_mm", std::round(rng.range(1500, 4500) * 10) / 10}}));
      const double pad = 0.05 * std::max(site_box.width(), site_box.height());
      cat.sites[s].extent = Box{site_box.minx - pad, site_box.miny - pad, site_box.maxx + pad, site_box.maxy + pad};
    }

    if (cat.code == "FJ") {
      // Long thin island across the date line.
      Ring strip;
      // Indented shores every 0.25 deg, so simplification at atlas scales keeps every vertex.
      for (int i = 0; i <= 20; ++i) strip.emplace_back(178.0 + 0.25 * i, -16.05 - 0.02 * (i % 2));
      for (int i = 20; i >= 0; --i) strip.emplace_back(178.0 + 0.25 * i, -15.95 + 0.02 * (i % 2));
      strip.push_back(strip.front());
      files["coastline"].push_back(
          detail::feature("fj-dateline", detail::polygon_geometry({strip}), {{"name", "Dateline strip"}}));
      // Island split across a sheet seam at 180.25 (shared seam vertices).
      const double sx = 180.25;
      Ring west{{180.05, -16.62}, {sx, -16.70}, {sx, -16.55}, {sx, -16.40}, {180.10, -16.45}, {180.05, -16.62}};
      Ring east{{sx, -16.70}, {180.48, -16.60}, {180.42, -16.42}, {sx, -16.40}, {sx, -16.55}, {sx, -16.70}};
      files["coastline"].push_back(detail::feature(
          "fj-sheet-a", detail::polygon_geometry({west}), {{"name", "Taveuni (sheet 14)"}, {sheet_merge_key, "taveuni"}}));
      files["coastline"].push_back(detail::feature(
          "fj-sheet-b", detail::polygon_geometry({east}), {{"name", "Taveuni (sheet 15)"}, {sheet_merge_key, "taveuni"}}));
      // River split across the same seam, second piece perturbed by 5e-7 deg.
      Ring r1{{180.12, -16.50}, {180.18, -16.52}, {sx, -16.51}};
      Ring r2{{sx + 5e-7, -16.51}, {180.33, -16.53}, {180.40, -16.50}};
      files["rivers"].push_back(detail::feature("fj-river-a", {{"type", "LineString"}, {"coordinates", detail::coords(r1)}},
                                                {{"name", "Wainikoro"}, {"order", 2}, {sheet_merge_key, "wainikoro"}}));
      files["rivers"].push_back(detail::feature("fj-river-b", {{"type", "LineString"}, {"coordinates", detail::coords(r2)}},
                                                {{"name", "Wainikoro"}, {"order", 2}, {sheet_merge_key, "wainikoro"}}));
    }

    for (auto& [layer, features] : files) {
      SourceFile sf{layer, layer + ".geojson", "geographic", "", "", {{"type", "FeatureCollection"}, {"features", features}}};
      if (cat.code == "FJ" && layer == "rivers") {
        // Reproject to UTM-like cm 183 south.
        const auto utm = geo::utm_like(183.0, true);
        sf.crs = geo::format_projection(utm);
        for (auto& f : sf.collection["features"])
          for (auto& c : f["geometry"]["coordinates"]) {
            auto p = geo::tm_forward(utm, geo::GeoPoint(c[0].get<double>(), c[1].get<double>()));
            c = {p.x, p.y};
          }
      } else if (cat.code == "KI" && layer == "villages") {
        const geo::DatumShift to_wgs84{-145.0, 75.0, -272.0, 0.0, 0.0, 0.0, 0.0};
        const auto intl = *geo::ellipsoid_by_name("intl1924");
        const geo::DatumShift back{145.0, -75.0, 272.0, 0.0, 0.0, 0.0, 0.0};
        sf.crs = "geographic:ell=intl1924";
        sf.shift = geo::format_shift(to_wgs84);
        for (auto& f : sf.collection["features"]) {
          auto& c = f["geometry"]["coordinates"];
          auto g = geo::geocentric_to_geodetic(
              intl, geo::helmert_shift(back, geo::geodetic_to_geocentric(geo::wgs84(), geo::GeoPoint(c[0].get<double>(), c[1].get<double>()))));
          c = {detail::signed_lon(g.lon()), g.lat()};
        }
      } else if (cat.code == "TV" && layer == "villages") {
        // Digitizer grid: millimetres on a scanned sheet, rotated slightly.
        const auto proj = cache_projection(lay);
        const geo::AffineTransform to_tm{250.0, -2.0, 300000.0, 2.0, 250.0, 9000000.0};
        const auto from_tm = geo::invert(to_tm);
        sf.crs = geo::format_projection(proj);
        sf.affine = geo::format_affine(to_tm);
        std::string csv = "# local_x,local_y,target_x,target_y\n";
        int k = 0;
        for (auto& f : sf.collection["features"]) {
          auto& c = f["geometry"]["coordinates"];
          const auto local = geo::apply_affine(from_tm, geo::tm_forward(proj, geo::GeoPoint(c[0].get<double>(), c[1].get<double>())));
          c = {local.x, local.y};
          if (k++ < 6) {
            const auto target = geo::apply_affine(to_tm, local);
            csv += io::format_double(local.x) + "," + io::format_double(local.y) + "," + io::format_double(target.x) +
                   "," + io::format_double(target.y) + "\n";
          }
        }
        corpus.gcp_pairs_csv = csv;
      }
      wf.sources.push_back(std::move(sf));
    }
    corpus.warehouses.push_back(std::move(wf));
  }
  return corpus;
}

/**
 * Writes the corpus under `dir`:
 *   catalog.json                 catalog with extents and projections
 *   schema/<CODE>.json           layer specs
 *   sources/<CODE>/<layer>.geojson
 *   sources/manifest.json        file list with CRS / shift / affine strings
 *   gcp/tuvalu_villages.csv      control points for the Tuvalu grid
 *   atlas.conf                   server configuration for this layout
 */
inline std::size_t write_corpus(const Corpus& c, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "schema");
  fs::create_directories(dir / "gcp");
  std::size_t features = 0;
  json manifest = json::array();
  io::write_text_atomic(dir / "catalog.json", catalog_to_json(c.catalog).dump(2) + "\n");
  for (const auto& w : c.warehouses) {
    io::write_text_atomic(dir / "schema" / (w.code + ".json"), layer_specs_to_json(w.layers).dump(2) + "\n");
    fs::create_directories(dir / "sources" / w.code);
    for (const auto& s : w.sources) {
      io::write_text_atomic(dir / "sources" / w.code / s.file, s.collection.dump() + "\n");
      features += s.collection["features"].size();
      json m{{"warehouse", w.code}, {"layer", s.layer}, {"file", w.code + "/" + s.file}, {"crs", s.crs}};
      if (!s.shift.empty()) m["shift"] = s.shift;
      if (!s.affine.empty()) m["affine"] = s.affine;
      manifest.push_back(std::move(m));
    }
  }
  io::write_text_atomic(dir / "sources" / "manifest.json", manifest.dump(2) + "\n");
  io::write_text_atomic(dir / "gcp" / "tuvalu_villages.csv", c.gcp_pairs_csv);
  io::write_text_atomic(dir / "atlas.conf",
                        "# atlas server configuration\n"
                        "catalog = catalog.json\n"
                        "warehouse_dir = warehouses\n"
                        "cache_dir = caches\n"
                        "ui_dir = ui\n"
                        "host = 127.0.0.1\n"
                        "port = 8080\n");
  return features;
}

/// Parses a source manifest entry into ingest options.
inline IngestOptions ingest_options(const json& entry) {
  IngestOptions o;
  o.crs = geo::parse_crs(entry.value("crs", "geographic"));
  if (entry.contains("shift")) o.datum = geo::parse_shift(entry["shift"].get<std::string>());
  if (entry.contains("affine")) o.affine = geo::parse_affine(entry["affine"].get<std::string>());
  o.source_name = entry.value("file", "");
  return o;
}

inline IngestOptions ingest_options(const SourceFile& s) {
  json entry{{"crs", s.crs}, {"file", s.file}};
  if (!s.shift.empty()) entry["shift"] = s.shift;
  if (!s.affine.empty()) entry["affine"] = s.affine;
  return ingest_options(entry);
}

/// Ingests, cleans and merges one fixture warehouse in memory.
inline Warehouse build_warehouse(const WarehouseFixture& f, CleanReport* report = nullptr) {
  auto w = create_warehouse(f.code, f.layers, std::string(fixture_timestamp));
  CleanReport total;
  for (const auto& s : f.sources) total += ingest(w, s.layer, s.collection.dump(), ingest_options(s));
  for (const auto& l : f.layers) {
    if (l.geometry_kind == GeometryKind::image) continue;
    total += clean_topology(w, l.name);
    total += merge_sheets(w, l.name);
  }
  if (report) *report = total;
  return w;
}

// ---------------------------------------------------------------------------
// Uniform corpus for index checks and benchmarks

/**
 * `n` small features spread uniformly over Fiji's extent: 40% polygons,
 * 30% polylines, 30% points, in layers "polys", "lines" and "points".
 * Features are at most ~0.02 deg across.
 */
inline Warehouse uniform_warehouse(std::size_t n, std::uint64_t seed = default_seed) {
  Rng rng(seed);
  auto w = create_warehouse("FJ",
                            {spec("polys", GeometryKind::polygon, ThemeGroup::general_reference,
                                  {{"name", AttributeType::text, true}}, 1000, 1e7, {}),
                             spec("lines", GeometryKind::polyline, ThemeGroup::general_reference,
                                  {{"name", AttributeType::text, true}}, 1000, 1e7, {}),
                             spec("points", GeometryKind::point, ThemeGroup::general_reference,
                                  {{"name", AttributeType::text, true}, {"value", AttributeType::real, false}}, 1000,
                                  1e7, {})},
                            std::string(fixture_timestamp));
  const auto& l = layout("FJ");
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.range(l.lon - l.half_w, l.lon + l.half_w);
    const double y = rng.range(l.lat - l.half_h, l.lat + l.half_h);
    const double kind = rng.uniform();
    Feature f;
    f.id = std::to_string(i + 1);
    f.attributes["name"] = "f" + f.id;
    if (kind < 0.4) {
      auto ring = detail::blob(rng, x, y, rng.range(0.001, 0.01), 5 + static_cast<int>(rng.below(6)));
      Path<geo::GeoPoint> pts;
      for (auto [a, b] : ring) pts.emplace_back(a, b);
      f.geometry = GeoGeometry::polygon({pts});
      w.layer("polys").features.push_back(std::move(f));
    } else if (kind < 0.7) {
      Path<geo::GeoPoint> pts;
      const int m = 2 + static_cast<int>(rng.below(5));
      double px = x, py = y;
      for (int k = 0; k < m; ++k) {
        pts.emplace_back(px, py);
        px += rng.range(-0.004, 0.004);
        py += rng.range(-0.004, 0.004);
      }
      f.geometry = GeoGeometry::polyline(pts);
      w.layer("lines").features.push_back(std::move(f));
    } else {
      f.geometry = GeoGeometry::point(geo::GeoPoint(x, y));
      f.attributes["value"] = rng.range(0, 100);
      w.layer("points").features.push_back(std::move(f));
    }
  }
  for (auto& layer : w.layers) layer.sort();
  return w;
}

}  // namespace atlas::fixtures
