#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "atlas/cache/smartcache.hpp"
#include "atlas/catalog.hpp"
#include "atlas/geo.hpp"
#include "atlas/io/number.hpp"
#include "atlas/server/registry.hpp"
#include "atlas/server/render.hpp"
#include "atlas/warehouse/geojson.hpp"

namespace atlas::server {

using nlohmann::json;

struct Request {
  std::string path;
  std::map<std::string, std::string, std::less<>> params;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;

  const std::string* header(std::string_view name) const {
    for (const auto& [k, v] : headers)
      if (k == name) return &v;
    return nullptr;
  }
};

inline int http_status(errc c) {
  switch (c) {
    case errc::not_found: return 404;
    case errc::invalid_argument:
    case errc::out_of_zone:
    case errc::parse_error:
    case errc::schema_error:
    case errc::not_publishable: return 400;
    default: return 500;
  }
}

inline Response error_response(const error& e) {
  json body{{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"detail", e.detail()}};
  return {http_status(e.code()), "application/json", body.dump(), {}};
}

inline Response json_response(const json& j) { return {200, "application/json", j.dump(), {}}; }

// ---------------------------------------------------------------------------
// Parameter parsing

namespace detail {

inline const std::string* param(const Request& r, std::string_view name) {
  auto it = r.params.find(name);
  return it == r.params.end() ? nullptr : &it->second;
}

inline const std::string& required(const Request& r, std::string_view name) {
  const auto* v = param(r, name);
  if (!v || v->empty()) throw error(errc::invalid_argument, "missing parameter '" + std::string(name) + "'");
  return *v;
}

inline double number_param(std::string_view name, std::string_view text) {
  auto v = io::parse_double(text);
  if (!v || !std::isfinite(*v))
    throw error(errc::invalid_argument, "parameter '" + std::string(name) + "' is not a number", std::string(text));
  return *v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.emplace_back(io::trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline Box parse_bbox(std::string_view text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw error(errc::invalid_argument, "bbox must be minx,miny,maxx,maxy", std::string(text));
  Box b{number_param("bbox", parts[0]), number_param("bbox", parts[1]), number_param("bbox", parts[2]),
        number_param("bbox", parts[3])};
  if (!(b.minx < b.maxx) || !(b.miny < b.maxy)) throw error(errc::invalid_argument, "bbox is degenerate", std::string(text));
  return b;
}

/// Projected box covering a geographic one. Longitudes may use either
/// convention; a box whose east edge is numerically west of its west edge
/// crosses the date line.
inline Box project_geographic_bbox(const Box& g, const geo::Projector& proj) {
  if (g.miny < -90.0 || g.maxy > 90.0) throw error(errc::invalid_argument, "bbox latitude outside [-90, 90]");
  const double w = geo::normalize_longitude(g.minx);
  double e = geo::normalize_longitude(g.maxx);
  if (g.maxx - g.minx >= 360.0) throw error(errc::invalid_argument, "bbox spans the whole globe");
  if (e <= w) e += 360.0;
  Box out;
  constexpr int n = 8;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const auto p = proj.forward(geo::GeoPoint(w + (e - w) * i / n, g.miny + (g.maxy - g.miny) * j / n));
      out.expand(p.x, p.y);
    }
  return out;
}

inline Box request_bbox(const Request& r, const geo::Projector& proj) {
  const Box b = parse_bbox(required(r, "bbox"));
  const auto* crs = param(r, "bbox_crs");
  if (!crs || *crs == "projected") return b;
  if (*crs == "geographic") return project_geographic_bbox(b, proj);
  throw error(errc::invalid_argument, "bbox_crs must be 'projected' or 'geographic'", *crs);
}

/// Explicit scale, clamped; `fallback` when absent.
inline double request_scale(const Request& r, double fallback) {
  const auto* s = param(r, "scale");
  if (!s || s->empty()) return clamp_scale(fallback);
  const double v = number_param("scale", *s);
  if (!(v > 0.0)) throw error(errc::invalid_argument, "scale must be positive");
  return clamp_scale(v);
}

/// Layers named in `layers` (comma list), in cache order. Absent or
/// "default" selects the layers that are on by default; "all" every layer.
inline std::vector<const CacheLayer*> request_layers(const Request& r, const SmartCache& c) {
  const auto* text = param(r, "layers");
  std::vector<const CacheLayer*> out;
  if (!text || text->empty() || *text == "default" || *text == "all") {
    const bool all = text && *text == "all";
    for (const auto& l : c.layers())
      if (all || l.spec.default_on) out.push_back(&l);
    return out;
  }
  std::set<std::string, std::less<>> wanted;
  for (auto& name : split(*text, ',')) {
    if (!c.find_layer(name))
      throw error(errc::not_found, "unknown layer '" + name + "' in warehouse " + c.country_code());
    wanted.insert(std::move(name));
  }
  for (const auto& l : c.layers())
    if (wanted.count(l.spec.name)) out.push_back(&l);
  return out;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

inline std::string format_box(const Box& b) {
  return io::format_double(b.minx) + "," + io::format_double(b.miny) + "," + io::format_double(b.maxx) + "," +
         io::format_double(b.maxy);
}

inline GeoGeometry to_geographic(const PlanarGeometry& g, const geo::Projector& proj) {
  GeoGeometry out;
  out.kind = g.kind;
  out.parts.reserve(g.parts.size());
  for (const auto& part : g.parts) {
    auto& op = out.parts.emplace_back();
    for (const auto& path : part) {
      auto& pp = op.emplace_back();
      pp.reserve(path.size());
      for (const auto& p : path) pp.push_back(proj.inverse(p));
    }
  }
  return out;
}

inline json style_json(const Style& s) {
  return {{"stroke", s.stroke}, {"stroke_width", s.stroke_width}, {"fill", s.fill}, {"symbol", s.symbol}};
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct ApiOptions {
  double reference_pixel_m = defaults::reference_pixel_m;
  double simplify_per_scale = defaults::simplify_per_scale;
};

/**
 * The HTTP API without the transport. `handle` is a pure function of the
 * request, the catalog and the cache files currently on disk; nothing is
 * remembered between calls except the open cache handles.
 */
class Api {
 public:
  explicit Api(std::shared_ptr<const CacheRegistry> registry, ApiOptions opts = {})
      : reg_(std::move(registry)), opts_(opts) {
    if (!(opts_.reference_pixel_m > 0.0) || !(opts_.simplify_per_scale >= 0.0))
      throw error(errc::invalid_argument, "reference pixel must be positive and simplification non-negative");
  }

  const CacheRegistry& registry() const noexcept { return *reg_; }
  const ApiOptions& options() const noexcept { return opts_; }

  Response handle(const Request& r) const {
    try {
      if (r.path == "/api/countries") return countries();
      if (r.path == "/api/map") return map(r);
      if (r.path == "/api/features") return features(r);
      if (r.path == "/api/identify") return identify(r);
      if (r.path == "/api/search") return search(r);
      if (r.path == "/api/measure") return measure(r);
      if (r.path == "/api/legend") return legend(r);
      throw error(errc::not_found, "no such endpoint", r.path);
    } catch (const error& e) {
      return error_response(e);
    } catch (const std::exception& e) {
      return error_response(error(errc::internal, e.what()));
    }
  }

  Response countries() const {
    json list = json::array();
    for (const auto& c : reg_->catalog().countries) list.push_back(country_public_json(c));
    return json_response({{"countries", list}, {"region", country_public_json(reg_->catalog().region)}});
  }

  Response map(const Request& r) const {
    const auto& code = detail::required(r, "warehouse");
    auto cache = reg_->get(code);
    const int w = static_cast<int>(detail::number_param("width", detail::required(r, "width")));
    const int h = static_cast<int>(detail::number_param("height", detail::required(r, "height")));
    check_image_size(w, h);
    const Box view = fit_aspect(detail::request_bbox(r, cache->projector()), w, h);
    const auto* s = detail::param(r, "scale");
    const double scale = !s || s->empty() || *s == "auto" ? auto_scale(view.width(), w, opts_.reference_pixel_m)
                                                          : detail::request_scale(r, 0.0);
    std::vector<const CacheLayer*> drawn;
    for (const auto* l : detail::request_layers(r, *cache))
      if (l->spec.visible_at(scale)) drawn.push_back(l);
    const auto out = render_png(*cache, drawn, {view, w, h, scale, opts_.simplify_per_scale});

    Response resp{200, "image/png", std::string(out.png.begin(), out.png.end()), {}};
    std::string names;
    for (const auto& n : out.layers) names += (names.empty() ? "" : ",") + n;
    resp.headers = {{"X-Atlas-Scale", io::format_double(scale)},
                    {"X-Atlas-Layers", names},
                    {"X-Atlas-Bbox", detail::format_box(view)},
                    {"X-Atlas-Meters-Per-Pixel", io::format_double(view.width() / w)},
                    {"X-Atlas-Projection", geo::format_projection(cache->projector().spec())},
                    {"X-Atlas-Feature-Count", std::to_string(out.features)}};
    return resp;
  }

  Response features(const Request& r) const {
    const auto& code = detail::required(r, "warehouse");
    auto cache = reg_->get(code);
    const auto& layer = detail::required(r, "layer");
    cache->layer(layer);
    const Box bbox = detail::request_bbox(r, cache->projector());
    const double scale = detail::request_scale(r, static_cast<double>(base_scale(code)));
    const double tol = simplify_tolerance(scale, opts_.simplify_per_scale);
    json list = json::array();
    for (const auto* f : cache->query_bbox(layer, bbox))
      list.push_back(geojson::feature_json(
          f->id, detail::to_geographic(simplify_geometry(f->geometry, tol), cache->projector()), f->attributes));
    json body{{"type", "FeatureCollection"}, {"warehouse", cache->country_code()}, {"layer", layer},
              {"scale", scale},              {"features", std::move(list)}};
    auto resp = json_response(body);
    resp.headers = {{"X-Atlas-Payload-Bytes", std::to_string(resp.body.size())},
                    {"X-Atlas-Link-Seconds",
                     io::format_double(resp.body.size() * 8.0 / defaults::link_bits_per_second)}};
    return resp;
  }

  Response identify(const Request& r) const {
    const auto& code = detail::required(r, "warehouse");
    auto cache = reg_->get(code);
    const double lon = detail::number_param("lon", detail::required(r, "lon"));
    const double lat = detail::number_param("lat", detail::required(r, "lat"));
    const geo::GeoPoint at(lon, lat);
    double tol_px = 5.0;
    if (const auto* t = detail::param(r, "tolerance_px")) tol_px = detail::number_param("tolerance_px", *t);
    if (!(tol_px >= 1.0)) throw error(errc::invalid_argument, "tolerance_px must be at least 1");
    const double scale = detail::request_scale(r, static_cast<double>(base_scale(code)));
    const double tol_m = tolerance_metres(tol_px, scale, opts_.reference_pixel_m);
    const auto p = cache->projector().forward(at);
    Request all = r;
    if (!detail::param(r, "layers")) all.params["layers"] = "all";
    json results = json::array();
    for (const auto* l : detail::request_layers(all, *cache))
      for (const auto& hit : cache->query_point(l->spec.name, p, tol_m))
        results.push_back({{"layer", l->spec.name},
                           {"id", hit.feature->id},
                           {"distance_m", hit.distance},
                           {"attributes", geojson::attributes_json(hit.feature->attributes)}});
    return json_response({{"warehouse", cache->country_code()},
                          {"lon", at.lon()},
                          {"lat", at.lat()},
                          {"scale", scale},
                          {"tolerance_m", tol_m},
                          {"results", std::move(results)}});
  }

  Response search(const Request& r) const {
    const auto* q = detail::param(r, "q");
    if (!q || io::trim(*q).empty()) throw error(errc::invalid_argument, "query 'q' is required");
    const auto needle = detail::lower(io::trim(*q));
    auto matches = [&](std::string_view s) { return detail::lower(s).find(needle) != std::string::npos; };
    auto target = [](const CountryEntry& c, const std::optional<Box>& ext) {
      json t{{"warehouse", c.code}, {"scale", c.base_scale_denom}};
      t["bbox"] = ext ? box_to_json(*ext) : (c.extent ? box_to_json(*c.extent) : json(nullptr));
      return t;
    };
    json hits = json::array();
    const auto entries = reg_->catalog().all();
    for (const auto* c : entries)
      if (matches(c->name) || matches(c->code))
        hits.push_back({{"kind", "country"}, {"code", c->code}, {"name", c->name}, {"target", target(*c, c->extent)}});
    for (const auto* c : entries)
      for (const auto& s : c->sites)
        if (!s.whole_country && matches(s.name))
          hits.push_back({{"kind", "site"},
                          {"code", c->code},
                          {"name", s.name},
                          {"country", c->name},
                          {"target", target(*c, s.extent)}});
    const auto& region = reg_->catalog().region;
    for (auto g : all_theme_groups)
      if (matches(to_string(g))) {
        auto t = target(region, region.extent);
        t["theme_group"] = std::string(to_string(g));
        hits.push_back({{"kind", "theme"}, {"code", region.code}, {"name", std::string(to_string(g))}, {"target", t}});
      }
    return json_response({{"q", *q}, {"hits", std::move(hits)}});
  }

  Response measure(const Request& r) const {
    std::vector<geo::GeoPoint> path;
    for (const auto& pair : detail::split(detail::required(r, "path"), ';')) {
      const auto xy = detail::split(pair, ',');
      if (xy.size() != 2) throw error(errc::invalid_argument, "path must be lon,lat;lon,lat;...", pair);
      path.emplace_back(detail::number_param("path", xy[0]), detail::number_param("path", xy[1]));
    }
    const auto* mode = detail::param(r, "mode");
    if (!mode || *mode == "distance")
      return json_response(
          {{"mode", "distance"}, {"unit", "m"}, {"points", path.size()}, {"value", geo::path_length(path)}});
    if (*mode != "area") throw error(errc::invalid_argument, "mode must be 'distance' or 'area'", *mode);
    if (path.size() < 3) throw error(errc::invalid_argument, "area needs at least 3 points");
    if (!(path.front() == path.back())) path.push_back(path.front());
    return json_response(
        {{"mode", "area"}, {"unit", "m2"}, {"points", path.size() - 1}, {"value", geo::geodesic_area(path)}});
  }

  Response legend(const Request& r) const {
    const auto& code = detail::required(r, "warehouse");
    auto cache = reg_->get(code);
    const double scale = detail::request_scale(r, static_cast<double>(base_scale(code)));
    json groups = json::array();
    for (auto g : all_theme_groups) {
      json layers = json::array();
      for (const auto& l : cache->layers())
        if (l.spec.theme_group == g)
          layers.push_back({{"name", l.spec.name},
                            {"geometry", std::string(to_string(l.spec.geometry_kind))},
                            {"style", detail::style_json(l.spec.style)},
                            {"min_scale_denom", l.spec.min_scale_denom},
                            {"max_scale_denom", l.spec.max_scale_denom},
                            {"default_on", l.spec.default_on},
                            {"visible", l.spec.visible_at(scale)}});
      if (!layers.empty()) groups.push_back({{"theme_group", std::string(to_string(g))}, {"layers", layers}});
    }
    return json_response({{"warehouse", cache->country_code()}, {"scale", scale}, {"groups", std::move(groups)}});
  }

 private:
  std::int64_t base_scale(std::string_view code) const { return reg_->catalog().find(code)->base_scale_denom; }

  std::shared_ptr<const CacheRegistry> reg_;
  ApiOptions opts_;
};

}  // namespace atlas::server
