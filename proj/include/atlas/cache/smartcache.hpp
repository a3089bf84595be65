#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <json.hpp>

#include "atlas/cache/rtree.hpp"
#include "atlas/geo/projection.hpp"
#include "atlas/geo/simplify.hpp"
#include "atlas/io/binary.hpp"
#include "atlas/warehouse/container.hpp"
#include "atlas/warehouse/validate.hpp"
#include "atlas/warehouse/warehouse.hpp"

// Read-only projected cache ("PISC1"). Layout in docs/cache-format.md.

namespace atlas {

inline constexpr std::string_view cache_magic = "PISC1";
inline constexpr std::uint32_t cache_version = 1;
inline constexpr std::uint32_t cache_node_size = 16;

struct CacheLayerSelect {
  std::string name;
  std::optional<std::vector<std::string>> published;  // nullopt: every schema field

  bool operator==(const CacheLayerSelect&) const = default;
};

struct CacheSpec {
  geo::ProjectionSpec projection;
  std::vector<CacheLayerSelect> layers;
  std::int64_t base_scale_denom = 0;

  bool operator==(const CacheSpec&) const = default;
};

/// All layers of `w` with every attribute published.
inline CacheSpec full_cache_spec(const Warehouse& w, geo::ProjectionSpec projection, std::int64_t base_scale) {
  CacheSpec s{std::move(projection), {}, base_scale};
  for (const auto& l : w.layers)
    if (l.spec.geometry_kind != GeometryKind::image) s.layers.push_back({l.spec.name, std::nullopt});
  return s;
}

struct CachedFeature {
  std::string id;
  PlanarGeometry geometry;
  Attributes attributes;  // published subset
  Box box;
};

struct CacheLayer {
  LayerSpec spec;  // attributes restricted to the published ones
  std::vector<CachedFeature> features;  // ascending id
  std::uint64_t dropped_out_of_zone = 0;
  PackedRTree index;
};

struct QueryHit {
  const CachedFeature* feature;
  double distance;
};

// ---------------------------------------------------------------------------
// Exact geometry tests in the planar cache CRS

namespace detail {

inline bool segment_hits_box(const geo::ProjectedPoint& a, const geo::ProjectedPoint& b, const Box& q) {
  // Liang-Barsky clipping of the segment against q.
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double r[4] = {a.x - q.minx, q.maxx - a.x, a.y - q.miny, q.maxy - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (r[i] < 0.0) return false;
    } else {
      const double t = r[i] / p[i];
      if (p[i] < 0.0) t0 = std::max(t0, t);
      else t1 = std::min(t1, t);
      if (t0 > t1) return false;
    }
  }
  return true;
}

}  // namespace detail

/// True when the geometry and the closed box share at least one point.
inline bool geometry_intersects_box(const PlanarGeometry& g, const Box& q) {
  bool hit = false;
  g.for_each_path([&](const auto& path) {
    if (hit || path.empty()) return;
    if (q.contains(path[0].x, path[0].y)) hit = true;
    for (std::size_t i = 1; i < path.size() && !hit; ++i) hit = detail::segment_hits_box(path[i - 1], path[i], q);
  });
  if (hit) return true;
  return polygon_contains(g, q.minx, q.miny);
}

/// Planar distance from p to the geometry; 0 inside polygons.
inline double geometry_distance(const PlanarGeometry& g, const geo::ProjectedPoint& p) {
  if (polygon_contains(g, p.x, p.y)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  g.for_each_path([&](const auto& path) {
    if (path.size() == 1) best = std::min(best, std::hypot(path[0].x - p.x, path[0].y - p.y));
    for (std::size_t i = 1; i < path.size(); ++i) best = std::min(best, geo::segment_distance(p, path[i - 1], path[i]));
  });
  return best;
}

// ---------------------------------------------------------------------------

struct CacheStats {
  std::vector<std::pair<std::string, std::size_t>> layer_counts;
  std::size_t index_depth = 0;  // deepest layer index
  std::uintmax_t file_size = 0;
  std::string build_timestamp;
};

/// Immutable handle on a cache file. Safe to share between threads.
class SmartCache {
 public:
  SmartCache(const SmartCache&) = delete;
  SmartCache& operator=(const SmartCache&) = delete;
  SmartCache& operator=(SmartCache&&) = delete;

  static std::shared_ptr<const SmartCache> decode(std::span<const std::uint8_t> bytes);

  const std::string& country_code() const noexcept { return country_; }
  const std::string& build_timestamp() const noexcept { return timestamp_; }
  const CacheSpec& spec() const noexcept { return spec_; }
  const geo::Projector& projector() const noexcept { return projector_; }
  std::uintmax_t file_size() const noexcept { return size_; }
  const std::vector<CacheLayer>& layers() const noexcept { return layers_; }

  const CacheLayer* find_layer(std::string_view name) const noexcept {
    for (const auto& l : layers_)
      if (l.spec.name == name) return &l;
    return nullptr;
  }

  const CacheLayer& layer(std::string_view name) const {
    if (auto* l = find_layer(name)) return *l;
    throw error(errc::not_found, "cache " + country_ + " has no layer '" + std::string(name) + "'");
  }

  /// Features whose geometry meets `q`, ascending by id.
  std::vector<const CachedFeature*> query_bbox(std::string_view layer_name, const Box& q) const {
    check_box(q);
    const auto& l = layer(layer_name);
    auto items = l.index.search(q);
    std::sort(items.begin(), items.end());
    std::vector<const CachedFeature*> out;
    for (auto i : items)
      if (geometry_intersects_box(l.features[i].geometry, q)) out.push_back(&l.features[i]);
    return out;
  }

  /// Same result as query_bbox without the index (reference and benchmark).
  std::vector<const CachedFeature*> scan_bbox(std::string_view layer_name, const Box& q) const {
    check_box(q);
    std::vector<const CachedFeature*> out;
    for (const auto& f : layer(layer_name).features)
      if (f.box.intersects(q) && geometry_intersects_box(f.geometry, q)) out.push_back(&f);
    return out;
  }

  /// Features within `tol` meters of p, by (distance, id).
  std::vector<QueryHit> query_point(std::string_view layer_name, const geo::ProjectedPoint& p, double tol) const {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw error(errc::invalid_argument, "point tolerance must be > 0");
    if (!geo::is_finite(p)) throw error(errc::invalid_argument, "query point must be finite");
    const auto& l = layer(layer_name);
    std::vector<std::pair<double, std::size_t>> found;
    l.index.search(Box{p.x - tol, p.y - tol, p.x + tol, p.y + tol}, [&](std::size_t i) {
      const double d = geometry_distance(l.features[i].geometry, p);
      if (d <= tol) found.emplace_back(d, i);
    });
    std::sort(found.begin(), found.end());
    std::vector<QueryHit> out;
    for (auto [d, i] : found) out.push_back({&l.features[i], d});
    return out;
  }

  CacheStats stats() const {
    CacheStats s;
    for (const auto& l : layers_) {
      s.layer_counts.emplace_back(l.spec.name, l.features.size());
      s.index_depth = std::max(s.index_depth, l.index.depth());
    }
    s.file_size = size_;
    s.build_timestamp = timestamp_;
    return s;
  }

  Box extent() const {
    Box b;
    for (const auto& l : layers_) b.expand(l.index.extent());
    return b;
  }

 private:
  SmartCache() : projector_(geo::utm_like(0.0, false)) {}

  static void check_box(const Box& q) {
    if (!(q.minx <= q.maxx && q.miny <= q.maxy) || !std::isfinite(q.minx) || !std::isfinite(q.maxx) ||
        !std::isfinite(q.miny) || !std::isfinite(q.maxy))
      throw error(errc::invalid_argument, "bounding box must be finite with min <= max");
  }

  std::string country_;
  std::string timestamp_;
  CacheSpec spec_;
  geo::Projector projector_;
  std::uintmax_t size_ = 0;
  std::vector<CacheLayer> layers_;
};

inline std::vector<std::pair<std::string, std::size_t>> cache_layer_counts(const SmartCache& c) {
  return c.stats().layer_counts;
}

inline CacheStats cache_stats(const SmartCache& c) { return c.stats(); }

// ---------------------------------------------------------------------------
// Encoding

namespace detail {

inline void write_projection(io::ByteWriter& w, const geo::ProjectionSpec& p) {
  w.u8(static_cast<std::uint8_t>(p.kind));
  w.f64(p.central_meridian);
  w.f64(p.lat_origin);
  w.f64(p.scale_factor);
  w.f64(p.false_easting);
  w.f64(p.false_northing);
  w.str(p.ellipsoid.name);
  w.f64(p.ellipsoid.a);
  w.f64(p.ellipsoid.inv_f);
}

inline geo::ProjectionSpec read_projection(io::ByteReader& r) {
  geo::ProjectionSpec p;
  p.kind = read_enum(r, geo::ProjectionKind::equirectangular, "projection kind");
  p.central_meridian = r.f64();
  p.lat_origin = r.f64();
  p.scale_factor = r.f64();
  p.false_easting = r.f64();
  p.false_northing = r.f64();
  p.ellipsoid.name = r.str();
  p.ellipsoid.a = r.f64();
  p.ellipsoid.inv_f = r.f64();
  try {
    p.check();
  } catch (const error& e) {
    throw error(errc::corrupt, std::string("bad projection in cache header: ") + e.what());
  }
  return p;
}

inline void write_box(io::ByteWriter& w, const Box& b) {
  w.f64(b.minx);
  w.f64(b.miny);
  w.f64(b.maxx);
  w.f64(b.maxy);
}

inline Box read_box(io::ByteReader& r) {
  Box b;
  b.minx = r.f64();
  b.miny = r.f64();
  b.maxx = r.f64();
  b.maxy = r.f64();
  return b;
}

struct ProjectedLayer {
  LayerSpec spec;
  std::vector<std::string> published;
  std::vector<CachedFeature> features;
  std::uint64_t dropped = 0;
  std::vector<std::string> dropped_ids;
};

inline std::vector<std::uint8_t> encode_cache(const std::string& code, const std::string& timestamp,
                                              const CacheSpec& spec, const std::vector<ProjectedLayer>& layers) {
  io::ByteWriter w;
  w.bytes(cache_magic);
  w.u32(cache_version);
  w.str(code);
  w.str(timestamp);
  write_projection(w, spec.projection);
  w.i64(spec.base_scale_denom);
  w.u32(cache_node_size);
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    write_spec(w, l.spec);
    w.u32(static_cast<std::uint32_t>(l.published.size()));
    for (const auto& p : l.published) w.str(p);
    w.u64(l.features.size());
    w.u64(l.dropped);
  }
  for (const auto& l : layers) {
    std::vector<Box> boxes;
    boxes.reserve(l.features.size());
    for (const auto& f : l.features) boxes.push_back(f.box);
    const PackedRTree tree(boxes, cache_node_size);
    const auto ends = tree.level_ends();
    w.u32(static_cast<std::uint32_t>(ends.size()));
    for (auto e : ends) w.u64(e);
    for (std::size_t i = 0; i < tree.boxes().size(); ++i) {
      write_box(w, tree.boxes()[i]);
      w.u64(tree.refs()[i]);
    }
    for (const auto& f : l.features) {
      w.str(f.id);
      w.u8(static_cast<std::uint8_t>(f.geometry.kind));
      w.u32(static_cast<std::uint32_t>(f.geometry.parts.size()));
      for (const auto& part : f.geometry.parts) {
        w.u32(static_cast<std::uint32_t>(part.size()));
        for (const auto& ring : part) {
          w.u32(static_cast<std::uint32_t>(ring.size()));
          for (const auto& p : ring) {
            w.f64(p.x);
            w.f64(p.y);
          }
        }
      }
      w.u32(static_cast<std::uint32_t>(f.attributes.size()));
      for (const auto& [k, v] : f.attributes) {
        w.str(k);
        write_value(w, v);
      }
    }
  }
  w.seal();
  return w.take();
}

}  // namespace detail

inline std::shared_ptr<const SmartCache> SmartCache::decode(std::span<const std::uint8_t> data) {
  if (data.size() < cache_magic.size() ||
      std::string_view(reinterpret_cast<const char*>(data.data()), cache_magic.size()) != cache_magic)
    throw error(errc::format_error, "not a cache file (bad magic)");
  io::ByteReader head(data.subspan(cache_magic.size()));
  if (const auto v = head.u32(); v != cache_version)
    throw error(errc::unsupported_version, "unsupported cache version " + std::to_string(v));
  auto body = io::verify_sealed(data);
  io::ByteReader r(body.subspan(cache_magic.size() + 4));

  std::shared_ptr<SmartCache> c(new SmartCache());
  c->size_ = data.size();
  c->country_ = r.str();
  c->timestamp_ = r.str();
  c->spec_.projection = detail::read_projection(r);
  c->projector_ = geo::Projector(c->spec_.projection);
  c->spec_.base_scale_denom = r.i64();
  const auto node_size = r.u32();
  c->layers_.resize(r.count(r.u32(), 16));
  std::vector<std::uint64_t> counts;
  for (auto& l : c->layers_) {
    l.spec = detail::read_spec(r);
    std::vector<std::string> published(r.count(r.u32(), 4));
    for (auto& p : published) p = r.str();
    c->spec_.layers.push_back({l.spec.name, published});
    counts.push_back(r.u64());
    l.dropped_out_of_zone = r.u64();
  }
  for (std::size_t li = 0; li < c->layers_.size(); ++li) {
    auto& l = c->layers_[li];
    std::vector<std::uint64_t> ends(r.count(r.u32(), 8));
    for (auto& e : ends) e = r.u64();
    const std::size_t nodes = ends.empty() ? 0 : r.count(ends.back(), 40);
    std::vector<Box> boxes(nodes);
    std::vector<std::uint64_t> refs(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      boxes[i] = detail::read_box(r);
      refs[i] = r.u64();
    }
    l.features.resize(r.count(counts[li], 9));
    for (auto& f : l.features) {
      f.id = r.str();
      f.geometry.kind = detail::read_enum(r, GeometryKind::multipolygon, "feature geometry kind");
      f.geometry.parts.resize(r.count(r.u32(), 4));
      for (auto& part : f.geometry.parts) {
        part.resize(r.count(r.u32(), 4));
        for (auto& ring : part) {
          ring.resize(r.count(r.u32(), 16));
          for (auto& p : ring) {
            p.x = r.f64();
            p.y = r.f64();
          }
        }
      }
      const auto na = r.count(r.u32(), 6);
      for (std::size_t i = 0; i < na; ++i) {
        auto key = r.str();
        f.attributes.emplace(std::move(key), detail::read_value(r));
      }
      f.box = bounds(f.geometry);
    }
    l.index = PackedRTree::from_parts(node_size, l.features.size(), std::move(boxes), std::move(refs), std::move(ends));
    for (std::size_t i = 0; i < l.features.size(); ++i)
      if (!(l.index.boxes()[i] == l.features[l.index.refs()[i]].box))
        throw error(errc::corrupt, "spatial index does not match feature records");
  }
  if (r.remaining() != 0) throw error(errc::corrupt, "trailing bytes after last layer");
  return c;
}

inline std::shared_ptr<const SmartCache> open_cache(const std::filesystem::path& path) {
  try {
    return SmartCache::decode(io::read_file(path));
  } catch (const error& e) {
    throw error(e.code(), path.string() + ": " + e.what(), e.detail());
  }
}

// ---------------------------------------------------------------------------
// Build

struct CacheBuildReport {
  std::filesystem::path path;
  std::vector<std::pair<std::string, std::size_t>> layer_counts;
  std::size_t dropped_out_of_zone = 0;
  std::vector<std::string> dropped;  // "layer/id: reason"
  std::size_t bytes = 0;
  bool unchanged = false;  // existing file already had identical bytes
};

inline nlohmann::json to_json(const CacheBuildReport& r) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [k, v] : r.layer_counts) counts[k] = v;
  return {{"path", r.path.string()},     {"layer_counts", counts}, {"dropped_out_of_zone", r.dropped_out_of_zone},
          {"dropped", r.dropped},        {"bytes", r.bytes},       {"unchanged", r.unchanged}};
}

namespace detail {

/// Exclusive advisory lock on `<path>.lock` for the lifetime of the object.
class BuildLock {
 public:
  explicit BuildLock(const std::filesystem::path& target) {
    auto p = target;
    p += ".lock";
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw error(errc::io_error, "cannot create lock file " + p.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw error(errc::io_error, "cannot lock " + p.string());
    }
  }
  ~BuildLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  BuildLock(const BuildLock&) = delete;
  BuildLock& operator=(const BuildLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace detail

/// Projected, encoded cache bytes for `w`. Throws on an invalid spec or an
/// invalid warehouse.
inline std::vector<std::uint8_t> encode_cache(const Warehouse& w, const CacheSpec& spec,
                                              CacheBuildReport* report = nullptr) {
  if (spec.layers.empty()) throw error(errc::invalid_argument, "cache spec selects no layers");
  spec.projection.check();
  std::vector<detail::ProjectedLayer> layers;
  for (const auto& sel : spec.layers) {
    const Layer& src = w.layer(sel.name);
    if (src.spec.geometry_kind == GeometryKind::image)
      throw error(errc::not_publishable, "rasters cannot be published (layer '" + sel.name + "')");
    for (const auto& other : layers)
      if (other.spec.name == sel.name) throw error(errc::invalid_argument, "layer '" + sel.name + "' selected twice");
    detail::ProjectedLayer pl;
    pl.spec = src.spec;
    pl.spec.attributes.clear();
    if (sel.published) {
      for (const auto& name : *sel.published) {
        const auto* f = src.spec.field(name);
        if (!f)
          throw error(errc::invalid_argument,
                      "published attribute '" + name + "' is not in the schema of layer '" + sel.name + "'");
        if (std::find(pl.published.begin(), pl.published.end(), name) != pl.published.end())
          throw error(errc::invalid_argument, "published attribute '" + name + "' listed twice");
        pl.published.push_back(name);
      }
    } else {
      for (const auto& f : src.spec.attributes) pl.published.push_back(f.name);
    }
    for (const auto& f : src.spec.attributes)
      if (std::find(pl.published.begin(), pl.published.end(), f.name) != pl.published.end())
        pl.spec.attributes.push_back(f);
    layers.push_back(std::move(pl));
  }

  if (auto v = validate(w); !v.passed())
    throw error(errc::validation_failed,
                "warehouse " + w.country_code + " fails validation (" + std::to_string(v.failure_count()) +
                    " problems); run validate for details",
                to_json(v).dump());

  const geo::Projector proj(spec.projection);
  for (auto& pl : layers) {
    const Layer& src = w.layer(pl.spec.name);
    for (const auto& f : src.features) {
      CachedFeature cf;
      cf.id = f.id;
      cf.geometry.kind = f.geometry.kind;
      try {
        for (const auto& part : f.geometry.parts) {
          auto& out_part = cf.geometry.parts.emplace_back();
          for (const auto& path : part) {
            auto& out_path = out_part.emplace_back();
            out_path.reserve(path.size());
            for (const auto& p : path) out_path.push_back(proj.forward(p));
          }
        }
      } catch (const error& e) {
        if (e.code() != errc::out_of_zone) throw;
        ++pl.dropped;
        pl.dropped_ids.push_back(pl.spec.name + "/" + f.id + ": " + e.what());
        continue;
      }
      for (const auto& [k, v] : f.attributes)
        if (std::find(pl.published.begin(), pl.published.end(), k) != pl.published.end()) cf.attributes.emplace(k, v);
      cf.box = bounds(cf.geometry);
      pl.features.push_back(std::move(cf));
    }
  }

  auto bytes = detail::encode_cache(w.country_code, w.metadata.build_timestamp, spec, layers);
  if (report) {
    for (const auto& pl : layers) {
      report->layer_counts.emplace_back(pl.spec.name, pl.features.size());
      report->dropped_out_of_zone += pl.dropped;
      report->dropped.insert(report->dropped.end(), pl.dropped_ids.begin(), pl.dropped_ids.end());
    }
    report->bytes = bytes.size();
  }
  return bytes;
}

/// Builds the cache and atomically replaces `out_path`. Readers holding the
/// old file keep their snapshot. An existing file with identical content is
/// left untouched and reported as unchanged.
inline CacheBuildReport build_cache(const Warehouse& w, const CacheSpec& spec, const std::filesystem::path& out_path) {
  CacheBuildReport report;
  report.path = out_path;
  auto bytes = encode_cache(w, spec, &report);
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  detail::BuildLock lock(out_path);
  std::error_code ec;
  if (std::filesystem::exists(out_path, ec)) {
    try {
      report.unchanged = io::read_file(out_path) == bytes;
    } catch (const error&) {
      report.unchanged = false;
    }
  }
  if (!report.unchanged) io::write_file_atomic(out_path, bytes);
  return report;
}

/// Full rebuild; there is no incremental path.
inline CacheBuildReport rebuild_from(const Warehouse& w, const CacheSpec& spec, const std::filesystem::path& path) {
  return build_cache(w, spec, path);
}

}  // namespace atlas
