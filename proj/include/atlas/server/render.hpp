#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "atlas/cache/smartcache.hpp"
#include "atlas/geo/simplify.hpp"
#include "atlas/tolerances.hpp"

namespace atlas::server {

// ---------------------------------------------------------------------------
// Scale rules

inline double clamp_scale(double s) { return std::clamp(s, defaults::min_scale_denom, defaults::max_scale_denom); }

/// Scale denominator at which `width_m` metres fill `width_px` reference pixels.
inline double auto_scale(double width_m, int width_px, double pixel_m = defaults::reference_pixel_m) {
  return clamp_scale(width_m / (width_px * pixel_m));
}

inline double simplify_tolerance(double scale, double per_scale = defaults::simplify_per_scale) {
  return per_scale * scale;
}

inline double tolerance_metres(double tolerance_px, double scale, double pixel_m = defaults::reference_pixel_m) {
  return tolerance_px * pixel_m * scale;
}

inline void check_image_size(int width, int height) {
  if (width < defaults::min_image_px || width > defaults::max_image_px || height < defaults::min_image_px ||
      height > defaults::max_image_px)
    throw error(errc::invalid_argument, "image size must be within [" + std::to_string(defaults::min_image_px) +
                                            ", " + std::to_string(defaults::max_image_px) + "] pixels");
}

/// Grows the short axis of `b` about its center so that b matches w:h.
inline Box fit_aspect(const Box& b, int w, int h) {
  if (b.empty() || !(b.width() > 0.0) || !(b.height() > 0.0) || !std::isfinite(b.width()) ||
      !std::isfinite(b.height()))
    throw error(errc::invalid_argument, "bbox is degenerate");
  const double want = static_cast<double>(w) / h;
  const double cx = (b.minx + b.maxx) / 2, cy = (b.miny + b.maxy) / 2;
  double bw = b.width(), bh = b.height();
  if (bw / bh < want)
    bw = bh * want;
  else
    bh = bw / want;
  return {cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2};
}

// ---------------------------------------------------------------------------
// Generalization

/// Douglas-Peucker on every path. Rings that would fall below four vertices
/// and lines below two keep their original vertices.
inline PlanarGeometry simplify_geometry(const PlanarGeometry& g, double tol) {
  if (g.kind == GeometryKind::point || tol <= 0.0) return g;
  const std::size_t floor = g.kind == GeometryKind::polyline ? 2 : 4;
  PlanarGeometry out = g;
  out.for_each_path([&](auto& path) {
    auto s = geo::simplify(path, tol);
    if (s.size() >= floor) path = std::move(s);
  });
  return out;
}

inline std::size_t vertex_total(const PlanarGeometry& g) { return g.vertex_count(); }

// ---------------------------------------------------------------------------
// Clipping against an axis-aligned rectangle

namespace detail {

using Path2 = std::vector<geo::ProjectedPoint>;

/// Sutherland-Hodgman. Input and output rings are closed.
inline Path2 clip_ring(const Path2& ring, const Box& r) {
  Path2 poly(ring.begin(), ring.end() - (ring.size() > 1 && ring.front() == ring.back() ? 1 : 0));
  auto clip_edge = [&](auto inside, auto cross) {
    Path2 out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      const bool ia = inside(a), ib = inside(b);
      if (ia) out.push_back(a);
      if (ia != ib) out.push_back(cross(a, b));
    }
    poly = std::move(out);
  };
  auto at_x = [](double x) {
    return [x](const geo::ProjectedPoint& a, const geo::ProjectedPoint& b) {
      return geo::ProjectedPoint{x, a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)};
    };
  };
  auto at_y = [](double y) {
    return [y](const geo::ProjectedPoint& a, const geo::ProjectedPoint& b) {
      return geo::ProjectedPoint{a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y), y};
    };
  };
  clip_edge([&](const auto& p) { return p.x >= r.minx; }, at_x(r.minx));
  if (!poly.empty()) clip_edge([&](const auto& p) { return p.x <= r.maxx; }, at_x(r.maxx));
  if (!poly.empty()) clip_edge([&](const auto& p) { return p.y >= r.miny; }, at_y(r.miny));
  if (!poly.empty()) clip_edge([&](const auto& p) { return p.y <= r.maxy; }, at_y(r.maxy));
  if (poly.size() < 3) return {};
  poly.push_back(poly.front());
  return poly;
}

/// Liang-Barsky per segment; returns the visible runs.
inline std::vector<Path2> clip_line(const Path2& line, const Box& r) {
  std::vector<Path2> runs;
  Path2 cur;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const auto a = line[i], b = line[i + 1];
    const double dx = b.x - a.x, dy = b.y - a.y;
    double t0 = 0.0, t1 = 1.0;
    bool visible = true;
    for (auto [p, q] : {std::pair{-dx, a.x - r.minx}, {dx, r.maxx - a.x}, {-dy, a.y - r.miny}, {dy, r.maxy - a.y}}) {
      if (p == 0.0) {
        if (q < 0.0) visible = false;
      } else {
        const double t = q / p;
        if (p < 0.0)
          t0 = std::max(t0, t);
        else
          t1 = std::min(t1, t);
      }
    }
    if (!visible || t0 > t1) {
      if (cur.size() >= 2) runs.push_back(std::move(cur));
      cur.clear();
      continue;
    }
    const geo::ProjectedPoint s{a.x + t0 * dx, a.y + t0 * dy}, e{a.x + t1 * dx, a.y + t1 * dy};
    if (cur.empty() || t0 > 0.0) {
      if (cur.size() >= 2) runs.push_back(std::move(cur));
      cur = {s};
    }
    cur.push_back(e);
    if (t1 < 1.0) {
      runs.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (cur.size() >= 2) runs.push_back(std::move(cur));
  return runs;
}

inline cv::Scalar color(std::string_view hex, cv::Scalar fallback = {0, 0, 0}) {
  if (hex.size() != 7 || hex[0] != '#') return fallback;
  unsigned v = 0;
  for (char c : hex.substr(1)) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
    else return fallback;
  }
  return cv::Scalar((v & 0xff), (v >> 8) & 0xff, (v >> 16) & 0xff);  // BGR
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rendering

inline constexpr int symbol_radius_px = 4;
inline constexpr std::string_view background_color = "#dceefa";

struct RenderView {
  Box bbox;  // projected, already fitted to the image aspect
  int width = 256, height = 256;
  double scale = 0;
  double simplify_per_scale = defaults::simplify_per_scale;

  double metres_per_pixel() const { return bbox.width() / width; }
};

struct RenderResult {
  std::vector<std::uint8_t> png;
  std::vector<std::string> layers;  // drawn, in drawing order
  std::size_t features = 0;
};

/// Draws `layers` (already in catalog order and scale-filtered) into a PNG.
inline RenderResult render_png(const SmartCache& cache, const std::vector<const CacheLayer*>& layers,
                               const RenderView& v) {
  check_image_size(v.width, v.height);
  cv::Mat img(v.height, v.width, CV_8UC3, detail::color(background_color));
  constexpr int shift = 4;
  const double sx = v.width / v.bbox.width(), sy = v.height / v.bbox.height();
  auto px = [&](const geo::ProjectedPoint& p) {
    return cv::Point(static_cast<int>(std::lround((p.x - v.bbox.minx) * sx * (1 << shift))),
                     static_cast<int>(std::lround((v.bbox.maxy - p.y) * sy * (1 << shift))));
  };
  // Clip a little outside the frame so strokes at the edge stay whole.
  const double pad = 8 * v.metres_per_pixel();
  const Box clip{v.bbox.minx - pad, v.bbox.miny - pad, v.bbox.maxx + pad, v.bbox.maxy + pad};
  const double tol = simplify_tolerance(v.scale, v.simplify_per_scale);

  RenderResult result;
  for (const CacheLayer* layer : layers) {
    const auto& st = layer->spec.style;
    const auto stroke = detail::color(st.stroke);
    const int thickness = std::max(1, static_cast<int>(std::lround(st.stroke_width)));
    const bool filled = !st.fill.empty();
    const auto fill = detail::color(st.fill, stroke);
    const auto hits = cache.query_bbox(layer->spec.name, clip);
    for (const CachedFeature* f : hits) {
      const auto g = simplify_geometry(f->geometry, tol);
      switch (g.kind) {
        case GeometryKind::point: {
          const auto c = px(g.parts[0][0][0]);
          const int r = symbol_radius_px << shift;
          if (st.symbol == "square") {
            cv::rectangle(img, c - cv::Point(r, r), c + cv::Point(r, r), fill, cv::FILLED, cv::LINE_AA, shift);
            cv::rectangle(img, c - cv::Point(r, r), c + cv::Point(r, r), stroke, 1, cv::LINE_AA, shift);
          } else if (st.symbol == "triangle") {
            std::vector<cv::Point> tri{c + cv::Point(0, -r), c + cv::Point(r, r), c + cv::Point(-r, r)};
            cv::fillConvexPoly(img, tri, fill, cv::LINE_AA, shift);
            cv::polylines(img, std::vector<std::vector<cv::Point>>{tri}, true, stroke, 1, cv::LINE_AA, shift);
          } else {
            cv::circle(img, c, r, fill, cv::FILLED, cv::LINE_AA, shift);
            cv::circle(img, c, r, stroke, 1, cv::LINE_AA, shift);
          }
          break;
        }
        case GeometryKind::polyline: {
          std::vector<std::vector<cv::Point>> runs;
          for (const auto& run : detail::clip_line(g.parts[0][0], clip)) {
            runs.emplace_back();
            for (const auto& p : run) runs.back().push_back(px(p));
          }
          if (!runs.empty()) cv::polylines(img, runs, false, stroke, thickness, cv::LINE_AA, shift);
          break;
        }
        case GeometryKind::polygon:
        case GeometryKind::multipolygon: {
          for (const auto& part : g.parts) {
            std::vector<std::vector<cv::Point>> rings;
            for (const auto& ring : part) {
              auto clipped = detail::clip_ring(ring, clip);
              if (clipped.empty()) continue;
              rings.emplace_back();
              for (const auto& p : clipped) rings.back().push_back(px(p));
            }
            if (rings.empty()) continue;
            if (filled) cv::fillPoly(img, rings, fill, cv::LINE_AA, shift);
            cv::polylines(img, rings, true, stroke, thickness, cv::LINE_AA, shift);
          }
          break;
        }
        case GeometryKind::image:
          break;
      }
    }
    result.features += hits.size();
    result.layers.push_back(layer->spec.name);
  }
  if (!cv::imencode(".png", img, result.png, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw error(errc::internal, "PNG encoding failed");
  return result;
}

}  // namespace atlas::server
