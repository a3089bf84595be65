#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "atlas/tolerances.hpp"
#include "atlas/warehouse/warehouse.hpp"

namespace atlas {

namespace detail {

inline double deg_distance(const geo::GeoPoint& a, const geo::GeoPoint& b) noexcept {
  return std::hypot(a.lon() - b.lon(), a.lat() - b.lat());
}

/// Canonical vertex positions bucketed on a square grid of cell size `tol`.
/// Earlier insertions win ties.
class SnapIndex {
 public:
  explicit SnapIndex(double tol) : tol_(tol) {}

  void insert(const geo::GeoPoint& p) {
    if (tol_ <= 0.0) return;
    auto& bucket = cells_[key(cell(p.lon()), cell(p.lat()))];
    for (auto i : bucket)
      if (points_[i] == p) return;
    bucket.push_back(points_.size());
    points_.push_back(p);
  }

  /// Nearest canonical vertex within tol, if any.
  std::optional<geo::GeoPoint> nearest(const geo::GeoPoint& p) const {
    if (tol_ <= 0.0) return std::nullopt;
    const auto cx0 = cell(p.lon()), cy0 = cell(p.lat());
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(key(cx0 + dx, cy0 + dy));
        if (it == cells_.end()) continue;
        for (auto i : it->second) {
          const double d = deg_distance(points_[i], p);
          if (d > tol_) continue;
          if (!best || d < best_d || (d == best_d && i < *best)) {
            best = i;
            best_d = d;
          }
        }
      }
    if (!best) return std::nullopt;
    return points_[*best];
  }

 private:
  std::int64_t cell(double v) const noexcept { return static_cast<std::int64_t>(std::floor(v / tol_)); }
  static std::uint64_t key(std::int64_t x, std::int64_t y) noexcept {
    return static_cast<std::uint64_t>(x) * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(y);
  }

  double tol_;
  std::vector<geo::GeoPoint> points_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

template <typename Coord>
std::size_t remove_consecutive_duplicates(Path<Coord>& path) {
  if (path.size() < 2) return 0;
  const auto before = path.size();
  path.erase(std::unique(path.begin(), path.end()), path.end());
  return before - path.size();
}

inline bool is_ring_kind(GeometryKind k) noexcept {
  return k == GeometryKind::polygon || k == GeometryKind::multipolygon;
}

}  // namespace detail

struct CleanOptions {
  double snap_tol = defaults::snap_tol_deg;
  /// Layers whose vertices act as canonical positions for this layer
  /// (cross-layer congruence). Empty by default.
  std::vector<std::string> snap_to_layers;
};

/**
 * Cleans one layer in place, visiting features in id order:
 *   1. drop consecutive duplicate vertices
 *   2. close rings whose ends are within snap_tol, reject the rest
 *   3. snap vertices to the nearest vertex of a lower-id feature within tol
 *   4. drop duplicates again, reject degenerate geometry, fix ring winding
 * A second run over the result reports no changes.
 */
inline CleanReport clean_topology(Warehouse& w, std::string_view layer_name, const CleanOptions& opts = {}) {
  if (!(opts.snap_tol >= 0.0) || !std::isfinite(opts.snap_tol))
    throw error(errc::invalid_argument, "snap tolerance must be a finite value >= 0");
  Layer& layer = w.layer(layer_name);
  CleanReport report;
  detail::SnapIndex canon(opts.snap_tol);
  for (const auto& other : opts.snap_to_layers) {
    if (other == layer.spec.name) continue;
    for (const auto& f : w.layer(other).features)
      f.geometry.for_each_path([&](const auto& path) {
        for (const auto& p : path) canon.insert(p);
      });
  }

  const bool rings = detail::is_ring_kind(layer.spec.geometry_kind);
  std::vector<Feature> kept;
  kept.reserve(layer.features.size());
  for (auto& f : layer.features) {
    CleanReport local;
    std::string reason;
    f.geometry.for_each_path([&](auto& path) {
      if (!reason.empty()) return;
      local.duplicates_removed += detail::remove_consecutive_duplicates(path);
      if (rings && path.size() >= 2 && !(path.front() == path.back())) {
        if (detail::deg_distance(path.front(), path.back()) > opts.snap_tol) {
          reason = "open ring: ends are farther apart than the snap tolerance";
          return;
        }
        path.back() = path.front();
        ++local.rings_closed;
      }
      for (auto& p : path) {
        auto c = canon.nearest(p);
        if (c && !(*c == p)) {
          p = *c;
          ++local.vertices_snapped;
        }
      }
      local.duplicates_removed += detail::remove_consecutive_duplicates(path);
      const std::size_t min_vertices = rings ? 4 : (layer.spec.geometry_kind == GeometryKind::polyline ? 2 : 1);
      if (path.size() < min_vertices)
        reason = rings ? "degenerate ring (fewer than 4 vertices)" : "degenerate polyline (fewer than 2 vertices)";
    });
    if (!reason.empty()) {
      report.reject(f.id, reason);
      continue;
    }
    local.rings_reoriented += orient_rings(f.geometry);
    report += local;
    f.geometry.for_each_path([&](const auto& path) {
      for (const auto& p : path) canon.insert(p);
    });
    kept.push_back(std::move(f));
  }
  layer.features = std::move(kept);
  if (report.changed()) {
    auto note = "cleaned " + layer.spec.name + ": " + std::to_string(report.vertices_snapped) + " snapped, " +
                std::to_string(report.rings_closed) + " rings closed, " +
                std::to_string(report.features_rejected) + " rejected";
    w.metadata.provenance.push_back(note);
    report.notes.push_back(std::move(note));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sheet merging

namespace detail {

inline std::string merge_key_text(const AttributeValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::string>) return x;
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else return std::to_string(x);
      },
      v);
}

using GeoPath = Path<geo::GeoPoint>;

/// Joins `other` onto `chain` if an endpoint pair lies within tol. The
/// chain keeps its own direction and its own seam vertex.
inline bool join_polylines(GeoPath& chain, const GeoPath& other, double tol) {
  auto near = [&](const geo::GeoPoint& a, const geo::GeoPoint& b) { return deg_distance(a, b) <= tol; };
  if (near(chain.back(), other.front())) {
    chain.insert(chain.end(), other.begin() + 1, other.end());
  } else if (near(chain.back(), other.back())) {
    chain.insert(chain.end(), other.rbegin() + 1, other.rend());
  } else if (near(chain.front(), other.back())) {
    chain.insert(chain.begin(), other.begin(), other.end() - 1);
  } else if (near(chain.front(), other.front())) {
    chain.insert(chain.begin(), other.rbegin(), other.rend() - 1);
  } else {
    return false;
  }
  return true;
}

/**
 * Dissolves two counter-clockwise closed rings that share a seam: a run of
 * at least two vertices that A traverses forward and B traverses backward.
 * With the seam running A[i..j] (and B[p..q] backward), the result walks
 * A from j round to i, then B from p+1 round to q-1.
 */
inline std::optional<GeoPath> dissolve_rings(const GeoPath& a_closed, const GeoPath& b_closed, double tol) {
  const GeoPath a(a_closed.begin(), a_closed.end() - 1), b(b_closed.begin(), b_closed.end() - 1);
  const std::size_t n = a.size(), m = b.size();
  if (n < 3 || m < 3) return std::nullopt;
  auto match = [&](std::size_t i, std::size_t p) { return deg_distance(a[i % n], b[p % m]) <= tol; };

  std::size_t best_len = 0, bi = 0, bp = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < m; ++p) {
      if (!match(i, p) || match(i + n - 1, p + 1)) continue;  // not the start of a run
      std::size_t k = 1;
      while (k < std::min(n, m) && match(i + k, p + m - k)) ++k;
      if (k > best_len) {
        best_len = k;
        bi = i;
        bp = p;
      }
    }
  if (best_len < 2 || best_len >= std::min(n, m)) return std::nullopt;

  const std::size_t j = (bi + best_len - 1) % n;
  const std::size_t q = (bp + m - (best_len - 1)) % m;
  GeoPath out;
  for (std::size_t k = j;; k = (k + 1) % n) {
    out.push_back(a[k]);
    if (k == bi) break;
  }
  for (std::size_t k = (bp + 1) % m; k != q; k = (k + 1) % m) out.push_back(b[k]);
  out.push_back(out.front());
  return out;
}

inline void merge_attributes(Feature& into, const Feature& from, std::vector<std::string>& notes) {
  for (const auto& [k, v] : from.attributes) {
    auto it = into.attributes.find(k);
    if (it == into.attributes.end()) {
      into.attributes.emplace(k, v);
    } else if (!(it->second == v)) {
      notes.push_back("merged feature " + into.id + ": attribute '" + k + "' differs on sheet feature " + from.id +
                      "; kept value from " + into.id);
    }
  }
}

}  // namespace detail

/**
 * Joins features split across map sheets. Features sharing a
 * `sheet_merge_key` value are combined: polylines end to end when endpoints
 * are within seam_tol, polygons by dissolving a shared seam. The merged
 * feature keeps the lowest id and, for conflicting attributes, the values
 * of that first sheet. Candidates that cannot be joined are listed in
 * `unmerged`.
 */
inline CleanReport merge_sheets(Warehouse& w, std::string_view layer_name,
                                double seam_tol = defaults::seam_tol_deg) {
  if (!(seam_tol >= 0.0) || !std::isfinite(seam_tol))
    throw error(errc::invalid_argument, "seam tolerance must be a finite value >= 0");
  Layer& layer = w.layer(layer_name);
  CleanReport report;
  const auto kind = layer.spec.geometry_kind;
  if (kind != GeometryKind::polyline && !detail::is_ring_kind(kind)) return report;

  // Groups in order of their lowest member id; features already sorted.
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < layer.features.size(); ++i) {
    auto it = layer.features[i].attributes.find(sheet_merge_key);
    if (it == layer.features[i].attributes.end()) continue;
    auto key = detail::merge_key_text(it->second);
    auto [g, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    g->second.push_back(i);
  }

  std::vector<bool> absorbed(layer.features.size(), false);
  for (const auto& key : order) {
    const auto& members = groups[key];
    if (members.size() < 2) continue;
    std::vector<std::size_t> pending(members.begin(), members.end());
    while (!pending.empty()) {
      Feature& head = layer.features[pending.front()];
      pending.erase(pending.begin());
      const bool single_part = head.geometry.parts.size() == 1;
      bool grew = true;
      std::size_t joined = 0;
      while (grew && single_part) {
        grew = false;
        for (auto it = pending.begin(); it != pending.end(); ++it) {
          const Feature& other = layer.features[*it];
          if (other.geometry.parts.size() != 1) continue;
          bool ok = false;
          if (kind == GeometryKind::polyline) {
            ok = detail::join_polylines(head.geometry.parts[0][0], other.geometry.parts[0][0], seam_tol);
          } else if (auto ring = detail::dissolve_rings(head.geometry.parts[0][0], other.geometry.parts[0][0],
                                                        seam_tol)) {
            auto& part = head.geometry.parts[0];
            part[0] = std::move(*ring);
            part.insert(part.end(), other.geometry.parts[0].begin() + 1, other.geometry.parts[0].end());
            ok = true;
          }
          if (!ok) continue;
          detail::merge_attributes(head, other, report.notes);
          absorbed[*it] = true;
          ++report.features_merged;
          ++joined;
          pending.erase(it);
          grew = true;
          break;
        }
      }
      if (joined) {
        head.geometry.for_each_path([](auto& path) { detail::remove_consecutive_duplicates(path); });
        auto note = "merged " + std::to_string(joined + 1) + " sheet pieces of '" + key + "' into feature " + head.id;
        w.metadata.provenance.push_back(note);
        report.notes.push_back(std::move(note));
      } else {
        report.unmerged.push_back("feature " + head.id + " (sheet_merge_key '" + key +
                                  "'): no seam partner within tolerance");
      }
    }
  }

  if (report.features_merged) {
    std::vector<Feature> kept;
    for (std::size_t i = 0; i < layer.features.size(); ++i)
      if (!absorbed[i]) kept.push_back(std::move(layer.features[i]));
    layer.features = std::move(kept);
  }
  return report;
}

}  // namespace atlas
