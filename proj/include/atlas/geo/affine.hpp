#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "atlas/error.hpp"
#include "atlas/geo/types.hpp"
#include "atlas/tolerances.hpp"

namespace atlas::geo {

inline ProjectedPoint apply_affine(const AffineTransform& t, const ProjectedPoint& p) {
  return {t.a * p.x + t.b * p.y + t.c, t.d * p.x + t.e * p.y + t.f};
}

inline AffineTransform invert(const AffineTransform& t) {
  const double det = t.determinant();
  if (det == 0.0 || !std::isfinite(det))
    throw error(errc::singular, "affine transform is not invertible");
  AffineTransform r;
  r.a = t.e / det;
  r.b = -t.b / det;
  r.d = -t.d / det;
  r.e = t.a / det;
  r.c = -(r.a * t.c + r.b * t.f);
  r.f = -(r.d * t.c + r.e * t.f);
  return r;
}

struct AffineFit {
  AffineTransform transform;
  std::vector<double> residuals;  // meters, one per pair
  double rms = 0.0;
};

/**
 * Least-squares six-parameter fit from control point pairs.
 *
 * Coordinates are centered on the source and target centroids before the
 * normal equations are formed, so projected eastings in the hundreds of
 * kilometres do not wreck the conditioning. The two output axes share the
 * same 2x2 normal matrix; it is rejected as singular when its eigenvalue
 * ratio drops below `singular_ratio`.
 */
inline AffineFit fit_affine(std::span<const ControlPointPair> pairs,
                            double singular_ratio = defaults::affine_singular_ratio) {
  if (pairs.size() < 3)
    throw error(errc::invalid_argument, "at least 3 control point pairs are required");
  for (const auto& p : pairs)
    if (!is_finite(p.source) || !is_finite(p.target))
      throw error(errc::invalid_argument, "control points must be finite");

  // Extended precision throughout: grid northings near 1e7 m leave double
  // only ~2e-9 m of resolution.
  using L = long double;
  const L n = static_cast<L>(pairs.size());
  L sx = 0, sy = 0, tx = 0, ty = 0;
  for (const auto& p : pairs) {
    sx += p.source.x;
    sy += p.source.y;
    tx += p.target.x;
    ty += p.target.y;
  }
  sx /= n, sy /= n, tx /= n, ty /= n;

  L sxx = 0, sxy = 0, syy = 0, bx0 = 0, bx1 = 0, by0 = 0, by1 = 0;
  for (const auto& p : pairs) {
    const L u = p.source.x - sx, v = p.source.y - sy;
    const L X = p.target.x - tx, Y = p.target.y - ty;
    sxx += u * u;
    sxy += u * v;
    syy += v * v;
    bx0 += u * X;
    bx1 += v * X;
    by0 += u * Y;
    by1 += v * Y;
  }

  // eigenvalues of [[sxx, sxy], [sxy, syy]]
  const L mean = 0.5L * (sxx + syy);
  const L rad = std::hypot(0.5L * (sxx - syy), sxy);
  const L lmax = mean + rad, lmin = mean - rad;
  if (!(lmax > 0.0L) || lmin <= singular_ratio * lmax)
    throw error(errc::singular, "control point sources are collinear");

  const L det = sxx * syy - sxy * sxy;
  const L a = (syy * bx0 - sxy * bx1) / det, b = (sxx * bx1 - sxy * bx0) / det;
  const L d = (syy * by0 - sxy * by1) / det, e = (sxx * by1 - sxy * by0) / det;
  AffineFit fit;
  auto& t = fit.transform;
  t.a = static_cast<double>(a);
  t.b = static_cast<double>(b);
  t.d = static_cast<double>(d);
  t.e = static_cast<double>(e);
  t.c = static_cast<double>(tx - a * sx - b * sy);
  t.f = static_cast<double>(ty - d * sx - e * sy);

  // Residuals of the stored (double) coefficients, evaluated without rounding loss.
  L ss = 0.0L;
  fit.residuals.reserve(pairs.size());
  for (const auto& p : pairs) {
    const L x = static_cast<L>(t.a) * p.source.x + static_cast<L>(t.b) * p.source.y + t.c;
    const L y = static_cast<L>(t.d) * p.source.x + static_cast<L>(t.e) * p.source.y + t.f;
    const L r = std::hypot(x - p.target.x, y - p.target.y);
    fit.residuals.push_back(static_cast<double>(r));
    ss += r * r;
  }
  fit.rms = static_cast<double>(std::sqrt(ss / n));
  return fit;
}

}  // namespace atlas::geo
