#pragma once

// Numeric defaults used across the pipeline. Each is overridable: library
// functions take them as defaulted arguments and the CLI exposes flags.

namespace atlas::defaults {

/// Transverse Mercator series are rejected beyond this distance from the
/// central meridian, in degrees.
inline constexpr double tm_max_offset_deg = 10.0;

/// Radius of the authalic sphere used by the measuring tools, in meters.
inline constexpr double authalic_radius_m = 6371008.8;

/// GCP normal-matrix conditioning: the smallest eigenvalue of the centered
/// scatter matrix must exceed this fraction of the largest.
inline constexpr double affine_singular_ratio = 1e-12;

/// Vertex snapping and sheet seam tolerance, in degrees (~0.11 m at the
/// equator).
inline constexpr double snap_tol_deg = 1e-6;
inline constexpr double seam_tol_deg = snap_tol_deg;

/// Size of one screen pixel on the reference display, in meters.
inline constexpr double reference_pixel_m = 0.00028;

/// Simplification tolerance per unit of scale denominator (meters).
inline constexpr double simplify_per_scale = 0.0002;

/// Effective map scale clamp.
inline constexpr double min_scale_denom = 1000.0;
inline constexpr double max_scale_denom = 10000000.0;

/// Map image size limits, in pixels.
inline constexpr int min_image_px = 16;
inline constexpr int max_image_px = 4096;

/// Nominal link speed used to estimate transfer time of API payloads.
inline constexpr double link_bits_per_second = 256000.0;

}  // namespace atlas::defaults
