#pragma once

#include <cstddef>

#include "sqz/geom/pointcloud.hpp"

namespace sqz::geom {

/// Symmetric Chamfer distance: mean over a of the squared distance to the
/// nearest point of b, plus the same with roles swapped. Uses the parallel
/// nearest-neighbor kernel.
double chamfer(const PointCloud& a, const PointCloud& b);

/// Brute-force serial reference for the above; bit-identical by construction.
double chamfer_serial(const PointCloud& a, const PointCloud& b);

/// Structural point-cloud similarity in [0, 1]; 1 exactly for identical
/// clouds. Definition (fixed so numbers are comparable across runs):
///   1. For every point, collect the distances to its k nearest neighbors
///      within its own cloud (self excluded); reduce them to a mean mu and a
///      biased variance v. These two numbers are the point's local feature.
///   2. Match every point of A to its nearest point in B (and vice versa).
///   3. Score a matched pair through SSIM-style ratios with eps = 1e-12:
///        s = (2*muA*muB + eps)/(muA^2 + muB^2 + eps)
///          * (2*vA*vB + eps)/(vA^2 + vB^2 + eps)
///   4. pointsim = mean pair score, averaged over both match directions.
/// Requires N >= k >= 2 for both clouds. At the N == k boundary only k-1
/// self-excluded neighbors exist, so the feature falls back to all N-1.
double pointsim(const PointCloud& a, const PointCloud& b, size_t k = 8);

} // namespace sqz::geom
