#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sqz/geom/pointcloud.hpp"

namespace sqz::geom {

enum class ShapeKind : uint8_t { Sphere, Box, Torus, Cylinder, Union2 };

const char* shape_kind_name(ShapeKind k);

// Parameter meaning by kind:
//   sphere:   a = radius
//   box:      a, b, c = half-extents
//   torus:    a = major radius, b = minor radius (b < a)
//   cylinder: a = radius, b = half-height
//   union2:   two primitives (kind1/kind2 with their own a,b,c), the second
//             shifted +x by blend_offset before posing; points are allocated
//             to the two surfaces proportionally to their analytic areas.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Sphere;
    double a = 1.0, b = 0.5, c = 0.5;
    ShapeKind kind1 = ShapeKind::Sphere; // union2 only: first member's kind
    ShapeKind kind2 = ShapeKind::Box;    // union2 only: second member's kind
    double a2 = 0.5, b2 = 0.3, c2 = 0.3;
    double blend_offset = 0.8;
    std::array<double, 4> quat = {1.0, 0.0, 0.0, 0.0}; // unit (w,x,y,z)
    std::array<double, 3> translate = {0.0, 0.0, 0.0};
    size_t n_points = 2048;
    uint64_t seed = 0;
};

/// Samples n_points uniformly by surface area from the analytic surface,
/// applies the pose, and returns the raw (un-normalized) cloud. Deterministic
/// per spec. Degenerate parameters (non-positive extents, torus minor >=
/// major, non-unit quaternion) are rejected.
PointCloud gen_shape(const ShapeSpec& spec);

/// Analytic surface area of a primitive spec (union2 sums its parts).
double surface_area(const ShapeSpec& spec);

/// The dataset recipe: n specs drawn from a seeded distribution over kinds,
/// parameters and poses. Per-shape seeds are derived from `seed`, so any
/// subset can be regenerated independently.
std::vector<ShapeSpec> make_dataset_specs(size_t n, size_t n_points, uint64_t seed);

// Contiguous 80/10/10 split boundaries over n items (specs are i.i.d., so
// contiguous ranges are unbiased): [0,train) [train,train+val) [.., n).
struct SplitSizes {
    size_t train, val, test;
};
SplitSizes split_80_10_10(size_t n);

} // namespace sqz::geom
