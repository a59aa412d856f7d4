#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sqz::geom {

// N x 3 point set, coordinates stored interleaved (x0,y0,z0,x1,...).
struct PointCloud {
    std::vector<double> xyz;

    PointCloud() = default;
    explicit PointCloud(size_t n) : xyz(n * 3, 0.0) {}

    size_t count() const { return xyz.size() / 3; }
    double& at(size_t i, size_t axis) { return xyz[i * 3 + axis]; }
    double at(size_t i, size_t axis) const { return xyz[i * 3 + axis]; }

    bool all_finite() const;
};

/// Centers the tightest axis-aligned bounding box at the origin and scales the
/// largest half-extent to 1, so every coordinate lands in [-1, 1]. Idempotent;
/// a cloud whose points are all identical collapses to the origin.
PointCloud normalize(const PointCloud& pc);

/// True when every coordinate is within [-1-tol, 1+tol] and the bounding box
/// is origin-centered within tol.
bool is_normalized(const PointCloud& pc, double tol = 1e-9);

// Binary format: magic "PCL1", u32 point count, then N x 3 f32 little-endian.
void save_pcl(const std::string& path, const PointCloud& pc);
PointCloud load_pcl(const std::string& path);

// Plain-text interchange: one "x y z" triple per line.
void save_xyz(const std::string& path, const PointCloud& pc);
PointCloud load_xyz(const std::string& path);

/// Loads by extension: ".pcl1" binary, anything else as text XYZ.
PointCloud load_cloud(const std::string& path);
void save_cloud(const std::string& path, const PointCloud& pc);

} // namespace sqz::geom
