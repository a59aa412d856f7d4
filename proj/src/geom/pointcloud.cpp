#include "sqz/geom/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqz/core/binio.hpp"
#include "sqz/core/error.hpp"

namespace sqz::geom {

bool PointCloud::all_finite() const {
    for (double v : xyz) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

PointCloud normalize(const PointCloud& pc) {
    const size_t n = pc.count();
    if (n == 0) throw ShapeError("normalize: empty cloud");

    double lo[3], hi[3];
    for (int a = 0; a < 3; ++a) lo[a] = hi[a] = pc.at(0, a);
    for (size_t i = 1; i < n; ++i) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], pc.at(i, a));
            hi[a] = std::max(hi[a], pc.at(i, a));
        }
    }
    double center[3], half = 0.0;
    for (int a = 0; a < 3; ++a) {
        center[a] = 0.5 * (lo[a] + hi[a]);
        half = std::max(half, 0.5 * (hi[a] - lo[a]));
    }

    PointCloud out(n);
    if (half <= 0.0) return out; // all points identical -> the origin
    const double inv = 1.0 / half;
    for (size_t i = 0; i < n; ++i) {
        for (int a = 0; a < 3; ++a) out.at(i, a) = (pc.at(i, a) - center[a]) * inv;
    }
    return out;
}

bool is_normalized(const PointCloud& pc, double tol) {
    const size_t n = pc.count();
    if (n == 0) return false;
    double lo[3], hi[3];
    for (int a = 0; a < 3; ++a) lo[a] = hi[a] = pc.at(0, a);
    for (size_t i = 1; i < n; ++i) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], pc.at(i, a));
            hi[a] = std::max(hi[a], pc.at(i, a));
        }
    }
    double half = 0.0;
    for (int a = 0; a < 3; ++a) {
        if (std::abs(lo[a] + hi[a]) > 2.0 * tol) return false;
        if (hi[a] > 1.0 + tol || lo[a] < -1.0 - tol) return false;
        half = std::max(half, 0.5 * (hi[a] - lo[a]));
    }
    return half <= 1.0 + tol && (half >= 1.0 - tol || half == 0.0);
}

void save_pcl(const std::string& path, const PointCloud& pc) {
    ByteWriter w;
    w.magic("PCL1");
    w.u32(static_cast<uint32_t>(pc.count()));
    for (double v : pc.xyz) w.f32(static_cast<float>(v));
    write_file(path, w.data());
}

PointCloud load_pcl(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic("PCL1", "point cloud " + path);
    const uint32_t n = r.u32();
    if (r.remaining() != static_cast<size_t>(n) * 12) {
        throw FormatError("point cloud " + path + ": size does not match header count");
    }
    PointCloud pc(n);
    for (size_t i = 0; i < pc.xyz.size(); ++i) pc.xyz[i] = static_cast<double>(r.f32());
    return pc;
}

void save_xyz(const std::string& path, const PointCloud& pc) {
    std::ostringstream os;
    os.precision(9);
    for (size_t i = 0; i < pc.count(); ++i) {
        os << pc.at(i, 0) << ' ' << pc.at(i, 1) << ' ' << pc.at(i, 2) << '\n';
    }
    write_text_file(path, os.str());
}

PointCloud load_xyz(const std::string& path) {
    std::istringstream is(read_text_file(path));
    PointCloud pc;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 'x y z'");
        }
        pc.xyz.push_back(x);
        pc.xyz.push_back(y);
        pc.xyz.push_back(z);
    }
    if (pc.count() == 0) throw FormatError(path + ": no points");
    return pc;
}

static bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

PointCloud load_cloud(const std::string& path) {
    return has_suffix(path, ".pcl1") ? load_pcl(path) : load_xyz(path);
}

void save_cloud(const std::string& path, const PointCloud& pc) {
    if (has_suffix(path, ".pcl1")) {
        save_pcl(path, pc);
    } else {
        save_xyz(path, pc);
    }
}

} // namespace sqz::geom
