#include "sqz/geom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sqz/core/error.hpp"
#include "sqz/nn/kernels.hpp"

namespace sqz::geom {

namespace {

void require_nonempty(const PointCloud& pc, const char* side) {
    if (pc.count() == 0) throw ShapeError(std::string("metric: empty point cloud (") + side + ")");
}

double mean_nearest_sqdist(const PointCloud& a, const PointCloud& b, bool parallel) {
    std::vector<double> d2(a.count());
    if (parallel) {
        nn::nearest_sqdist(a.xyz.data(), a.count(), b.xyz.data(), b.count(), d2.data());
    } else {
        nn::nearest_sqdist_serial(a.xyz.data(), a.count(), b.xyz.data(), b.count(), d2.data());
    }
    double s = 0.0;
    for (double v : d2) s += v;
    return s / static_cast<double>(a.count());
}

double chamfer_impl(const PointCloud& a, const PointCloud& b, bool parallel) {
    require_nonempty(a, "a");
    require_nonempty(b, "b");
    return mean_nearest_sqdist(a, b, parallel) + mean_nearest_sqdist(b, a, parallel);
}

// Per-point local feature: mean and biased variance of the distances to the
// k nearest neighbors within the cloud itself (self excluded).
struct LocalFeature {
    double mu, var;
};

std::vector<LocalFeature> local_features(const PointCloud& pc, size_t k) {
    const size_t n = pc.count();
    const size_t m = std::min(k, n - 1); // N == k leaves only k-1 neighbors
    std::vector<LocalFeature> feats(n);
#pragma omp parallel
    {
        std::vector<double> dist(m);
#pragma omp for
        for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
            const size_t i = static_cast<size_t>(ii);
            // Keep the m smallest distances via a max-at-front heap on a
            // plain vector; n is small enough that this beats a full sort.
            size_t filled = 0;
            for (size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = pc.at(i, 0) - pc.at(j, 0);
                const double dy = pc.at(i, 1) - pc.at(j, 1);
                const double dz = pc.at(i, 2) - pc.at(j, 2);
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (filled < m) {
                    dist[filled++] = d2;
                    if (filled == m) std::make_heap(dist.begin(), dist.end());
                } else if (d2 < dist.front()) {
                    std::pop_heap(dist.begin(), dist.end());
                    dist.back() = d2;
                    std::push_heap(dist.begin(), dist.end());
                }
            }
            double mu = 0.0;
            for (size_t t = 0; t < m; ++t) mu += std::sqrt(dist[t]);
            mu /= static_cast<double>(m);
            double var = 0.0;
            for (size_t t = 0; t < m; ++t) {
                const double d = std::sqrt(dist[t]) - mu;
                var += d * d;
            }
            var /= static_cast<double>(m);
            feats[i] = {mu, var};
        }
    }
    return feats;
}

double directed_score(const PointCloud& from, const std::vector<LocalFeature>& ffrom,
                      const PointCloud& to, const std::vector<LocalFeature>& fto) {
    constexpr double kEps = 1e-12;
    std::vector<double> d2(from.count());
    std::vector<size_t> idx(from.count());
    nn::nearest_neighbor(from.xyz.data(), from.count(), to.xyz.data(), to.count(), d2.data(),
                         idx.data());
    double s = 0.0;
    for (size_t i = 0; i < from.count(); ++i) {
        const LocalFeature& p = ffrom[i];
        const LocalFeature& q = fto[idx[i]];
        const double sm = (2.0 * p.mu * q.mu + kEps) / (p.mu * p.mu + q.mu * q.mu + kEps);
        const double sv = (2.0 * p.var * q.var + kEps) / (p.var * p.var + q.var * q.var + kEps);
        s += sm * sv;
    }
    return s / static_cast<double>(from.count());
}

} // namespace

double chamfer(const PointCloud& a, const PointCloud& b) { return chamfer_impl(a, b, true); }

double chamfer_serial(const PointCloud& a, const PointCloud& b) {
    return chamfer_impl(a, b, false);
}

double pointsim(const PointCloud& a, const PointCloud& b, size_t k) {
    if (k < 2) throw ShapeError("pointsim: neighborhood size must be >= 2");
    if (a.count() < k || b.count() < k) {
        throw ShapeError("pointsim: clouds must have at least k points");
    }
    const auto fa = local_features(a, k);
    const auto fb = local_features(b, k);
    return 0.5 * (directed_score(a, fa, b, fb) + directed_score(b, fb, a, fa));
}

} // namespace sqz::geom
