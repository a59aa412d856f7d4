#include "sqz/nn/kernels.hpp"

#include <cstdint>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sqz::nn {

// The parallel kernels split work by output row only. A full dot product or
// row accumulation stays on one thread, so sums are evaluated in a fixed
// order and results do not depend on the thread count.

void gemm_nt_serial(const double* x, const double* w, double* y, size_t b, size_t k, size_t n) {
    for (size_t i = 0; i < b; ++i) {
        const double* xi = x + i * k;
        double* yi = y + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double* wj = w + j * k;
            double acc = 0.0;
            for (size_t t = 0; t < k; ++t)
                acc += xi[t] * wj[t];
            yi[j] = acc;
        }
    }
}

void gemm_nt(const double* x, const double* w, double* y, size_t b, size_t k, size_t n) {
#pragma omp parallel for schedule(static) if (b > 1)
    for (int64_t i = 0; i < static_cast<int64_t>(b); ++i) {
        const double* xi = x + static_cast<size_t>(i) * k;
        double* yi = y + static_cast<size_t>(i) * n;
        for (size_t j = 0; j < n; ++j) {
            const double* wj = w + j * k;
            double acc = 0.0;
            for (size_t t = 0; t < k; ++t)
                acc += xi[t] * wj[t];
            yi[j] = acc;
        }
    }
}

void gemm_nn_serial(const double* g, const double* w, double* y, size_t b, size_t n, size_t k) {
    for (size_t i = 0; i < b; ++i) {
        double* yi = y + i * k;
        for (size_t t = 0; t < k; ++t)
            yi[t] = 0.0;
        const double* gi = g + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double gv = gi[j];
            if (gv == 0.0)
                continue;
            const double* wj = w + j * k;
            for (size_t t = 0; t < k; ++t)
                yi[t] += gv * wj[t];
        }
    }
}

void gemm_nn(const double* g, const double* w, double* y, size_t b, size_t n, size_t k) {
#pragma omp parallel for schedule(static) if (b > 1)
    for (int64_t i = 0; i < static_cast<int64_t>(b); ++i) {
        double* yi = y + static_cast<size_t>(i) * k;
        for (size_t t = 0; t < k; ++t)
            yi[t] = 0.0;
        const double* gi = g + static_cast<size_t>(i) * n;
        for (size_t j = 0; j < n; ++j) {
            const double gv = gi[j];
            if (gv == 0.0)
                continue;
            const double* wj = w + j * k;
            for (size_t t = 0; t < k; ++t)
                yi[t] += gv * wj[t];
        }
    }
}

void gemm_tn_serial(const double* g, const double* x, double* y, size_t b, size_t n, size_t k) {
    for (size_t j = 0; j < n; ++j) {
        double* yj = y + j * k;
        for (size_t t = 0; t < k; ++t)
            yj[t] = 0.0;
        for (size_t i = 0; i < b; ++i) {
            const double gv = g[i * n + j];
            if (gv == 0.0)
                continue;
            const double* xi = x + i * k;
            for (size_t t = 0; t < k; ++t)
                yj[t] += gv * xi[t];
        }
    }
}

void gemm_tn(const double* g, const double* x, double* y, size_t b, size_t n, size_t k) {
#pragma omp parallel for schedule(static) if (n > 1)
    for (int64_t j = 0; j < static_cast<int64_t>(n); ++j) {
        double* yj = y + static_cast<size_t>(j) * k;
        for (size_t t = 0; t < k; ++t)
            yj[t] = 0.0;
        for (size_t i = 0; i < b; ++i) {
            const double gv = g[i * n + static_cast<size_t>(j)];
            if (gv == 0.0)
                continue;
            const double* xi = x + i * k;
            for (size_t t = 0; t < k; ++t)
                yj[t] += gv * xi[t];
        }
    }
}

void nearest_sqdist_serial(const double* a, size_t n, const double* b, size_t m, double* out) {
    for (size_t i = 0; i < n; ++i) {
        const double ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < m; ++j) {
            const double dx = ax - b[3 * j];
            const double dy = ay - b[3 * j + 1];
            const double dz = az - b[3 * j + 2];
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best)
                best = d;
        }
        out[i] = best;
    }
}

void nearest_neighbor_serial(const double* a, size_t n, const double* b, size_t m, double* out_d2,
                             size_t* out_idx) {
    for (size_t i = 0; i < n; ++i) {
        const double ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
        double best = std::numeric_limits<double>::infinity();
        size_t best_j = 0;
        for (size_t j = 0; j < m; ++j) {
            const double dx = ax - b[3 * j];
            const double dy = ay - b[3 * j + 1];
            const double dz = az - b[3 * j + 2];
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        out_d2[i] = best;
        out_idx[i] = best_j;
    }
}

void nearest_neighbor(const double* a, size_t n, const double* b, size_t m, double* out_d2,
                      size_t* out_idx) {
#pragma omp parallel for schedule(static) if (n > 64)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
        const double ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
        double best = std::numeric_limits<double>::infinity();
        size_t best_j = 0;
        for (size_t j = 0; j < m; ++j) {
            const double dx = ax - b[3 * j];
            const double dy = ay - b[3 * j + 1];
            const double dz = az - b[3 * j + 2];
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        out_d2[i] = best;
        out_idx[i] = best_j;
    }
}

void nearest_sqdist(const double* a, size_t n, const double* b, size_t m, double* out) {
#pragma omp parallel for schedule(static) if (n > 64)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) {
        const double ax = a[3 * i], ay = a[3 * i + 1], az = a[3 * i + 2];
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < m; ++j) {
            const double dx = ax - b[3 * j];
            const double dy = ay - b[3 * j + 1];
            const double dz = az - b[3 * j + 2];
            const double d = dx * dx + dy * dy + dz * dz;
            if (d < best)
                best = d;
        }
        out[i] = best;
    }
}

} // namespace sqz::nn
