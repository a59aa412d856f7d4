#pragma once

// Test-side reference implementations, written independently of the library
// code they check: a central-difference gradient prober and a classical
// (two-sided) Jacobi eigensolver for symmetric matrices.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "sqz/core/rng.hpp"
#include "sqz/nn/tensor.hpp"

namespace oracle {

inline double rel_err(double got, double want) {
    const double denom = std::max({std::abs(got), std::abs(want), 1e-12});
    return std::abs(got - want) / denom;
}

/// Central finite difference d f / d x[i] for a scalar-valued function.
inline double fd_partial(std::vector<double>& x, size_t i,
                         const std::function<double(const std::vector<double>&)>& f,
                         double h = 1e-5) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x);
    x[i] = saved - h;
    const double fm = f(x);
    x[i] = saved;
    return (fp - fm) / (2.0 * h);
}

/// Checks an analytic gradient against central differences, returning the
/// worst elementwise mismatch (relative, with an absolute floor).
inline double max_grad_mismatch(std::vector<double> x, const std::vector<double>& analytic,
                                const std::function<double(const std::vector<double>&)>& f,
                                double h = 1e-5) {
    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double fd = fd_partial(x, i, f, h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1.0});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

struct EigResult {
    std::vector<double> values;           // descending
    std::vector<std::vector<double>> vecs; // vecs[k] is the k-th eigenvector
};

/// Classical two-sided Jacobi eigensolver for a symmetric matrix, O(n^2) per
/// sweep scan for the largest off-diagonal entry. Plenty for test sizes.
inline EigResult jacobi_eigensymm(std::vector<std::vector<double>> a) {
    const size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int iter = 0; iter < 20000; ++iter) {
        size_t p = 0, q = 1;
        double off = 0.0;
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = i + 1; j < n; ++j) {
                if (std::abs(a[i][j]) > off) {
                    off = std::abs(a[i][j]);
                    p = i;
                    q = j;
                }
            }
        }
        if (n < 2 || off < 1e-14) break;
        const double app = a[p][p], aqq = a[q][q], apq = a[p][q];
        const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        const double c = std::cos(theta), s = std::sin(theta);
        for (size_t k = 0; k < n; ++k) {
            const double akp = a[k][p], akq = a[k][q];
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
            const double apk = a[p][k], aqk = a[q][k];
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
            const double vkp = v[k][p], vkq = v[k][q];
            v[k][p] = c * vkp - s * vkq;
            v[k][q] = s * vkp + c * vkq;
        }
    }

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (a[order[j]][order[j]] > a[order[i]][order[i]]) std::swap(order[i], order[j]);
        }
    }
    EigResult r;
    r.values.resize(n);
    r.vecs.assign(n, std::vector<double>(n));
    for (size_t k = 0; k < n; ++k) {
        r.values[k] = a[order[k]][order[k]];
        for (size_t i = 0; i < n; ++i) r.vecs[k][i] = v[i][order[k]];
    }
    return r;
}

inline sqz::nn::Tensor random_matrix(size_t r, size_t c, uint64_t seed, double scale = 1.0) {
    sqz::Rng rng(seed);
    sqz::nn::Tensor t = sqz::nn::Tensor::zeros({r, c});
    for (double& x : t.data) x = scale * rng.normal();
    return t;
}

} // namespace oracle
