#include "sqz/nn/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqz/core/error.hpp"

namespace sqz::nn {

namespace {

// One-sided Jacobi on the columns of a tall-or-square matrix: rotate column
// pairs until all are mutually orthogonal, then read off singular values as
// column norms. V accumulates the rotations.
struct JacobiOut {
    Tensor w; // m x n, columns orthogonal
    Tensor v; // n x n, orthogonal
};

JacobiOut one_sided_jacobi(const Tensor& a) {
    const size_t m = a.rows(), n = a.cols();
    Tensor w = a;
    Tensor v = Tensor::zeros({n, n});
    for (size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    constexpr double kTol = 1e-15;
    constexpr int kMaxSweeps = 60;
    double fro2 = 0.0; // invariant under the rotations below
    for (double x : w.data) fro2 += x * x;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        // Deflate columns whose mass has collapsed to round-off: under FMA
        // contraction the residue never cancels exactly and would otherwise
        // keep the sweep loop alive on rank-deficient input.
        for (size_t j = 0; j < n; ++j) {
            double nj = 0.0;
            for (size_t r = 0; r < m; ++r) nj += w.at(r, j) * w.at(r, j);
            if (nj <= fro2 * 1e-28) {
                for (size_t r = 0; r < m; ++r) w.at(r, j) = 0.0;
            }
        }
        bool rotated = false;
        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (size_t r = 0; r < m; ++r) {
                    const double wp = w.at(r, p), wq = w.at(r, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (size_t r = 0; r < m; ++r) {
                    const double wp = w.at(r, p), wq = w.at(r, q);
                    w.at(r, p) = c * wp - s * wq;
                    w.at(r, q) = s * wp + c * wq;
                }
                for (size_t r = 0; r < n; ++r) {
                    const double vp = v.at(r, p), vq = v.at(r, q);
                    v.at(r, p) = c * vp - s * vq;
                    v.at(r, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) return {std::move(w), std::move(v)};
    }
    throw NumericError("svd: Jacobi sweep limit reached without convergence");
}

// Replaces zero columns of u with unit vectors orthogonal to all others so the
// returned basis is orthonormal even for rank-deficient input.
void complete_basis(Tensor& u, const std::vector<double>& sigma) {
    const size_t m = u.rows(), p = u.cols();
    for (size_t j = 0; j < p; ++j) {
        if (sigma[j] > 0.0) continue;
        for (size_t cand = 0; cand < m; ++cand) {
            std::vector<double> e(m, 0.0);
            e[cand] = 1.0;
            for (size_t k = 0; k < p; ++k) {
                if (k == j) continue;
                double d = 0.0;
                for (size_t r = 0; r < m; ++r) d += e[r] * u.at(r, k);
                for (size_t r = 0; r < m; ++r) e[r] -= d * u.at(r, k);
            }
            double nrm = 0.0;
            for (double x : e) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 0.5) {
                for (size_t r = 0; r < m; ++r) u.at(r, j) = e[r] / nrm;
                break;
            }
        }
    }
}

SvdResult svd_tall(const Tensor& a) {
    const size_t m = a.rows(), n = a.cols();
    JacobiOut jo = one_sided_jacobi(a);

    std::vector<double> sigma(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (size_t r = 0; r < m; ++r) s += jo.w.at(r, j) * jo.w.at(r, j);
        sigma[j] = std::sqrt(s);
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t x, size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out;
    out.sigma.resize(n);
    out.u = Tensor::zeros({m, n});
    out.v = Tensor::zeros({n, n});
    for (size_t j = 0; j < n; ++j) {
        const size_t src = order[j];
        out.sigma[j] = sigma[src];
        if (sigma[src] > 0.0) {
            for (size_t r = 0; r < m; ++r) out.u.at(r, j) = jo.w.at(r, src) / sigma[src];
        }
        for (size_t r = 0; r < n; ++r) out.v.at(r, j) = jo.v.at(r, src);
    }
    complete_basis(out.u, out.sigma);
    return out;
}

} // namespace

SvdResult svd(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("svd: expected a matrix, got " + a.shape_str());
    if (a.rows() == 0 || a.cols() == 0) throw ShapeError("svd: empty matrix");
    a.require_finite("svd input");

    if (a.rows() >= a.cols()) return svd_tall(a);

    // Wide input: factor the transpose and swap the roles of U and V.
    Tensor t = Tensor::zeros({a.cols(), a.rows()});
    for (size_t r = 0; r < a.rows(); ++r) {
        for (size_t c = 0; c < a.cols(); ++c) t.at(c, r) = a.at(r, c);
    }
    SvdResult st = svd_tall(t);
    SvdResult out;
    out.u = std::move(st.v);
    out.v = std::move(st.u);
    out.sigma = std::move(st.sigma);
    return out;
}

} // namespace sqz::nn
