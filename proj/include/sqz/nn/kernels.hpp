#pragma once

#include <cstddef>

namespace sqz::nn {

// Dense f64 kernels. Each kernel has an OpenMP build (parallel over disjoint
// output rows, so every output element is produced by exactly one thread and
// results are bit-identical for any thread count) and a *_serial reference
// used by the unit tests and the kernel benchmark.

/// Y[b,n] = sum_k X[b,k] * W[n,k]   (X: BxK, W: NxK row-major, Y: BxN)
void gemm_nt(const double* x, const double* w, double* y, size_t b, size_t k, size_t n);
void gemm_nt_serial(const double* x, const double* w, double* y, size_t b, size_t k, size_t n);

/// Y[b,k] = sum_n G[b,n] * W[n,k]   (G: BxN, W: NxK, Y: BxK)
void gemm_nn(const double* g, const double* w, double* y, size_t b, size_t n, size_t k);
void gemm_nn_serial(const double* g, const double* w, double* y, size_t b, size_t n, size_t k);

/// Y[n,k] = sum_b G[b,n] * X[b,k]   (G: BxN, X: BxK, Y: NxK)
void gemm_tn(const double* g, const double* x, double* y, size_t b, size_t n, size_t k);
void gemm_tn_serial(const double* g, const double* x, double* y, size_t b, size_t n, size_t k);

/// For each point in `a` (Nx3), the squared distance to its nearest point in
/// `b` (Mx3), written to out[0..N).
void nearest_sqdist(const double* a, size_t n, const double* b, size_t m, double* out);
void nearest_sqdist_serial(const double* a, size_t n, const double* b, size_t m, double* out);

/// As above but also records the index of the nearest point (lowest index
/// wins ties), for gradient routing through the match.
void nearest_neighbor(const double* a, size_t n, const double* b, size_t m, double* out_d2,
                      size_t* out_idx);
void nearest_neighbor_serial(const double* a, size_t n, const double* b, size_t m, double* out_d2,
                             size_t* out_idx);

} // namespace sqz::nn
