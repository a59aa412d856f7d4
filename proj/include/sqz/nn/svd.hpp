#pragma once

#include <vector>

#include "sqz/nn/tensor.hpp"

namespace sqz::nn {

struct SvdResult {
    Tensor u;                  // m x p, orthonormal columns
    std::vector<double> sigma; // p = min(m, n), non-negative, descending
    Tensor v;                  // n x p, orthonormal columns
};

/// Thin SVD of a rank-2 tensor by one-sided Jacobi. Accurate at the small
/// matrix sizes used here; rejects non-finite input.
SvdResult svd(const Tensor& a);

} // namespace sqz::nn
