#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sqz/core/error.hpp"

namespace sqz::nn {

// Dense row-major tensor of 64-bit reals. Rank 1 and 2 cover everything this
// project needs; higher ranks are allowed but unused.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<size_t> s);
    static Tensor vec(std::vector<double> d);
    static Tensor matrix(size_t rows, size_t cols, std::vector<double> d);

    size_t numel() const { return data.size(); }
    size_t rank() const { return shape.size(); }

    // Rank-2 accessors; a rank-1 tensor behaves as a single row.
    size_t rows() const { return rank() == 2 ? shape[0] : 1; }
    size_t cols() const { return rank() == 2 ? shape[1] : (rank() == 1 ? shape[0] : 0); }
    double& at(size_t r, size_t c) { return data[r * cols() + c]; }
    double at(size_t r, size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;

    /// Throws NumericError unless every entry is finite.
    void require_finite(const std::string& what) const;

    std::string shape_str() const;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double s, const Tensor& a);

double dot(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& a);

} // namespace sqz::nn
