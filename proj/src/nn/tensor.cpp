#include "sqz/nn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace sqz::nn {

namespace {

size_t shape_numel(const std::vector<size_t>& s) {
    size_t n = 1;
    for (size_t d : s) {
        if (d == 0)
            throw ShapeError("tensor shape has a zero dimension");
        n *= d;
    }
    return s.empty() ? 0 : n;
}

} // namespace

Tensor::Tensor(std::vector<size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str());
}

Tensor Tensor::zeros(std::vector<size_t> s) {
    size_t n = shape_numel(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::vec(std::vector<double> d) {
    size_t n = d.size();
    return Tensor({n}, std::move(d));
}

Tensor Tensor::matrix(size_t rows, size_t cols, std::vector<double> d) {
    return Tensor({rows, cols}, std::move(d));
}

bool Tensor::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x))
            return false;
    return true;
}

void Tensor::require_finite(const std::string& what) const {
    if (!all_finite())
        throw NumericError("non-finite values in " + what);
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i)
        os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

} // namespace

Tensor operator+(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "tensor add");
    Tensor r = a;
    for (size_t i = 0; i < r.data.size(); ++i)
        r.data[i] += b.data[i];
    return r;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "tensor sub");
    Tensor r = a;
    for (size_t i = 0; i < r.data.size(); ++i)
        r.data[i] -= b.data[i];
    return r;
}

Tensor operator*(double s, const Tensor& a) {
    Tensor r = a;
    for (double& x : r.data)
        x *= s;
    return r;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        s += a.data[i] * b.data[i];
    return s;
}

double frobenius_norm(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data)
        s += x * x;
    return std::sqrt(s);
}

} // namespace sqz::nn
