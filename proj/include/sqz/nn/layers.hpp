#pragma once

#include <cstdint>
#include <string>

#include "sqz/nn/tensor.hpp"

namespace sqz::nn {

// Wire ids are part of the checkpoint format; do not renumber.
enum class LayerKind : uint8_t {
    Linear = 0,
    LayerNorm = 1,
    Gelu = 2,
    Dropout = 3,
    ResidualAdd = 4,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
    LayerKind kind;
    size_t in_dim = 0;
    size_t out_dim = 0;
    double dropout_rate = 0.0; // dropout only, in [0,1)
    // ResidualAdd only: adds the output of the layer `res_offset` positions
    // earlier; an offset of (own index + 1) refers to the network input.
    size_t res_offset = 0;

    static LayerSpec linear(size_t in, size_t out) { return {LayerKind::Linear, in, out, 0.0, 0}; }
    static LayerSpec layernorm(size_t dim) { return {LayerKind::LayerNorm, dim, dim, 0.0, 0}; }
    static LayerSpec gelu(size_t dim) { return {LayerKind::Gelu, dim, dim, 0.0, 0}; }
    static LayerSpec dropout(size_t dim, double rate) { return {LayerKind::Dropout, dim, dim, rate, 0}; }
    static LayerSpec residual_add(size_t dim, size_t offset) { return {LayerKind::ResidualAdd, dim, dim, 0.0, offset}; }
};

// A layer plus its parameters. `w`/`b` hold weight/bias for Linear and
// gain/bias for LayerNorm; the other kinds have no parameters.
struct Layer {
    LayerSpec spec;
    Tensor w;
    Tensor b;

    bool has_params() const {
        return spec.kind == LayerKind::Linear || spec.kind == LayerKind::LayerNorm;
    }
};

inline constexpr double kLayerNormEps = 1e-5;

double gelu_scalar(double x);
double gelu_grad_scalar(double x);

} // namespace sqz::nn
