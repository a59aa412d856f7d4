#include "sqz/nn/layers.hpp"

#include <cmath>

namespace sqz::nn {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Linear: return "linear";
    case LayerKind::LayerNorm: return "layernorm";
    case LayerKind::Gelu: return "gelu";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::ResidualAdd: return "residual-add";
    }
    return "?";
}

// Exact GELU: x * Phi(x) with the Gaussian CDF, not the tanh approximation.
double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

double gelu_grad_scalar(double x) {
    const double phi_cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
    const double phi_pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;
    return phi_cdf + x * phi_pdf;
}

} // namespace sqz::nn
