#include "sqz/nn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sqz/core/error.hpp"
#include "sqz/nn/kernels.hpp"

namespace sqz::nn {

namespace {

std::vector<Tensor> zeros_like(const std::vector<const Tensor*>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Tensor* p : params) out.push_back(Tensor::zeros(p->shape));
    return out;
}

void check_step_inputs(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                       const OptimizerState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("optimizer step: parameter/gradient/state count mismatch");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(grads[i])) {
            throw ShapeError("optimizer step: gradient shape " + grads[i].shape_str() +
                             " != parameter shape " + params[i]->shape_str());
        }
    }
    // All-or-nothing: a single non-finite gradient aborts the whole step so
    // parameters and moments never absorb poisoned values.
    for (const Tensor& g : grads) g.require_finite("gradient");
}

void adam_update_one(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, const AdamParams& hp,
                     uint64_t t, double lr) {
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
    for (size_t j = 0; j < p.data.size(); ++j) {
        m.data[j] = hp.beta1 * m.data[j] + (1.0 - hp.beta1) * g.data[j];
        v.data[j] = hp.beta2 * v.data[j] + (1.0 - hp.beta2) * g.data[j] * g.data[j];
        const double mhat = m.data[j] / bc1;
        const double vhat = v.data[j] / bc2;
        if (hp.weight_decay != 0.0) p.data[j] -= lr * hp.weight_decay * p.data[j];
        p.data[j] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

Tensor transpose(const Tensor& a) {
    Tensor t = Tensor::zeros({a.cols(), a.rows()});
    for (size_t r = 0; r < a.rows(); ++r) {
        for (size_t c = 0; c < a.cols(); ++c) t.at(c, r) = a.at(r, c);
    }
    return t;
}

} // namespace

OptimizerState make_adam(const std::vector<const Tensor*>& params, AdamParams hp) {
    OptimizerState s;
    s.kind = OptimizerKind::Adam;
    s.adam = hp;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    return s;
}

OptimizerState make_muon(const std::vector<const Tensor*>& params, MuonParams hp) {
    OptimizerState s;
    s.kind = OptimizerKind::Muon;
    s.muon = hp;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    return s;
}

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, double lr) {
    check_step_inputs(params, grads, state);
    const uint64_t t = ++state.step;
    for (size_t i = 0; i < params.size(); ++i) {
        adam_update_one(*params[i], grads[i], state.m[i], state.v[i], state.adam, t, lr);
    }
}

void muon_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, double lr) {
    check_step_inputs(params, grads, state);
    const uint64_t t = ++state.step;
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        const bool matrix = p.rank() == 2 && p.rows() > 1 && p.cols() > 1;
        if (!matrix) {
            adam_update_one(p, g, state.m[i], state.v[i], state.muon.fallback, t, lr);
            continue;
        }
        Tensor& mom = state.m[i];
        const double beta = state.muon.beta;
        for (size_t j = 0; j < mom.data.size(); ++j) {
            mom.data[j] = beta * mom.data[j] + g.data[j];
        }
        const Tensor update = newton_schulz_orthogonalize(mom, state.muon.ns_iters);
        for (size_t j = 0; j < p.data.size(); ++j) p.data[j] -= lr * update.data[j];
    }
}

void optimizer_step(Network& net, const Grads& grads, OptimizerState& state, double lr) {
    if (grads.w.size() != net.layer_count()) {
        throw ShapeError("optimizer_step: gradients do not cover every layer");
    }
    std::vector<Tensor*> params = net.param_tensors();
    std::vector<Tensor> flat;
    flat.reserve(params.size());
    for (size_t i = 0; i < net.layer_count(); ++i) {
        if (!net.layers()[i].has_params()) continue;
        flat.push_back(grads.w[i]);
        flat.push_back(grads.b[i]);
    }
    switch (state.kind) {
    case OptimizerKind::Adam: adam_step(params, flat, state, lr); break;
    case OptimizerKind::Muon: muon_step(params, flat, state, lr); break;
    }
    net.bump_revision();
}

Tensor newton_schulz_orthogonalize(const Tensor& m, int iters) {
    if (m.rank() != 2) throw ShapeError("newton_schulz: expected a matrix, got " + m.shape_str());
    m.require_finite("newton_schulz input");
    const double norm = frobenius_norm(m);
    if (norm == 0.0) return m;

    // Work with the orientation whose Gram matrix is smallest.
    const bool flipped = m.rows() > m.cols();
    Tensor x = flipped ? transpose(m) : m;
    const size_t r = x.rows(), c = x.cols();
    for (double& v : x.data) v /= norm;

    // Quintic iteration X <- aX + (bA + cA^2)X with A = XX^T. These
    // coefficients trade exact convergence to 1 for a fast push of every
    // singular value into a band around 1.
    const double a = 3.4445, b = -4.7750, cc = 2.0315;
    Tensor gram = Tensor::zeros({r, r});
    Tensor gram2 = Tensor::zeros({r, r});
    Tensor bmat = Tensor::zeros({r, r});
    Tensor bx = Tensor::zeros({r, c});
    for (int it = 0; it < iters; ++it) {
        gemm_nt(x.data.data(), x.data.data(), gram.data.data(), r, c, r);
        gemm_nn(gram.data.data(), gram.data.data(), gram2.data.data(), r, r, r);
        for (size_t j = 0; j < bmat.data.size(); ++j) {
            bmat.data[j] = b * gram.data[j] + cc * gram2.data[j];
        }
        gemm_nn(bmat.data.data(), x.data.data(), bx.data.data(), r, r, c);
        for (size_t j = 0; j < x.data.size(); ++j) {
            x.data[j] = a * x.data[j] + bx.data[j];
        }
    }
    x.require_finite("newton_schulz output");
    return flipped ? transpose(x) : x;
}

} // namespace sqz::nn
