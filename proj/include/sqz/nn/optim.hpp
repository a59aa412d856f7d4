#pragma once

#include <cstdint>
#include <vector>

#include "sqz/nn/net.hpp"
#include "sqz/nn/tensor.hpp"

namespace sqz::nn {

enum class OptimizerKind { Adam, Muon };

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0; // decoupled, off by default
};

struct MuonParams {
    double beta = 0.95; // momentum
    int ns_iters = 6;   // Newton-Schulz iterations
    AdamParams fallback; // used for non-matrix parameters
};

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    AdamParams adam;
    MuonParams muon;
    uint64_t step = 0;
    std::vector<Tensor> m; // first moment (adam) / momentum (muon)
    std::vector<Tensor> v; // second moment (adam and muon's vector fallback)
};

OptimizerState make_adam(const std::vector<const Tensor*>& params, AdamParams hp = {});
OptimizerState make_muon(const std::vector<const Tensor*>& params, MuonParams hp = {});

/// One Adam step with bias correction. Rejects non-finite gradients without
/// touching parameters or state.
void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, double lr);

/// One Muon step: momentum accumulation, Newton-Schulz orthogonalization of
/// matrix updates, Adam-style fallback for vector parameters.
void muon_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               OptimizerState& state, double lr);

/// Dispatches on state.kind and bumps the network revision.
void optimizer_step(Network& net, const Grads& grads, OptimizerState& state, double lr);

/// Quintic Newton-Schulz orthogonalization with the (3.4445, -4.7750, 2.0315)
/// coefficients; the input is pre-scaled by its Frobenius norm. Returns a
/// matrix whose singular values cluster near 1.
Tensor newton_schulz_orthogonalize(const Tensor& m, int iters);

} // namespace sqz::nn
