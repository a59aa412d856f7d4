#pragma once

#include <cstdint>
#include <vector>

#include "sqz/nn/layers.hpp"
#include "sqz/nn/tensor.hpp"

namespace sqz::nn {

enum class Mode { Train, Eval };

// Opaque record of one forward pass; consumed by Network::backward.
struct ForwardCache {
    const class Network* net = nullptr;
    uint64_t revision = 0;
    Mode mode = Mode::Eval;
    Tensor input;                       // promoted to rank-2
    std::vector<Tensor> activations;    // output of each layer
    std::vector<Tensor> dropout_masks;  // per dropout layer (already scaled)
    std::vector<Tensor> ln_xhat;        // per layernorm layer
    std::vector<Tensor> ln_inv_std;     // per layernorm layer, one per row
};

struct Grads {
    std::vector<Tensor> w; // one per layer; empty tensor for param-free kinds
    std::vector<Tensor> b;
    Tensor input;
};

// A feed-forward stack of LayerSpecs with optional skip connections
// (ResidualAdd layers reference earlier activations by relative offset).
class Network {
public:
    Network() = default;
    explicit Network(std::vector<LayerSpec> specs);

    /// Kaiming-uniform fan-in init for linear weights; zero biases; unit
    /// layernorm gains.
    void init_params(uint64_t seed);

    size_t in_dim() const { return layers_.empty() ? 0 : layers_.front().spec.in_dim; }
    size_t out_dim() const { return layers_.empty() ? 0 : layers_.back().spec.out_dim; }
    size_t layer_count() const { return layers_.size(); }
    const std::vector<Layer>& layers() const { return layers_; }
    Layer& layer(size_t i) { return layers_[i]; }

    size_t param_count() const;
    std::vector<Tensor*> param_tensors();
    std::vector<const Tensor*> param_tensors() const;

    /// `x` is a vector or a batch of row vectors. Deterministic for a fixed
    /// (seed, mode); dropout is identity in Eval mode.
    Tensor forward(const Tensor& x, Mode mode, uint64_t seed, ForwardCache* cache = nullptr) const;

    /// Requires a Train-mode cache produced by this network at its current
    /// parameter revision.
    Grads backward(const ForwardCache& cache, const Tensor& upstream) const;

    uint64_t revision() const { return revision_; }
    /// Call after any in-place parameter mutation; invalidates caches.
    void bump_revision() { ++revision_; }

private:
    void validate_chain() const;

    std::vector<Layer> layers_;
    uint64_t revision_ = 0;
};

/// Accumulates `g` into `acc` (allocating if empty): used when summing
/// gradients over loss terms or micro-batches.
void accumulate_grads(Grads& acc, const Grads& g);
void scale_grads(Grads& g, double s);

} // namespace sqz::nn
