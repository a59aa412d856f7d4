#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqz/core/rng.hpp"
#include "sqz/geom/pointcloud.hpp"
#include "sqz/nn/net.hpp"
#include "sqz/nn/tensor.hpp"

namespace sqz::codec {

// Permutation-invariant point-cloud encoder: a shared per-point MLP (the
// trunk, run with points as batch rows), coordinate-wise max pooling over
// points, then a dense head on the pooled feature. Pooling takes the maximum
// of each feature over all points, so point order cannot affect the output.
struct PointNetEncoder {
    nn::Network trunk; // N x 3 -> N x H
    nn::Network head;  // 1 x H -> 1 x latent
    size_t feature_dim() const { return trunk.out_dim(); }
    size_t latent_dim() const { return head.out_dim(); }
};

// Diagonal Gaussian over latent vectors. A fitted prior has strictly
// positive stddev (floored); a hand-built one may use zero stddev to pin
// samples to the mean.
struct LatentPrior {
    std::vector<double> mean;
    std::vector<double> stddev;
};

/// Empirical mean and per-dimension stddev (biased, floored at `std_floor`).
LatentPrior fit_prior(const std::vector<std::vector<double>>& latents, double std_floor = 1e-6);

/// mean + stddev ⊙ standard normal draw; one normal per dimension is always
/// consumed, so streams stay aligned across priors.
std::vector<double> sample_prior(const LatentPrior& prior, Rng& rng);

/// z = head(max-pool(trunk(points))). Works for any point count >= 1;
/// deterministic and invariant to point order.
std::vector<double> encode(const PointNetEncoder& enc, const geom::PointCloud& pc);

// Training-path encoder pass: keeps both network caches and the pooling
// argmax (first index wins ties) so gradients can be routed back through the
// pool to the winning point rows.
struct EncoderActivations {
    nn::ForwardCache trunk;
    nn::ForwardCache head;
    std::vector<size_t> pool_arg; // winning point row per feature
    nn::Tensor z;                 // 1 x latent
};
EncoderActivations encode_train(const PointNetEncoder& enc, const geom::PointCloud& pc);

struct EncoderGrads {
    nn::Grads trunk;
    nn::Grads head;
};
/// Backprop of dL/dz through head, pool routing, and trunk.
EncoderGrads encoder_backward(const PointNetEncoder& enc, const EncoderActivations& acts,
                              const nn::Tensor& dz);

/// Runs a dense generator on a latent vector and reshapes the flat output to
/// an (out_dim/3) x 3 cloud. Rejects latent length != gen.in_dim().
geom::PointCloud generate(const nn::Network& gen, const std::vector<double>& z);

/// Symmetric Chamfer value plus its gradient with respect to `pred` (treating
/// the nearest-neighbor assignments as locally constant). Exposed for the
/// finite-difference tests.
double chamfer_with_grad(const geom::PointCloud& pred, const geom::PointCloud& target,
                         nn::Tensor& grad_pred);

// Layer stacks for one autoencoder. The trunk must start at width 3; the
// decoder must end at 3 * n_points.
struct AutoencoderArch {
    std::vector<nn::LayerSpec> trunk;
    std::vector<nn::LayerSpec> head;
    std::vector<nn::LayerSpec> decoder;
};

/// Two deliberately different stack shapes so the paired latent spaces come
/// from unrelated networks.
AutoencoderArch wide_arch(size_t latent_dim, size_t n_points);
AutoencoderArch narrow_arch(size_t latent_dim, size_t n_points);

struct AutoencoderConfig {
    size_t epochs = 8;
    size_t batch_clouds = 8;
    double lr = 1e-3;
};

struct Autoencoder {
    PointNetEncoder enc;
    nn::Network dec;
    LatentPrior prior; // fitted over the training-set latents
    double train_chamfer = 0.0;
    double val_chamfer = 0.0;
    size_t epochs_run = 0;
    bool diverged = false; // true => params are the last finite checkpoint
};

/// Adam-trains encoder+decoder on Chamfer loss. All clouds must share the
/// point count implied by arch.decoder. A non-finite loss aborts the run and
/// reverts to the last finite epoch's parameters (diverged flag set).
Autoencoder train_autoencoder(const std::vector<geom::PointCloud>& train,
                              const std::vector<geom::PointCloud>& val,
                              const AutoencoderArch& arch, const AutoencoderConfig& cfg,
                              uint64_t seed);

// The frozen endpoints: E is the first autoencoder's encoder, G the second's
// decoder. enc_g (G's own paired encoder) ships for diagnostics: it defines
// the generator-side round-trip quality ceiling.
struct CodecPair {
    PointNetEncoder enc_e;
    nn::Network gen;
    PointNetEncoder enc_g;
    LatentPrior prior; // over G's latent space
    size_t n_points = 0;
    double gen_train_chamfer = 0.0;
    double gen_val_chamfer = 0.0;

    size_t d_e() const { return enc_e.latent_dim(); }
    size_t d_g() const { return gen.in_dim(); }
};

/// Content hash over both frozen parameter sets (E then G).
uint64_t codec_fingerprint(const CodecPair& cp);

/// Trains the two autoencoders (independent derived seeds, different
/// architectures) and assembles the frozen pair.
CodecPair make_codec_pair(const std::vector<geom::PointCloud>& train,
                          const std::vector<geom::PointCloud>& val, size_t d_e, size_t d_g,
                          const AutoencoderConfig& cfg, uint64_t seed);

// Directory bundle: encoder.sqzn and pair_encoder.sqzn hold trunk+head as one
// flat checkpoint each (split point recorded in meta.json), generator.sqzn
// the generator, meta.json the dims, pooling offsets, prior (f32), quality
// references, and the pair fingerprint.
void save_codec(const CodecPair& cp, const std::string& dir);
/// Loads and re-hashes; a fingerprint mismatch against meta.json throws
/// ProvenanceError.
CodecPair load_codec(const std::string& dir);

} // namespace sqz::codec
