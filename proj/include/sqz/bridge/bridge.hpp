#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqz/codec/codec.hpp"
#include "sqz/geom/pointcloud.hpp"
#include "sqz/geom/shapes.hpp"
#include "sqz/nn/net.hpp"
#include "sqz/nn/optim.hpp"

namespace sqz::bridge {

// Forward mapping stack (source latent -> compressed): linear projection,
// LayerNorm, GELU, dropout, a second linear added residually to the first
// linear's output, then LayerNorm, GELU, dropout, and the output projection.
std::vector<nn::LayerSpec> make_forward_arch(size_t d_in, size_t d_out, size_t hidden = 256,
                                             double dropout = 0.1);

// Reverse mapping stack (compressed -> target latent): linear projection into
// a LayerNorm whose output is kept as a global residual, then `n_hidden`
// GELU+dropout hidden blocks of uniform width. The global residual is
// re-added after the first hidden block; every fourth hidden block adds its
// own input back (a local residual). A final linear projects to the target.
std::vector<nn::LayerSpec> make_reverse_arch(size_t d_in, size_t d_out, size_t hidden = 128,
                                             size_t n_hidden = 6, double dropout = 0.1);

// Synthetic supervision pairs (source latent, target latent), generated by
// sampling the generator prior, generating, and re-encoding. Rows are stored
// flat; the 80/10/10 split is positional (pairs are i.i.d. by construction).
struct PairedLatentDataset {
    size_t d_e = 0, d_g = 0;
    std::vector<double> z_e; // count x d_e, row-major
    std::vector<double> z_g; // count x d_g
    uint64_t codec_fingerprint = 0;
    uint64_t seed = 0;
    uint32_t skipped = 0; // non-finite items dropped during generation

    size_t count() const { return d_e ? z_e.size() / d_e : 0; }
    geom::SplitSizes split() const { return geom::split_80_10_10(count()); }
    const double* ze_row(size_t i) const { return z_e.data() + i * d_e; }
    const double* zg_row(size_t i) const { return z_g.data() + i * d_g; }
};

/// Draws n latents from the codec prior, generates, re-encodes. Non-finite
/// results are skipped with a note on stderr; more than 1% skips aborts with
/// NumericError. Byte-reproducible from (codec, n, seed).
PairedLatentDataset gen_paired_dataset(const codec::CodecPair& codec, size_t n, uint64_t seed);

// File format "SQZP": header, f64 latent rows, CRC32. f64 so stored pairs
// reproduce in-memory encodings bit-exactly.
void save_pairs(const PairedLatentDataset& ds, const std::string& path);
PairedLatentDataset load_pairs(const std::string& path);

struct LossBreakdown {
    double gram_term = 0.0;
    double recon_term = 0.0;
    double total = 0.0;
    double lambda_gram = 0.0;
    double lambda_gen = 0.0;
};

/// The joint training objective:
///   total = lambda_gram * |Z Z^T - I_B|_F^2 / B^2
///         + lambda_gen  * mean_b |F_D(F_E(z_e_b)) - z_g_b|_2^2
/// where Z = F_E(batch) is B x d_C. The Gram term treats the batch as a
/// matrix (a lone vector degenerates to the unit-norm penalty (|z|^2-1)^2);
/// B <= d_C is required when lambda_gram > 0, since wider batches cannot have
/// orthonormal rows. The B^2 normalization keeps the term comparable across
/// batch sizes. Pass grad slots to also get parameter gradients.
LossBreakdown bridge_loss(const nn::Network& fe, const nn::Network& fd, const nn::Tensor& batch_ze,
                          const nn::Tensor& batch_zg, double lambda_gram, double lambda_gen,
                          nn::Mode mode, uint64_t dropout_seed = 0, nn::Grads* grads_fe = nullptr,
                          nn::Grads* grads_fd = nullptr);

struct TrainConfig {
    double lambda_gram = 0.1;
    double lambda_gen = 1.0;
    nn::OptimizerKind optimizer = nn::OptimizerKind::Muon;
    nn::MuonParams muon;
    nn::AdamParams adam;
    double lr_init = 1e-3;
    double lr_final = 1e-5;
    size_t decay_epochs = 30; // linear decay span; lr_final afterwards
    size_t epochs = 30;
    size_t batch_size = 64;
    double dropout = 0.1; // applied by callers when building default archs
    uint64_t seed = 0;
};

struct EpochLog {
    size_t epoch = 0;
    double train_gram = 0.0, train_recon = 0.0;
    double val_gram = 0.0, val_recon = 0.0;
    double lr = 0.0;
};

struct BridgeTrainResult {
    nn::Network fe; // best-validation checkpoint
    nn::Network fd;
    std::vector<EpochLog> log;
    size_t best_epoch = 0;
    double best_val_total = 0.0;
    bool diverged = false;
};

/// Jointly trains the two mapping networks on the dataset's train split,
/// logging per-epoch losses on train and val and returning the best-val
/// checkpoint. `expected_codec_fp` (when nonzero) must match the dataset's
/// recorded provenance. A non-finite loss aborts with the last finite epoch's
/// parameters. The learning rate decays linearly from lr_init to lr_final
/// over decay_epochs.
BridgeTrainResult train_bridge(const PairedLatentDataset& ds,
                               const std::vector<nn::LayerSpec>& f_arch,
                               const std::vector<nn::LayerSpec>& r_arch, const TrainConfig& cfg,
                               uint64_t expected_codec_fp = 0);

/// CSV dump of the training log: epoch,train_gram,train_recon,val_gram,val_recon,lr
void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path);

/// z_comp = F_E(E(pc)). Does not normalize: callers compressing raw files
/// normalize first; the paired-data pipeline feeds generator outputs as-is.
std::vector<double> compress(const codec::PointNetEncoder& enc, const nn::Network& fe,
                             const geom::PointCloud& pc);

/// Cloud = G(F_D(z_comp)).
geom::PointCloud decompress(const nn::Network& fd, const nn::Network& gen,
                            const std::vector<double>& z_comp);

/// (1-t)*a + t*b with exact endpoints at t = 0 and t = 1.
std::vector<double> interpolate(const std::vector<double>& a, const std::vector<double>& b,
                                double t);

// Trained bridge bundle: forward.sqzn + reverse.sqzn + meta.json (dims,
// loss weights, codec fingerprint, own fingerprint).
struct BridgeBundle {
    nn::Network fe;
    nn::Network fd;
    double lambda_gram = 0.0;
    double lambda_gen = 0.0;
    uint64_t codec_fingerprint = 0;

    size_t d_e() const { return fe.in_dim(); }
    size_t d_c() const { return fe.out_dim(); }
    size_t d_g() const { return fd.out_dim(); }
};

uint64_t bridge_fingerprint(const BridgeBundle& b);
void save_bridge(const BridgeBundle& b, const std::string& dir);
/// Verifies the stored fingerprint; mismatch throws ProvenanceError.
BridgeBundle load_bridge(const std::string& dir);

} // namespace sqz::bridge
