#include "sqz/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <utility>

#include "json.hpp"
#include "sqz/core/binio.hpp"
#include "sqz/core/error.hpp"
#include "sqz/core/hash.hpp"
#include "sqz/geom/metrics.hpp"
#include "sqz/nn/checkpoint.hpp"
#include "sqz/nn/kernels.hpp"
#include "sqz/nn/optim.hpp"

namespace sqz::codec {

namespace {

using nn::Tensor;

Tensor cloud_to_rows(const geom::PointCloud& pc) {
    return Tensor::matrix(pc.count(), 3, pc.xyz);
}

geom::PointCloud row_to_cloud(const Tensor& flat) {
    geom::PointCloud pc(flat.numel() / 3);
    pc.xyz.assign(flat.data.begin(), flat.data.end());
    return pc;
}

// Coordinate-wise max over point rows; arg holds the winning row per feature
// (first index wins ties) for gradient routing.
Tensor max_pool(const Tensor& feats, std::vector<size_t>* arg = nullptr) {
    const size_t n = feats.rows(), h = feats.cols();
    Tensor pooled = Tensor::zeros({1, h});
    if (arg) arg->assign(h, 0);
    for (size_t c = 0; c < h; ++c) {
        double best = feats.at(0, c);
        size_t best_i = 0;
        for (size_t r = 1; r < n; ++r) {
            if (feats.at(r, c) > best) {
                best = feats.at(r, c);
                best_i = r;
            }
        }
        pooled.at(0, c) = best;
        if (arg) (*arg)[c] = best_i;
    }
    return pooled;
}

// Flat checkpoint <-> (trunk, head) split. The two stacks chain by width, so
// their concatenation is itself a valid network.
nn::Network concat_networks(const nn::Network& a, const nn::Network& b) {
    std::vector<nn::LayerSpec> specs;
    for (const auto& l : a.layers()) specs.push_back(l.spec);
    for (const auto& l : b.layers()) specs.push_back(l.spec);
    nn::Network out(std::move(specs));
    size_t i = 0;
    for (const auto& l : a.layers()) {
        out.layer(i).w = l.w;
        out.layer(i).b = l.b;
        ++i;
    }
    for (const auto& l : b.layers()) {
        out.layer(i).w = l.w;
        out.layer(i).b = l.b;
        ++i;
    }
    out.bump_revision();
    return out;
}

PointNetEncoder split_network(const nn::Network& flat, size_t pool_after) {
    if (pool_after == 0 || pool_after >= flat.layer_count()) {
        throw FormatError("codec bundle: pooling offset out of range");
    }
    std::vector<nn::LayerSpec> ts, hs;
    for (size_t i = 0; i < flat.layer_count(); ++i) {
        (i < pool_after ? ts : hs).push_back(flat.layers()[i].spec);
    }
    PointNetEncoder enc{nn::Network(std::move(ts)), nn::Network(std::move(hs))};
    for (size_t i = 0; i < flat.layer_count(); ++i) {
        auto& dst = i < pool_after ? enc.trunk.layer(i) : enc.head.layer(i - pool_after);
        dst.w = flat.layers()[i].w;
        dst.b = flat.layers()[i].b;
    }
    enc.trunk.bump_revision();
    enc.head.bump_revision();
    return enc;
}

double mean_chamfer(const Autoencoder& ae, const std::vector<geom::PointCloud>& clouds);

} // namespace

LatentPrior fit_prior(const std::vector<std::vector<double>>& latents, double std_floor) {
    if (latents.empty()) throw ShapeError("prior: no latents to fit");
    const size_t d = latents.front().size();
    LatentPrior p;
    p.mean.assign(d, 0.0);
    p.stddev.assign(d, 0.0);
    for (const auto& z : latents) {
        if (z.size() != d) throw ShapeError("prior: inconsistent latent dimensions");
        for (size_t i = 0; i < d; ++i) p.mean[i] += z[i];
    }
    for (double& m : p.mean) m /= static_cast<double>(latents.size());
    for (const auto& z : latents) {
        for (size_t i = 0; i < d; ++i) {
            const double dlt = z[i] - p.mean[i];
            p.stddev[i] += dlt * dlt;
        }
    }
    for (double& s : p.stddev) {
        s = std::max(std::sqrt(s / static_cast<double>(latents.size())), std_floor);
    }
    return p;
}

std::vector<double> sample_prior(const LatentPrior& prior, Rng& rng) {
    std::vector<double> z(prior.mean.size());
    for (size_t i = 0; i < z.size(); ++i) z[i] = prior.mean[i] + prior.stddev[i] * rng.normal();
    return z;
}

std::vector<double> encode(const PointNetEncoder& enc, const geom::PointCloud& pc) {
    if (pc.count() == 0) throw ShapeError("encode: empty point cloud");
    const Tensor feats = enc.trunk.forward(cloud_to_rows(pc), nn::Mode::Eval, 0);
    const Tensor z = enc.head.forward(max_pool(feats), nn::Mode::Eval, 0);
    return z.data;
}

EncoderActivations encode_train(const PointNetEncoder& enc, const geom::PointCloud& pc) {
    if (pc.count() == 0) throw ShapeError("encode: empty point cloud");
    EncoderActivations acts;
    const Tensor feats = enc.trunk.forward(cloud_to_rows(pc), nn::Mode::Train, 0, &acts.trunk);
    const Tensor pooled = max_pool(feats, &acts.pool_arg);
    acts.z = enc.head.forward(pooled, nn::Mode::Train, 0, &acts.head);
    return acts;
}

EncoderGrads encoder_backward(const PointNetEncoder& enc, const EncoderActivations& acts,
                              const Tensor& dz) {
    EncoderGrads g;
    g.head = enc.head.backward(acts.head, dz);
    const size_t h = enc.feature_dim();
    const size_t n = acts.trunk.input.rows();
    Tensor dfeats = Tensor::zeros({n, h});
    for (size_t c = 0; c < h; ++c) dfeats.at(acts.pool_arg[c], c) = g.head.input.at(0, c);
    g.trunk = enc.trunk.backward(acts.trunk, dfeats);
    return g;
}

geom::PointCloud generate(const nn::Network& gen, const std::vector<double>& z) {
    if (z.size() != gen.in_dim()) {
        throw ShapeError("generate: latent has dimension " + std::to_string(z.size()) +
                         ", generator expects " + std::to_string(gen.in_dim()));
    }
    if (gen.out_dim() % 3 != 0) throw ShapeError("generate: output width is not a multiple of 3");
    Tensor zt = Tensor::vec(z);
    zt.require_finite("generator latent");
    return row_to_cloud(gen.forward(zt, nn::Mode::Eval, 0));
}

double chamfer_with_grad(const geom::PointCloud& pred, const geom::PointCloud& target,
                         Tensor& grad_pred) {
    const size_t n = pred.count(), m = target.count();
    if (n == 0 || m == 0) throw ShapeError("chamfer: empty point cloud");
    std::vector<double> d2_fwd(n), d2_bwd(m);
    std::vector<size_t> nn_fwd(n), nn_bwd(m);
    nn::nearest_neighbor(pred.xyz.data(), n, target.xyz.data(), m, d2_fwd.data(), nn_fwd.data());
    nn::nearest_neighbor(target.xyz.data(), m, pred.xyz.data(), n, d2_bwd.data(), nn_bwd.data());

    grad_pred = Tensor::zeros({n, 3});
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n), inv_m = 1.0 / static_cast<double>(m);
    for (size_t i = 0; i < n; ++i) {
        loss += d2_fwd[i] * inv_n;
        for (size_t ax = 0; ax < 3; ++ax) {
            grad_pred.at(i, ax) +=
                2.0 * inv_n * (pred.at(i, ax) - target.at(nn_fwd[i], ax));
        }
    }
    for (size_t j = 0; j < m; ++j) {
        loss += d2_bwd[j] * inv_m;
        const size_t i = nn_bwd[j];
        for (size_t ax = 0; ax < 3; ++ax) {
            grad_pred.at(i, ax) += 2.0 * inv_m * (pred.at(i, ax) - target.at(j, ax));
        }
    }
    return loss;
}

AutoencoderArch wide_arch(size_t latent_dim, size_t n_points) {
    using nn::LayerSpec;
    AutoencoderArch a;
    a.trunk = {LayerSpec::linear(3, 64), LayerSpec::gelu(64), LayerSpec::linear(64, 128),
               LayerSpec::gelu(128)};
    a.head = {LayerSpec::linear(128, 256), LayerSpec::gelu(256), LayerSpec::linear(256, latent_dim)};
    a.decoder = {LayerSpec::linear(latent_dim, 512), LayerSpec::gelu(512),
                 LayerSpec::linear(512, 3 * n_points)};
    return a;
}

AutoencoderArch narrow_arch(size_t latent_dim, size_t n_points) {
    using nn::LayerSpec;
    AutoencoderArch a;
    a.trunk = {LayerSpec::linear(3, 48), LayerSpec::gelu(48), LayerSpec::linear(48, 96),
               LayerSpec::gelu(96)};
    a.head = {LayerSpec::linear(96, 192), LayerSpec::gelu(192), LayerSpec::linear(192, latent_dim)};
    a.decoder = {LayerSpec::linear(latent_dim, 384), LayerSpec::gelu(384),
                 LayerSpec::linear(384, 3 * n_points)};
    return a;
}

namespace {

double mean_chamfer(const Autoencoder& ae, const std::vector<geom::PointCloud>& clouds) {
    double total = 0.0;
    for (const auto& pc : clouds) {
        const geom::PointCloud out = generate(ae.dec, encode(ae.enc, pc));
        total += geom::chamfer(out, pc);
    }
    return clouds.empty() ? 0.0 : total / static_cast<double>(clouds.size());
}

struct Snapshot {
    std::vector<uint8_t> trunk, head, dec;
};

Snapshot take_snapshot(const Autoencoder& ae) {
    return {nn::serialize_network(ae.enc.trunk), nn::serialize_network(ae.enc.head),
            nn::serialize_network(ae.dec)};
}

void restore_snapshot(Autoencoder& ae, const Snapshot& s) {
    ae.enc.trunk = nn::deserialize_network(s.trunk);
    ae.enc.head = nn::deserialize_network(s.head);
    ae.dec = nn::deserialize_network(s.dec);
}

} // namespace

Autoencoder train_autoencoder(const std::vector<geom::PointCloud>& train,
                              const std::vector<geom::PointCloud>& val,
                              const AutoencoderArch& arch, const AutoencoderConfig& cfg,
                              uint64_t seed) {
    if (train.empty()) throw ShapeError("autoencoder: empty training set");
    if (cfg.batch_clouds == 0 || cfg.epochs == 0) {
        throw ConfigError("autoencoder: epochs and batch size must be positive");
    }

    Autoencoder ae;
    ae.enc.trunk = nn::Network(arch.trunk);
    ae.enc.head = nn::Network(arch.head);
    ae.dec = nn::Network(arch.decoder);
    if (ae.enc.trunk.in_dim() != 3) throw ConfigError("autoencoder: trunk must start at width 3");
    if (ae.enc.head.in_dim() != ae.enc.trunk.out_dim()) {
        throw ConfigError("autoencoder: head width does not match trunk output");
    }
    if (ae.enc.head.out_dim() != ae.dec.in_dim()) {
        throw ConfigError("autoencoder: decoder input does not match latent dimension");
    }
    if (ae.dec.out_dim() % 3 != 0) throw ConfigError("autoencoder: decoder output not Nx3");
    const size_t n_points = ae.dec.out_dim() / 3;
    for (const auto& pc : train) {
        if (pc.count() != n_points) {
            throw ShapeError("autoencoder: training cloud size does not match decoder output");
        }
    }

    ae.enc.trunk.init_params(derive_seed(seed, "trunk"));
    ae.enc.head.init_params(derive_seed(seed, "head"));
    ae.dec.init_params(derive_seed(seed, "decoder"));

    nn::OptimizerState ot = nn::make_adam(std::as_const(ae.enc.trunk).param_tensors());
    nn::OptimizerState oh = nn::make_adam(std::as_const(ae.enc.head).param_tensors());
    nn::OptimizerState od = nn::make_adam(std::as_const(ae.dec).param_tensors());

    Rng shuffler(derive_seed(seed, "batches"));
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    Snapshot last_good = take_snapshot(ae);
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        bool finite = true;
        for (size_t start = 0; start < order.size() && finite; start += cfg.batch_clouds) {
            const size_t stop = std::min(order.size(), start + cfg.batch_clouds);
            nn::Grads gt, gh, gd;
            for (size_t pos = start; pos < stop; ++pos) {
                const geom::PointCloud& pc = train[order[pos]];
                EncoderActivations acts = encode_train(ae.enc, pc);
                nn::ForwardCache dc;
                const Tensor flat = ae.dec.forward(acts.z, nn::Mode::Train, 0, &dc);

                Tensor dpred;
                const double loss = chamfer_with_grad(row_to_cloud(flat), pc, dpred);
                if (!std::isfinite(loss)) {
                    finite = false;
                    break;
                }
                epoch_loss += loss;

                dpred.shape = {1, flat.numel()};
                nn::Grads gdec = ae.dec.backward(dc, dpred);
                EncoderGrads genc = encoder_backward(ae.enc, acts, gdec.input);
                nn::accumulate_grads(gd, gdec);
                nn::accumulate_grads(gh, genc.head);
                nn::accumulate_grads(gt, genc.trunk);
            }
            if (!finite) break;
            const double inv = 1.0 / static_cast<double>(stop - start);
            nn::scale_grads(gt, inv);
            nn::scale_grads(gh, inv);
            nn::scale_grads(gd, inv);
            nn::optimizer_step(ae.enc.trunk, gt, ot, cfg.lr);
            nn::optimizer_step(ae.enc.head, gh, oh, cfg.lr);
            nn::optimizer_step(ae.dec, gd, od, cfg.lr);
        }
        if (!finite || !std::isfinite(epoch_loss)) {
            std::cerr << "autoencoder: non-finite loss in epoch " << epoch
                      << "; keeping the last finite checkpoint (" << ae.epochs_run
                      << " epochs)\n";
            restore_snapshot(ae, last_good);
            ae.diverged = true;
            break;
        }
        ae.train_chamfer = epoch_loss / static_cast<double>(train.size());
        ae.epochs_run = epoch + 1;
        last_good = take_snapshot(ae);
    }

    if (!ae.diverged) ae.train_chamfer = mean_chamfer(ae, train);
    ae.val_chamfer = mean_chamfer(ae, val);

    // Non-finite latents (possible when the run diverged on bad inputs) are
    // excluded so the prior stays usable.
    std::vector<std::vector<double>> latents;
    latents.reserve(train.size());
    for (const auto& pc : train) {
        std::vector<double> z = encode(ae.enc, pc);
        if (std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v); })) {
            latents.push_back(std::move(z));
        }
    }
    if (latents.empty()) throw NumericError("autoencoder: no finite latents to fit a prior");
    ae.prior = fit_prior(latents);
    return ae;
}

uint64_t codec_fingerprint(const CodecPair& cp) {
    const auto e = nn::serialize_network(concat_networks(cp.enc_e.trunk, cp.enc_e.head));
    const auto g = nn::serialize_network(cp.gen);
    return fnv1a64(g.data(), g.size(), fnv1a64(e.data(), e.size()));
}

CodecPair make_codec_pair(const std::vector<geom::PointCloud>& train,
                          const std::vector<geom::PointCloud>& val, size_t d_e, size_t d_g,
                          const AutoencoderConfig& cfg, uint64_t seed) {
    if (d_e < 1 || d_g < 1) throw ConfigError("codec: latent dimensions must be positive");
    if (train.empty()) throw ShapeError("codec: empty training set");
    const size_t n_points = train.front().count();

    Autoencoder a = train_autoencoder(train, val, wide_arch(d_e, n_points), cfg,
                                      derive_seed(seed, "codec/a"));
    Autoencoder b = train_autoencoder(train, val, narrow_arch(d_g, n_points), cfg,
                                      derive_seed(seed, "codec/b"));

    CodecPair cp;
    cp.enc_e = std::move(a.enc);
    cp.gen = std::move(b.dec);
    cp.enc_g = std::move(b.enc);
    cp.prior = std::move(b.prior);
    cp.n_points = n_points;
    cp.gen_train_chamfer = b.train_chamfer;
    cp.gen_val_chamfer = b.val_chamfer;
    return cp;
}

void save_codec(const CodecPair& cp, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nn::save_checkpoint(concat_networks(cp.enc_e.trunk, cp.enc_e.head),
                        (fs::path(dir) / "encoder.sqzn").string());
    nn::save_checkpoint(cp.gen, (fs::path(dir) / "generator.sqzn").string());
    nn::save_checkpoint(concat_networks(cp.enc_g.trunk, cp.enc_g.head),
                        (fs::path(dir) / "pair_encoder.sqzn").string());

    nlohmann::json meta;
    meta["d_e"] = cp.d_e();
    meta["d_g"] = cp.d_g();
    meta["n_points"] = cp.n_points;
    meta["pool_after_e"] = cp.enc_e.trunk.layer_count();
    meta["pool_after_g"] = cp.enc_g.trunk.layer_count();
    meta["fingerprint"] = hex64(codec_fingerprint(cp));
    meta["gen_train_chamfer"] = cp.gen_train_chamfer;
    meta["gen_val_chamfer"] = cp.gen_val_chamfer;
    std::vector<float> mean32(cp.prior.mean.begin(), cp.prior.mean.end());
    std::vector<float> std32(cp.prior.stddev.begin(), cp.prior.stddev.end());
    meta["prior_mean"] = mean32;
    meta["prior_std"] = std32;
    write_text_file((fs::path(dir) / "meta.json").string(), meta.dump(2) + "\n");
}

CodecPair load_codec(const std::string& dir) {
    namespace fs = std::filesystem;
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file((fs::path(dir) / "meta.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("codec bundle: bad meta.json: ") + e.what());
    }

    CodecPair cp;
    try {
        cp.enc_e = split_network(nn::load_checkpoint((fs::path(dir) / "encoder.sqzn").string()),
                                 meta.at("pool_after_e").get<size_t>());
        cp.gen = nn::load_checkpoint((fs::path(dir) / "generator.sqzn").string());
        cp.enc_g =
            split_network(nn::load_checkpoint((fs::path(dir) / "pair_encoder.sqzn").string()),
                          meta.at("pool_after_g").get<size_t>());
        cp.n_points = meta.at("n_points").get<size_t>();
        cp.gen_train_chamfer = meta.at("gen_train_chamfer").get<double>();
        cp.gen_val_chamfer = meta.at("gen_val_chamfer").get<double>();
        const auto mean32 = meta.at("prior_mean").get<std::vector<float>>();
        const auto std32 = meta.at("prior_std").get<std::vector<float>>();
        cp.prior.mean.assign(mean32.begin(), mean32.end());
        cp.prior.stddev.assign(std32.begin(), std32.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("codec bundle: incomplete meta.json: ") + e.what());
    }
    if (cp.d_e() != meta.at("d_e").get<size_t>() || cp.d_g() != meta.at("d_g").get<size_t>()) {
        throw FormatError("codec bundle: checkpoint dims disagree with meta.json");
    }
    if (cp.prior.mean.size() != cp.d_g() || cp.prior.stddev.size() != cp.d_g()) {
        throw FormatError("codec bundle: prior length does not match d_g");
    }
    const std::string expect = meta.at("fingerprint").get<std::string>();
    const std::string actual = hex64(codec_fingerprint(cp));
    if (expect != actual) {
        throw ProvenanceError("codec bundle: fingerprint mismatch (meta says " + expect +
                              ", parameters hash to " + actual + ")");
    }
    return cp;
}

} // namespace sqz::codec
