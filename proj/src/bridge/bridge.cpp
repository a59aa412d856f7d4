#include "sqz/bridge/bridge.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <utility>

#include "json.hpp"

#include "sqz/core/binio.hpp"
#include "sqz/core/error.hpp"
#include "sqz/core/hash.hpp"
#include "sqz/core/rng.hpp"
#include "sqz/nn/checkpoint.hpp"
#include "sqz/nn/kernels.hpp"

namespace sqz::bridge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_arch_args(size_t d_in, size_t d_out, size_t hidden, double dropout) {
    if (d_in == 0 || d_out == 0 || hidden == 0)
        throw ConfigError("mapping network dimensions must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ConfigError("dropout rate must lie in [0, 1)");
}

} // namespace

std::vector<nn::LayerSpec> make_forward_arch(size_t d_in, size_t d_out, size_t hidden,
                                             double dropout) {
    check_arch_args(d_in, d_out, hidden, dropout);
    using LS = nn::LayerSpec;
    return {
        LS::linear(d_in, hidden),     // 0
        LS::layernorm(hidden),        // 1
        LS::gelu(hidden),             // 2
        LS::dropout(hidden, dropout), // 3
        LS::linear(hidden, hidden),   // 4
        LS::residual_add(hidden, 5),  // 5: adds layer 0's output
        LS::layernorm(hidden),        // 6
        LS::gelu(hidden),             // 7
        LS::dropout(hidden, dropout), // 8
        LS::linear(hidden, d_out),    // 9
    };
}

std::vector<nn::LayerSpec> make_reverse_arch(size_t d_in, size_t d_out, size_t hidden,
                                             size_t n_hidden, double dropout) {
    check_arch_args(d_in, d_out, hidden, dropout);
    if (n_hidden == 0) throw ConfigError("deep-residual stack needs at least one hidden block");
    using LS = nn::LayerSpec;
    std::vector<LS> specs;
    specs.push_back(LS::linear(d_in, hidden));
    specs.push_back(LS::layernorm(hidden));
    const size_t norm_idx = specs.size() - 1; // global residual source
    for (size_t j = 1; j <= n_hidden; ++j) {
        const size_t block_in = specs.size() - 1;
        specs.push_back(LS::linear(hidden, hidden));
        specs.push_back(LS::gelu(hidden));
        specs.push_back(LS::dropout(hidden, dropout));
        if (j == 1) {
            specs.push_back(LS::residual_add(hidden, specs.size() - norm_idx));
        } else if (j % 4 == 0) {
            specs.push_back(LS::residual_add(hidden, specs.size() - block_in));
        }
    }
    specs.push_back(LS::linear(hidden, d_out));
    return specs;
}

PairedLatentDataset gen_paired_dataset(const codec::CodecPair& codec, size_t n, uint64_t seed) {
    if (n < 10) throw ConfigError("paired dataset needs at least 10 items");
    PairedLatentDataset ds;
    ds.d_e = codec.d_e();
    ds.d_g = codec.d_g();
    ds.codec_fingerprint = codec::codec_fingerprint(codec);
    ds.seed = seed;
    ds.z_e.reserve(n * ds.d_e);
    ds.z_g.reserve(n * ds.d_g);

    Rng rng(derive_seed(seed, "pairs"));
    for (size_t i = 0; i < n; ++i) {
        // The prior draw happens unconditionally so item i's latent does not
        // depend on earlier skips.
        const std::vector<double> zg = codec::sample_prior(codec.prior, rng);
        std::vector<double> ze;
        bool ok = true;
        try {
            const geom::PointCloud cloud = codec::generate(codec.gen, zg);
            ze = codec::encode(codec.enc_e, cloud);
            ok = std::all_of(ze.begin(), ze.end(), [](double v) { return std::isfinite(v); });
        } catch (const NumericError&) {
            ok = false;
        }
        if (!ok) {
            ++ds.skipped;
            std::cerr << "gen_paired_dataset: skipping item " << i << " (non-finite latent)\n";
            continue;
        }
        ds.z_e.insert(ds.z_e.end(), ze.begin(), ze.end());
        ds.z_g.insert(ds.z_g.end(), zg.begin(), zg.end());
    }
    if (static_cast<uint64_t>(ds.skipped) * 100 > n)
        throw NumericError("paired dataset generation skipped " + std::to_string(ds.skipped) +
                           " of " + std::to_string(n) + " items (over the 1% budget)");
    return ds;
}

namespace {

constexpr uint16_t kPairsVersion = 1;

void put_f64(ByteWriter& w, double v) { w.u64(std::bit_cast<uint64_t>(v)); }
double get_f64(ByteReader& r) { return std::bit_cast<double>(r.u64()); }

} // namespace

void save_pairs(const PairedLatentDataset& ds, const std::string& path) {
    ByteWriter w;
    w.magic("SQZP");
    w.u16(kPairsVersion);
    w.u32(static_cast<uint32_t>(ds.count()));
    w.u32(static_cast<uint32_t>(ds.d_e));
    w.u32(static_cast<uint32_t>(ds.d_g));
    w.u64(ds.codec_fingerprint);
    w.u64(ds.seed);
    w.u32(ds.skipped);
    // f64 payload: stored pairs must reproduce in-memory encodings exactly.
    for (double v : ds.z_e) put_f64(w, v);
    for (double v : ds.z_g) put_f64(w, v);
    const uint32_t crc = Crc32::of(w.data().data(), w.size());
    w.u32(crc);
    write_file(path, w.data());
}

PairedLatentDataset load_pairs(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < 4) throw FormatError(path + ": not a paired-latent file");
    ByteReader r(bytes);
    r.expect_magic("SQZP", path);
    const uint16_t version = r.u16();
    if (version != kPairsVersion)
        throw FormatError(path + ": unsupported pairs version " + std::to_string(version));
    PairedLatentDataset ds;
    const uint32_t count = r.u32();
    ds.d_e = r.u32();
    ds.d_g = r.u32();
    ds.codec_fingerprint = r.u64();
    ds.seed = r.u64();
    ds.skipped = r.u32();
    if (ds.d_e == 0 || ds.d_g == 0) throw FormatError(path + ": zero latent width");
    const size_t body = static_cast<size_t>(count) * (ds.d_e + ds.d_g) * 8;
    if (r.remaining() != body + 4)
        throw FormatError(path + ": truncated payload at byte " + std::to_string(r.offset()));
    ds.z_e.resize(static_cast<size_t>(count) * ds.d_e);
    ds.z_g.resize(static_cast<size_t>(count) * ds.d_g);
    for (double& v : ds.z_e) v = get_f64(r);
    for (double& v : ds.z_g) v = get_f64(r);
    const uint32_t want = Crc32::of(bytes.data(), bytes.size() - 4);
    const uint32_t got = r.u32();
    if (want != got)
        throw FormatError(path + ": checksum mismatch (stored " + hex64(got) + ", computed " +
                          hex64(want) + ")");
    return ds;
}

LossBreakdown bridge_loss(const nn::Network& fe, const nn::Network& fd, const nn::Tensor& batch_ze,
                          const nn::Tensor& batch_zg, double lambda_gram, double lambda_gen,
                          nn::Mode mode, uint64_t dropout_seed, nn::Grads* grads_fe,
                          nn::Grads* grads_fd) {
    if (!(std::isfinite(lambda_gram) && lambda_gram >= 0.0) ||
        !(std::isfinite(lambda_gen) && lambda_gen >= 0.0))
        throw ConfigError("loss weights must be finite and non-negative");
    nn::Tensor ze = batch_ze;
    nn::Tensor zg = batch_zg;
    if (ze.rank() == 1) ze.shape = {1, ze.numel()};
    if (zg.rank() == 1) zg.shape = {1, zg.numel()};
    if (ze.rank() != 2 || zg.rank() != 2) throw ShapeError("latent batches must be matrices");
    if (ze.rows() != zg.rows()) throw ShapeError("latent batches disagree on row count");
    const size_t b = ze.rows();
    if (b == 0) throw ShapeError("empty latent batch");
    if (ze.cols() != fe.in_dim()) throw ShapeError("source latent width does not match the bridge");
    if (fd.in_dim() != fe.out_dim())
        throw ShapeError("mapping networks disagree on the compressed width");
    if (zg.cols() != fd.out_dim()) throw ShapeError("target latent width does not match the bridge");
    const size_t dc = fe.out_dim();
    if (lambda_gram > 0.0 && b > dc)
        throw ConfigError("Gram penalty needs batch size <= compressed dim (" + std::to_string(b) +
                          " > " + std::to_string(dc) + "): wider batches cannot be row-orthonormal");
    const bool want_grads = grads_fe != nullptr || grads_fd != nullptr;
    if (want_grads && mode != nn::Mode::Train)
        throw ConfigError("loss gradients require Train mode");

    LossBreakdown lb;
    lb.lambda_gram = lambda_gram;
    lb.lambda_gen = lambda_gen;

    nn::ForwardCache cache_fe, cache_fd;
    const nn::Tensor z = fe.forward(ze, mode, derive_seed(dropout_seed, "fe"),
                                    want_grads ? &cache_fe : nullptr);
    if (!z.all_finite()) {
        lb.gram_term = lb.recon_term = lb.total = kInf;
        return lb;
    }

    // Gram residual ZZ^T - I, kept for the gradient below.
    nn::Tensor gram_res = nn::Tensor::zeros({b, b});
    nn::gemm_nt(z.data.data(), z.data.data(), gram_res.data.data(), b, dc, b);
    for (size_t i = 0; i < b; ++i) gram_res.at(i, i) -= 1.0;
    double gram_sq = 0.0;
    for (double v : gram_res.data) gram_sq += v * v;
    lb.gram_term = gram_sq / static_cast<double>(b * b);

    const nn::Tensor y = fd.forward(z, mode, derive_seed(dropout_seed, "fd"),
                                    want_grads ? &cache_fd : nullptr);
    nn::Tensor resid = y;
    for (size_t i = 0; i < resid.numel(); ++i) resid.data[i] -= zg.data[i];
    double recon_sq = 0.0;
    for (double v : resid.data) recon_sq += v * v;
    lb.recon_term = recon_sq / static_cast<double>(b);

    lb.total = lambda_gram * lb.gram_term + lambda_gen * lb.recon_term;
    if (!std::isfinite(lb.total)) return lb; // diverged: leave grad slots untouched

    if (want_grads) {
        // d recon / d y = 2 R / B, scaled by its loss weight.
        nn::Tensor up_y = resid;
        const double cr = 2.0 * lambda_gen / static_cast<double>(b);
        for (double& v : up_y.data) v *= cr;
        nn::Grads g_fd = fd.backward(cache_fd, up_y);

        nn::Tensor dz = g_fd.input;
        if (lambda_gram > 0.0) {
            // d gram / d Z = 4 (ZZ^T - I) Z / B^2
            nn::Tensor gz = nn::Tensor::zeros({b, dc});
            nn::gemm_nn(gram_res.data.data(), z.data.data(), gz.data.data(), b, b, dc);
            const double cg = 4.0 * lambda_gram / static_cast<double>(b * b);
            for (size_t i = 0; i < dz.numel(); ++i) dz.data[i] += cg * gz.data[i];
        }
        nn::Grads g_fe = fe.backward(cache_fe, dz);
        if (grads_fe) *grads_fe = std::move(g_fe);
        if (grads_fd) *grads_fd = std::move(g_fd);
    }
    return lb;
}

namespace {

void check_train_config(const TrainConfig& cfg) {
    if (cfg.epochs == 0 || cfg.batch_size == 0)
        throw ConfigError("bridge training needs positive epochs and batch size");
    if (!(std::isfinite(cfg.lr_init) && cfg.lr_init > 0.0) ||
        !(std::isfinite(cfg.lr_final) && cfg.lr_final > 0.0))
        throw ConfigError("learning rates must be positive and finite");
    if (cfg.decay_epochs == 0) throw ConfigError("decay span must be at least one epoch");
    if (!(std::isfinite(cfg.lambda_gram) && cfg.lambda_gram >= 0.0) ||
        !(std::isfinite(cfg.lambda_gen) && cfg.lambda_gen >= 0.0))
        throw ConfigError("loss weights must be finite and non-negative");
}

struct SplitAverages {
    double gram = 0.0;
    double recon = 0.0;
};

} // namespace

BridgeTrainResult train_bridge(const PairedLatentDataset& ds,
                               const std::vector<nn::LayerSpec>& f_arch,
                               const std::vector<nn::LayerSpec>& r_arch, const TrainConfig& cfg,
                               uint64_t expected_codec_fp) {
    check_train_config(cfg);
    if (expected_codec_fp != 0 && expected_codec_fp != ds.codec_fingerprint)
        throw ProvenanceError("paired dataset was built against codec " +
                              hex64(ds.codec_fingerprint) + ", expected " +
                              hex64(expected_codec_fp));
    if (ds.count() < 10) throw ConfigError("paired dataset too small to split");

    BridgeTrainResult res;
    res.fe = nn::Network(f_arch);
    res.fd = nn::Network(r_arch);
    nn::Network& fe = res.fe;
    nn::Network& fd = res.fd;
    if (fe.in_dim() != ds.d_e) throw ShapeError("forward map does not accept the source latents");
    if (fd.in_dim() != fe.out_dim())
        throw ShapeError("mapping networks disagree on the compressed width");
    if (fd.out_dim() != ds.d_g) throw ShapeError("reverse map does not produce the target latents");
    if (cfg.lambda_gram > 0.0 && cfg.batch_size > fe.out_dim())
        throw ConfigError("Gram penalty needs batch size <= compressed dim");

    fe.init_params(derive_seed(cfg.seed, "bridge/fe"));
    fd.init_params(derive_seed(cfg.seed, "bridge/fd"));

    nn::OptimizerState st_fe, st_fd;
    {
        const auto pe = std::as_const(fe).param_tensors();
        const auto pd = std::as_const(fd).param_tensors();
        if (cfg.optimizer == nn::OptimizerKind::Muon) {
            st_fe = nn::make_muon(pe, cfg.muon);
            st_fd = nn::make_muon(pd, cfg.muon);
        } else {
            st_fe = nn::make_adam(pe, cfg.adam);
            st_fd = nn::make_adam(pd, cfg.adam);
        }
    }

    const geom::SplitSizes split = ds.split();
    std::vector<size_t> train_idx(split.train);
    for (size_t i = 0; i < split.train; ++i) train_idx[i] = i;

    const auto make_batch = [&ds](const size_t* idx, size_t bk) {
        nn::Tensor bze = nn::Tensor::zeros({bk, ds.d_e});
        nn::Tensor bzg = nn::Tensor::zeros({bk, ds.d_g});
        for (size_t r = 0; r < bk; ++r) {
            std::memcpy(&bze.at(r, 0), ds.ze_row(idx[r]), ds.d_e * sizeof(double));
            std::memcpy(&bzg.at(r, 0), ds.zg_row(idx[r]), ds.d_g * sizeof(double));
        }
        return std::pair<nn::Tensor, nn::Tensor>(std::move(bze), std::move(bzg));
    };

    // Evaluates a contiguous index range in batch-size chunks (Eval mode, so
    // dropout is off); terms are averaged with row weights.
    const auto eval_range = [&](size_t first, size_t count) {
        SplitAverages avg;
        double rows = 0.0;
        std::vector<size_t> idx(cfg.batch_size);
        for (size_t start = 0; start < count; start += cfg.batch_size) {
            const size_t bk = std::min(cfg.batch_size, count - start);
            for (size_t r = 0; r < bk; ++r) idx[r] = first + start + r;
            auto [bze, bzg] = make_batch(idx.data(), bk);
            const LossBreakdown lb = bridge_loss(fe, fd, bze, bzg, cfg.lambda_gram, cfg.lambda_gen,
                                                 nn::Mode::Eval, 0);
            avg.gram += lb.gram_term * static_cast<double>(bk);
            avg.recon += lb.recon_term * static_cast<double>(bk);
            rows += static_cast<double>(bk);
        }
        avg.gram /= rows;
        avg.recon /= rows;
        return avg;
    };

    Rng shuffler(derive_seed(cfg.seed, "bridge/batches"));
    auto snapshot = [&]() {
        return std::pair<std::vector<uint8_t>, std::vector<uint8_t>>(nn::serialize_network(fe),
                                                                     nn::serialize_network(fd));
    };
    auto restore = [&](const std::pair<std::vector<uint8_t>, std::vector<uint8_t>>& snap) {
        fe = nn::deserialize_network(snap.first);
        fd = nn::deserialize_network(snap.second);
    };

    auto last_good = snapshot();
    std::pair<std::vector<uint8_t>, std::vector<uint8_t>> best;
    res.best_val_total = kInf;

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr =
            epoch < cfg.decay_epochs
                ? cfg.lr_init + (cfg.lr_final - cfg.lr_init) *
                                    (static_cast<double>(epoch) / static_cast<double>(cfg.decay_epochs))
                : cfg.lr_final;

        shuffler.shuffle(train_idx);
        SplitAverages train_avg;
        double train_rows = 0.0;
        bool finite = true;
        for (size_t start = 0; start < train_idx.size() && finite; start += cfg.batch_size) {
            const size_t bk = std::min(cfg.batch_size, train_idx.size() - start);
            auto [bze, bzg] = make_batch(train_idx.data() + start, bk);
            const uint64_t drop_seed = derive_seed(
                cfg.seed, "drop/" + std::to_string(epoch) + "/" + std::to_string(start));
            nn::Grads g_fe, g_fd;
            const LossBreakdown lb = bridge_loss(fe, fd, bze, bzg, cfg.lambda_gram, cfg.lambda_gen,
                                                 nn::Mode::Train, drop_seed, &g_fe, &g_fd);
            if (!std::isfinite(lb.total)) {
                finite = false;
                break;
            }
            try {
                nn::optimizer_step(fe, g_fe, st_fe, lr);
                nn::optimizer_step(fd, g_fd, st_fd, lr);
            } catch (const NumericError&) {
                finite = false;
                break;
            }
            train_avg.gram += lb.gram_term * static_cast<double>(bk);
            train_avg.recon += lb.recon_term * static_cast<double>(bk);
            train_rows += static_cast<double>(bk);
        }

        SplitAverages val_avg;
        double val_total = kInf;
        if (finite) {
            train_avg.gram /= train_rows;
            train_avg.recon /= train_rows;
            val_avg = eval_range(split.train, split.val);
            val_total = cfg.lambda_gram * val_avg.gram + cfg.lambda_gen * val_avg.recon;
            if (!std::isfinite(val_total)) finite = false;
        }
        if (!finite) {
            std::cerr << "train_bridge: non-finite loss at epoch " << epoch
                      << "; reverting to the last finite checkpoint\n";
            restore(last_good);
            res.diverged = true;
            break;
        }

        res.log.push_back({epoch, train_avg.gram, train_avg.recon, val_avg.gram, val_avg.recon, lr});
        if (val_total < res.best_val_total) {
            res.best_val_total = val_total;
            res.best_epoch = epoch;
            best = snapshot();
        }
        last_good = snapshot();
    }

    if (!best.first.empty()) {
        restore(best);
    } else if (res.diverged) {
        restore(last_good); // diverged before any finite validation pass
    }
    return res;
}

void write_train_log_csv(const std::vector<EpochLog>& log, const std::string& path) {
    std::string out = "epoch,train_gram,train_recon,val_gram,val_recon,lr\n";
    char row[256];
    for (const EpochLog& e : log) {
        std::snprintf(row, sizeof(row), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                      e.train_gram, e.train_recon, e.val_gram, e.val_recon, e.lr);
        out += row;
    }
    write_text_file(path, out);
}

std::vector<double> compress(const codec::PointNetEncoder& enc, const nn::Network& fe,
                             const geom::PointCloud& pc) {
    const std::vector<double> ze = codec::encode(enc, pc);
    if (ze.size() != fe.in_dim())
        throw ShapeError("forward map expects width " + std::to_string(fe.in_dim()) +
                         ", encoder produced " + std::to_string(ze.size()));
    const nn::Tensor z = fe.forward(nn::Tensor::vec(ze), nn::Mode::Eval, 0);
    return z.data;
}

geom::PointCloud decompress(const nn::Network& fd, const nn::Network& gen,
                            const std::vector<double>& z_comp) {
    if (z_comp.size() != fd.in_dim())
        throw ShapeError("reverse map expects width " + std::to_string(fd.in_dim()) + ", got " +
                         std::to_string(z_comp.size()));
    if (fd.out_dim() != gen.in_dim())
        throw ShapeError("reverse map output does not match the generator input");
    const nn::Tensor zg = fd.forward(nn::Tensor::vec(z_comp), nn::Mode::Eval, 0);
    return codec::generate(gen, zg.data);
}

std::vector<double> interpolate(const std::vector<double>& a, const std::vector<double>& b,
                                double t) {
    if (a.size() != b.size()) throw ShapeError("interpolation endpoints differ in length");
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("interpolation parameter must lie in [0, 1]");
    if (t == 0.0) return a;
    if (t == 1.0) return b;
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
    return out;
}

uint64_t bridge_fingerprint(const BridgeBundle& b) {
    const std::vector<uint8_t> fe_bytes = nn::serialize_network(b.fe);
    const std::vector<uint8_t> fd_bytes = nn::serialize_network(b.fd);
    return fnv1a64(fd_bytes.data(), fd_bytes.size(),
                   fnv1a64(fe_bytes.data(), fe_bytes.size()));
}

namespace {

uint64_t parse_hex64(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        const uint64_t v = std::stoull(s, &used, 16);
        if (used != s.size()) throw FormatError(what + ": bad hex value '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw FormatError(what + ": bad hex value '" + s + "'");
    }
}

} // namespace

void save_bridge(const BridgeBundle& b, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nn::save_checkpoint(b.fe, (fs::path(dir) / "forward.sqzn").string());
    nn::save_checkpoint(b.fd, (fs::path(dir) / "reverse.sqzn").string());
    nlohmann::json meta;
    meta["d_e"] = b.d_e();
    meta["d_c"] = b.d_c();
    meta["d_g"] = b.d_g();
    meta["lambda_gram"] = b.lambda_gram;
    meta["lambda_gen"] = b.lambda_gen;
    meta["codec_fingerprint"] = hex64(b.codec_fingerprint);
    meta["fingerprint"] = hex64(bridge_fingerprint(b));
    write_text_file((fs::path(dir) / "meta.json").string(), meta.dump(2) + "\n");
}

BridgeBundle load_bridge(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string meta_path = (fs::path(dir) / "meta.json").string();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(meta_path + ": " + e.what());
    }
    BridgeBundle b;
    try {
        b.fe = nn::load_checkpoint((fs::path(dir) / "forward.sqzn").string());
        b.fd = nn::load_checkpoint((fs::path(dir) / "reverse.sqzn").string());
        b.lambda_gram = meta.at("lambda_gram").get<double>();
        b.lambda_gen = meta.at("lambda_gen").get<double>();
        b.codec_fingerprint =
            parse_hex64(meta.at("codec_fingerprint").get<std::string>(), meta_path);
        const uint64_t want = parse_hex64(meta.at("fingerprint").get<std::string>(), meta_path);
        if (meta.at("d_e").get<size_t>() != b.d_e() || meta.at("d_c").get<size_t>() != b.d_c() ||
            meta.at("d_g").get<size_t>() != b.d_g())
            throw FormatError(meta_path + ": stored dimensions do not match the checkpoints");
        const uint64_t got = bridge_fingerprint(b);
        if (want != got)
            throw ProvenanceError(dir + ": bridge fingerprint mismatch (metadata " + hex64(want) +
                                  ", checkpoints " + hex64(got) + ")");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(meta_path + ": " + e.what());
    }
    return b;
}

} // namespace sqz::bridge
