#include "sqz/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <utility>

#include "json.hpp"

#include "sqz/analysis/spectrum.hpp"
#include "sqz/core/binio.hpp"
#include "sqz/core/error.hpp"
#include "sqz/core/hash.hpp"
#include "sqz/core/rng.hpp"
#include "sqz/geom/metrics.hpp"
#include "sqz/geom/shapes.hpp"
#include "sqz/payload/payload.hpp"

namespace sqz::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Strict section parser: every key must be consumed, so typos fail loudly
// instead of silently running on defaults.
class StrictObj {
public:
    StrictObj(json j, std::string where) : j_(std::move(j)), where_(std::move(where)) {
        if (!j_.is_object())
            throw ConfigError("config section '" + where_ + "' must be a JSON object");
    }

    template <class T>
    void take(const char* key, T& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + where_ + key + "' has the wrong type");
        }
        j_.erase(it);
    }

    json take_section(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end()) return json::object();
        json v = *it;
        j_.erase(it);
        return v;
    }

    void done() const {
        if (!j_.empty())
            throw ConfigError("unknown config key '" + where_ + j_.begin().key() + "'");
    }

private:
    json j_;
    std::string where_;
};

void validate(const Config& cfg) {
    if (cfg.n_shapes < 10) throw ConfigError("data.n_shapes must be at least 10 (80/10/10 split)");
    if (cfg.n_points < 8) throw ConfigError("data.n_points must be at least 8");
    if (cfg.d_e == 0 || cfg.d_g == 0 || cfg.d_c == 0)
        throw ConfigError("latent dimensions must be positive");
    if (cfg.optimizer != "muon" && cfg.optimizer != "adam")
        throw ConfigError("bridge.optimizer must be \"muon\" or \"adam\"");
    if (cfg.bits != 8 && cfg.bits != 16) throw ConfigError("payload.bits must be 8 or 16");
    if (cfg.batch_size == 0) throw ConfigError("bridge.batch_size must be positive");
    if (cfg.pointsim_k < 2) throw ConfigError("eval.pointsim_k must be at least 2");
    if (cfg.ablate_dc.empty() || cfg.ablate_lambda.empty())
        throw ConfigError("ablate sweeps must be non-empty");
}

ArtifactRef file_ref(const std::string& path) { return {path, file_fingerprint(path)}; }

/// One aggregate fingerprint for a directory: per-file hashes folded in
/// filename order, so any byte or name change shows.
ArtifactRef dir_ref(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    uint64_t h = kFnvOffset;
    for (const auto& n : names) {
        h = fnv1a64(n, h);
        const uint64_t fh = file_fingerprint(dir + "/" + n);
        h = fnv1a64(&fh, sizeof fh, h);
    }
    return {dir, h};
}

std::vector<ArtifactRef> codec_refs(const Config& cfg) {
    const std::string d = codec_dir(cfg);
    return {file_ref(d + "/encoder.sqzn"), file_ref(d + "/generator.sqzn"), file_ref(d + "/pair_encoder.sqzn"),
            file_ref(d + "/meta.json")};
}

std::vector<ArtifactRef> bridge_refs(const Config& cfg) {
    const std::string d = bridge_dir(cfg);
    return {file_ref(d + "/forward.sqzn"), file_ref(d + "/reverse.sqzn"), file_ref(d + "/meta.json")};
}

RunManifest finish(RunManifest m, const Config& cfg, const std::string& base) {
    m.config_hash = config_hash(cfg);
    write_manifest(m, base);
    return m;
}

struct Dataset {
    std::vector<geom::PointCloud> clouds;
    geom::SplitSizes split{0, 0, 0};
    size_t n_points = 0;
};

std::string shape_path(const std::string& dir, size_t i) {
    char name[32];
    std::snprintf(name, sizeof name, "shape_%05zu.pcl1", i);
    return dir + "/" + name;
}

Dataset load_dataset(const Config& cfg) {
    const std::string dir = data_dir(cfg);
    Dataset ds;
    size_t count = 0;
    try {
        const json idx = json::parse(read_text_file(dir + "/index.json"));
        count = idx.at("count").get<size_t>();
        ds.n_points = idx.at("n_points").get<size_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("dataset index.json: ") + e.what());
    }
    ds.clouds.reserve(count);
    for (size_t i = 0; i < count; ++i) ds.clouds.push_back(geom::load_pcl(shape_path(dir, i)));
    ds.split = geom::split_80_10_10(count);
    return ds;
}

/// Shared payload-side accounting: quantize, pick the smaller body (raw vs
/// entropy coded) exactly like the container writer, and return the
/// dequantized latent plus the body size in bytes.
std::pair<std::vector<double>, size_t> quantized_body(const std::vector<double>& z, int bits,
                                                      bool try_entropy) {
    const auto q = payload::quantize(z, bits);
    const size_t raw = z.size() * static_cast<size_t>(bits) / 8;
    size_t body = raw;
    if (try_entropy) {
        const auto coded = payload::range_encode(q.codes, bits);
        if (coded.size() + 4 < raw) body = coded.size() + 4;
    }
    return {payload::dequantize(q.codes, q.scale, q.offset), body};
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

void append_g(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

bridge::TrainConfig bridge_train_config(const Config& cfg, size_t d_c, double lambda_gram) {
    bridge::TrainConfig tc;
    tc.lambda_gram = lambda_gram;
    tc.lambda_gen = cfg.lambda_gen;
    tc.optimizer = cfg.optimizer == "adam" ? nn::OptimizerKind::Adam : nn::OptimizerKind::Muon;
    tc.lr_init = cfg.lr_init;
    tc.lr_final = cfg.lr_final;
    tc.decay_epochs = cfg.decay_epochs;
    tc.epochs = cfg.bridge_epochs;
    tc.batch_size = cfg.batch_size;
    // Orthonormal rows need B <= d_C; clamp rather than reject so sweeps over
    // narrow d_C keep the rest of the config unchanged.
    if (lambda_gram > 0.0 && tc.batch_size > d_c) tc.batch_size = d_c;
    tc.dropout = cfg.dropout;
    tc.seed = derive_seed(cfg.seed, "bridge");
    return tc;
}

void check_bridge_matches_codec(const bridge::BridgeBundle& bb, uint64_t codec_fp, bool force) {
    if (bb.codec_fingerprint == codec_fp || force) return;
    throw ProvenanceError("bridge was trained against codec " + hex64(bb.codec_fingerprint) +
                          " but the loaded codec hashes to " + hex64(codec_fp) +
                          " (--force to override)");
}

// Per-item end-to-end evaluation through the real quantization path.
struct EvalRow {
    double chamfer = 0.0;
    double pointsim = 0.0;
    double cr = 0.0;
    double body_bytes = 0.0;
    double compress_ms = 0.0;
    double decompress_ms = 0.0;
};

EvalRow eval_item(const codec::CodecPair& cp, const nn::Network& fe, const nn::Network& fd,
                  const geom::PointCloud& pc, const Config& cfg) {
    EvalRow r;
    Stopwatch sc;
    const auto z = bridge::compress(cp.enc_e, fe, pc);
    auto [zq, body] = quantized_body(z, cfg.bits, cfg.entropy);
    r.compress_ms = sc.ms();
    Stopwatch sd;
    const auto rec = bridge::decompress(fd, cp.gen, zq);
    r.decompress_ms = sd.ms();
    r.chamfer = geom::chamfer(rec, pc);
    r.pointsim = geom::pointsim(rec, pc, cfg.pointsim_k);
    r.body_bytes = static_cast<double>(body);
    r.cr = payload::compression_ratio(pc.count() * 3 * 4, body);
    return r;
}

} // namespace

std::string data_dir(const Config& cfg) { return cfg.artifact_root + "/data"; }
std::string codec_dir(const Config& cfg) { return cfg.artifact_root + "/codec"; }
std::string pairs_path(const Config& cfg) { return cfg.artifact_root + "/pairs.sqzp"; }
std::string bridge_dir(const Config& cfg) { return cfg.artifact_root + "/bridge"; }

Config load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    Config cfg;
    StrictObj top(std::move(j), "");
    top.take("seed", cfg.seed);
    top.take("artifact_root", cfg.artifact_root);

    StrictObj data(top.take_section("data"), "data.");
    data.take("n_shapes", cfg.n_shapes);
    data.take("n_points", cfg.n_points);
    data.done();

    StrictObj codec(top.take_section("codec"), "codec.");
    codec.take("d_e", cfg.d_e);
    codec.take("d_g", cfg.d_g);
    codec.take("epochs", cfg.codec_epochs);
    codec.take("batch_clouds", cfg.codec_batch_clouds);
    codec.take("lr", cfg.codec_lr);
    codec.done();

    StrictObj pairs(top.take_section("pairs"), "pairs.");
    pairs.take("count", cfg.n_pairs);
    pairs.done();

    StrictObj bridge(top.take_section("bridge"), "bridge.");
    bridge.take("d_c", cfg.d_c);
    bridge.take("hidden_forward", cfg.hidden_forward);
    bridge.take("hidden_reverse", cfg.hidden_reverse);
    bridge.take("reverse_blocks", cfg.reverse_blocks);
    bridge.take("lambda_gram", cfg.lambda_gram);
    bridge.take("lambda_gen", cfg.lambda_gen);
    bridge.take("optimizer", cfg.optimizer);
    bridge.take("lr_init", cfg.lr_init);
    bridge.take("lr_final", cfg.lr_final);
    bridge.take("epochs", cfg.bridge_epochs);
    bridge.take("decay_epochs", cfg.decay_epochs);
    bridge.take("batch_size", cfg.batch_size);
    bridge.take("dropout", cfg.dropout);
    bridge.done();

    StrictObj payload(top.take_section("payload"), "payload.");
    payload.take("bits", cfg.bits);
    payload.take("entropy", cfg.entropy);
    payload.done();

    StrictObj eval(top.take_section("eval"), "eval.");
    eval.take("pointsim_k", cfg.pointsim_k);
    eval.done();

    StrictObj ablate(top.take_section("ablate"), "ablate.");
    ablate.take("d_c", cfg.ablate_dc);
    ablate.take("lambda_gram", cfg.ablate_lambda);
    ablate.done();

    top.done();
    validate(cfg);
    return cfg;
}

std::string config_json(const Config& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["artifact_root"] = cfg.artifact_root;
    j["data"] = {{"n_shapes", cfg.n_shapes}, {"n_points", cfg.n_points}};
    j["codec"] = {{"d_e", cfg.d_e},
                  {"d_g", cfg.d_g},
                  {"epochs", cfg.codec_epochs},
                  {"batch_clouds", cfg.codec_batch_clouds},
                  {"lr", cfg.codec_lr}};
    j["pairs"] = {{"count", cfg.n_pairs}};
    j["bridge"] = {{"d_c", cfg.d_c},
                   {"hidden_forward", cfg.hidden_forward},
                   {"hidden_reverse", cfg.hidden_reverse},
                   {"reverse_blocks", cfg.reverse_blocks},
                   {"lambda_gram", cfg.lambda_gram},
                   {"lambda_gen", cfg.lambda_gen},
                   {"optimizer", cfg.optimizer},
                   {"lr_init", cfg.lr_init},
                   {"lr_final", cfg.lr_final},
                   {"epochs", cfg.bridge_epochs},
                   {"decay_epochs", cfg.decay_epochs},
                   {"batch_size", cfg.batch_size},
                   {"dropout", cfg.dropout}};
    j["payload"] = {{"bits", cfg.bits}, {"entropy", cfg.entropy}};
    j["eval"] = {{"pointsim_k", cfg.pointsim_k}};
    j["ablate"] = {{"d_c", cfg.ablate_dc}, {"lambda_gram", cfg.ablate_lambda}};
    return j.dump(2) + "\n";
}

uint64_t config_hash(const Config& cfg) { return fnv1a64(config_json(cfg)); }

void apply_env_overrides(Config& cfg) {
    if (const char* root = std::getenv("SQZ_ARTIFACT_ROOT"); root && *root)
        cfg.artifact_root = root;
}

uint64_t file_fingerprint(const std::string& path) {
    const auto bytes = read_file(path);
    return fnv1a64(bytes.data(), bytes.size());
}

void write_manifest(const RunManifest& m, const std::string& base) {
    auto art = [](const std::vector<ArtifactRef>& refs) {
        json a = json::array();
        for (const auto& r : refs)
            a.push_back({{"path", r.path}, {"fingerprint", hex64(r.fingerprint)}});
        return a;
    };
    json j;
    j["command"] = m.command;
    j["config_hash"] = hex64(m.config_hash);
    json seeds = json::object();
    for (const auto& [k, v] : m.seeds) seeds[k] = hex64(v);
    j["seeds"] = seeds;
    j["inputs"] = art(m.inputs);
    j["outputs"] = art(m.outputs);
    json metrics = json::object();
    for (const auto& [k, v] : m.metrics) metrics[k] = v;
    j["metrics"] = metrics;
    write_text_file(base + ".manifest.json", j.dump(2) + "\n");

    json t = json::object();
    for (const auto& [k, v] : m.timings_ms) t[k] = std::max(0.0, v);
    write_text_file(base + ".timings.json", t.dump(2) + "\n");
}

RunManifest cmd_gen_data(const Config& cfg) {
    validate(cfg);
    Stopwatch sw;
    const uint64_t dseed = derive_seed(cfg.seed, "data");
    const auto specs = geom::make_dataset_specs(cfg.n_shapes, cfg.n_points, dseed);
    const std::string dir = data_dir(cfg);
    fs::create_directories(dir);

    RunManifest m;
    m.command = "gen-data";
    m.seeds = {{"root", cfg.seed}, {"data", dseed}};
    for (size_t i = 0; i < specs.size(); ++i) {
        const auto pc = geom::normalize(geom::gen_shape(specs[i]));
        const std::string path = shape_path(dir, i);
        geom::save_pcl(path, pc);
        m.outputs.push_back(file_ref(path));
    }
    const auto split = geom::split_80_10_10(cfg.n_shapes);
    json idx;
    idx["count"] = cfg.n_shapes;
    idx["n_points"] = cfg.n_points;
    idx["seed"] = hex64(dseed);
    idx["split"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
    write_text_file(dir + "/index.json", idx.dump(2) + "\n");
    m.outputs.push_back(file_ref(dir + "/index.json"));
    m.metrics["shapes"] = static_cast<double>(specs.size());
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, dir);
}

RunManifest cmd_train_codecs(const Config& cfg) {
    validate(cfg);
    Stopwatch sw;
    const auto ds = load_dataset(cfg);
    const std::vector<geom::PointCloud> train(ds.clouds.begin(),
                                              ds.clouds.begin() + ds.split.train);
    const std::vector<geom::PointCloud> val(ds.clouds.begin() + ds.split.train,
                                            ds.clouds.begin() + ds.split.train + ds.split.val);
    codec::AutoencoderConfig ac;
    ac.epochs = cfg.codec_epochs;
    ac.batch_clouds = cfg.codec_batch_clouds;
    ac.lr = cfg.codec_lr;
    const uint64_t cseed = derive_seed(cfg.seed, "codec");
    const auto cp = codec::make_codec_pair(train, val, cfg.d_e, cfg.d_g, ac, cseed);
    codec::save_codec(cp, codec_dir(cfg));

    RunManifest m;
    m.command = "train-codecs";
    m.seeds = {{"root", cfg.seed}, {"codec", cseed}};
    m.inputs = {dir_ref(data_dir(cfg))};
    m.outputs = codec_refs(cfg);
    m.metrics["gen_train_chamfer"] = cp.gen_train_chamfer;
    m.metrics["gen_val_chamfer"] = cp.gen_val_chamfer;
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, codec_dir(cfg));
}

RunManifest cmd_gen_pairs(const Config& cfg) {
    validate(cfg);
    Stopwatch sw;
    const auto cp = codec::load_codec(codec_dir(cfg));
    const uint64_t pseed = derive_seed(cfg.seed, "pairs");
    const auto pairs = bridge::gen_paired_dataset(cp, cfg.n_pairs, pseed);
    bridge::save_pairs(pairs, pairs_path(cfg));

    RunManifest m;
    m.command = "gen-pairs";
    m.seeds = {{"root", cfg.seed}, {"pairs", pseed}};
    m.inputs = codec_refs(cfg);
    m.outputs = {file_ref(pairs_path(cfg))};
    m.metrics["pairs"] = static_cast<double>(pairs.count());
    m.metrics["skipped"] = static_cast<double>(pairs.skipped);
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, pairs_path(cfg));
}

RunManifest cmd_train_bridge(const Config& cfg) {
    validate(cfg);
    Stopwatch sw;
    const auto cp = codec::load_codec(codec_dir(cfg));
    const uint64_t fp_before = codec::codec_fingerprint(cp);
    const auto pairs = bridge::load_pairs(pairs_path(cfg));

    const auto f_arch = bridge::make_forward_arch(pairs.d_e, cfg.d_c, cfg.hidden_forward,
                                                  cfg.dropout);
    const auto r_arch = bridge::make_reverse_arch(cfg.d_c, pairs.d_g, cfg.hidden_reverse,
                                                  cfg.reverse_blocks, cfg.dropout);
    const auto tc = bridge_train_config(cfg, cfg.d_c, cfg.lambda_gram);
    auto res = bridge::train_bridge(pairs, f_arch, r_arch, tc, fp_before);

    // The endpoints are frozen: training must not have touched them.
    const uint64_t fp_after = codec::codec_fingerprint(cp);
    if (fp_after != fp_before)
        throw ProvenanceError("frozen codec changed during bridge training: " + hex64(fp_before) +
                              " -> " + hex64(fp_after));

    bridge::BridgeBundle bb{std::move(res.fe), std::move(res.fd), tc.lambda_gram, tc.lambda_gen,
                            fp_before};
    const std::string dir = bridge_dir(cfg);
    bridge::save_bridge(bb, dir);
    bridge::write_train_log_csv(res.log, dir + "/train_log.csv");

    RunManifest m;
    m.command = "train-bridge";
    m.seeds = {{"root", cfg.seed}, {"bridge", tc.seed}};
    m.inputs = codec_refs(cfg);
    m.inputs.push_back(file_ref(pairs_path(cfg)));
    m.outputs = bridge_refs(cfg);
    m.outputs.push_back(file_ref(dir + "/train_log.csv"));
    m.metrics["best_epoch"] = static_cast<double>(res.best_epoch);
    m.metrics["best_val_total"] = res.best_val_total;
    m.metrics["epochs_logged"] = static_cast<double>(res.log.size());
    m.metrics["diverged"] = res.diverged ? 1.0 : 0.0;
    m.metrics["batch_size"] = static_cast<double>(tc.batch_size);
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, dir);
}

RunManifest cmd_compress(const Config& cfg, const std::string& cloud_path,
                         const std::string& payload_out, bool force) {
    validate(cfg);
    const auto cp = codec::load_codec(codec_dir(cfg));
    const auto bb = bridge::load_bridge(bridge_dir(cfg));
    const uint64_t cfp = codec::codec_fingerprint(cp);
    check_bridge_matches_codec(bb, cfp, force);

    const auto pc = geom::normalize(geom::load_cloud(cloud_path));
    Stopwatch sw;
    const auto z = bridge::compress(cp.enc_e, bb.fe, pc);
    const size_t total = payload::write_payload(z, cfg.bits, cfg.entropy, cfp,
                                                bridge::bridge_fingerprint(bb), payload_out);
    const double elapsed = sw.ms();
    const auto meta = payload::read_payload(payload_out).meta;

    RunManifest m;
    m.command = "compress";
    m.seeds = {{"root", cfg.seed}};
    m.inputs = codec_refs(cfg);
    auto br = bridge_refs(cfg);
    m.inputs.insert(m.inputs.end(), br.begin(), br.end());
    m.inputs.push_back(file_ref(cloud_path));
    m.outputs = {file_ref(payload_out)};
    m.metrics["points"] = static_cast<double>(pc.count());
    m.metrics["d_c"] = static_cast<double>(meta.d_c);
    m.metrics["body_bytes"] = static_cast<double>(meta.body_bytes);
    m.metrics["total_bytes"] = static_cast<double>(total);
    m.metrics["entropy_coded"] = meta.entropy_coded ? 1.0 : 0.0;
    m.metrics["cr_body"] = payload::compression_ratio(pc.count() * 3 * 4, meta.body_bytes);
    m.metrics["cr_total"] = payload::compression_ratio(pc.count() * 3 * 4, total);
    m.timings_ms["compress_ms"] = elapsed;
    return finish(std::move(m), cfg, payload_out);
}

RunManifest cmd_decompress(const Config& cfg, const std::string& payload_path,
                           const std::string& cloud_out, bool force) {
    validate(cfg);
    const auto pd = payload::read_payload(payload_path);
    const auto cp = codec::load_codec(codec_dir(cfg));
    const auto bb = bridge::load_bridge(bridge_dir(cfg));
    const uint64_t cfp = codec::codec_fingerprint(cp);
    const uint64_t bfp = bridge::bridge_fingerprint(bb);
    check_bridge_matches_codec(bb, cfp, force);
    if (!force && (pd.meta.codec_fingerprint != cfp || pd.meta.bridge_fingerprint != bfp))
        throw ProvenanceError("payload " + payload_path + " was written by codec " +
                              hex64(pd.meta.codec_fingerprint) + " / bridge " +
                              hex64(pd.meta.bridge_fingerprint) + ", not the loaded pair " +
                              hex64(cfp) + " / " + hex64(bfp) + " (--force to override)");

    Stopwatch sw;
    const auto pc = bridge::decompress(bb.fd, cp.gen, pd.z);
    const double elapsed = sw.ms();
    geom::save_cloud(cloud_out, pc);

    RunManifest m;
    m.command = "decompress";
    m.seeds = {{"root", cfg.seed}};
    m.inputs = codec_refs(cfg);
    auto br = bridge_refs(cfg);
    m.inputs.insert(m.inputs.end(), br.begin(), br.end());
    m.inputs.push_back(file_ref(payload_path));
    m.outputs = {file_ref(cloud_out)};
    m.metrics["points"] = static_cast<double>(pc.count());
    m.metrics["d_c"] = static_cast<double>(pd.meta.d_c);
    m.timings_ms["decompress_ms"] = elapsed;
    return finish(std::move(m), cfg, cloud_out);
}

RunManifest cmd_eval(const Config& cfg, bool force) {
    validate(cfg);
    Stopwatch sw;
    const auto ds = load_dataset(cfg);
    const auto cp = codec::load_codec(codec_dir(cfg));
    const auto bb = bridge::load_bridge(bridge_dir(cfg));
    check_bridge_matches_codec(bb, codec::codec_fingerprint(cp), force);

    const size_t first = ds.split.train + ds.split.val;
    const size_t n_test = ds.split.test;
    std::vector<EvalRow> rows(n_test);
    std::vector<double> ceiling(n_test);
    for (size_t i = 0; i < n_test; ++i) {
        const auto& pc = ds.clouds[first + i];
        rows[i] = eval_item(cp, bb.fe, bb.fd, pc, cfg);
        // The generator's own autoencoder round-trip is the quality ceiling
        // the bridge path is judged against.
        const auto rec_g = codec::generate(cp.gen, codec::encode(cp.enc_g, pc));
        ceiling[i] = geom::chamfer(rec_g, pc);
    }

    const std::string dir = cfg.artifact_root + "/eval";
    fs::create_directories(dir);
    std::string csv = "item,chamfer,chamfer_ceiling,pointsim,cr_body,body_bytes\n";
    for (size_t i = 0; i < n_test; ++i) {
        csv += std::to_string(first + i);
        csv += ',';
        append_g(csv, rows[i].chamfer);
        csv += ',';
        append_g(csv, ceiling[i]);
        csv += ',';
        append_g(csv, rows[i].pointsim);
        csv += ',';
        append_g(csv, rows[i].cr);
        csv += ',';
        append_g(csv, rows[i].body_bytes);
        csv += '\n';
    }
    write_text_file(dir + "/items.csv", csv);

    auto column = [&](auto pick) {
        std::vector<double> v(n_test);
        for (size_t i = 0; i < n_test; ++i) v[i] = pick(rows[i]);
        return v;
    };
    RunManifest m;
    m.command = "eval";
    m.seeds = {{"root", cfg.seed}};
    const auto put = [&m](const std::string& key, const std::vector<double>& v) {
        const double mean = mean_of(v);
        m.metrics[key + "_mean"] = mean;
        m.metrics[key + "_std"] = std_of(v, mean);
    };
    put("chamfer", column([](const EvalRow& r) { return r.chamfer; }));
    put("chamfer_ceiling", ceiling);
    put("pointsim", column([](const EvalRow& r) { return r.pointsim; }));
    put("cr_body", column([](const EvalRow& r) { return r.cr; }));
    m.metrics["n_test"] = static_cast<double>(n_test);
    m.metrics["ceiling_ratio"] =
        m.metrics["chamfer_ceiling_mean"] > 0.0
            ? m.metrics["chamfer_mean"] / m.metrics["chamfer_ceiling_mean"]
            : 0.0;

    json met = json::object();
    for (const auto& [k, v] : m.metrics) met[k] = v;
    write_text_file(dir + "/metrics.json", met.dump(2) + "\n");

    m.inputs = codec_refs(cfg);
    auto br = bridge_refs(cfg);
    m.inputs.insert(m.inputs.end(), br.begin(), br.end());
    m.inputs.push_back(dir_ref(data_dir(cfg)));
    m.outputs = {file_ref(dir + "/items.csv"), file_ref(dir + "/metrics.json")};
    m.timings_ms["total_ms"] = sw.ms();
    m.timings_ms["compress_ms_mean"] =
        mean_of(column([](const EvalRow& r) { return r.compress_ms; }));
    m.timings_ms["decompress_ms_mean"] =
        mean_of(column([](const EvalRow& r) { return r.decompress_ms; }));
    return finish(std::move(m), cfg, dir);
}

RunManifest cmd_analyze(const Config& cfg, bool force) {
    validate(cfg);
    Stopwatch sw;
    const auto ds = load_dataset(cfg);
    const auto cp = codec::load_codec(codec_dir(cfg));
    const auto bb = bridge::load_bridge(bridge_dir(cfg));
    check_bridge_matches_codec(bb, codec::codec_fingerprint(cp), force);

    const size_t first = ds.split.train + ds.split.val;
    const size_t b = ds.split.test;
    nn::Tensor z = nn::Tensor::zeros({b, bb.d_c()});
    for (size_t i = 0; i < b; ++i) {
        const auto zi = bridge::compress(cp.enc_e, bb.fe, ds.clouds[first + i]);
        std::copy(zi.begin(), zi.end(), z.data.begin() + static_cast<ptrdiff_t>(i * bb.d_c()));
    }
    const auto rep = analysis::spectrum(z);

    const std::string dir = cfg.artifact_root + "/analysis";
    fs::create_directories(dir);
    write_text_file(dir + "/spectrum.json", analysis::report_json(rep));
    write_text_file(dir + "/sigma.csv", analysis::sigma_csv(rep));

    RunManifest m;
    m.command = "analyze";
    m.seeds = {{"root", cfg.seed}};
    m.inputs = codec_refs(cfg);
    auto br = bridge_refs(cfg);
    m.inputs.insert(m.inputs.end(), br.begin(), br.end());
    m.inputs.push_back(dir_ref(data_dir(cfg)));
    m.outputs = {file_ref(dir + "/spectrum.json"), file_ref(dir + "/sigma.csv")};
    m.metrics["b"] = static_cast<double>(rep.b);
    m.metrics["d_c"] = static_cast<double>(rep.d_c);
    m.metrics["d_eff"] = rep.d_eff;
    m.metrics["offdiag_ratio"] = rep.offdiag_ratio;
    if (std::isfinite(rep.kappa)) m.metrics["kappa"] = rep.kappa;
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, dir);
}

RunManifest cmd_ablate(const Config& cfg) {
    validate(cfg);
    Stopwatch sw;
    const auto ds = load_dataset(cfg);
    const auto cp = codec::load_codec(codec_dir(cfg));
    const uint64_t cfp = codec::codec_fingerprint(cp);
    const auto pairs = bridge::load_pairs(pairs_path(cfg));

    const size_t first = ds.split.train + ds.split.val;
    const size_t n_test = ds.split.test;

    std::string csv = "axis,value,d_c,lambda_gram,batch_size,best_epoch,best_val_total,diverged,"
                      "chamfer_mean,chamfer_std,pointsim_mean,pointsim_std,d_eff,kappa\n";
    size_t points = 0;

    auto sweep_point = [&](const std::string& axis, double value, size_t dc, double lam) {
        const auto f_arch = bridge::make_forward_arch(pairs.d_e, dc, cfg.hidden_forward,
                                                      cfg.dropout);
        const auto r_arch = bridge::make_reverse_arch(dc, pairs.d_g, cfg.hidden_reverse,
                                                      cfg.reverse_blocks, cfg.dropout);
        const auto tc = bridge_train_config(cfg, dc, lam);
        const auto res = bridge::train_bridge(pairs, f_arch, r_arch, tc, cfp);

        std::vector<double> cham(n_test), psim(n_test);
        nn::Tensor z = nn::Tensor::zeros({n_test, dc});
        for (size_t i = 0; i < n_test; ++i) {
            const auto& pc = ds.clouds[first + i];
            const auto row = eval_item(cp, res.fe, res.fd, pc, cfg);
            cham[i] = row.chamfer;
            psim[i] = row.pointsim;
            const auto zi = bridge::compress(cp.enc_e, res.fe, pc);
            std::copy(zi.begin(), zi.end(), z.data.begin() + static_cast<ptrdiff_t>(i * dc));
        }
        const auto rep = analysis::spectrum(z);
        const double cm = mean_of(cham), pm = mean_of(psim);

        csv += axis;
        csv += ',';
        append_g(csv, value);
        csv += ',' + std::to_string(dc) + ',';
        append_g(csv, lam);
        csv += ',' + std::to_string(tc.batch_size) + ',' + std::to_string(res.best_epoch) + ',';
        append_g(csv, res.best_val_total);
        csv += ',' + std::to_string(res.diverged ? 1 : 0) + ',';
        append_g(csv, cm);
        csv += ',';
        append_g(csv, std_of(cham, cm));
        csv += ',';
        append_g(csv, pm);
        csv += ',';
        append_g(csv, std_of(psim, pm));
        csv += ',';
        append_g(csv, rep.d_eff);
        csv += ',';
        append_g(csv, rep.kappa);
        csv += '\n';
        ++points;
    };

    for (size_t dc : cfg.ablate_dc)
        sweep_point("d_c", static_cast<double>(dc), dc, cfg.lambda_gram);
    for (double lam : cfg.ablate_lambda) sweep_point("lambda_gram", lam, cfg.d_c, lam);

    const std::string dir = cfg.artifact_root + "/ablate";
    fs::create_directories(dir);
    write_text_file(dir + "/sweep.csv", csv);

    RunManifest m;
    m.command = "ablate";
    m.seeds = {{"root", cfg.seed}, {"bridge", derive_seed(cfg.seed, "bridge")}};
    m.inputs = codec_refs(cfg);
    m.inputs.push_back(file_ref(pairs_path(cfg)));
    m.inputs.push_back(dir_ref(data_dir(cfg)));
    m.outputs = {file_ref(dir + "/sweep.csv")};
    m.metrics["points"] = static_cast<double>(points);
    m.metrics["n_test"] = static_cast<double>(n_test);
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, dir);
}

RunManifest cmd_interpolate(const Config& cfg, const std::string& payload_a,
                            const std::string& payload_b, size_t steps,
                            const std::string& out_dir, bool force) {
    validate(cfg);
    if (steps < 2) throw ConfigError("interpolate needs at least 2 steps (the two endpoints)");
    Stopwatch sw;
    const auto pa = payload::read_payload(payload_a);
    const auto pb = payload::read_payload(payload_b);
    const auto cp = codec::load_codec(codec_dir(cfg));
    const auto bb = bridge::load_bridge(bridge_dir(cfg));
    const uint64_t cfp = codec::codec_fingerprint(cp);
    const uint64_t bfp = bridge::bridge_fingerprint(bb);
    check_bridge_matches_codec(bb, cfp, force);
    if (!force)
        for (const auto* p : {&pa, &pb})
            if (p->meta.codec_fingerprint != cfp || p->meta.bridge_fingerprint != bfp)
                throw ProvenanceError("interpolation payload was written by codec " +
                                      hex64(p->meta.codec_fingerprint) + " / bridge " +
                                      hex64(p->meta.bridge_fingerprint) +
                                      ", not the loaded pair (--force to override)");

    fs::create_directories(out_dir);
    RunManifest m;
    m.command = "interpolate";
    m.seeds = {{"root", cfg.seed}};
    m.inputs = codec_refs(cfg);
    auto br = bridge_refs(cfg);
    m.inputs.insert(m.inputs.end(), br.begin(), br.end());
    m.inputs.push_back(file_ref(payload_a));
    m.inputs.push_back(file_ref(payload_b));
    for (size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
        const auto z = bridge::interpolate(pa.z, pb.z, t);
        const auto pc = bridge::decompress(bb.fd, cp.gen, z);
        char name[32];
        std::snprintf(name, sizeof name, "step_%03zu.pcl1", i);
        const std::string path = out_dir + "/" + name;
        geom::save_pcl(path, pc);
        m.outputs.push_back(file_ref(path));
    }
    m.metrics["steps"] = static_cast<double>(steps);
    m.metrics["d_c"] = static_cast<double>(pa.z.size());
    m.timings_ms["total_ms"] = sw.ms();
    return finish(std::move(m), cfg, out_dir);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const ProvenanceError*>(&e)) return 3;
    if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return 4;
    if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const IoError*>(&e)) return 5;
    return 1;
}

} // namespace sqz::cli
