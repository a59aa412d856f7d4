#pragma once

#include <cstdint>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include "sqz/bridge/bridge.hpp"
#include "sqz/codec/codec.hpp"

namespace sqz::cli {

// One run configuration for the whole pipeline. Every field has a working
// default; a JSON config file may override any subset, and CLI flags map
// 1:1 onto the same keys (flags win). All randomness flows from `seed`
// through named sub-streams (data/codec/pairs/bridge), so each stage can be
// reproduced on its own.
struct Config {
    uint64_t seed = 0;
    std::string artifact_root = "artifacts";

    // data
    size_t n_shapes = 1000;
    size_t n_points = 2048;

    // codec
    size_t d_e = 256;
    size_t d_g = 128;
    size_t codec_epochs = 8;
    size_t codec_batch_clouds = 8;
    double codec_lr = 1e-3;

    // pairs
    size_t n_pairs = 5000;

    // bridge
    size_t d_c = 64;
    size_t hidden_forward = 256;
    size_t hidden_reverse = 128;
    size_t reverse_blocks = 6;
    double lambda_gram = 0.1;
    double lambda_gen = 1.0;
    std::string optimizer = "muon"; // or "adam"
    double lr_init = 1e-3;
    double lr_final = 1e-5;
    size_t bridge_epochs = 30;
    size_t decay_epochs = 30;
    size_t batch_size = 64;
    double dropout = 0.1;

    // payload
    int bits = 16;
    bool entropy = true;

    // eval / analyze
    size_t pointsim_k = 8;

    // ablate sweeps (two 1-D sweeps off the defaults above)
    std::vector<size_t> ablate_dc = {32, 64, 128, 256};
    std::vector<double> ablate_lambda = {0.0, 0.01, 0.1, 1.0};
};

/// Parses a JSON config file. Unknown keys and wrong value types raise
/// ConfigError (typos should not silently fall back to defaults).
Config load_config(const std::string& path);

/// Canonical JSON rendering of a config (keys sorted, stable formatting).
/// config_hash is the FNV-1a hash of exactly this string.
std::string config_json(const Config& cfg);
uint64_t config_hash(const Config& cfg);

/// Applies the SQZ_ARTIFACT_ROOT environment override, if set. Called by the
/// CLI entry point after the file is loaded and before flags are applied.
void apply_env_overrides(Config& cfg);

// Standard artifact locations under cfg.artifact_root.
std::string data_dir(const Config& cfg);
std::string codec_dir(const Config& cfg);
std::string pairs_path(const Config& cfg);
std::string bridge_dir(const Config& cfg);

struct ArtifactRef {
    std::string path;
    uint64_t fingerprint = 0; // FNV-1a over the file bytes
};

// Deterministic record of one command run. Timings are kept out of the
// manifest file proper (<base>.manifest.json) and written to a sibling
// <base>.timings.json so re-runs produce byte-identical manifests.
struct RunManifest {
    std::string command;
    uint64_t config_hash = 0;
    std::map<std::string, uint64_t> seeds;
    std::vector<ArtifactRef> inputs;
    std::vector<ArtifactRef> outputs;
    std::map<std::string, double> metrics;
    std::map<std::string, double> timings_ms; // clamped non-negative
};

/// Writes <base>.manifest.json and <base>.timings.json.
void write_manifest(const RunManifest& m, const std::string& base);

/// FNV-1a fingerprint of a file on disk (IoError if unreadable).
uint64_t file_fingerprint(const std::string& path);

/// Samples, normalizes and stores the shape dataset under data_dir(cfg):
/// shape_%05u.pcl1 plus index.json (count, points, seed, split sizes).
RunManifest cmd_gen_data(const Config& cfg);

/// Trains the two autoencoders on the stored dataset and saves the frozen
/// codec pair under codec_dir(cfg).
RunManifest cmd_train_codecs(const Config& cfg);

/// Generates the synthetic (z_E, z_G) supervision set from the frozen codec
/// and writes it to pairs_path(cfg).
RunManifest cmd_gen_pairs(const Config& cfg);

/// Trains the forward/reverse mappings on the stored pairs and saves the
/// bundle under bridge_dir(cfg). Also re-hashes the codec afterwards and
/// fails hard if the frozen endpoints changed during training.
RunManifest cmd_train_bridge(const Config& cfg);

/// Cloud file -> payload file through the frozen encoder and the forward
/// mapping. The input is normalized first. A codec/bridge fingerprint
/// mismatch is a hard error unless force.
RunManifest cmd_compress(const Config& cfg, const std::string& cloud_path,
                         const std::string& payload_out, bool force = false);

/// Payload file -> cloud file through the reverse mapping and the frozen
/// generator. Fingerprint mismatches are hard errors unless force.
RunManifest cmd_decompress(const Config& cfg, const std::string& payload_path,
                           const std::string& cloud_out, bool force = false);

/// Compress+decompress every test-split shape; writes per-item rows to
/// eval/items.csv and summary mean/std metrics to eval/metrics.json.
/// Also reports the generator-side autoencoder's own round-trip quality
/// (the ceiling the bridge is judged against).
RunManifest cmd_eval(const Config& cfg, bool force = false);

/// Spectrum diagnostics of the compressed latents over a held-out batch:
/// analysis/spectrum.json + analysis/sigma.csv.
RunManifest cmd_analyze(const Config& cfg, bool force = false);

/// Two 1-D sweeps off the default config (d_c axis, lambda_gram axis) into
/// one combined ablate/sweep.csv. Reuses the stored codec and pairs; only
/// the bridge is retrained per point.
RunManifest cmd_ablate(const Config& cfg);

/// Decodes payloads A and B, walks t over `steps` evenly spaced values in
/// [0, 1], and writes one decompressed cloud per step to out_dir.
RunManifest cmd_interpolate(const Config& cfg, const std::string& payload_a,
                            const std::string& payload_b, size_t steps,
                            const std::string& out_dir, bool force = false);

// Process exit codes: 0 success, 2 config, 3 provenance, 4 numeric/shape,
// 5 format/io, 1 anything else.
int exit_code_for(const std::exception& e);

} // namespace sqz::cli
