#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sqz/cli/commands.hpp"

using sqz::cli::Config;
using sqz::cli::RunManifest;

namespace {

void print_result(const RunManifest& m) {
    std::printf("%s: ok\n", m.command.c_str());
    for (const auto& [k, v] : m.metrics) std::printf("  %-22s %.6g\n", k.c_str(), v);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"point-cloud compression through bridged frozen latent spaces"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path,
                   "JSON config file; omitted keys keep their defaults");

    // Locals receive parsed flag values; appliers copy only the flags the
    // user actually passed onto the file/default config (flags win).
    Config fl;
    std::vector<std::function<void(Config&)>> appliers;
    auto bind = [&](const std::string& name, auto& local, auto member, const std::string& help) {
        auto* o = app.add_option(name, local, help);
        appliers.push_back([o, &local, member](Config& c) {
            if (o->count() > 0) c.*member = local;
        });
    };
    bind("--seed", fl.seed, &Config::seed, "root seed for all derived streams");
    bind("--artifact-root", fl.artifact_root, &Config::artifact_root,
         "artifact directory (SQZ_ARTIFACT_ROOT overrides the config file)");
    bind("--n-shapes", fl.n_shapes, &Config::n_shapes, "dataset size");
    bind("--n-points", fl.n_points, &Config::n_points, "points per cloud");
    bind("--d-e", fl.d_e, &Config::d_e, "encoder-side latent width");
    bind("--d-g", fl.d_g, &Config::d_g, "generator-side latent width");
    bind("--codec-epochs", fl.codec_epochs, &Config::codec_epochs, "autoencoder epochs");
    bind("--codec-lr", fl.codec_lr, &Config::codec_lr, "autoencoder learning rate");
    bind("--pairs", fl.n_pairs, &Config::n_pairs, "synthetic supervision pairs");
    bind("--d-c", fl.d_c, &Config::d_c, "compressed latent width");
    bind("--lambda-gram", fl.lambda_gram, &Config::lambda_gram, "orthonormality weight");
    bind("--lambda-gen", fl.lambda_gen, &Config::lambda_gen, "reconstruction weight");
    bind("--optimizer", fl.optimizer, &Config::optimizer, "bridge optimizer: muon or adam");
    bind("--lr-init", fl.lr_init, &Config::lr_init, "bridge initial learning rate");
    bind("--lr-final", fl.lr_final, &Config::lr_final, "bridge final learning rate");
    bind("--epochs", fl.bridge_epochs, &Config::bridge_epochs, "bridge training epochs");
    bind("--decay-epochs", fl.decay_epochs, &Config::decay_epochs, "linear lr decay span");
    bind("--batch-size", fl.batch_size, &Config::batch_size, "bridge batch size");
    bind("--dropout", fl.dropout, &Config::dropout, "mapping-network dropout rate");
    bind("--bits", fl.bits, &Config::bits, "quantization width: 8 or 16");
    bind("--pointsim-k", fl.pointsim_k, &Config::pointsim_k, "neighborhood size for pointsim");
    auto* entropy_opt = app.add_flag("--entropy,!--no-entropy", fl.entropy,
                                     "try entropy coding the payload body");
    appliers.push_back([&, entropy_opt](Config& c) {
        if (entropy_opt->count() > 0) c.entropy = fl.entropy;
    });

    bool force = false;
    std::string in_a, in_b, out_path;
    size_t steps = 5;

    auto* c_gen_data = app.add_subcommand("gen-data", "sample and store the shape dataset");
    auto* c_train_codecs =
        app.add_subcommand("train-codecs", "train the two frozen autoencoders");
    auto* c_gen_pairs =
        app.add_subcommand("gen-pairs", "generate the paired latent supervision set");
    auto* c_train_bridge =
        app.add_subcommand("train-bridge", "train the forward/reverse mappings");
    auto* c_compress = app.add_subcommand("compress", "cloud file -> payload file");
    c_compress->add_option("input", in_a, "point cloud (.pcl1 or text xyz)")->required();
    c_compress->add_option("output", out_path, "payload file to write")->required();
    auto* c_decompress = app.add_subcommand("decompress", "payload file -> cloud file");
    c_decompress->add_option("input", in_a, "payload file")->required();
    c_decompress->add_option("output", out_path, "cloud file to write")->required();
    auto* c_eval = app.add_subcommand("eval", "end-to-end metrics over the test split");
    auto* c_analyze = app.add_subcommand("analyze", "spectrum diagnostics of z_comp");
    auto* c_ablate = app.add_subcommand("ablate", "sweep d_c and lambda_gram");
    auto* c_interp = app.add_subcommand("interpolate", "decode a latent walk between payloads");
    c_interp->add_option("a", in_a, "payload at t=0")->required();
    c_interp->add_option("b", in_b, "payload at t=1")->required();
    c_interp->add_option("output", out_path, "directory for the step clouds")->required();
    c_interp->add_option("--steps", steps, "number of evenly spaced t values (>= 2)");

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
        sub->add_flag("--force", force, "proceed past fingerprint mismatches");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // bad flags are config errors
    }

    try {
        Config cfg = config_path.empty() ? Config{} : sqz::cli::load_config(config_path);
        sqz::cli::apply_env_overrides(cfg);
        for (const auto& apply : appliers) apply(cfg);

        RunManifest m;
        if (app.got_subcommand(c_gen_data)) m = sqz::cli::cmd_gen_data(cfg);
        else if (app.got_subcommand(c_train_codecs)) m = sqz::cli::cmd_train_codecs(cfg);
        else if (app.got_subcommand(c_gen_pairs)) m = sqz::cli::cmd_gen_pairs(cfg);
        else if (app.got_subcommand(c_train_bridge)) m = sqz::cli::cmd_train_bridge(cfg);
        else if (app.got_subcommand(c_compress)) m = sqz::cli::cmd_compress(cfg, in_a, out_path, force);
        else if (app.got_subcommand(c_decompress)) m = sqz::cli::cmd_decompress(cfg, in_a, out_path, force);
        else if (app.got_subcommand(c_eval)) m = sqz::cli::cmd_eval(cfg, force);
        else if (app.got_subcommand(c_analyze)) m = sqz::cli::cmd_analyze(cfg, force);
        else if (app.got_subcommand(c_ablate)) m = sqz::cli::cmd_ablate(cfg);
        else if (app.got_subcommand(c_interp))
            m = sqz::cli::cmd_interpolate(cfg, in_a, in_b, steps, out_path, force);
        print_result(m);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return sqz::cli::exit_code_for(e);
    }
}
