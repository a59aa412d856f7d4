#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "sqz/bridge/bridge.hpp"
#include "sqz/cli/commands.hpp"
#include "sqz/core/binio.hpp"
#include "sqz/core/error.hpp"
#include "sqz/core/hash.hpp"
#include "sqz/geom/metrics.hpp"
#include "sqz/geom/shapes.hpp"

using namespace sqz;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const char* name) {
    fs::path p = fs::temp_directory_path() / "sqz_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Small enough for seconds-scale training, big enough that every split is
// non-empty and both residual offsets appear in the reverse mapping.
cli::Config tiny_config(const fs::path& root) {
    cli::Config cfg;
    cfg.seed = 11;
    cfg.artifact_root = root.string();
    cfg.n_shapes = 20;
    cfg.n_points = 64;
    cfg.d_e = 16;
    cfg.d_g = 8;
    cfg.codec_epochs = 2;
    cfg.codec_batch_clouds = 4;
    cfg.n_pairs = 40;
    cfg.d_c = 4;
    cfg.hidden_forward = 16;
    cfg.hidden_reverse = 16;
    cfg.reverse_blocks = 4;
    cfg.bridge_epochs = 3;
    cfg.decay_epochs = 3;
    cfg.batch_size = 4;
    cfg.bits = 8;
    cfg.pointsim_k = 4;
    cfg.ablate_dc = {2, 4};
    cfg.ablate_lambda = {0.0, 0.1};
    return cfg;
}

json parse_file(const std::string& path) { return json::parse(read_text_file(path)); }

} // namespace

TEST_CASE("config serialization round-trips and rejects malformed input") {
    const auto dir = temp_dir("config");
    cli::Config cfg;
    cfg.seed = 42;
    cfg.d_c = 32;
    cfg.lambda_gram = 0.25;
    cfg.optimizer = "adam";
    cfg.ablate_dc = {8, 16};

    const std::string path = (dir / "cfg.json").string();
    write_text_file(path, cli::config_json(cfg));
    const auto back = cli::load_config(path);
    CHECK(cli::config_json(back) == cli::config_json(cfg));
    CHECK(cli::config_hash(back) == cli::config_hash(cfg));
    CHECK(back.d_c == 32);
    CHECK(back.optimizer == "adam");

    write_text_file(path, "{\"bridge\": {\"d_sea\": 4}}\n");
    CHECK_THROWS_WITH_AS(cli::load_config(path), doctest::Contains("d_sea"), ConfigError);
    write_text_file(path, "{\"seed\": \"zero\"}\n");
    CHECK_THROWS_AS(cli::load_config(path), ConfigError);
    write_text_file(path, "not json");
    CHECK_THROWS_AS(cli::load_config(path), ConfigError);
    write_text_file(path, "{\"payload\": {\"bits\": 12}}\n");
    CHECK_THROWS_AS(cli::load_config(path), ConfigError);
    write_text_file(path, "{\"bridge\": {\"optimizer\": \"sgd\"}}\n");
    CHECK_THROWS_AS(cli::load_config(path), ConfigError);
    CHECK_THROWS_AS(cli::load_config((dir / "missing.json").string()), IoError);

    // The checked-in default config parses and matches the built-in defaults.
    const auto toy = cli::load_config(std::string(SQZ_TEST_DIR) + "/../configs/toy.json");
    CHECK(toy.d_e == 256);
    CHECK(toy.d_c == 64);
    CHECK(toy.d_g == 128);
    CHECK(toy.n_pairs == 5000);
    CHECK(toy.lambda_gram == 0.1);
}

TEST_CASE("artifact root resolves from the environment override") {
    cli::Config cfg;
    cfg.artifact_root = "from_config";
    setenv("SQZ_ARTIFACT_ROOT", "from_env", 1);
    cli::apply_env_overrides(cfg);
    CHECK(cfg.artifact_root == "from_env");
    unsetenv("SQZ_ARTIFACT_ROOT");
    cfg.artifact_root = "from_config";
    cli::apply_env_overrides(cfg);
    CHECK(cfg.artifact_root == "from_config");
}

TEST_CASE("error taxonomy maps onto distinct exit codes") {
    CHECK(cli::exit_code_for(ConfigError("x")) == 2);
    CHECK(cli::exit_code_for(ProvenanceError("x")) == 3);
    CHECK(cli::exit_code_for(NumericError("x")) == 4);
    CHECK(cli::exit_code_for(ShapeError("x")) == 4);
    CHECK(cli::exit_code_for(FormatError("x")) == 5);
    CHECK(cli::exit_code_for(IoError("x")) == 5);
    CHECK(cli::exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("an eval split of 100 items holds out 10 for test") {
    const auto s = geom::split_80_10_10(100);
    CHECK(s.train == 80);
    CHECK(s.val == 10);
    CHECK(s.test == 10);
}

TEST_CASE("the pipeline runs end-to-end and its artifacts are reproducible") {
    const auto root = temp_dir("pipeline");
    const auto cfg = tiny_config(root);

    // gen-data
    auto m = cli::cmd_gen_data(cfg);
    CHECK(m.command == "gen-data");
    CHECK(m.outputs.size() == cfg.n_shapes + 1); // clouds + index.json
    for (const auto& out : m.outputs) CHECK(cli::file_fingerprint(out.path) == out.fingerprint);
    const json idx = parse_file(cli::data_dir(cfg) + "/index.json");
    CHECK(idx.at("split").at("train") == 16);
    CHECK(idx.at("split").at("val") == 2);
    CHECK(idx.at("split").at("test") == 2);
    const json man = parse_file(cli::data_dir(cfg) + ".manifest.json");
    CHECK(man.at("command") == "gen-data");
    CHECK(man.at("config_hash") == hex64(cli::config_hash(cfg)));
    CHECK(man.at("outputs").size() == cfg.n_shapes + 1);

    // Re-running overwrites with byte-identical artifacts and manifest.
    const auto cloud0 = read_file(cli::data_dir(cfg) + "/shape_00000.pcl1");
    const auto man_bytes = read_file(cli::data_dir(cfg) + ".manifest.json");
    cli::cmd_gen_data(cfg);
    CHECK(read_file(cli::data_dir(cfg) + "/shape_00000.pcl1") == cloud0);
    CHECK(read_file(cli::data_dir(cfg) + ".manifest.json") == man_bytes);

    // train-codecs
    m = cli::cmd_train_codecs(cfg);
    CHECK(fs::exists(cli::codec_dir(cfg) + "/meta.json"));
    CHECK(m.metrics.at("gen_val_chamfer") >= 0.0);
    const auto codec = codec::load_codec(cli::codec_dir(cfg));
    CHECK(codec.d_e() == cfg.d_e);
    CHECK(codec.d_g() == cfg.d_g);

    // gen-pairs
    m = cli::cmd_gen_pairs(cfg);
    const auto pairs = bridge::load_pairs(cli::pairs_path(cfg));
    CHECK(pairs.count() == cfg.n_pairs);
    CHECK(pairs.codec_fingerprint == codec::codec_fingerprint(codec));

    // train-bridge
    m = cli::cmd_train_bridge(cfg);
    CHECK(std::isfinite(m.metrics.at("best_val_total")));
    CHECK(m.metrics.at("diverged") == 0.0);
    CHECK(m.metrics.at("batch_size") == 4.0); // clamped to d_c
    const auto log_text = read_text_file(cli::bridge_dir(cfg) + "/train_log.csv");
    CHECK(std::count(log_text.begin(), log_text.end(), '\n') ==
          static_cast<long>(cfg.bridge_epochs) + 1);
    const auto bundle = bridge::load_bridge(cli::bridge_dir(cfg));
    CHECK(bundle.d_c() == cfg.d_c);
    CHECK(bundle.codec_fingerprint == codec::codec_fingerprint(codec));

    // compress / decompress on a held-out shape
    const size_t test0 = 18; // first test-split index for n=20
    const std::string cloud_in = cli::data_dir(cfg) + "/shape_00018.pcl1";
    const std::string pay_a = (root / "a.sqz3").string();
    m = cli::cmd_compress(cfg, cloud_in, pay_a, false);
    CHECK(m.metrics.at("points") == 64.0);
    CHECK(m.metrics.at("d_c") == 4.0);
    CHECK(m.metrics.at("cr_body") > 1.0);
    CHECK(fs::exists(pay_a + ".manifest.json"));

    const std::string cloud_out = (root / "a_rec.xyz").string();
    m = cli::cmd_decompress(cfg, pay_a, cloud_out, false);
    const auto rec = geom::load_cloud(cloud_out);
    CHECK(rec.count() == cfg.n_points);
    const auto orig = geom::load_cloud(cloud_in);
    CHECK(std::isfinite(geom::chamfer(rec, orig)));

    // byte-identical payload on a re-run
    const auto pay_bytes = read_file(pay_a);
    cli::cmd_compress(cfg, cloud_in, pay_a, false);
    CHECK(read_file(pay_a) == pay_bytes);

    // eval over the 2-item test split
    m = cli::cmd_eval(cfg);
    CHECK(m.metrics.at("n_test") == 2.0);
    CHECK(m.metrics.at("chamfer_mean") > 0.0);
    CHECK(m.metrics.at("pointsim_mean") > 0.0);
    CHECK(m.metrics.at("pointsim_mean") <= 1.0);
    CHECK(m.metrics.at("ceiling_ratio") > 0.0);
    const auto items = read_text_file(cfg.artifact_root + "/eval/items.csv");
    CHECK(std::count(items.begin(), items.end(), '\n') == 3); // header + 2 rows
    CHECK(parse_file(cfg.artifact_root + "/eval/metrics.json").contains("chamfer_mean"));

    // analyze
    m = cli::cmd_analyze(cfg);
    CHECK(m.metrics.at("b") == 2.0);
    CHECK(m.metrics.at("d_c") == 4.0);
    CHECK(m.metrics.at("d_eff") >= 1.0);
    CHECK(m.metrics.at("d_eff") <= 2.0 + 1e-12); // rank capped by the 2-row batch
    const json spec = parse_file(cfg.artifact_root + "/analysis/spectrum.json");
    CHECK(spec.at("sigma").size() == 2);

    // interpolate between two payloads; endpoints must match direct decode
    const std::string pay_b = (root / "b.sqz3").string();
    cli::cmd_compress(cfg, cli::data_dir(cfg) + "/shape_00019.pcl1", pay_b, false);
    const std::string walk = (root / "walk").string();
    m = cli::cmd_interpolate(cfg, pay_a, pay_b, 3, walk, false);
    CHECK(m.outputs.size() == 3);
    const std::string direct_a = (root / "direct_a.pcl1").string();
    cli::cmd_decompress(cfg, pay_a, direct_a, false);
    CHECK(read_file(walk + "/step_000.pcl1") == read_file(direct_a));
    const auto mid = geom::load_pcl(walk + "/step_001.pcl1");
    CHECK(mid.all_finite());
    CHECK_THROWS_AS(cli::cmd_interpolate(cfg, pay_a, pay_b, 1, walk, false), ConfigError);

    // provenance: a bundle claiming a different codec is rejected, force wins
    const std::string meta_path = cli::bridge_dir(cfg) + "/meta.json";
    json meta = parse_file(meta_path);
    const std::string good_meta = read_text_file(meta_path);
    meta["codec_fingerprint"] = "0xdeadbeefdeadbeef";
    write_text_file(meta_path, meta.dump(2) + "\n");
    CHECK_THROWS_AS(cli::cmd_compress(cfg, cloud_in, pay_a, false), ProvenanceError);
    CHECK_THROWS_AS(cli::cmd_eval(cfg), ProvenanceError);
    cli::cmd_compress(cfg, cloud_in, pay_a, true); // --force
    write_text_file(meta_path, good_meta);

    // a payload from a different bridge is rejected on decompress
    auto forged = read_file(pay_b);
    // bridge fingerprint field lives at bytes 28..35; flip one bit and re-seal
    forged[28] ^= 0x01;
    {
        const uint32_t crc = Crc32::of(forged.data(), forged.size() - 4);
        forged[forged.size() - 4] = static_cast<uint8_t>(crc);
        forged[forged.size() - 3] = static_cast<uint8_t>(crc >> 8);
        forged[forged.size() - 2] = static_cast<uint8_t>(crc >> 16);
        forged[forged.size() - 1] = static_cast<uint8_t>(crc >> 24);
    }
    const std::string pay_forged = (root / "forged.sqz3").string();
    write_file(pay_forged, forged);
    CHECK_THROWS_AS(cli::cmd_decompress(cfg, pay_forged, cloud_out, false), ProvenanceError);
    cli::cmd_decompress(cfg, pay_forged, cloud_out, true); // --force

    (void)test0;
}

TEST_CASE("ablate sweeps both axes into one ordered csv") {
    const auto root = temp_dir("ablate");
    auto cfg = tiny_config(root);
    cfg.bridge_epochs = 2;
    cfg.decay_epochs = 2;
    cli::cmd_gen_data(cfg);
    cli::cmd_train_codecs(cfg);
    cli::cmd_gen_pairs(cfg);

    const auto m = cli::cmd_ablate(cfg);
    CHECK(m.metrics.at("points") == 4.0); // 2 d_c values + 2 lambda values
    const auto csv = read_text_file(cfg.artifact_root + "/ablate/sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.find("axis,value,d_c,lambda_gram") == 0);
    CHECK(csv.find("\nd_c,2,2,") != std::string::npos);
    CHECK(csv.find("\nd_c,4,4,") != std::string::npos);
    CHECK(csv.find("\nlambda_gram,0,4,0,4,") != std::string::npos);
    CHECK(csv.find("\nlambda_gram,0.1") != std::string::npos);

    // the sweep is a pure function of config + artifacts
    const auto bytes = read_file(cfg.artifact_root + "/ablate/sweep.csv");
    cli::cmd_ablate(cfg);
    CHECK(read_file(cfg.artifact_root + "/ablate/sweep.csv") == bytes);
}
