#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sqz/nn/checkpoint.hpp"
#include "sqz/nn/svd.hpp"
#include "support/oracles.hpp"

#include <filesystem>

using namespace sqz;
using namespace sqz::nn;

namespace {

double reconstruction_error(const Tensor& a, const SvdResult& r) {
    const size_t m = a.rows(), n = a.cols(), p = r.sigma.size();
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < p; ++k) acc += r.u.at(i, k) * r.sigma[k] * r.v.at(j, k);
            const double d = acc - a.at(i, j);
            num += d * d;
            den += a.at(i, j) * a.at(i, j);
        }
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

double max_orthonormality_defect(const Tensor& q) {
    const size_t p = q.cols();
    double worst = 0.0;
    for (size_t i = 0; i < p; ++i) {
        for (size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (size_t r = 0; r < q.rows(); ++r) acc += q.at(r, i) * q.at(r, j);
            worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("svd of a diagonal matrix") {
    const Tensor a = Tensor::matrix(3, 3, {3, 0, 0, 0, 1, 0, 0, 0, 2});
    const SvdResult r = svd(a);
    REQUIRE(r.sigma.size() == 3);
    CHECK(r.sigma[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.sigma[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.sigma[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(reconstruction_error(a, r) < 1e-12);
}

TEST_CASE("svd reconstructs tall, wide and square matrices") {
    for (auto [m, n] : {std::pair<size_t, size_t>{7, 4}, {4, 7}, {5, 5}, {1, 6}, {6, 1}}) {
        const Tensor a = oracle::random_matrix(m, n, 1000 + m * 10 + n);
        const SvdResult r = svd(a);
        REQUIRE(r.sigma.size() == std::min(m, n));
        CHECK(reconstruction_error(a, r) < 1e-10);
        CHECK(max_orthonormality_defect(r.u) < 1e-10);
        CHECK(max_orthonormality_defect(r.v) < 1e-10);
        for (size_t i = 0; i + 1 < r.sigma.size(); ++i) {
            CHECK(r.sigma[i] >= r.sigma[i + 1]);
        }
        for (double s : r.sigma) CHECK(s >= 0.0);
    }
}

TEST_CASE("singular values match the eigensolver oracle on gram matrices") {
    const Tensor a = oracle::random_matrix(9, 5, 42);
    const SvdResult r = svd(a);

    const size_t n = a.cols();
    std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < a.rows(); ++k) s += a.at(k, i) * a.at(k, j);
            ata[i][j] = s;
        }
    }
    const auto eig = oracle::jacobi_eigensymm(ata);
    for (size_t i = 0; i < n; ++i) {
        CHECK(r.sigma[i] == doctest::Approx(std::sqrt(std::max(0.0, eig.values[i]))).epsilon(1e-9));
        // Right singular vectors agree up to sign.
        double dot_vi = 0.0;
        for (size_t k = 0; k < n; ++k) dot_vi += r.v.at(k, i) * eig.vecs[i][k];
        CHECK(std::abs(dot_vi) == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("rank-deficient input keeps an orthonormal basis") {
    // Third column is the sum of the first two: rank 2.
    Tensor a = Tensor::zeros({6, 3});
    const Tensor base = oracle::random_matrix(6, 2, 7);
    for (size_t r = 0; r < 6; ++r) {
        a.at(r, 0) = base.at(r, 0);
        a.at(r, 1) = base.at(r, 1);
        a.at(r, 2) = base.at(r, 0) + base.at(r, 1);
    }
    const SvdResult r = svd(a);
    CHECK(r.sigma[2] < 1e-10);
    CHECK(max_orthonormality_defect(r.u) < 1e-9);
    CHECK(max_orthonormality_defect(r.v) < 1e-9);
    CHECK(reconstruction_error(a, r) < 1e-10);

    // Exactly rank 1 (identical rows): the collapsed columns must deflate
    // rather than chase round-off residue across sweeps.
    Tensor flat = Tensor::zeros({6, 3});
    for (size_t i = 0; i < 6; ++i) {
        flat.at(i, 0) = 2.0;
        flat.at(i, 1) = -1.0;
        flat.at(i, 2) = 0.5;
    }
    const SvdResult r1 = svd(flat);
    CHECK(r1.sigma[0] == doctest::Approx(std::sqrt(6.0 * 5.25)).epsilon(1e-12));
    CHECK(r1.sigma[1] == 0.0);
    CHECK(r1.sigma[2] == 0.0);
    CHECK(max_orthonormality_defect(r1.u) < 1e-9);
}

TEST_CASE("svd input validation") {
    CHECK_THROWS_AS(svd(Tensor::vec({1, 2, 3})), ShapeError);
    Tensor bad = Tensor::matrix(2, 2, {1, 2, 3, std::nan("")});
    CHECK_THROWS_AS(svd(bad), NumericError);
}

TEST_CASE("checkpoint round-trip preserves structure and fingerprint") {
    std::vector<LayerSpec> specs = {
        LayerSpec::linear(5, 8),   LayerSpec::layernorm(8),       LayerSpec::gelu(8),
        LayerSpec::dropout(8, 0.2), LayerSpec::linear(8, 8),       LayerSpec::residual_add(8, 4),
        LayerSpec::linear(8, 3),
    };
    Network net(specs);
    net.init_params(321);

    const std::vector<uint8_t> bytes = serialize_network(net);
    Network back = deserialize_network(bytes);
    REQUIRE(back.layer_count() == net.layer_count());
    CHECK(back.in_dim() == 5);
    CHECK(back.out_dim() == 3);
    for (size_t i = 0; i < net.layer_count(); ++i) {
        CHECK(back.layers()[i].spec.kind == net.layers()[i].spec.kind);
        CHECK(back.layers()[i].spec.res_offset == net.layers()[i].spec.res_offset);
        CHECK(back.layers()[i].spec.dropout_rate ==
              doctest::Approx(net.layers()[i].spec.dropout_rate));
    }

    // Parameters survive at f32 precision and the fingerprint is stable.
    CHECK(network_fingerprint(back) == network_fingerprint(net));
    const Tensor x = oracle::random_matrix(3, 5, 55);
    const Tensor y1 = net.forward(x, Mode::Eval, 0);
    const Tensor y2 = back.forward(x, Mode::Eval, 0);
    for (size_t i = 0; i < y1.data.size(); ++i) {
        CHECK(y2.data[i] == doctest::Approx(y1.data[i]).epsilon(1e-5));
    }

    // Second round trip is exact: f32 quantization only happens once.
    Network back2 = deserialize_network(serialize_network(back));
    const Tensor y3 = back2.forward(x, Mode::Eval, 0);
    CHECK(y3.data == y2.data);
}

TEST_CASE("checkpoint file io and corruption detection") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "sqz_ckpt_test";
    fs::create_directories(dir);
    const std::string path = (dir / "net.sqzn").string();

    Network net({LayerSpec::linear(4, 4), LayerSpec::gelu(4)});
    net.init_params(9);
    save_checkpoint(net, path);
    Network back = load_checkpoint(path);
    CHECK(network_fingerprint(back) == network_fingerprint(net));

    std::vector<uint8_t> bytes = serialize_network(net);
    bytes[bytes.size() / 2] ^= 0xFF;
    CHECK_THROWS_AS(deserialize_network(bytes), FormatError);

    std::vector<uint8_t> truncated(bytes.begin(), bytes.begin() + 10);
    CHECK_THROWS_AS(deserialize_network(truncated), FormatError);
    fs::remove_all(dir);
}
