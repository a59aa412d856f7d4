#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sqz/core/rng.hpp"
#include "sqz/nn/kernels.hpp"
#include "sqz/nn/net.hpp"
#include "support/oracles.hpp"

using namespace sqz;
using namespace sqz::nn;

namespace {

// Loss used by every gradient check: a fixed linear functional sum(c .* y),
// whose upstream gradient is exactly c. Finite differences of the loss then
// probe the full chain rule through the network.
double linear_loss(const Tensor& y, const Tensor& c) {
    REQUIRE(y.same_shape(c));
    return dot(y, c);
}

Tensor random_like(const std::vector<size_t>& shape, uint64_t seed) {
    Rng rng(seed);
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.data) v = rng.normal();
    return t;
}

// Worst relative mismatch between the analytic gradient of sum(c .* net(x))
// with respect to `probe` and its central-difference estimate.
double gradcheck(Network& net, Tensor* probe, const Tensor& x, const Tensor& c, uint64_t fwd_seed) {
    ForwardCache cache;
    net.forward(x, Mode::Train, fwd_seed, &cache);
    Grads g = net.backward(cache, c);

    const Tensor* analytic = nullptr;
    if (probe == nullptr) {
        analytic = &g.input;
    } else {
        for (size_t i = 0; i < net.layer_count(); ++i) {
            if (&net.layer(i).w == probe) analytic = &g.w[i];
            if (&net.layer(i).b == probe) analytic = &g.b[i];
        }
    }
    REQUIRE(analytic != nullptr);

    auto f = [&](const std::vector<double>& vals) {
        if (probe == nullptr) {
            Tensor xp = x;
            xp.data = vals;
            return linear_loss(net.forward(xp, Mode::Train, fwd_seed), c);
        }
        std::vector<double> saved = probe->data;
        probe->data = vals;
        const double out = linear_loss(net.forward(x, Mode::Train, fwd_seed), c);
        probe->data = saved;
        return out;
    };
    const std::vector<double>& x0 = probe ? probe->data : cache.input.data;
    return oracle::max_grad_mismatch(x0, analytic->data, f);
}

} // namespace

TEST_CASE("tensor shape validation") {
    CHECK_THROWS_AS(Tensor::matrix(2, 3, {1.0}), ShapeError);
    Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    Tensor b = Tensor::vec({1, 2});
    CHECK_THROWS_AS(a + b, ShapeError);
    CHECK(a.at(1, 0) == 3.0);
}

TEST_CASE("tensor finite checks") {
    Tensor a = Tensor::vec({1.0, std::nan(""), 2.0});
    CHECK_FALSE(a.all_finite());
    CHECK_THROWS_AS(a.require_finite("unit"), NumericError);
}

TEST_CASE("linear layer forward matches hand computation") {
    Network net({LayerSpec::linear(2, 2)});
    net.layer(0).w = Tensor::matrix(2, 2, {1, 2, 3, 4}); // row i = output unit i
    net.layer(0).b = Tensor::vec({10, 20});
    const Tensor y = net.forward(Tensor::vec({1, 1}), Mode::Eval, 0);
    CHECK(y.data[0] == doctest::Approx(13.0)); // 1+2+10
    CHECK(y.data[1] == doctest::Approx(27.0)); // 3+4+20
}

TEST_CASE("gelu values against the error function") {
    auto ref = [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); };
    Network net({LayerSpec::gelu(1)});
    for (double x : {-3.0, -1.0, -0.1, 0.0, 0.5, 1.0, 4.0}) {
        const Tensor y = net.forward(Tensor::vec({x}), Mode::Eval, 0);
        CHECK(y.data[0] == doctest::Approx(ref(x)).epsilon(1e-12));
    }
}

TEST_CASE("layernorm normalizes each row") {
    Network net({LayerSpec::layernorm(8)});
    net.init_params(1);
    const Tensor x = random_like({4, 8}, 99);
    const Tensor y = net.forward(x, Mode::Eval, 0);
    for (size_t r = 0; r < 4; ++r) {
        double mean = 0.0, var = 0.0;
        for (size_t c = 0; c < 8; ++c) mean += y.at(r, c);
        mean /= 8;
        for (size_t c = 0; c < 8; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
        var /= 8;
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3)); // eps in denominator
    }
}

TEST_CASE("dropout: eval identity, train scaled mask, seed determinism") {
    Network net({LayerSpec::dropout(16, 0.25)});
    const Tensor x = random_like({8, 16}, 5);

    const Tensor ye = net.forward(x, Mode::Eval, 123);
    CHECK(ye.data == x.data);

    const Tensor yt = net.forward(x, Mode::Train, 123);
    size_t zeros = 0;
    for (size_t i = 0; i < yt.data.size(); ++i) {
        if (yt.data[i] == 0.0) {
            ++zeros;
        } else {
            CHECK(yt.data[i] == doctest::Approx(x.data[i] / 0.75).epsilon(1e-12));
        }
    }
    CHECK(zeros > 8);  // rate 0.25 over 128 elements
    CHECK(zeros < 56);

    const Tensor yt2 = net.forward(x, Mode::Train, 123);
    CHECK(yt.data == yt2.data);
    const Tensor yt3 = net.forward(x, Mode::Train, 124);
    CHECK(yt.data != yt3.data);
}

TEST_CASE("residual add: output adds the referenced activation") {
    // x -> linear -> gelu -> add(x)
    Network net({LayerSpec::linear(3, 3), LayerSpec::gelu(3), LayerSpec::residual_add(3, 3)});
    net.init_params(7);
    const Tensor x = random_like({2, 3}, 11);
    const Tensor y = net.forward(x, Mode::Eval, 0);

    Network body({LayerSpec::linear(3, 3), LayerSpec::gelu(3)});
    body.layer(0).w = net.layer(0).w;
    body.layer(0).b = net.layer(0).b;
    const Tensor body_y = body.forward(x, Mode::Eval, 0);
    for (size_t i = 0; i < y.data.size(); ++i) {
        CHECK(y.data[i] == doctest::Approx(body_y.data[i] + x.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("chain validation rejects bad wiring") {
    CHECK_THROWS_AS(Network({LayerSpec::linear(3, 4), LayerSpec::gelu(5)}), ShapeError);
    CHECK_THROWS_AS(Network({LayerSpec::residual_add(3, 2)}), ShapeError);
    CHECK_THROWS_AS(Network({LayerSpec::linear(4, 8), LayerSpec::residual_add(8, 2)}), ShapeError);
    CHECK_THROWS_AS(Network({LayerSpec::dropout(3, 1.0)}), ShapeError);
    CHECK_THROWS_AS(Network(std::vector<LayerSpec>{}), ShapeError);
}

TEST_CASE("row independence: batch forward equals per-row forward") {
    Network net({LayerSpec::linear(4, 6), LayerSpec::layernorm(6), LayerSpec::gelu(6),
                 LayerSpec::linear(6, 2)});
    net.init_params(3);
    const Tensor x = random_like({5, 4}, 21);
    const Tensor y = net.forward(x, Mode::Eval, 0);
    for (size_t r = 0; r < 5; ++r) {
        Tensor row = Tensor::vec({x.at(r, 0), x.at(r, 1), x.at(r, 2), x.at(r, 3)});
        const Tensor yr = net.forward(row, Mode::Eval, 0);
        for (size_t c = 0; c < 2; ++c) CHECK(yr.data[c] == y.at(r, c));
    }
}

TEST_CASE("gradients match finite differences: plain mlp") {
    Network net({LayerSpec::linear(5, 7), LayerSpec::gelu(7), LayerSpec::linear(7, 4)});
    net.init_params(17);
    const Tensor x = random_like({3, 5}, 31);
    const Tensor c = random_like({3, 4}, 32);
    CHECK(gradcheck(net, nullptr, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(0).w, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(0).b, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(2).w, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(2).b, x, c, 0) < 1e-6);
}

TEST_CASE("gradients match finite differences: layernorm") {
    Network net({LayerSpec::linear(4, 6), LayerSpec::layernorm(6), LayerSpec::linear(6, 3)});
    net.init_params(5);
    // Non-unit gains and biases exercise every layernorm term.
    Rng rng(77);
    for (double& v : net.layer(1).w.data) v = 0.5 + rng.uniform();
    for (double& v : net.layer(1).b.data) v = rng.normal();
    const Tensor x = random_like({3, 4}, 41);
    const Tensor c = random_like({3, 3}, 42);
    CHECK(gradcheck(net, nullptr, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(1).w, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(1).b, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(0).w, x, c, 0) < 1e-6);
}

TEST_CASE("gradients match finite differences: dropout (fixed mask)") {
    Network net({LayerSpec::linear(4, 8), LayerSpec::dropout(8, 0.3), LayerSpec::linear(8, 2)});
    net.init_params(9);
    const Tensor x = random_like({4, 4}, 51);
    const Tensor c = random_like({4, 2}, 52);
    // The mask depends only on the forward seed, so finite differences see a
    // fixed subnetwork.
    CHECK(gradcheck(net, nullptr, x, c, 1234) < 1e-6);
    CHECK(gradcheck(net, &net.layer(0).w, x, c, 1234) < 1e-6);
    CHECK(gradcheck(net, &net.layer(2).w, x, c, 1234) < 1e-6);
}

TEST_CASE("gradients match finite differences: residual to input and mid-chain") {
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::linear(6, 6));   // 0
    specs.push_back(LayerSpec::layernorm(6));   // 1
    specs.push_back(LayerSpec::gelu(6));        // 2
    specs.push_back(LayerSpec::linear(6, 6));   // 3
    specs.push_back(LayerSpec::residual_add(6, 4)); // 4: adds output of layer 0
    specs.push_back(LayerSpec::gelu(6));        // 5
    specs.push_back(LayerSpec::residual_add(6, 7)); // 6: adds the network input
    specs.push_back(LayerSpec::linear(6, 2));   // 7
    Network net(specs);
    net.init_params(13);
    const Tensor x = random_like({3, 6}, 61);
    const Tensor c = random_like({3, 2}, 62);
    CHECK(gradcheck(net, nullptr, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(0).w, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(3).w, x, c, 0) < 1e-6);
    CHECK(gradcheck(net, &net.layer(7).w, x, c, 0) < 1e-6);
}

TEST_CASE("backward rejects stale or wrong caches") {
    Network net({LayerSpec::linear(3, 3)});
    net.init_params(1);
    const Tensor x = random_like({2, 3}, 71);
    const Tensor c = random_like({2, 3}, 72);

    ForwardCache eval_cache;
    net.forward(x, Mode::Eval, 0, &eval_cache);
    CHECK_THROWS_AS(net.backward(eval_cache, c), ShapeError);

    ForwardCache cache;
    net.forward(x, Mode::Train, 0, &cache);
    net.bump_revision();
    CHECK_THROWS_AS(net.backward(cache, c), ShapeError);

    Network other({LayerSpec::linear(3, 3)});
    other.init_params(2);
    ForwardCache cache2;
    net.forward(x, Mode::Train, 0, &cache2);
    CHECK_THROWS_AS(other.backward(cache2, c), ShapeError);
}

TEST_CASE("init_params: fan-in bound, zero bias, seed determinism") {
    Network a({LayerSpec::linear(24, 8)});
    a.init_params(100);
    const double bound = std::sqrt(6.0 / 24.0);
    double maxabs = 0.0;
    for (double v : a.layer(0).w.data) maxabs = std::max(maxabs, std::abs(v));
    CHECK(maxabs <= bound);
    CHECK(maxabs > 0.8 * bound); // 192 samples should get close to the bound
    for (double v : a.layer(0).b.data) CHECK(v == 0.0);

    Network b({LayerSpec::linear(24, 8)});
    b.init_params(100);
    CHECK(a.layer(0).w.data == b.layer(0).w.data);
    Network c({LayerSpec::linear(24, 8)});
    c.init_params(101);
    CHECK(a.layer(0).w.data != c.layer(0).w.data);
}

TEST_CASE("parallel kernels are bit-identical to serial references") {
    const size_t b = 33, k = 17, n = 29;
    const Tensor x = random_like({b, k}, 81);
    const Tensor w = random_like({n, k}, 82);
    const Tensor g = random_like({b, n}, 83);

    Tensor y1 = Tensor::zeros({b, n}), y2 = Tensor::zeros({b, n});
    gemm_nt(x.data.data(), w.data.data(), y1.data.data(), b, k, n);
    gemm_nt_serial(x.data.data(), w.data.data(), y2.data.data(), b, k, n);
    CHECK(y1.data == y2.data);

    Tensor z1 = Tensor::zeros({b, k}), z2 = Tensor::zeros({b, k});
    gemm_nn(g.data.data(), w.data.data(), z1.data.data(), b, n, k);
    gemm_nn_serial(g.data.data(), w.data.data(), z2.data.data(), b, n, k);
    CHECK(z1.data == z2.data);

    Tensor t1 = Tensor::zeros({n, k}), t2 = Tensor::zeros({n, k});
    gemm_tn(g.data.data(), x.data.data(), t1.data.data(), b, n, k);
    gemm_tn_serial(g.data.data(), x.data.data(), t2.data.data(), b, n, k);
    CHECK(t1.data == t2.data);

    const Tensor pa = random_like({40, 3}, 84);
    const Tensor pb = random_like({37, 3}, 85);
    std::vector<double> d1(40), d2(40);
    nearest_sqdist(pa.data.data(), 40, pb.data.data(), 37, d1.data());
    nearest_sqdist_serial(pa.data.data(), 40, pb.data.data(), 37, d2.data());
    CHECK(d1 == d2);
}

TEST_CASE("gemm_nt against a hand-rolled triple loop") {
    const size_t b = 4, k = 5, n = 3;
    const Tensor x = random_like({b, k}, 91);
    const Tensor w = random_like({n, k}, 92);
    Tensor y = Tensor::zeros({b, n});
    gemm_nt(x.data.data(), w.data.data(), y.data.data(), b, k, n);
    for (size_t i = 0; i < b; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (size_t kk = 0; kk < k; ++kk) acc += x.at(i, kk) * w.at(j, kk);
            CHECK(y.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("grad accumulation and scaling") {
    Network net({LayerSpec::linear(3, 2)});
    net.init_params(1);
    const Tensor x = random_like({2, 3}, 95);
    const Tensor c = random_like({2, 2}, 96);
    ForwardCache cache;
    net.forward(x, Mode::Train, 0, &cache);
    Grads g = net.backward(cache, c);

    Grads acc;
    accumulate_grads(acc, g);
    accumulate_grads(acc, g);
    scale_grads(acc, 0.5);
    for (size_t i = 0; i < g.w[0].data.size(); ++i) {
        CHECK(acc.w[0].data[i] == doctest::Approx(g.w[0].data[i]).epsilon(1e-12));
    }
}
