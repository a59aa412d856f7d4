#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sqz/core/rng.hpp"
#include "sqz/nn/optim.hpp"
#include "support/oracles.hpp"

using namespace sqz;
using namespace sqz::nn;

namespace {

std::vector<Tensor*> ptrs(Tensor& t) { return {&t}; }
std::vector<const Tensor*> cptrs(const Tensor& t) { return {&t}; }

// Singular values via the test-side eigensolver on A^T A.
std::vector<double> oracle_singular_values(const Tensor& a) {
    const size_t n = a.cols();
    std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (size_t r = 0; r < a.rows(); ++r) s += a.at(r, i) * a.at(r, j);
            ata[i][j] = s;
        }
    }
    auto eig = oracle::jacobi_eigensymm(ata);
    std::vector<double> sv;
    for (double l : eig.values) sv.push_back(std::sqrt(std::max(0.0, l)));
    return sv;
}

} // namespace

TEST_CASE("adam first step matches the closed form") {
    Tensor p = Tensor::vec({1.0, -2.0, 0.5});
    Tensor g = Tensor::vec({0.3, -0.7, 0.0});
    auto params = ptrs(p);
    OptimizerState st = make_adam(cptrs(p));
    const double lr = 0.01;
    adam_step(params, {g}, st, lr);
    // After one step m-hat = g and v-hat = g^2, so the update is
    // lr * g / (|g| + eps): a signed step of (almost) exactly lr.
    CHECK(p.data[0] == doctest::Approx(1.0 - lr * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
    CHECK(p.data[1] == doctest::Approx(-2.0 + lr * 0.7 / (0.7 + 1e-8)).epsilon(1e-12));
    CHECK(p.data[2] == doctest::Approx(0.5).epsilon(1e-15)); // zero grad, zero move
    CHECK(st.step == 1);
}

TEST_CASE("adam three steps match a scalar reference implementation") {
    Tensor p = Tensor::vec({2.0});
    auto params = ptrs(p);
    OptimizerState st = make_adam(cptrs(p));
    const double lr = 0.05;
    const std::vector<double> gs = {1.0, -0.5, 0.25};

    double rp = 2.0, m = 0.0, v = 0.0;
    for (size_t t = 1; t <= gs.size(); ++t) {
        adam_step(params, {Tensor::vec({gs[t - 1]})}, st, lr);
        m = 0.9 * m + 0.1 * gs[t - 1];
        v = 0.999 * v + 0.001 * gs[t - 1] * gs[t - 1];
        const double mh = m / (1.0 - std::pow(0.9, double(t)));
        const double vh = v / (1.0 - std::pow(0.999, double(t)));
        rp -= lr * mh / (std::sqrt(vh) + 1e-8);
        CHECK(p.data[0] == doctest::Approx(rp).epsilon(1e-14));
    }
}

TEST_CASE("adam minimizes a quadratic") {
    Tensor p = Tensor::vec({5.0, -3.0, 8.0});
    const Tensor target = Tensor::vec({1.0, 2.0, -0.5});
    auto params = ptrs(p);
    OptimizerState st = make_adam(cptrs(p));
    for (int i = 0; i < 2000; ++i) {
        Tensor g = p - target;
        adam_step(params, {g}, st, 0.05);
    }
    for (size_t i = 0; i < 3; ++i) CHECK(std::abs(p.data[i] - target.data[i]) < 1e-3);
}

TEST_CASE("decoupled weight decay shrinks params even with zero gradient") {
    Tensor p = Tensor::vec({4.0});
    auto params = ptrs(p);
    AdamParams hp;
    hp.weight_decay = 0.1;
    OptimizerState st = make_adam(cptrs(p), hp);
    const double lr = 0.01;
    for (int i = 0; i < 10; ++i) adam_step(params, {Tensor::vec({0.0})}, st, lr);
    CHECK(p.data[0] == doctest::Approx(4.0 * std::pow(1.0 - lr * 0.1, 10)).epsilon(1e-12));
}

TEST_CASE("weight decay off by default") {
    Tensor p = Tensor::vec({4.0});
    auto params = ptrs(p);
    OptimizerState st = make_adam(cptrs(p));
    for (int i = 0; i < 10; ++i) adam_step(params, {Tensor::vec({0.0})}, st, 0.01);
    CHECK(p.data[0] == 4.0);
}

TEST_CASE("non-finite gradients abort the step atomically") {
    Tensor p = Tensor::vec({1.0, 2.0});
    auto params = ptrs(p);
    OptimizerState st = make_adam(cptrs(p));
    adam_step(params, {Tensor::vec({0.1, 0.1})}, st, 0.01);
    const std::vector<double> snap_p = p.data;
    const std::vector<double> snap_m = st.m[0].data;
    const uint64_t snap_step = st.step;

    CHECK_THROWS_AS(adam_step(params, {Tensor::vec({0.1, std::nan("")})}, st, 0.01), NumericError);
    CHECK(p.data == snap_p);
    CHECK(st.m[0].data == snap_m);
    CHECK(st.step == snap_step);

    Tensor q = Tensor::matrix(2, 2, {1, 2, 3, 4});
    auto qparams = ptrs(q);
    OptimizerState mu = make_muon(cptrs(q));
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(muon_step(qparams, {Tensor::matrix(2, 2, {1, inf, 0, 0})}, mu, 0.01),
                    NumericError);
    CHECK(q.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("newton-schulz pushes singular values into a band around 1") {
    const Tensor m = oracle::random_matrix(8, 6, 1234);
    const Tensor u = newton_schulz_orthogonalize(m, 6);
    REQUIRE(u.rows() == 8);
    REQUIRE(u.cols() == 6);
    const std::vector<double> sv = oracle_singular_values(u);
    for (double s : sv) {
        CHECK(s > 0.6);
        CHECK(s < 1.2);
    }
    // The input, by contrast, has a wide spread.
    const std::vector<double> sv_in = oracle_singular_values(m);
    CHECK(sv_in.front() / sv_in.back() > 2.0);
}

TEST_CASE("newton-schulz preserves the direction of an orthogonal input") {
    // For Q with all singular values equal, every iterate stays a scalar
    // multiple of Q, so the output equals s*Q for some s in the band.
    Tensor q = Tensor::matrix(3, 3, {0, 1, 0, 0, 0, 1, 1, 0, 0}); // permutation
    const Tensor u = newton_schulz_orthogonalize(q, 6);
    const double s = u.data[1]; // ratio against q entry 1
    CHECK(s > 0.6);
    CHECK(s < 1.2);
    for (size_t i = 0; i < 9; ++i) {
        CHECK(u.data[i] == doctest::Approx(s * q.data[i]).epsilon(1e-9));
    }
}

TEST_CASE("newton-schulz handles wide matrices and zero input") {
    const Tensor m = oracle::random_matrix(4, 9, 777);
    const Tensor u = newton_schulz_orthogonalize(m, 6);
    Tensor ut = Tensor::zeros({u.cols(), u.rows()});
    for (size_t r = 0; r < u.rows(); ++r) {
        for (size_t c = 0; c < u.cols(); ++c) ut.at(c, r) = u.at(r, c);
    }
    const std::vector<double> sv = oracle_singular_values(ut);
    for (size_t i = 0; i < 4; ++i) { // rank is 4
        CHECK(sv[i] > 0.6);
        CHECK(sv[i] < 1.2);
    }
    const Tensor z = Tensor::zeros({3, 3});
    const Tensor uz = newton_schulz_orthogonalize(z, 6);
    for (double v : uz.data) CHECK(v == 0.0);
}

TEST_CASE("muon momentum accumulates before orthogonalization") {
    Tensor p = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto params = ptrs(p);
    OptimizerState st = make_muon(cptrs(p));
    const Tensor g1 = oracle::random_matrix(3, 3, 10);
    const Tensor g2 = oracle::random_matrix(3, 3, 11);
    const double lr = 0.1;

    Tensor expect = p;
    Tensor mom = Tensor::zeros({3, 3});
    for (const Tensor* g : {&g1, &g2}) {
        for (size_t i = 0; i < 9; ++i) mom.data[i] = 0.95 * mom.data[i] + g->data[i];
        const Tensor u = newton_schulz_orthogonalize(mom, 6);
        for (size_t i = 0; i < 9; ++i) expect.data[i] -= lr * u.data[i];
    }

    muon_step(params, {g1}, st, lr);
    muon_step(params, {g2}, st, lr);
    for (size_t i = 0; i < 9; ++i) CHECK(p.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-12));
}

TEST_CASE("muon falls back to adam for vectors") {
    Tensor pv = Tensor::vec({1.0, -1.0});
    Tensor pv_twin = pv;
    auto params = ptrs(pv);
    auto twin_params = ptrs(pv_twin);
    MuonParams mp;
    OptimizerState st = make_muon(cptrs(pv), mp);
    OptimizerState ad = make_adam(cptrs(pv_twin), mp.fallback);
    const Tensor g = Tensor::vec({0.2, 0.4});
    for (int i = 0; i < 5; ++i) {
        muon_step(params, {g}, st, 0.01);
        adam_step(twin_params, {g}, ad, 0.01);
    }
    CHECK(pv.data == pv_twin.data);
}

TEST_CASE("optimizer_step trains a small regression net with both optimizers") {
    for (OptimizerKind kind : {OptimizerKind::Adam, OptimizerKind::Muon}) {
        Network net({LayerSpec::linear(4, 16), LayerSpec::gelu(16), LayerSpec::linear(16, 2)});
        net.init_params(100);
        Network target({LayerSpec::linear(4, 2)});
        target.init_params(200);

        const Tensor x = oracle::random_matrix(32, 4, 300);
        const Tensor y = target.forward(x, Mode::Eval, 0);

        OptimizerState st = kind == OptimizerKind::Adam
                                ? make_adam(std::as_const(net).param_tensors())
                                : make_muon(std::as_const(net).param_tensors());
        auto loss_of = [&](const Tensor& pred) {
            double l = 0.0;
            for (size_t i = 0; i < pred.data.size(); ++i) {
                const double d = pred.data[i] - y.data[i];
                l += d * d;
            }
            return l / double(pred.rows());
        };

        double first = 0.0, last = 0.0;
        const uint64_t rev0 = net.revision();
        for (int step = 0; step < 200; ++step) {
            ForwardCache cache;
            const Tensor pred = net.forward(x, Mode::Train, uint64_t(step), &cache);
            if (step == 0) first = loss_of(pred);
            last = loss_of(pred);
            Tensor up = Tensor::zeros(pred.shape);
            for (size_t i = 0; i < up.data.size(); ++i) {
                up.data[i] = 2.0 * (pred.data[i] - y.data[i]) / double(pred.rows());
            }
            Grads g = net.backward(cache, up);
            optimizer_step(net, g, st, kind == OptimizerKind::Adam ? 3e-3 : 1e-2);
        }
        CHECK(net.revision() > rev0);
        CHECK(last < 0.05 * first);
    }
}
