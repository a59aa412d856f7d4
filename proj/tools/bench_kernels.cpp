// Times the OpenMP kernels against their serial references and checks that
// both produce bit-identical output (the parallel split is over disjoint
// output rows, so there is nothing to tolerate).
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <vector>

#include "sqz/core/rng.hpp"
#include "sqz/nn/kernels.hpp"

using namespace sqz;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> randn(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-24s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

int main(int argc, char** argv) {
    int reps = 5;
    if (argc > 1) reps = std::max(1, std::atoi(argv[1]));
    std::printf("kernel benchmark, %d reps per timing\n\n", reps);

    {
        const size_t b = 256, k = 512, n = 512;
        const auto x = randn(b * k, 1), w = randn(n * k, 2);
        std::vector<double> ys(b * n), yp(b * n);
        const double ts = time_ms([&] { nn::gemm_nt_serial(x.data(), w.data(), ys.data(), b, k, n); }, reps);
        const double tp = time_ms([&] { nn::gemm_nt(x.data(), w.data(), yp.data(), b, k, n); }, reps);
        report("gemm_nt 256x512x512", ts, tp, same_bits(ys, yp));
    }
    {
        const size_t b = 256, n = 512, k = 512;
        const auto g = randn(b * n, 3), w = randn(n * k, 4);
        std::vector<double> ys(b * k), yp(b * k);
        const double ts = time_ms([&] { nn::gemm_nn_serial(g.data(), w.data(), ys.data(), b, n, k); }, reps);
        const double tp = time_ms([&] { nn::gemm_nn(g.data(), w.data(), yp.data(), b, n, k); }, reps);
        report("gemm_nn 256x512x512", ts, tp, same_bits(ys, yp));
    }
    {
        const size_t b = 256, n = 512, k = 512;
        const auto g = randn(b * n, 5), x = randn(b * k, 6);
        std::vector<double> ys(n * k), yp(n * k);
        const double ts = time_ms([&] { nn::gemm_tn_serial(g.data(), x.data(), ys.data(), b, n, k); }, reps);
        const double tp = time_ms([&] { nn::gemm_tn(g.data(), x.data(), yp.data(), b, n, k); }, reps);
        report("gemm_tn 256x512x512", ts, tp, same_bits(ys, yp));
    }
    {
        const size_t n = 8192, m = 8192;
        const auto a = randn(n * 3, 7), b = randn(m * 3, 8);
        std::vector<double> ds(n), dp(n);
        const double ts = time_ms([&] { nn::nearest_sqdist_serial(a.data(), n, b.data(), m, ds.data()); }, reps);
        const double tp = time_ms([&] { nn::nearest_sqdist(a.data(), n, b.data(), m, dp.data()); }, reps);
        report("nearest_sqdist 8192^2", ts, tp, same_bits(ds, dp));
    }
    {
        const size_t n = 8192, m = 8192;
        const auto a = randn(n * 3, 9), b = randn(m * 3, 10);
        std::vector<double> ds(n), dp(n);
        std::vector<size_t> is(n), ip(n);
        const double ts = time_ms(
            [&] { nn::nearest_neighbor_serial(a.data(), n, b.data(), m, ds.data(), is.data()); },
            reps);
        const double tp = time_ms(
            [&] { nn::nearest_neighbor(a.data(), n, b.data(), m, dp.data(), ip.data()); }, reps);
        report("nearest_neighbor 8192^2", ts, tp, same_bits(ds, dp) && is == ip);
    }
    return 0;
}
