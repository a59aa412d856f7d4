#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sqz {

// Deterministic RNG built on mt19937_64 (fully specified by the standard).
// Distribution code is hand-rolled because std::normal_distribution and
// friends are implementation-defined and would break bit-reproducibility
// across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 bits of randomness.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    uint64_t uniform_int(uint64_t n);

    /// Standard normal via Box-Muller with a cached spare.
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Derives an independent sub-stream seed from a root seed and a stream name.
uint64_t derive_seed(uint64_t root, std::string_view stream);

} // namespace sqz
