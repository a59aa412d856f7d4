#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace sqz {

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

/// CRC-32 (IEEE, reflected, init/xorout 0xFFFFFFFF), streamable.
class Crc32 {
public:
    void update(const void* data, size_t len);
    uint32_t value() const { return state_ ^ 0xFFFFFFFFu; }

    static uint32_t of(const void* data, size_t len) {
        Crc32 c;
        c.update(data, len);
        return c.value();
    }

private:
    uint32_t state_ = 0xFFFFFFFFu;
};

/// Fingerprints rendered as fixed-width hex for manifests.
std::string hex64(uint64_t v);

} // namespace sqz
