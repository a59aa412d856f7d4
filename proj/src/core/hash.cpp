#include "sqz/core/hash.hpp"

#include <array>
#include <cstdio>

namespace sqz {

namespace {

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int j = 0; j < 8; ++j)
            c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

const std::array<uint32_t, 256>& crc_table() {
    static const auto table = make_crc_table();
    return table;
}

} // namespace

void Crc32::update(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    const auto& t = crc_table();
    uint32_t c = state_;
    for (size_t i = 0; i < len; ++i)
        c = t[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    state_ = c;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

} // namespace sqz
