#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "sqz/core/error.hpp"

namespace sqz {

// Little-endian byte buffer helpers. All on-disk formats in this project are
// little-endian regardless of host order.

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(float v);
    void bytes(const void* data, size_t len);
    void magic(const char tag[4]) { bytes(tag, 4); }

    const std::vector<uint8_t>& data() const { return buf_; }
    size_t size() const { return buf_.size(); }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t len) : p_(data), end_(data + len), begin_(data) {}
    explicit ByteReader(const std::vector<uint8_t>& v) : ByteReader(v.data(), v.size()) {}

    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    float f32();
    void bytes(void* out, size_t len);
    void expect_magic(const char tag[4], const std::string& what);

    size_t offset() const { return static_cast<size_t>(p_ - begin_); }
    size_t remaining() const { return static_cast<size_t>(end_ - p_); }

private:
    void need(size_t n) const;
    const uint8_t* p_;
    const uint8_t* end_;
    const uint8_t* begin_;
};

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace sqz
