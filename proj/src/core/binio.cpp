#include "sqz/core/binio.hpp"

#include <bit>
#include <fstream>

namespace sqz {

static_assert(std::endian::native == std::endian::little,
              "serialization code assumes a little-endian host");

void ByteWriter::u16(uint16_t v) { bytes(&v, 2); }
void ByteWriter::u32(uint32_t v) { bytes(&v, 4); }
void ByteWriter::u64(uint64_t v) { bytes(&v, 8); }
void ByteWriter::f32(float v) { bytes(&v, 4); }

void ByteWriter::bytes(const void* data, size_t len) {
    const auto* p = static_cast<const uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + len);
}

void ByteReader::need(size_t n) const {
    if (remaining() < n)
        throw FormatError("truncated input: need " + std::to_string(n) + " bytes at offset " +
                          std::to_string(offset()));
}

uint8_t ByteReader::u8() {
    need(1);
    return *p_++;
}

uint16_t ByteReader::u16() {
    uint16_t v;
    bytes(&v, 2);
    return v;
}

uint32_t ByteReader::u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
}

uint64_t ByteReader::u64() {
    uint64_t v;
    bytes(&v, 8);
    return v;
}

float ByteReader::f32() {
    float v;
    bytes(&v, 4);
    return v;
}

void ByteReader::bytes(void* out, size_t len) {
    need(len);
    std::memcpy(out, p_, len);
    p_ += len;
}

void ByteReader::expect_magic(const char tag[4], const std::string& what) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, tag, 4) != 0)
        throw FormatError("bad magic for " + what + ": expected \"" + std::string(tag, 4) +
                          "\", got \"" + std::string(got, 4) + "\"");
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open for reading: " + path);
    f.seekg(0, std::ios::end);
    auto len = static_cast<size_t>(f.tellg());
    f.seekg(0);
    std::vector<uint8_t> buf(len);
    if (len > 0)
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(len));
    if (!f)
        throw IoError("read failed: " + path);
    return buf;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    if (!bytes.empty())
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    auto bytes = read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::vector<uint8_t> bytes(text.begin(), text.end());
    write_file(path, bytes);
}

} // namespace sqz
