#include "sqz/payload/payload.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "sqz/core/binio.hpp"
#include "sqz/core/error.hpp"
#include "sqz/core/hash.hpp"

namespace sqz::payload {

namespace {

void check_bits(int bits) {
    if (bits != 8 && bits != 16) throw ConfigError("quantization width must be 8 or 16 bits");
}

uint32_t max_code(int bits) { return bits == 8 ? 0xFFu : 0xFFFFu; }

} // namespace

QuantResult quantize(const std::vector<double>& z, int bits) {
    check_bits(bits);
    if (z.empty()) throw ShapeError("cannot quantize an empty vector");
    for (double v : z)
        if (!std::isfinite(v)) throw NumericError("cannot quantize non-finite values");

    const auto [lo_it, hi_it] = std::minmax_element(z.begin(), z.end());
    const double lo = *lo_it, hi = *hi_it;

    QuantResult q;
    q.codes.assign(z.size(), 0);
    if (lo == hi) {
        q.offset = static_cast<float>(lo); // exact iff the constant fits in f32
        q.scale = 0.0f;
        return q;
    }

    float off = static_cast<float>(lo);
    if (static_cast<double>(off) > lo)
        off = std::nextafterf(off, -std::numeric_limits<float>::infinity());
    const double qmax = static_cast<double>(max_code(bits));
    const double span = hi - static_cast<double>(off);
    float scale = static_cast<float>(span / qmax);
    if (scale == 0.0f) scale = std::numeric_limits<float>::denorm_min();
    while (static_cast<double>(scale) * qmax < span)
        scale = std::nextafterf(scale, std::numeric_limits<float>::infinity());

    q.offset = off;
    q.scale = scale;
    for (size_t i = 0; i < z.size(); ++i) {
        const double r = (z[i] - static_cast<double>(off)) / static_cast<double>(scale);
        const long long k = std::llround(r);
        q.codes[i] = static_cast<uint32_t>(std::clamp<long long>(k, 0, static_cast<long long>(qmax)));
    }
    return q;
}

std::vector<double> dequantize(const std::vector<uint32_t>& codes, float scale, float offset) {
    std::vector<double> z(codes.size());
    for (size_t i = 0; i < codes.size(); ++i)
        z[i] = static_cast<double>(offset) + static_cast<double>(scale) * codes[i];
    return z;
}

namespace {

// Order-0 adaptive byte histogram with bounded totals. Frequencies start at
// one so every symbol stays codable.
struct ByteModel {
    uint32_t freq[256];
    uint32_t total = 256;

    ByteModel() { std::fill(std::begin(freq), std::end(freq), 1u); }

    uint32_t cum(uint8_t s) const {
        uint32_t c = 0;
        for (size_t i = 0; i < s; ++i) c += freq[i];
        return c;
    }
    void bump(uint8_t s) {
        freq[s] += 32;
        total += 32;
        if (total > 65536) {
            total = 0;
            for (uint32_t& f : freq) {
                f = (f + 1) >> 1;
                total += f;
            }
        }
    }
};

constexpr uint32_t kTopValue = 1u << 24;

class RangeEncoder {
public:
    explicit RangeEncoder(std::vector<uint8_t>& out) : out_(out) {}

    void encode(uint32_t cum, uint32_t freq, uint32_t total) {
        const uint32_t r = range_ / total;
        low_ += static_cast<uint64_t>(r) * cum;
        range_ = r * freq;
        while (range_ < kTopValue) {
            shift_low();
            range_ <<= 8;
        }
    }

    void flush() {
        for (int i = 0; i < 5; ++i) shift_low();
    }

private:
    void shift_low() {
        if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
            const uint32_t carry = static_cast<uint32_t>(low_ >> 32);
            uint8_t b = cache_;
            do {
                out_.push_back(static_cast<uint8_t>(b + carry));
                b = 0xFF;
            } while (--cache_size_ != 0);
            cache_ = static_cast<uint8_t>(low_ >> 24);
        }
        ++cache_size_;
        low_ = (low_ & 0x00FFFFFFull) << 8;
    }

    std::vector<uint8_t>& out_;
    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint8_t cache_ = 0;
    uint64_t cache_size_ = 1;
};

class RangeDecoder {
public:
    RangeDecoder(const uint8_t* data, size_t len) : p_(data), end_(data + len), begin_(data) {
        for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next();
    }

    uint32_t decode_freq(uint32_t total) {
        r_ = range_ / total;
        return std::min(code_ / r_, total - 1);
    }

    void decode_update(uint32_t cum, uint32_t freq) {
        code_ -= cum * r_;
        range_ = r_ * freq;
        while (range_ < kTopValue) {
            code_ = (code_ << 8) | next();
            range_ <<= 8;
        }
    }

private:
    uint8_t next() {
        if (p_ == end_)
            throw FormatError("range-coded stream truncated at byte " +
                              std::to_string(p_ - begin_));
        return *p_++;
    }

    const uint8_t* p_;
    const uint8_t* end_;
    const uint8_t* begin_;
    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t code_ = 0;
    uint32_t r_ = 0;
};

void encode_byte(RangeEncoder& rc, ByteModel& m, uint8_t s) {
    rc.encode(m.cum(s), m.freq[s], m.total);
    m.bump(s);
}

uint8_t decode_byte(RangeDecoder& rc, ByteModel& m) {
    const uint32_t target = rc.decode_freq(m.total);
    uint32_t cum = 0;
    uint8_t s = 0;
    while (cum + m.freq[s] <= target) cum += m.freq[s++];
    rc.decode_update(cum, m.freq[s]);
    m.bump(s);
    return s;
}

} // namespace

std::vector<uint8_t> range_encode(const std::vector<uint32_t>& codes, int bits) {
    check_bits(bits);
    for (uint32_t c : codes)
        if (c > max_code(bits)) throw ShapeError("code exceeds the quantization range");
    std::vector<uint8_t> out;
    RangeEncoder rc(out);
    ByteModel lo, hi;
    for (uint32_t c : codes) {
        encode_byte(rc, lo, static_cast<uint8_t>(c & 0xFF));
        if (bits == 16) encode_byte(rc, hi, static_cast<uint8_t>(c >> 8));
    }
    rc.flush();
    return out;
}

std::vector<uint32_t> range_decode(const std::vector<uint8_t>& bytes, size_t n, int bits) {
    check_bits(bits);
    RangeDecoder rc(bytes.data(), bytes.size());
    ByteModel lo, hi;
    std::vector<uint32_t> codes(n);
    for (size_t i = 0; i < n; ++i) {
        uint32_t c = decode_byte(rc, lo);
        if (bits == 16) c |= static_cast<uint32_t>(decode_byte(rc, hi)) << 8;
        codes[i] = c;
    }
    return codes;
}

namespace {

constexpr size_t kHeaderBytes = 4 + 2 + 4 + 1 + 1 + 4 + 4 + 8 + 8; // 36

void write_raw_body(ByteWriter& w, const std::vector<uint32_t>& codes, int bits) {
    for (uint32_t c : codes) {
        if (bits == 8)
            w.u8(static_cast<uint8_t>(c));
        else
            w.u16(static_cast<uint16_t>(c));
    }
}

} // namespace

size_t write_payload(const std::vector<double>& z, int bits, bool try_entropy, uint64_t codec_fp,
                     uint64_t bridge_fp, const std::string& path) {
    const QuantResult q = quantize(z, bits);

    const size_t raw_bytes = z.size() * static_cast<size_t>(bits) / 8;
    std::vector<uint8_t> coded;
    bool entropy = false;
    if (try_entropy) {
        coded = range_encode(q.codes, bits);
        entropy = coded.size() + 4 < raw_bytes; // +4: the coded body's length prefix
    }

    ByteWriter w;
    w.magic("SQZ3");
    w.u16(kPayloadVersion);
    w.u32(static_cast<uint32_t>(z.size()));
    w.u8(static_cast<uint8_t>(bits));
    w.u8(entropy ? 1 : 0);
    w.f32(q.scale);
    w.f32(q.offset);
    w.u64(codec_fp);
    w.u64(bridge_fp);
    if (entropy) {
        w.u32(static_cast<uint32_t>(coded.size()));
        w.bytes(coded.data(), coded.size());
    } else {
        write_raw_body(w, q.codes, bits);
    }
    w.u32(Crc32::of(w.data().data(), w.size()));
    write_file(path, w.data());
    return w.size();
}

PayloadData read_payload(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file(path);
    if (bytes.size() < kHeaderBytes + 4)
        throw FormatError(path + ": too short to be a payload container");
    const uint32_t stored_crc = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                                static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8 |
                                static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16 |
                                static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24;
    const uint32_t want_crc = Crc32::of(bytes.data(), bytes.size() - 4);
    if (stored_crc != want_crc)
        throw FormatError(path + ": checksum mismatch (stored " + hex64(stored_crc) +
                          ", computed " + hex64(want_crc) + ")");

    ByteReader r(bytes.data(), bytes.size() - 4);
    r.expect_magic("SQZ3", path);
    const uint16_t version = r.u16();
    if (version != kPayloadVersion)
        throw FormatError(path + ": unsupported payload version " + std::to_string(version));

    PayloadData out;
    PayloadMeta& m = out.meta;
    m.d_c = r.u32();
    m.quant_bits = r.u8();
    const uint8_t flag = r.u8();
    m.scale = r.f32();
    m.offset = r.f32();
    m.codec_fingerprint = r.u64();
    m.bridge_fingerprint = r.u64();
    m.total_bytes = bytes.size();
    if (m.d_c == 0) throw FormatError(path + ": empty latent");
    if (m.quant_bits != 8 && m.quant_bits != 16)
        throw FormatError(path + ": bad quantization width " + std::to_string(m.quant_bits));
    if (flag > 1) throw FormatError(path + ": bad entropy flag");
    m.entropy_coded = flag == 1;

    std::vector<uint32_t> codes;
    if (m.entropy_coded) {
        const uint32_t len = r.u32();
        if (len != r.remaining())
            throw FormatError(path + ": coded body length " + std::to_string(len) +
                              " does not match the container");
        std::vector<uint8_t> coded(len);
        r.bytes(coded.data(), len);
        codes = range_decode(coded, m.d_c, m.quant_bits);
        m.body_bytes = 4 + static_cast<size_t>(len);
    } else {
        const size_t raw = static_cast<size_t>(m.d_c) * static_cast<size_t>(m.quant_bits) / 8;
        if (r.remaining() != raw)
            throw FormatError(path + ": raw body holds " + std::to_string(r.remaining()) +
                              " bytes, header implies " + std::to_string(raw));
        codes.resize(m.d_c);
        for (uint32_t& c : codes) c = m.quant_bits == 8 ? r.u8() : r.u16();
        m.body_bytes = raw;
    }
    out.z = dequantize(codes, m.scale, m.offset);
    return out;
}

double compression_ratio(size_t original_bytes, size_t payload_bytes) {
    if (original_bytes == 0 || payload_bytes == 0)
        throw ConfigError("compression ratio needs positive byte counts");
    return static_cast<double>(original_bytes) / static_cast<double>(payload_bytes);
}

} // namespace sqz::payload
