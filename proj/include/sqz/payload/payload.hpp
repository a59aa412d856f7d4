#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sqz::payload {

// Affine min/max quantization of a flat latent vector. The header stores
// scale/offset as f32, so the narrowing is folded into the grid itself:
// offset is the input minimum rounded DOWN to f32 and scale is rounded UP
// until scale * (2^bits - 1) covers the span measured from that offset.
// Codes are then taken against the narrowed grid, which keeps the
// reconstruction bound |z - dequantize|_inf <= scale / 2 unconditional in
// real arithmetic; the f64 reconstruction adds at most one final rounding,
// visible only when |offset| exceeds the span by ~2^53/codes.
// A constant vector degenerates to scale 0 with all codes 0; its round-trip
// is exact whenever the constant is f32-representable (the offset field's
// width is the only loss).
struct QuantResult {
    std::vector<uint32_t> codes; // within [0, 2^bits - 1]
    float scale = 0.0f;
    float offset = 0.0f;
};

/// bits must be 8 or 16; z non-empty and finite.
QuantResult quantize(const std::vector<double>& z, int bits);

/// offset + scale * code, in f64.
std::vector<double> dequantize(const std::vector<uint32_t>& codes, float scale, float offset);

// Adaptive order-0 range coder (carryless, byte-oriented). 16-bit codes use
// two independent byte models (low byte, high byte). Lossless; skewed code
// histograms compress well, near-uniform ones may expand slightly.
std::vector<uint8_t> range_encode(const std::vector<uint32_t>& codes, int bits);
/// Decodes exactly n codes. A truncated stream throws FormatError naming the
/// byte position where it ran dry.
std::vector<uint32_t> range_decode(const std::vector<uint8_t>& bytes, size_t n, int bits);

struct PayloadMeta {
    uint32_t d_c = 0;
    int quant_bits = 16;
    bool entropy_coded = false;
    float scale = 0.0f;
    float offset = 0.0f;
    uint64_t codec_fingerprint = 0;
    uint64_t bridge_fingerprint = 0;
    size_t body_bytes = 0;  // quantized payload proper (CR accounting)
    size_t total_bytes = 0; // container size on disk
};

// Container layout (little-endian): magic "SQZ3", version u16, d_C u32,
// quant_bits u8, entropy_flag u8, scale f32, offset f32, codec fingerprint
// u64, bridge fingerprint u64; body (raw codes, or u32 length + coded
// bytes); CRC32 over everything preceding. When entropy coding is requested
// the writer keeps whichever body is smaller and flags the choice.
inline constexpr uint16_t kPayloadVersion = 1;

/// Returns the total container size in bytes.
size_t write_payload(const std::vector<double>& z, int bits, bool try_entropy, uint64_t codec_fp,
                     uint64_t bridge_fp, const std::string& path);

struct PayloadData {
    std::vector<double> z; // == dequantize(stored codes)
    PayloadMeta meta;
};

/// Validates magic, version, and CRC (FormatError on any mismatch).
/// Fingerprints are returned for the caller to judge; a mismatch against the
/// caller's bundles is advisory here, not an error.
PayloadData read_payload(const std::string& path);

/// original / payload. Callers choose the accounting (the reported ratios
/// divide raw cloud bytes by quantized body bytes).
double compression_ratio(size_t original_bytes, size_t payload_bytes);

} // namespace sqz::payload
