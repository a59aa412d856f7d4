#include "sqz/nn/checkpoint.hpp"

#include "sqz/core/binio.hpp"
#include "sqz/core/hash.hpp"

namespace sqz::nn {

namespace {

void write_blob(ByteWriter& w, const Layer& l) {
    switch (l.spec.kind) {
    case LayerKind::Linear:
    case LayerKind::LayerNorm:
        for (double v : l.w.data) w.f32(static_cast<float>(v));
        for (double v : l.b.data) w.f32(static_cast<float>(v));
        break;
    case LayerKind::ResidualAdd:
        w.f32(static_cast<float>(l.spec.res_offset));
        break;
    case LayerKind::Gelu:
    case LayerKind::Dropout:
        break;
    }
}

} // namespace

std::vector<uint8_t> serialize_network(const Network& net) {
    ByteWriter w;
    w.magic("SQZN");
    w.u16(kCheckpointVersion);
    w.u32(static_cast<uint32_t>(net.layer_count()));
    for (const Layer& l : net.layers()) {
        w.u8(static_cast<uint8_t>(l.spec.kind));
        w.u32(static_cast<uint32_t>(l.spec.in_dim));
        w.u32(static_cast<uint32_t>(l.spec.out_dim));
        w.f32(static_cast<float>(l.spec.dropout_rate));
        write_blob(w, l);
    }
    const uint32_t crc = Crc32::of(w.data().data(), w.size());
    ByteWriter out = std::move(w);
    out.u32(crc);
    return out.data();
}

Network deserialize_network(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 4) throw FormatError("checkpoint: truncated");
    const uint32_t stored = static_cast<uint32_t>(bytes[bytes.size() - 4]) |
                            (static_cast<uint32_t>(bytes[bytes.size() - 3]) << 8) |
                            (static_cast<uint32_t>(bytes[bytes.size() - 2]) << 16) |
                            (static_cast<uint32_t>(bytes[bytes.size() - 1]) << 24);
    const uint32_t actual = Crc32::of(bytes.data(), bytes.size() - 4);
    if (stored != actual) throw FormatError("checkpoint: CRC mismatch (corrupt file)");

    ByteReader r(bytes.data(), bytes.size() - 4);
    r.expect_magic("SQZN", "checkpoint");
    const uint16_t version = r.u16();
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    const uint32_t count = r.u32();

    struct Pending {
        LayerSpec spec;
        std::vector<float> blob;
    };
    std::vector<Pending> pend;
    pend.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint8_t kind_raw = r.u8();
        if (kind_raw > static_cast<uint8_t>(LayerKind::ResidualAdd)) {
            throw FormatError("checkpoint: unknown layer kind " + std::to_string(kind_raw));
        }
        LayerSpec s;
        s.kind = static_cast<LayerKind>(kind_raw);
        s.in_dim = r.u32();
        s.out_dim = r.u32();
        s.dropout_rate = static_cast<double>(r.f32());
        size_t blob_elems = 0;
        switch (s.kind) {
        case LayerKind::Linear: blob_elems = s.out_dim * s.in_dim + s.out_dim; break;
        case LayerKind::LayerNorm: blob_elems = 2 * s.out_dim; break;
        case LayerKind::ResidualAdd: blob_elems = 1; break;
        case LayerKind::Gelu:
        case LayerKind::Dropout: blob_elems = 0; break;
        }
        std::vector<float> blob(blob_elems);
        if (blob_elems) r.bytes(blob.data(), blob_elems * sizeof(float));
        if (s.kind == LayerKind::ResidualAdd) {
            s.res_offset = static_cast<size_t>(blob[0]);
        }
        pend.push_back({s, std::move(blob)});
    }
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");

    std::vector<LayerSpec> specs;
    specs.reserve(pend.size());
    for (const auto& p : pend) specs.push_back(p.spec);
    Network net(std::move(specs)); // throws ShapeError on an inconsistent chain

    for (size_t i = 0; i < pend.size(); ++i) {
        Layer& l = net.layer(i);
        if (!l.has_params()) continue;
        const std::vector<float>& blob = pend[i].blob;
        const size_t nw = l.w.numel();
        for (size_t j = 0; j < nw; ++j) l.w.data[j] = static_cast<double>(blob[j]);
        for (size_t j = 0; j < l.b.numel(); ++j) l.b.data[j] = static_cast<double>(blob[nw + j]);
    }
    net.bump_revision();
    return net;
}

void save_checkpoint(const Network& net, const std::string& path) {
    write_file(path, serialize_network(net));
}

Network load_checkpoint(const std::string& path) {
    return deserialize_network(read_file(path));
}

uint64_t network_fingerprint(const Network& net) {
    const std::vector<uint8_t> bytes = serialize_network(net);
    return fnv1a64(bytes.data(), bytes.size());
}

} // namespace sqz::nn
