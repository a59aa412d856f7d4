#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqz/nn/net.hpp"

namespace sqz::nn {

// Network checkpoint container, little-endian:
//   magic "SQZN" | version u16 | layer count u32
//   per layer: kind u8 | in_dim u32 | out_dim u32 | dropout_rate f32
//              | parameter blob (f32, row-major)
//   CRC32 over all preceding bytes.
// Blob contents by kind: Linear = weight then bias; LayerNorm = gain then
// bias; ResidualAdd = a single f32 holding its source offset; Gelu and
// Dropout are empty. Parameters are stored in f32; loading widens to f64.

inline constexpr uint16_t kCheckpointVersion = 1;

std::vector<uint8_t> serialize_network(const Network& net);
Network deserialize_network(const std::vector<uint8_t>& bytes);

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

/// Content hash of the serialized parameters; stable across save/load.
uint64_t network_fingerprint(const Network& net);

} // namespace sqz::nn
