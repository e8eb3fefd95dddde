#pragma once

#include <cstdint>
#include <string>

#include "ftdr/param_store.hpp"

namespace ftdr::io {

// Checkpoint layout (little-endian):
//   magic "FTDR1" | version u16 | tensor count u32
//   per tensor: name length u16, name bytes, dtype u8 (0 = f32 payload),
//               rank u8, dims u32[rank], payload f32[...]
//   trailing CRC32 of all preceding bytes.
// Values are stored as f32; loading reproduces them up to f32 quantization.
void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

uint32_t crc32(const void* data, size_t len, uint32_t seed = 0);

}  // namespace ftdr::io
