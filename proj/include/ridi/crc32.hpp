#pragma once

#include <cstddef>
#include <cstdint>

namespace ridi {

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320), the checksum used
/// by zip/zlib. crc32("123456789") == 0xCBF43926.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace ridi
