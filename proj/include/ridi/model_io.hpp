#pragma once

#include <string>

#include "ridi/cascade.hpp"

namespace ridi {

/// Binary model container. Layout: magic "RIDI-MODEL", u32 format version,
/// u64 payload length, payload, u32 CRC-32 of the payload. All integers and
/// doubles little-endian. load(save(m)) predicts bitwise identically.
void save_model(const CascadeModel& model, const std::string& path);

/// Throws ParseError on malformed/truncated/corrupt files and SchemaError on
/// an unsupported format version (the message names both versions).
CascadeModel load_model(const std::string& path);

}  // namespace ridi
