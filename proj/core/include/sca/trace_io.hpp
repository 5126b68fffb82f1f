#pragma once

#include <map>
#include <string>

#include "sca/trace.hpp"

namespace sca {

/// Key=value sidecar written next to a trace file (same basename plus
/// ".manifest"). Records the generation parameters of a set.
using Manifest = std::map<std::string, std::string>;

/// Binary trace container. Layout, all little-endian:
///   "SCAF" | version u16 | M u32 | N u32 |
///   M x ( key_byte u8 | plaintext_byte u8 | device_id u16 | N x f64 )
void write_traces(const std::string& path, const TraceMatrix& set,
                  const Manifest& manifest = {});

TraceMatrix read_traces(const std::string& path);

/// Reads "<path>.manifest" if present; missing file yields an empty map.
Manifest read_manifest(const std::string& path);

std::string manifest_path(const std::string& trace_path);

}  // namespace sca
