#pragma once

#include <string>

#include "homoglab/field.hpp"

namespace homog {

/// Binary field file: "HLF1", int32 dim, N, rank code, topology code, then
/// float64 payload. All little-endian. The rank code packs the location as
/// rank + 16 * location.
void serialize_field(const DiscreteField& f, const std::string& path);
DiscreteField deserialize_field(const std::string& path);

/// Same encoding to and from an in-memory byte string.
std::string encode_field(const DiscreteField& f);
DiscreteField decode_field(const std::string& bytes);

}  // namespace homog
