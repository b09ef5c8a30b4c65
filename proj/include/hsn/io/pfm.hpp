#pragma once

#include <string>

#include "hsn/image.hpp"

namespace hsn {

/// Grayscale PFM ("Pf"): dims, a scale line whose sign encodes endianness
/// (negative = little-endian), rows stored bottom-up, float32 samples.
/// Finite values round-trip bit-exactly, including negatives and subnormals.
/// Invalid pixels are stored as +infinity; non-finite samples read back as
/// invalid.
MaskedMap read_pfm(const std::string& path);
void write_pfm(const MaskedMap& map, const std::string& path);

}  // namespace hsn
