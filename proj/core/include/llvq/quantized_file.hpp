#pragma once

#include <string>

#include "llvq/layerquant.hpp"

namespace llvq {

/// Quantized-layer container:
///   magic "LLVQQ001"
///   header: mode u32 | M u32 | gain_bits u32 | gain_source u32
///           layout fingerprint u64
///           rows u64 | cols u64 | padded_cols u64
///           beta f32 | scale_mode u32 (0 per-tensor, 1 adds per-group floats)
///           hadamard u32 | hadamard_seed u64
///           gain_level_count u32 | gain levels f32[]
///           [group scales f32[groups] when scale_mode = 1]
///   body: per block, shape index (ceil(log2 N(M)) bits) then gain code
///         (gain_bits bits), fixed width, little-endian bit order, zero-padded
///         to a byte boundary.
inline constexpr char kQuantizedMagic[8] = {'L', 'L', 'V', 'Q', 'Q', '0', '0', '1'};

void write_quantized_file(const std::string& path, const QuantizedLayer& layer,
                          const CodebookLayout& layout);

/// Parses and validates structure. The layout fingerprint is checked against
/// `layout`; pass a layout built for the file's shell bound.
QuantizedLayer read_quantized_file(const std::string& path);

}  // namespace llvq
