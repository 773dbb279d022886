#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "llvq/lattice.hpp"

namespace llvq {

/// The implicit codebook for shells 2..max_shell: the deterministic
/// shell -> class hierarchy with cumulative counts. Never materializes points.
struct CodebookLayout {
  int max_shell = 0;
  std::vector<ClassDescriptor> classes;  // ascending offset
  std::vector<uint64_t> shell_start;     // shell_start[m-2] = first index of Shell(m)
  uint64_t total = 0;                    // N(max_shell)
  int bits_per_index = 0;                // ceil(log2 N(max_shell))
  uint64_t fingerprint = 0;              // binds M, class order and the Golay constant

  static CodebookLayout build(int max_shell);

  /// Shell containing global index i (N(m-1) <= i < N(m)).
  int shell_of_index(uint64_t index) const;
  const ClassDescriptor& class_of_index(uint64_t index) const;
};

/// A global index bound to the layout that produced it.
struct GlobalIndex {
  uint64_t value = 0;
  uint64_t layout_fingerprint = 0;
};

/// Dequantizer: global index -> integer lattice point, by shell lookup, class
/// lookup, then unflattening (Golay refinement, sign pattern, permutation rank)
/// with successive modulo / integer-division steps.
IntegerPoint decode(uint64_t index, const CodebookLayout& layout);
IntegerPoint decode(const GlobalIndex& index, const CodebookLayout& layout);

/// Inverse of decode: ranks the point's Golay refinement, sign pattern and
/// magnitude placement inside its class. Throws if the point is not in the
/// lattice or lies outside the shell bound.
uint64_t encode(const IntegerPoint& point, const CodebookLayout& layout);
GlobalIndex encode_bound(const IntegerPoint& point, const CodebookLayout& layout);

/// Fixed-width little-endian bit packing: entry bit j of value i maps to
/// stream bit i*bits_per_entry + j, stream bit k to byte k/8, bit k%8.
std::vector<uint8_t> pack_indices(std::span<const uint64_t> values, int bits_per_entry);
std::vector<uint64_t> unpack_indices(std::span<const uint8_t> stream, int bits_per_entry,
                                     size_t count);

}  // namespace llvq
