#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace llvq {

/// Extended binary [24,12,8] Golay code.
///
/// A codeword is stored as a 24-bit integer with coordinate i at bit i
/// (coordinate 0 = least significant bit). All tables derive from the fixed
/// systematic generator returned by generator_rows(); the canonical codeword
/// order is ascending 24-bit integer value.
class GolayCode {
 public:
  static constexpr int kLength = 24;
  static constexpr int kDimension = 12;
  static constexpr int kSize = 4096;
  static constexpr uint32_t kWordMask = 0x00ff'ffffu;

  /// The fixed generator [I12 | B]: information bits in coordinates 0..11,
  /// B a bordered quadratic-residue circulant in coordinates 12..23.
  static const std::array<uint32_t, kDimension>& generator_rows();

  /// Shared immutable instance; tables are built once on first use.
  static const GolayCode& instance();

  /// Syndrome membership test. The code is self-dual, so the generator rows
  /// double as parity checks: word is a codeword iff it is orthogonal to
  /// every generator row.
  static bool contains(uint32_t word);

  /// All 4096 codewords, ascending by integer value.
  const std::vector<uint32_t>& words() const { return words_; }

  /// Codewords of one Hamming weight in {0, 8, 12, 16, 24}, preserving the
  /// global order. Throws std::invalid_argument for any other weight.
  const std::vector<uint32_t>& words_of_weight(int weight) const;

  /// Number of codewords of the given weight; 0 for weights the code misses.
  static int weight_count(int weight);

  // rank/unrank within the global ascending order (mutually inverse).
  int rank(uint32_t word) const;
  uint32_t unrank(int r) const;

  // rank/unrank within one weight class, again in global order.
  int weight_rank(uint32_t word) const;
  uint32_t weight_unrank(int weight, int r) const;

  GolayCode(const GolayCode&) = delete;
  GolayCode& operator=(const GolayCode&) = delete;

 private:
  GolayCode();

  std::vector<uint32_t> words_;
  std::array<std::vector<uint32_t>, 5> by_weight_;  // weights 0,8,12,16,24
};

}  // namespace llvq
