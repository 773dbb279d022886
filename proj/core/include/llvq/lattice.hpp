#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace llvq {

inline constexpr int kBlockDim = 24;

/// Integer embedding of a lattice point. The real-space point is coords/sqrt(8);
/// a point of shell m has integer squared norm 16*m (real squared norm 2m).
using IntegerPoint = std::array<int32_t, kBlockDim>;

int64_t squared_norm(const IntegerPoint& x);

enum class Parity : uint8_t { kEven = 0, kOdd = 1 };

enum class PointClass : uint8_t { kEven, kOdd, kNotInLattice };

/// Coset membership test: all coordinates even, halved vector reduces to a
/// Golay codeword mod 2, coordinate sum ≡ 0 (mod 8) — or the analogous odd
/// conditions with sum ≡ 4 (mod 8).
PointClass classify_point(const IntegerPoint& x);

/// Canonical class representative: the multiset of absolute coordinate values,
/// stored as (value, multiplicity) pairs with values strictly descending and
/// multiplicities summing to 24 (zeros included for even classes).
struct Leader {
  std::vector<std::pair<int, int>> levels;
  Parity parity = Parity::kEven;

  bool operator==(const Leader&) const = default;
  std::string to_string() const;
};

/// One equivalence class of lattice points under admissible permutations and
/// sign flips, with its exact cardinality and layout offset.
///
/// Cardinality factorizes as refinements * 2^sign_bits * placements_f1 *
/// placements_f0:
///  - even classes: `refinements` counts the Golay codewords whose weight
///    equals the number of coordinates ≡ 2 (mod 4); those coordinates occupy
///    the codeword support (placements_f1 arrangements) and the rest the
///    complement (placements_f0); signs are free on nonzero ≡ 0 (mod 4)
///    coordinates while the support carries one parity constraint.
///  - odd classes: every one of the 4096 codewords is admissible, magnitudes
///    may occupy any position (placements_f0 = full multinomial) and every
///    sign is forced by the mod-4 congruences, so sign_bits = 0.
struct ClassDescriptor {
  Leader leader;
  int shell = 0;               // m
  int class_rank = 0;          // position within the shell's class order
  int golay_weight = 0;        // even: #coords ≡ 2 (mod 4); odd: unused
  uint32_t refinements = 0;    // A
  int sign_bits = 0;           // B
  int sign_parity = 0;         // even, weight>0: required parity of negative support coords
  uint64_t placements_f1 = 1;  // arrangements of support values (even; 1 for odd)
  uint64_t placements_f0 = 1;  // arrangements of the remaining values
  uint64_t cardinality = 0;    // A * 2^B * placements_f1 * placements_f0
  uint64_t offset = 0;         // global index of the class's first member
};

/// All classes of shells 2..max_shell in the pinned deterministic order:
/// shells ascending; within a shell even classes before odd; within a parity,
/// leaders ascending lexicographically as descending value sequences.
/// Offsets are running prefix sums over the whole list.
std::vector<ClassDescriptor> enumerate_classes(int max_shell);

uint64_t shell_size(int m);

/// N(M) = sum of shell sizes for m = 2..M.
uint64_t cumulative_count(int max_shell);

/// Streams every point of Shell(m) exactly once, expanding each class over
/// admissible codewords, placements and signs. Throws std::length_error if
/// the shell exceeds `cap` points.
void enumerate_shell_points(int m, const std::function<void(const IntegerPoint&)>& sink,
                            uint64_t cap = 250'000'000);

/// Streams every point of one class exactly once (same guard).
void enumerate_class_points(const ClassDescriptor& descriptor,
                            const std::function<void(const IntegerPoint&)>& sink,
                            uint64_t cap = 250'000'000);

}  // namespace llvq
