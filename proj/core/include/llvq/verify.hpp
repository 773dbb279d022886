#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "llvq/codec.hpp"

namespace llvq::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Reference shell sizes for m = 2..5 and the cumulative count at m = 13.
uint64_t reference_shell_size(int m);  // 0 when no reference is pinned
inline constexpr uint64_t kReferenceCumulative13 = 280'974'212'784'720ull;

/// Codeword count, weight enumerator, closure under XOR, rank/unrank
/// round-trip, and the one-time exhaustive 2^24 membership scan.
std::vector<CheckResult> golay_checks(bool exhaustive = true);

/// Shell sizes against the pinned references (m <= 5), cumulative count and
/// bits/dim at m = 13 when within range, and per-class cardinality brute-force
/// spot checks on small classes. Prints per-shell class tables to `table_out`
/// when given.
std::vector<CheckResult> shell_checks(int max_m, std::ostream* table_out = nullptr);

/// decode/encode round-trips on sampled indices plus the norm-monotonicity
/// invariant; exhaustive over Shell(2) when the layout covers it.
std::vector<CheckResult> codec_checks(const CodebookLayout& layout, int64_t samples,
                                      uint64_t seed);

/// True iff encode(decode(i)) == i for `samples` random indices. Standalone so
/// tests can aim it at deliberately corrupted layouts.
bool bijectivity_spot_check(const CodebookLayout& layout, int64_t samples, uint64_t seed);

}  // namespace llvq::verify
