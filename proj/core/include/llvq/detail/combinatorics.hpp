#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace llvq::detail {

inline constexpr int kMaxChoose = 24;

namespace impl {
constexpr auto make_pascal() {
  std::array<std::array<uint64_t, kMaxChoose + 1>, kMaxChoose + 1> t{};
  for (int n = 0; n <= kMaxChoose; ++n) {
    t[n][0] = 1;
    for (int k = 1; k <= n; ++k) {
      t[n][k] = t[n - 1][k - 1] + (k <= n - 1 ? t[n - 1][k] : 0);
    }
  }
  return t;
}
inline constexpr auto kPascal = make_pascal();
}  // namespace impl

/// C(n, k) for 0 <= n <= 24.
inline constexpr uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  return impl::kPascal[n][k];
}

/// Number of distinct sequences of a multiset given per-symbol counts:
/// multinomial(sum counts; counts). Computed as a product of binomials so
/// every intermediate stays below the final value.
inline uint64_t multiset_permutation_count(std::span<const int> counts) {
  uint64_t result = 1;
  int placed = 0;
  for (int c : counts) {
    placed += c;
    result *= binomial(placed, c);
  }
  return result;
}

/// Lexicographic rank of `seq` among distinct permutations of its multiset.
/// Symbols are indices into `counts` and compare by index. `counts` is the
/// symbol multiset of the full sequence and is left unchanged.
inline uint64_t multiset_permutation_rank(std::span<const int> seq, std::span<const int> counts_in) {
  std::vector<int> counts(counts_in.begin(), counts_in.end());
  const int k = static_cast<int>(counts.size());
  int remaining = static_cast<int>(seq.size());
  uint64_t rank = 0;
  for (int pos = 0; pos < static_cast<int>(seq.size()); ++pos) {
    const int s = seq[pos];
    for (int v = 0; v < s; ++v) {
      if (counts[v] == 0) continue;
      --counts[v];
      // permutations of what remains after fixing symbol v here
      uint64_t perms = 1;
      int placed = 0;
      for (int c : counts) {
        placed += c;
        perms *= binomial(placed, c);
      }
      rank += perms;
      ++counts[v];
    }
    if (s < 0 || s >= k || counts[s] == 0) {
      throw std::invalid_argument("multiset rank: sequence inconsistent with counts");
    }
    --counts[s];
    --remaining;
  }
  (void)remaining;
  return rank;
}

/// Inverse of multiset_permutation_rank: writes the rank-r sequence into `out`.
inline void multiset_permutation_unrank(uint64_t r, std::span<const int> counts_in, std::span<int> out) {
  std::vector<int> counts(counts_in.begin(), counts_in.end());
  const int k = static_cast<int>(counts.size());
  for (size_t pos = 0; pos < out.size(); ++pos) {
    bool placed_symbol = false;
    for (int v = 0; v < k; ++v) {
      if (counts[v] == 0) continue;
      --counts[v];
      uint64_t perms = 1;
      int placed = 0;
      for (int c : counts) {
        placed += c;
        perms *= binomial(placed, c);
      }
      if (r < perms) {
        out[pos] = v;
        placed_symbol = true;
        break;
      }
      r -= perms;
      ++counts[v];
    }
    if (!placed_symbol) throw std::out_of_range("multiset unrank: rank out of range");
  }
  if (r != 0) throw std::out_of_range("multiset unrank: rank out of range");
}

}  // namespace llvq::detail
