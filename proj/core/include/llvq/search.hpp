#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "llvq/codec.hpp"
#include "llvq/lattice.hpp"

namespace llvq {

enum class Metric : uint8_t { kEuclidean, kAngular };

struct SearchConfig {
  int max_shell = 2;
  Metric metric = Metric::kEuclidean;
  bool exhaustive = false;  // audit mode: disable class pruning
};

struct SearchResult {
  IntegerPoint point{};
  uint64_t index = 0;
  /// Euclidean: squared distance to the real-space point coords/sqrt(8).
  /// Angular: cosine similarity in [-1, 1].
  double score = 0.0;
};

/// Codebook-free nearest-neighbor search over shell unions of the lattice.
///
/// Every class is scanned through its admissible Golay refinements; for each
/// refinement the optimal magnitude placement and sign pattern follow from
/// pairing sorted magnitudes with sorted |input| coordinates (plus one
/// cheapest sign flip when the support parity constraint bites), so the
/// per-class candidate is the exact class optimum. Classes are visited in
/// decreasing upper-bound order and pruned once they cannot beat the
/// incumbent. Ties break toward the lowest global index.
class LatticeSearcher {
 public:
  explicit LatticeSearcher(const CodebookLayout& layout);
  ~LatticeSearcher();
  LatticeSearcher(LatticeSearcher&&) noexcept;
  LatticeSearcher& operator=(LatticeSearcher&&) noexcept;
  LatticeSearcher(const LatticeSearcher&) = delete;
  LatticeSearcher& operator=(const LatticeSearcher&) = delete;

  SearchResult nearest(std::span<const double, kBlockDim> x, const SearchConfig& config) const;

  /// Elementwise nearest; order-preserving and bit-identical to sequential
  /// calls regardless of thread count.
  std::vector<SearchResult> nearest_batch(std::span<const double> xs, const SearchConfig& config,
                                          int threads = 0) const;

  /// Search restricted to shells m_lo..m_hi (both within the layout bound).
  SearchResult nearest_in_shells(std::span<const double, kBlockDim> x, int m_lo, int m_hi,
                                 Metric metric, bool exhaustive = false) const;

  const CodebookLayout& layout() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace llvq
