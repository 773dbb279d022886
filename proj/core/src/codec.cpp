#include "llvq/codec.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "llvq/detail/combinatorics.hpp"
#include "llvq/golay.hpp"

namespace llvq {
namespace {

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
uint64_t fnv1a_value(const T& v, uint64_t h) {
  return fnv1a(&v, sizeof(v), h);
}

// Distinct values of one subset (support or complement) ascending, with counts.
struct SymbolTable {
  std::vector<int> values;  // ascending
  std::vector<int> counts;
  int total = 0;

  int symbol_of(int value) const {
    auto it = std::lower_bound(values.begin(), values.end(), value);
    return static_cast<int>(it - values.begin());
  }
};

// support=true selects values ≡ 2 (mod 4). Odd classes pass everything
// through the complement table.
SymbolTable subset_symbols(const Leader& leader, bool support) {
  SymbolTable t;
  for (auto it = leader.levels.rbegin(); it != leader.levels.rend(); ++it) {
    const auto [value, count] = *it;
    const bool in_support = (leader.parity == Parity::kEven) && (value % 4 == 2);
    if (in_support != support) continue;
    t.values.push_back(value);
    t.counts.push_back(count);
    t.total += count;
  }
  return t;
}

// Positions of set/cleared bits of the codeword, ascending.
void split_positions(uint32_t word, std::array<int, kBlockDim>& support, int& ns,
                     std::array<int, kBlockDim>& rest, int& nr) {
  ns = nr = 0;
  for (int i = 0; i < kBlockDim; ++i) {
    if ((word >> i) & 1u) support[ns++] = i;
    else rest[nr++] = i;
  }
}

}  // namespace

CodebookLayout CodebookLayout::build(int max_shell) {
  CodebookLayout layout;
  layout.max_shell = max_shell;
  layout.classes = enumerate_classes(max_shell);
  layout.shell_start.assign(static_cast<size_t>(max_shell - 1), 0);
  for (const ClassDescriptor& d : layout.classes) {
    if (d.class_rank == 0) layout.shell_start[static_cast<size_t>(d.shell - 2)] = d.offset;
  }
  const ClassDescriptor& last = layout.classes.back();
  layout.total = last.offset + last.cardinality;
  layout.bits_per_index = std::bit_width(layout.total - 1);

  uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a("LLVQLAYT", 8, h);
  h = fnv1a_value(static_cast<uint32_t>(max_shell), h);
  for (uint32_t row : GolayCode::generator_rows()) h = fnv1a_value(row, h);
  for (const ClassDescriptor& d : layout.classes) {
    h = fnv1a_value(static_cast<uint16_t>(d.shell), h);
    h = fnv1a_value(static_cast<uint8_t>(d.leader.parity), h);
    for (auto [value, count] : d.leader.levels) {
      h = fnv1a_value(static_cast<int8_t>(value), h);
      h = fnv1a_value(static_cast<uint8_t>(count), h);
    }
    h = fnv1a_value(d.offset, h);
  }
  layout.fingerprint = h;
  return layout;
}

int CodebookLayout::shell_of_index(uint64_t index) const {
  return class_of_index(index).shell;
}

const ClassDescriptor& CodebookLayout::class_of_index(uint64_t index) const {
  if (index >= total) throw std::out_of_range("codec: index outside the layout");
  auto it = std::upper_bound(classes.begin(), classes.end(), index,
                             [](uint64_t i, const ClassDescriptor& d) { return i < d.offset; });
  return *std::prev(it);
}

namespace {

IntegerPoint decode_in_class(const ClassDescriptor& d, uint64_t local) {
  const auto& code = GolayCode::instance();
  const uint64_t refinement = local % d.refinements;
  uint64_t rest = local / d.refinements;
  uint64_t sign_code = 0;
  if (d.sign_bits > 0) {
    sign_code = rest & ((uint64_t{1} << d.sign_bits) - 1);
    rest >>= d.sign_bits;
  }
  const uint64_t perm_rank = rest;

  IntegerPoint x{};
  if (d.leader.parity == Parity::kOdd) {
    const uint32_t word = code.unrank(static_cast<int>(refinement));
    const SymbolTable all = subset_symbols(d.leader, false);
    std::array<int, kBlockDim> seq{};
    detail::multiset_permutation_unrank(perm_rank, all.counts, std::span(seq.data(), kBlockDim));
    for (int i = 0; i < kBlockDim; ++i) {
      const int value = all.values[static_cast<size_t>(seq[i])];
      const int need = ((word >> i) & 1u) ? 3 : 1;
      x[i] = (value % 4 == need) ? value : -value;
    }
    return x;
  }

  const uint32_t word = code.weight_unrank(d.golay_weight, static_cast<int>(refinement));
  const SymbolTable f1 = subset_symbols(d.leader, true);
  const SymbolTable f0 = subset_symbols(d.leader, false);
  const uint64_t rank_f1 = perm_rank / d.placements_f0;
  const uint64_t rank_f0 = perm_rank % d.placements_f0;

  std::array<int, kBlockDim> support_pos{}, rest_pos{};
  int ns = 0, nr = 0;
  split_positions(word, support_pos, ns, rest_pos, nr);

  std::array<int, kBlockDim> seq1{}, seq0{};
  detail::multiset_permutation_unrank(rank_f1, f1.counts, std::span(seq1.data(), static_cast<size_t>(ns)));
  detail::multiset_permutation_unrank(rank_f0, f0.counts, std::span(seq0.data(), static_cast<size_t>(nr)));
  for (int j = 0; j < ns; ++j) x[support_pos[j]] = f1.values[static_cast<size_t>(seq1[j])];
  for (int j = 0; j < nr; ++j) x[rest_pos[j]] = f0.values[static_cast<size_t>(seq0[j])];

  // Sign bits, LSB first: nonzero complement positions ascending, then support
  // positions ascending except the last, whose sign closes the parity.
  int bit = 0;
  for (int j = 0; j < nr; ++j) {
    const int pos = rest_pos[j];
    if (x[pos] == 0) continue;
    if ((sign_code >> bit) & 1u) x[pos] = -x[pos];
    ++bit;
  }
  int neg_support = 0;
  for (int j = 0; j + 1 < ns; ++j) {
    const int pos = support_pos[j];
    if ((sign_code >> bit) & 1u) {
      x[pos] = -x[pos];
      ++neg_support;
    }
    ++bit;
  }
  if (ns > 0) {
    const int pos = support_pos[ns - 1];
    if ((neg_support & 1) != d.sign_parity) x[pos] = -x[pos];
  }
  return x;
}

}  // namespace

IntegerPoint decode(uint64_t index, const CodebookLayout& layout) {
  const ClassDescriptor& d = layout.class_of_index(index);
  return decode_in_class(d, index - d.offset);
}

IntegerPoint decode(const GlobalIndex& index, const CodebookLayout& layout) {
  if (index.layout_fingerprint != layout.fingerprint) {
    throw std::invalid_argument("codec: index bound to a different layout");
  }
  return decode(index.value, layout);
}

uint64_t encode(const IntegerPoint& point, const CodebookLayout& layout) {
  const PointClass pc = classify_point(point);
  if (pc == PointClass::kNotInLattice) {
    throw std::invalid_argument("codec: point is not in the lattice");
  }
  const int64_t norm = squared_norm(point);
  const int shell = static_cast<int>(norm / 16);
  if (norm == 0 || norm % 16 != 0) {
    throw std::invalid_argument("codec: invalid lattice norm");
  }
  if (shell > layout.max_shell) {
    throw std::out_of_range("codec: point outside the shell bound");
  }

  // Leader of the point: descending (value, count) pairs of |coords|.
  std::array<int, kBlockDim> mags{};
  for (int i = 0; i < kBlockDim; ++i) mags[i] = std::abs(point[i]);
  std::array<int, kBlockDim> sorted = mags;
  std::sort(sorted.rbegin(), sorted.rend());
  Leader leader;
  leader.parity = (pc == PointClass::kEven) ? Parity::kEven : Parity::kOdd;
  for (int i = 0; i < kBlockDim;) {
    int j = i;
    while (j < kBlockDim && sorted[j] == sorted[i]) ++j;
    leader.levels.emplace_back(sorted[i], j - i);
    i = j;
  }

  const ClassDescriptor* cls = nullptr;
  for (const ClassDescriptor& d : layout.classes) {
    if (d.shell == shell && d.leader == leader) {
      cls = &d;
      break;
    }
  }
  if (cls == nullptr) throw std::logic_error("codec: class lookup failed for a valid point");

  const auto& code = GolayCode::instance();
  const int parity_bit = point[0] & 1;
  uint32_t word = 0;
  for (int i = 0; i < kBlockDim; ++i) {
    const int32_t half = (point[i] - parity_bit) / 2;
    word |= static_cast<uint32_t>(half & 1) << i;
  }

  uint64_t refinement, perm_rank, sign_code = 0;
  if (cls->leader.parity == Parity::kOdd) {
    refinement = static_cast<uint64_t>(code.rank(word));
    const SymbolTable all = subset_symbols(cls->leader, false);
    std::array<int, kBlockDim> seq{};
    for (int i = 0; i < kBlockDim; ++i) seq[i] = all.symbol_of(mags[i]);
    perm_rank = detail::multiset_permutation_rank(std::span(seq.data(), kBlockDim), all.counts);
  } else {
    refinement = static_cast<uint64_t>(code.weight_rank(word));
    const SymbolTable f1 = subset_symbols(cls->leader, true);
    const SymbolTable f0 = subset_symbols(cls->leader, false);
    std::array<int, kBlockDim> support_pos{}, rest_pos{};
    int ns = 0, nr = 0;
    split_positions(word, support_pos, ns, rest_pos, nr);

    std::array<int, kBlockDim> seq1{}, seq0{};
    for (int j = 0; j < ns; ++j) seq1[j] = f1.symbol_of(mags[support_pos[j]]);
    for (int j = 0; j < nr; ++j) seq0[j] = f0.symbol_of(mags[rest_pos[j]]);
    const uint64_t rank_f1 =
        detail::multiset_permutation_rank(std::span(seq1.data(), static_cast<size_t>(ns)), f1.counts);
    const uint64_t rank_f0 =
        detail::multiset_permutation_rank(std::span(seq0.data(), static_cast<size_t>(nr)), f0.counts);
    perm_rank = rank_f1 * cls->placements_f0 + rank_f0;

    int bit = 0;
    for (int j = 0; j < nr; ++j) {
      const int pos = rest_pos[j];
      if (point[pos] == 0) continue;
      if (point[pos] < 0) sign_code |= uint64_t{1} << bit;
      ++bit;
    }
    for (int j = 0; j + 1 < ns; ++j) {
      if (point[support_pos[j]] < 0) sign_code |= uint64_t{1} << bit;
      ++bit;
    }
  }

  const uint64_t local =
      (perm_rank << cls->sign_bits | sign_code) * cls->refinements + refinement;
  return cls->offset + local;
}

GlobalIndex encode_bound(const IntegerPoint& point, const CodebookLayout& layout) {
  return GlobalIndex{encode(point, layout), layout.fingerprint};
}

std::vector<uint8_t> pack_indices(std::span<const uint64_t> values, int bits_per_entry) {
  if (bits_per_entry < 1 || bits_per_entry > 64) {
    throw std::invalid_argument("pack_indices: width must be in [1,64]");
  }
  const uint64_t limit =
      bits_per_entry == 64 ? ~uint64_t{0} : (uint64_t{1} << bits_per_entry) - 1;
  std::vector<uint8_t> out((values.size() * static_cast<size_t>(bits_per_entry) + 7) / 8, 0);
  size_t bitpos = 0;
  for (uint64_t v : values) {
    if (v > limit) throw std::overflow_error("pack_indices: value exceeds the declared width");
    for (int b = 0; b < bits_per_entry; ++b, ++bitpos) {
      if ((v >> b) & 1u) out[bitpos >> 3] |= static_cast<uint8_t>(1u << (bitpos & 7));
    }
  }
  return out;
}

std::vector<uint64_t> unpack_indices(std::span<const uint8_t> stream, int bits_per_entry,
                                     size_t count) {
  if (bits_per_entry < 1 || bits_per_entry > 64) {
    throw std::invalid_argument("unpack_indices: width must be in [1,64]");
  }
  if (stream.size() * 8 < count * static_cast<size_t>(bits_per_entry)) {
    throw std::invalid_argument("unpack_indices: stream too short");
  }
  std::vector<uint64_t> out(count, 0);
  size_t bitpos = 0;
  for (size_t i = 0; i < count; ++i) {
    uint64_t v = 0;
    for (int b = 0; b < bits_per_entry; ++b, ++bitpos) {
      if ((stream[bitpos >> 3] >> (bitpos & 7)) & 1u) v |= uint64_t{1} << b;
    }
    out[i] = v;
  }
  return out;
}

}  // namespace llvq
