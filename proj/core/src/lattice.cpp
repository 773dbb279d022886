#include "llvq/lattice.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "llvq/detail/combinatorics.hpp"
#include "llvq/golay.hpp"

namespace llvq {
namespace {

constexpr uint64_t kCardinalityLimit = std::numeric_limits<int64_t>::max();

bool is_golay_weight(int w) { return GolayCode::weight_count(w) > 0; }

uint64_t checked_mul(uint64_t a, uint64_t b) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  if (p > kCardinalityLimit) throw std::overflow_error("lattice: cardinality exceeds 2^63");
  return static_cast<uint64_t>(p);
}

// Arrangement count of one value group list: multinomial(sum; multiplicities).
uint64_t arrangements(const std::vector<std::pair<int, int>>& levels, bool support) {
  uint64_t result = 1;
  int placed = 0;
  for (auto [value, count] : levels) {
    const bool in_support = (value % 4 == 2);
    if (in_support != support) continue;
    placed += count;
    result = checked_mul(result, detail::binomial(placed, count));
  }
  return result;
}

// Builds a descriptor from a leader, or returns false if the class is empty
// (inadmissible support weight, or weight 0 with an incompatible sum).
bool make_descriptor(const Leader& leader, int m, ClassDescriptor& out) {
  out = ClassDescriptor{};
  out.leader = leader;
  out.shell = m;
  if (leader.parity == Parity::kOdd) {
    out.golay_weight = 0;
    out.refinements = GolayCode::kSize;
    out.sign_bits = 0;
    out.sign_parity = 0;
    out.placements_f1 = 1;
    uint64_t perms = 1;
    int placed = 0;
    for (auto [value, count] : leader.levels) {
      (void)value;
      placed += count;
      perms = checked_mul(perms, detail::binomial(placed, count));
    }
    out.placements_f0 = perms;
    out.cardinality = checked_mul(out.refinements, perms);
    return true;
  }

  int support = 0;     // coordinates ≡ 2 (mod 4)
  int free_signs = 0;  // nonzero coordinates ≡ 0 (mod 4)
  int64_t abs_sum = 0;
  for (auto [value, count] : leader.levels) {
    abs_sum += static_cast<int64_t>(value) * count;
    if (value % 4 == 2) {
      support += count;
    } else if (value != 0) {
      free_signs += count;
    }
  }
  if (!is_golay_weight(support)) return false;
  if (support == 0 && abs_sum % 8 != 0) return false;  // no sign pattern can fix the sum

  out.golay_weight = support;
  out.refinements = static_cast<uint32_t>(GolayCode::weight_count(support));
  out.sign_bits = free_signs + (support > 0 ? support - 1 : 0);
  out.sign_parity = static_cast<int>((abs_sum % 8) / 4);
  out.placements_f1 = arrangements(leader.levels, true);
  out.placements_f0 = arrangements(leader.levels, false);
  uint64_t card = checked_mul(out.refinements, uint64_t{1} << out.sign_bits);
  card = checked_mul(card, out.placements_f1);
  out.cardinality = checked_mul(card, out.placements_f0);
  return true;
}

// Enumerates leaders of the given parity for shell m: multisets of
// non-negative values of that parity with squared sum 16m over 24 coordinates
// (odd leaders use all 24, even leaders are padded with zeros).
void leaders_for_shell(int m, Parity parity, std::vector<Leader>& out) {
  const int64_t target = 16LL * m;
  const int step_start = (parity == Parity::kOdd) ? 1 : 2;
  std::vector<int> values;
  for (int v = step_start; static_cast<int64_t>(v) * v <= target; v += 2) values.push_back(v);
  std::sort(values.rbegin(), values.rend());

  std::vector<std::pair<int, int>> current;
  auto recurse = [&](auto&& self, size_t idx, int64_t remaining, int used) -> void {
    if (remaining == 0) {
      if (parity == Parity::kOdd && used != kBlockDim) return;
      Leader leader;
      leader.levels = current;
      if (parity == Parity::kEven && used < kBlockDim) {
        leader.levels.emplace_back(0, kBlockDim - used);
      }
      leader.parity = parity;
      out.push_back(std::move(leader));
      return;
    }
    if (idx >= values.size()) return;
    const int v = values[idx];
    const int64_t sq = static_cast<int64_t>(v) * v;
    int max_count = static_cast<int>(std::min<int64_t>(kBlockDim - used, remaining / sq));
    for (int c = max_count; c >= 1; --c) {
      current.emplace_back(v, c);
      self(self, idx + 1, remaining - c * sq, used + c);
      current.pop_back();
    }
    self(self, idx + 1, remaining, used);
  };
  recurse(recurse, 0, target, 0);
}

// Descending-value-sequence lexicographic order on leaders.
bool leader_less(const Leader& a, const Leader& b) {
  const size_t n = std::min(a.levels.size(), b.levels.size());
  for (size_t i = 0; i < n; ++i) {
    if (a.levels[i] != b.levels[i]) return a.levels[i] < b.levels[i];
  }
  return a.levels.size() < b.levels.size();
}

std::vector<ClassDescriptor> shell_classes(int m) {
  std::vector<Leader> leaders;
  leaders_for_shell(m, Parity::kEven, leaders);
  size_t even_end = leaders.size();
  leaders_for_shell(m, Parity::kOdd, leaders);
  std::sort(leaders.begin(), leaders.begin() + even_end, leader_less);
  std::sort(leaders.begin() + even_end, leaders.end(), leader_less);

  std::vector<ClassDescriptor> classes;
  for (const Leader& leader : leaders) {
    ClassDescriptor d;
    if (make_descriptor(leader, m, d)) classes.push_back(std::move(d));
  }
  for (size_t i = 0; i < classes.size(); ++i) classes[i].class_rank = static_cast<int>(i);
  return classes;
}

}  // namespace

int64_t squared_norm(const IntegerPoint& x) {
  int64_t n = 0;
  for (int32_t c : x) n += static_cast<int64_t>(c) * c;
  return n;
}

PointClass classify_point(const IntegerPoint& x) {
  const int parity = x[0] & 1;
  int64_t sum = 0;
  uint32_t word = 0;
  for (int i = 0; i < kBlockDim; ++i) {
    if ((x[i] & 1) != parity) return PointClass::kNotInLattice;
    sum += x[i];
    const int32_t half = (x[i] - parity) / 2;  // exact: x[i] - parity is even
    word |= static_cast<uint32_t>(half & 1) << i;
  }
  if (!GolayCode::contains(word)) return PointClass::kNotInLattice;
  const int64_t sum_mod = ((sum % 8) + 8) % 8;
  if (parity == 0) {
    return sum_mod == 0 ? PointClass::kEven : PointClass::kNotInLattice;
  }
  return sum_mod == 4 ? PointClass::kOdd : PointClass::kNotInLattice;
}

std::string Leader::to_string() const {
  std::string s = parity == Parity::kEven ? "even{" : "odd{";
  for (size_t i = 0; i < levels.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(levels[i].first);
    s += '^';
    s += std::to_string(levels[i].second);
  }
  s += '}';
  return s;
}

std::vector<ClassDescriptor> enumerate_classes(int max_shell) {
  if (max_shell < 2) throw std::invalid_argument("enumerate_classes: shell bound must be >= 2");
  std::vector<ClassDescriptor> all;
  uint64_t offset = 0;
  for (int m = 2; m <= max_shell; ++m) {
    for (ClassDescriptor& d : shell_classes(m)) {
      d.offset = offset;
      if (offset > kCardinalityLimit - d.cardinality) {
        throw std::overflow_error("lattice: cumulative count exceeds 2^63");
      }
      offset += d.cardinality;
      all.push_back(std::move(d));
    }
  }
  return all;
}

uint64_t shell_size(int m) {
  if (m < 2) throw std::invalid_argument("shell_size: shell index must be >= 2");
  uint64_t total = 0;
  for (const ClassDescriptor& d : shell_classes(m)) total += d.cardinality;
  return total;
}

uint64_t cumulative_count(int max_shell) {
  if (max_shell < 2) throw std::invalid_argument("cumulative_count: shell bound must be >= 2");
  uint64_t total = 0;
  for (int m = 2; m <= max_shell; ++m) total += shell_size(m);
  return total;
}

namespace {

// Distinct permutations of `values` (sorted ascending on entry), emitted in
// lexicographic order via std::next_permutation.
template <typename Fn>
void for_each_multiset_perm(std::vector<int> values, Fn&& fn) {
  std::sort(values.begin(), values.end());
  do {
    fn(values);
  } while (std::next_permutation(values.begin(), values.end()));
}

void expand_even_class(const ClassDescriptor& d,
                       const std::function<void(const IntegerPoint&)>& sink) {
  const auto& code = GolayCode::instance();
  std::vector<int> support_values;
  std::vector<int> rest_values;
  for (auto [value, count] : d.leader.levels) {
    auto& dst = (value % 4 == 2) ? support_values : rest_values;
    dst.insert(dst.end(), count, value);
  }
  for (uint32_t c : code.words_of_weight(d.golay_weight)) {
    std::array<int, kBlockDim> support_pos{};
    std::array<int, kBlockDim> rest_pos{};
    int ns = 0, nr = 0;
    for (int i = 0; i < kBlockDim; ++i) {
      if ((c >> i) & 1u) support_pos[ns++] = i;
      else rest_pos[nr++] = i;
    }
    for_each_multiset_perm(support_values, [&](const std::vector<int>& p1) {
      for_each_multiset_perm(rest_values, [&](const std::vector<int>& p0) {
        IntegerPoint base{};
        for (int j = 0; j < ns; ++j) base[support_pos[j]] = p1[j];
        for (int j = 0; j < nr; ++j) base[rest_pos[j]] = p0[j];
        std::array<int, kBlockDim> nz{};
        int nnz = 0;
        for (int i = 0; i < kBlockDim; ++i) {
          if (base[i] != 0) nz[nnz++] = i;
        }
        for (uint32_t mask = 0; mask < (1u << nnz); ++mask) {
          int neg_support = 0;
          IntegerPoint x = base;
          for (int k = 0; k < nnz; ++k) {
            if ((mask >> k) & 1u) {
              x[nz[k]] = -x[nz[k]];
              if ((c >> nz[k]) & 1u) ++neg_support;
            }
          }
          if ((neg_support & 1) == d.sign_parity) sink(x);
        }
      });
    });
  }
}

void expand_odd_class(const ClassDescriptor& d,
                      const std::function<void(const IntegerPoint&)>& sink) {
  const auto& code = GolayCode::instance();
  std::vector<int> values;
  for (auto [value, count] : d.leader.levels) values.insert(values.end(), count, value);
  for (uint32_t c : code.words()) {
    for_each_multiset_perm(values, [&](const std::vector<int>& perm) {
      IntegerPoint x{};
      for (int i = 0; i < kBlockDim; ++i) {
        const int need = ((c >> i) & 1u) ? 3 : 1;
        x[i] = (perm[i] % 4 == need) ? perm[i] : -perm[i];
      }
      sink(x);
    });
  }
}

}  // namespace

void enumerate_shell_points(int m, const std::function<void(const IntegerPoint&)>& sink,
                            uint64_t cap) {
  if (shell_size(m) > cap) {
    throw std::length_error("enumerate_shell_points: shell exceeds the enumeration cap");
  }
  for (const ClassDescriptor& d : shell_classes(m)) {
    enumerate_class_points(d, sink, cap);
  }
}

void enumerate_class_points(const ClassDescriptor& descriptor,
                            const std::function<void(const IntegerPoint&)>& sink, uint64_t cap) {
  if (descriptor.cardinality > cap) {
    throw std::length_error("enumerate_class_points: class exceeds the enumeration cap");
  }
  if (descriptor.leader.parity == Parity::kEven) {
    expand_even_class(descriptor, sink);
  } else {
    expand_odd_class(descriptor, sink);
  }
}

}  // namespace llvq
