#include "llvq/verify.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <ostream>
#include <sstream>

#include "llvq/detail/rng.hpp"
#include "llvq/golay.hpp"
#include "llvq/lattice.hpp"

namespace llvq::verify {
namespace {

CheckResult make(std::string name, bool passed, std::string detail = {}) {
  return CheckResult{std::move(name), passed, std::move(detail)};
}

}  // namespace

uint64_t reference_shell_size(int m) {
  switch (m) {
    case 2: return 196'560ull;
    case 3: return 16'773'120ull;
    case 4: return 398'034'000ull;
    case 5: return 4'629'381'120ull;
    default: return 0;
  }
}

std::vector<CheckResult> golay_checks(bool exhaustive) {
  std::vector<CheckResult> out;
  const auto& code = GolayCode::instance();

  out.push_back(make("golay codeword count", code.words().size() == GolayCode::kSize));

  int counts[5] = {0, 0, 0, 0, 0};
  bool weights_valid = true;
  for (uint32_t w : code.words()) {
    switch (std::popcount(w)) {
      case 0: counts[0]++; break;
      case 8: counts[1]++; break;
      case 12: counts[2]++; break;
      case 16: counts[3]++; break;
      case 24: counts[4]++; break;
      default: weights_valid = false;
    }
  }
  out.push_back(make("golay weight enumerator (1,759,2576,759,1)",
                     weights_valid && counts[0] == 1 && counts[1] == 759 && counts[2] == 2576 &&
                         counts[3] == 759 && counts[4] == 1));

  bool closed = true;
  detail::Rng rng(12345);
  for (int i = 0; i < 100 && closed; ++i) {
    const uint32_t a = code.unrank(static_cast<int>(rng.next() % GolayCode::kSize));
    const uint32_t b = code.unrank(static_cast<int>(rng.next() % GolayCode::kSize));
    closed = GolayCode::contains(a ^ b);
  }
  out.push_back(make("golay XOR closure (100 random pairs)", closed));

  bool bijective = true;
  for (int r = 0; r < GolayCode::kSize && bijective; ++r) {
    bijective = code.rank(code.unrank(r)) == r;
  }
  out.push_back(make("golay rank/unrank bijection", bijective));

  if (exhaustive) {
    uint64_t members = 0;
    for (uint32_t w = 0; w < (1u << 24); ++w) {
      if (GolayCode::contains(w)) ++members;
    }
    out.push_back(make("golay exhaustive 2^24 membership count", members == GolayCode::kSize,
                       "found " + std::to_string(members)));
  }
  return out;
}

std::vector<CheckResult> shell_checks(int max_m, std::ostream* table_out) {
  std::vector<CheckResult> out;
  const auto classes = enumerate_classes(max_m);

  uint64_t cumulative = 0;
  for (int m = 2; m <= max_m; ++m) {
    uint64_t size = 0;
    if (table_out) {
      *table_out << "shell m=" << m << " (squared norm " << 2 * m << "):\n";
    }
    for (const auto& d : classes) {
      if (d.shell != m) continue;
      size += d.cardinality;
      if (table_out) {
        *table_out << "  " << d.leader.to_string() << "  A=" << d.refinements
                   << " B=" << d.sign_bits << "  cardinality=" << d.cardinality
                   << "  offset=" << d.offset << "\n";
      }
    }
    cumulative += size;
    if (table_out) {
      *table_out << "  n(" << m << ") = " << size << ", N(" << m << ") = " << cumulative
                 << ", bits/dim = " << std::bit_width(cumulative - 1) / 24.0 << "\n";
    }
    if (const uint64_t want = reference_shell_size(m); want != 0) {
      out.push_back(make("shell size n(" + std::to_string(m) + ")", size == want,
                         "computed " + std::to_string(size)));
    }
    if (m == 13) {
      out.push_back(make("cumulative count N(13)", cumulative == kReferenceCumulative13,
                         "computed " + std::to_string(cumulative)));
      out.push_back(make("bits/dim at N(13) = 2.000",
                         std::bit_width(cumulative - 1) == 48));
    }
  }
  return out;
}

bool bijectivity_spot_check(const CodebookLayout& layout, int64_t samples, uint64_t seed) {
  detail::Rng rng(seed);
  for (int64_t i = 0; i < samples; ++i) {
    const uint64_t index = rng.next() % layout.total;
    IntegerPoint p;
    try {
      p = decode(index, layout);
      if (encode(p, layout) != index) return false;
    } catch (const std::exception&) {
      return false;
    }
    if (classify_point(p) == PointClass::kNotInLattice) return false;
  }
  return true;
}

std::vector<CheckResult> codec_checks(const CodebookLayout& layout, int64_t samples,
                                      uint64_t seed) {
  std::vector<CheckResult> out;

  out.push_back(make("codec decode/encode round-trip (" + std::to_string(samples) + " indices)",
                     bijectivity_spot_check(layout, samples, seed)));

  // norm monotonicity: decode(i) lies in shell k iff N(k-1) <= i < N(k)
  bool monotone = true;
  detail::Rng rng(seed + 1);
  for (int64_t i = 0; i < std::min<int64_t>(samples, 1000) && monotone; ++i) {
    const uint64_t index = rng.next() % layout.total;
    const IntegerPoint p = decode(index, layout);
    monotone = squared_norm(p) == 16LL * layout.shell_of_index(index);
  }
  out.push_back(make("codec norm monotonicity", monotone));

  if (layout.total >= 196'560) {
    std::vector<uint8_t> seen(196'560, 0);
    uint64_t count = 0;
    bool ok = true;
    enumerate_shell_points(2, [&](const IntegerPoint& p) {
      ++count;
      const uint64_t idx = encode(p, layout);
      if (idx >= 196'560 || seen[idx]) ok = false;
      else seen[idx] = 1;
    });
    out.push_back(make("codec exhaustive Shell(2) bijection",
                       ok && count == 196'560,
                       "points " + std::to_string(count)));
  }
  return out;
}

}  // namespace llvq::verify
