#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>
#include <stdexcept>

#include "llvq/detail/rng.hpp"
#include "llvq/golay.hpp"

using llvq::GolayCode;

TEST_CASE("golay spans 4096 distinct sorted words, zero word first") {
  const auto& code = GolayCode::instance();
  REQUIRE(code.words().size() == 4096);
  CHECK(code.words().front() == 0);
  CHECK(std::is_sorted(code.words().begin(), code.words().end()));
  std::set<uint32_t> distinct(code.words().begin(), code.words().end());
  CHECK(distinct.size() == 4096);
}

TEST_CASE("golay weight enumerator is (1,759,2576,759,1)") {
  const auto& code = GolayCode::instance();
  CHECK(code.words_of_weight(0).size() == 1);
  CHECK(code.words_of_weight(8).size() == 759);
  CHECK(code.words_of_weight(12).size() == 2576);
  CHECK(code.words_of_weight(16).size() == 759);
  CHECK(code.words_of_weight(24).size() == 1);
  CHECK(code.words_of_weight(24).front() == GolayCode::kWordMask);
  CHECK_THROWS_AS(code.words_of_weight(4), std::invalid_argument);
  for (uint32_t w : code.words()) {
    const int weight = std::popcount(w);
    CHECK((weight == 0 || weight == 8 || weight == 12 || weight == 16 || weight == 24));
  }
}

TEST_CASE("golay closed under XOR") {
  const auto& code = GolayCode::instance();
  llvq::detail::Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const uint32_t a = code.unrank(static_cast<int>(rng.next() % 4096));
    const uint32_t b = code.unrank(static_cast<int>(rng.next() % 4096));
    CHECK(GolayCode::contains(a ^ b));
  }
}

TEST_CASE("golay membership via syndrome agrees with the table") {
  const auto& code = GolayCode::instance();
  CHECK(GolayCode::contains(0));
  CHECK(!GolayCode::contains(1));        // weight 1
  CHECK(!GolayCode::contains(1u << 23)); // weight 1, high coordinate
  std::set<uint32_t> table(code.words().begin(), code.words().end());
  llvq::detail::Rng rng(7);
  for (int i = 0; i < 200000; ++i) {
    const uint32_t w = static_cast<uint32_t>(rng.next()) & GolayCode::kWordMask;
    CHECK(GolayCode::contains(w) == (table.count(w) > 0));
  }
}

TEST_CASE("golay rank/unrank are mutually inverse") {
  const auto& code = GolayCode::instance();
  CHECK(code.rank(0) == 0);
  CHECK(code.rank(code.unrank(4095)) == 4095);
  for (int r = 0; r < 4096; ++r) CHECK(code.rank(code.unrank(r)) == r);
  CHECK_THROWS_AS(code.rank(3), std::invalid_argument);
  CHECK_THROWS_AS(code.unrank(4096), std::out_of_range);

  for (int weight : {0, 8, 12, 16, 24}) {
    const auto& list = code.words_of_weight(weight);
    for (int r = 0; r < static_cast<int>(list.size()); r += 7) {
      CHECK(code.weight_rank(code.weight_unrank(weight, r)) == r);
    }
  }
}

TEST_CASE("generator rows are codewords of the advertised form") {
  const auto& rows = GolayCode::generator_rows();
  for (int i = 0; i < 12; ++i) {
    CHECK(GolayCode::contains(rows[i]));
    // systematic part: information bit i only
    CHECK((rows[i] & 0xfffu) == (1u << i));
  }
}
