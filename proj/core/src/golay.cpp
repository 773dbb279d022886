#include "llvq/golay.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace llvq {
namespace {

// Systematic generator [I | B]. B is the 12x12 bordered circulant built from
// the quadratic residues {0,1,3,4,5,9} mod 11, with an all-ones border row and
// column and border bit 0. Weight enumerator of the span: (1,759,2576,759,1).
constexpr std::array<uint32_t, 12> kGeneratorRows = {
    0xdc5001u, 0xb8b002u, 0xf16004u, 0xe2d008u,
    0xc5b010u, 0x8b7020u, 0x96e040u, 0xadc080u,
    0xdb8100u, 0xb71200u, 0xee2400u, 0x7ff800u,
};

int weight_slot(int weight) {
  switch (weight) {
    case 0: return 0;
    case 8: return 1;
    case 12: return 2;
    case 16: return 3;
    case 24: return 4;
    default: return -1;
  }
}

}  // namespace

const std::array<uint32_t, GolayCode::kDimension>& GolayCode::generator_rows() {
  return kGeneratorRows;
}

const GolayCode& GolayCode::instance() {
  static const GolayCode code;
  return code;
}

bool GolayCode::contains(uint32_t word) {
  if (word & ~kWordMask) return false;
  for (uint32_t row : kGeneratorRows) {
    if (std::popcount(word & row) & 1) return false;
  }
  return true;
}

GolayCode::GolayCode() {
  words_.reserve(kSize);
  for (uint32_t mask = 0; mask < kSize; ++mask) {
    uint32_t w = 0;
    for (int i = 0; i < kDimension; ++i) {
      if ((mask >> i) & 1u) w ^= kGeneratorRows[i];
    }
    words_.push_back(w);
  }
  std::sort(words_.begin(), words_.end());
  for (uint32_t w : words_) {
    int slot = weight_slot(std::popcount(w));
    if (slot < 0) throw std::logic_error("golay: generator span has an invalid weight");
    by_weight_[slot].push_back(w);
  }
}

const std::vector<uint32_t>& GolayCode::words_of_weight(int weight) const {
  int slot = weight_slot(weight);
  if (slot < 0) throw std::invalid_argument("golay: weight must be one of {0,8,12,16,24}");
  return by_weight_[slot];
}

int GolayCode::weight_count(int weight) {
  switch (weight) {
    case 0:
    case 24: return 1;
    case 8:
    case 16: return 759;
    case 12: return 2576;
    default: return 0;
  }
}

int GolayCode::rank(uint32_t word) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), word);
  if (it == words_.end() || *it != word) {
    throw std::invalid_argument("golay: rank of a non-codeword");
  }
  return static_cast<int>(it - words_.begin());
}

uint32_t GolayCode::unrank(int r) const {
  if (r < 0 || r >= kSize) throw std::out_of_range("golay: rank out of [0,4096)");
  return words_[static_cast<size_t>(r)];
}

int GolayCode::weight_rank(uint32_t word) const {
  int slot = weight_slot(std::popcount(word));
  if (slot < 0 || !contains(word)) {
    throw std::invalid_argument("golay: weight_rank of a non-codeword");
  }
  const auto& list = by_weight_[slot];
  auto it = std::lower_bound(list.begin(), list.end(), word);
  if (it == list.end() || *it != word) {
    throw std::invalid_argument("golay: weight_rank of a non-codeword");
  }
  return static_cast<int>(it - list.begin());
}

uint32_t GolayCode::weight_unrank(int weight, int r) const {
  const auto& list = words_of_weight(weight);
  if (r < 0 || static_cast<size_t>(r) >= list.size()) {
    throw std::out_of_range("golay: weight rank out of range");
  }
  return list[static_cast<size_t>(r)];
}

}  // namespace llvq
