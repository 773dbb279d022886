#include "llvq/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "llvq/golay.hpp"

namespace llvq {
namespace {

constexpr double kSqrt8 = 2.8284271247461903;  // sqrt(8)

struct QueryOrder {
  std::array<int, kBlockDim> pos;     // positions sorted by |y| descending
  std::array<double, kBlockDim> u;    // |y| in that order
  std::array<int8_t, kBlockDim> neg;  // 1 where y < 0
};

// One class, reduced to a single 24-vector of magnitudes in consume order:
// even classes store support values descending then complement values
// descending, zero padded; odd classes store the signed values descending.
// With the per-codeword coefficient rows below, the class optimum for a
// codeword is one 24-wide dot product (plus a parity fix for even classes).
struct ClassTable {
  const ClassDescriptor* descriptor;
  int shell;
  bool odd;
  double norm;                         // sqrt(16 m)
  int support_weight;                  // even: w; odd: 0
  int sign_parity;                     // even with w > 0
  int table_slot;                      // shared coefficient table index
  double v1_last;                      // smallest support value (even, w > 0)
  std::array<double, kBlockDim> vals;  // consume-order magnitudes
  std::array<double, kBlockDim> mags;  // nonzero magnitudes descending (UB pairing)
  int nonzero;
  const std::vector<uint32_t>* words;
};

// Shared per-query coefficient tables: row r holds, for codeword r of the
// slot's word list, the |y| value consumed at each value index, signed by the
// consume side. Slots 0..4 are the even weight classes {0,8,12,16,24}; slot 5
// is the odd table over all 4096 codewords.
struct Workspace {
  std::array<std::vector<double>, 6> rows;
  std::array<std::vector<uint8_t>, 6> parity;  // even slots: support sign parity
  std::array<bool, 6> built{};
};

int even_slot(int weight) {
  switch (weight) {
    case 0: return 0;
    case 8: return 1;
    case 12: return 2;
    case 16: return 3;
    default: return 4;  // 24
  }
}
constexpr int kOddSlot = 5;

thread_local Workspace t_workspace;

void build_odd_table(Workspace& ws, const QueryOrder& q, const std::vector<uint32_t>& words) {
  auto& rows = ws.rows[kOddSlot];
  rows.resize(words.size() * kBlockDim);
  double* row = rows.data();
  for (uint32_t word : words) {
    int lo = 0, hi = kBlockDim - 1;
    for (int j = 0; j < kBlockDim; ++j) {
      const int flip = static_cast<int>((word >> q.pos[j]) & 1u) ^ static_cast<int>(q.neg[j]);
      // flip == 0: consume from the front with +u; flip == 1: back with -u
      const int idx = flip ? hi : lo;
      row[idx] = flip ? -q.u[j] : q.u[j];
      hi -= flip;
      lo += 1 - flip;
    }
    row += kBlockDim;
  }
  ws.built[kOddSlot] = true;
}

void build_even_table(Workspace& ws, const QueryOrder& q, int slot, int weight,
                      const std::vector<uint32_t>& words) {
  auto& rows = ws.rows[slot];
  auto& parity = ws.parity[slot];
  rows.resize(words.size() * kBlockDim);
  parity.resize(words.size());
  double* row = rows.data();
  for (size_t r = 0; r < words.size(); ++r) {
    const uint32_t word = words[r];
    int k1 = 0, k0 = weight, negs = 0;
    for (int j = 0; j < kBlockDim; ++j) {
      if ((word >> q.pos[j]) & 1u) {
        negs += q.neg[j];
        row[k1++] = q.u[j];
      } else {
        row[k0++] = q.u[j];
      }
    }
    parity[r] = static_cast<uint8_t>(negs & 1);
    row += kBlockDim;
  }
  ws.built[slot] = true;
}

double dot24(std::span<const double, kBlockDim> y, const IntegerPoint& p) {
  double s = 0;
  for (int i = 0; i < kBlockDim; ++i) s += y[i] * p[i];
  return s;
}

double dist24(std::span<const double, kBlockDim> y, const IntegerPoint& p) {
  double s = 0;
  for (int i = 0; i < kBlockDim; ++i) {
    const double d = y[i] - p[i];
    s += d * d;
  }
  return s;
}

// Best codeword of one class: dense scan over the shared coefficient rows.
size_t scan_class(const ClassTable& t, const Workspace& ws, double& best_dot) {
  const auto& rows = ws.rows[t.table_slot];
  const size_t count = t.words->size();
  const double* row = rows.data();
  const double* vals = t.vals.data();
  double best = -std::numeric_limits<double>::infinity();
  size_t best_r = 0;
  if (t.odd || t.support_weight == 0) {
    for (size_t r = 0; r < count; ++r, row += kBlockDim) {
      double dot = 0;
      for (int k = 0; k < kBlockDim; ++k) dot += row[k] * vals[k];
      if (dot > best) {
        best = dot;
        best_r = r;
      }
    }
  } else {
    const auto& parity = ws.parity[t.table_slot];
    const int w = t.support_weight;
    for (size_t r = 0; r < count; ++r, row += kBlockDim) {
      double dot = 0;
      for (int k = 0; k < kBlockDim; ++k) dot += row[k] * vals[k];
      if (parity[r] != t.sign_parity) dot -= 2.0 * row[w - 1] * t.v1_last;
      if (dot > best) {
        best = dot;
        best_r = r;
      }
    }
  }
  best_dot = best;
  return best_r;
}

// Materializes the arg-max point for (class, codeword) under the same rules.
IntegerPoint materialize(const ClassTable& t, const QueryOrder& q, uint32_t word) {
  IntegerPoint p{};
  if (t.odd) {
    int lo = 0, hi = kBlockDim - 1;
    for (int j = 0; j < kBlockDim; ++j) {
      const int i = q.pos[j];
      const int flip = static_cast<int>((word >> i) & 1u) ^ static_cast<int>(q.neg[j]);
      const double v = flip == 0 ? t.vals[lo++] : t.vals[hi--];
      // The coordinate is the signed value flipped by the codeword bit; the
      // input-sign flip only steered which value this slot consumed.
      p[i] = static_cast<int32_t>(std::lround(((word >> i) & 1u) ? -v : v));
    }
    return p;
  }
  const int w = t.support_weight;
  int k1 = 0, k0 = w, negs = 0;
  int last_pos = -1;
  for (int j = 0; j < kBlockDim; ++j) {
    const int i = q.pos[j];
    if ((word >> i) & 1u) {
      p[i] = static_cast<int32_t>(t.vals[k1++]);
      if (q.neg[j]) {
        p[i] = -p[i];
        ++negs;
      }
      last_pos = i;
    } else {
      const double v = k0 < kBlockDim ? t.vals[k0++] : 0.0;
      p[i] = static_cast<int32_t>(v);
      if (q.neg[j]) p[i] = -p[i];
    }
  }
  if (w > 0 && (negs & 1) != t.sign_parity) p[last_pos] = -p[last_pos];
  return p;
}

}  // namespace

struct LatticeSearcher::Impl {
  const CodebookLayout* layout;
  std::vector<ClassTable> tables;

  explicit Impl(const CodebookLayout& l) : layout(&l) {
    const auto& code = GolayCode::instance();
    tables.reserve(l.classes.size());
    for (const ClassDescriptor& d : l.classes) {
      ClassTable t{};
      t.descriptor = &d;
      t.shell = d.shell;
      t.odd = d.leader.parity == Parity::kOdd;
      t.norm = std::sqrt(16.0 * d.shell);
      t.support_weight = t.odd ? 0 : d.golay_weight;
      t.sign_parity = d.sign_parity;
      t.nonzero = 0;
      t.vals.fill(0.0);
      int n1 = 0;
      int n0 = t.odd ? 0 : d.golay_weight;
      std::vector<double> signedv;
      for (auto [value, count] : d.leader.levels) {  // values descending
        for (int k = 0; k < count; ++k) {
          if (value != 0) t.mags[t.nonzero++] = value;
          if (t.odd) {
            signedv.push_back(value % 4 == 1 ? value : -value);
          } else if (value % 4 == 2) {
            t.vals[n1++] = value;
          } else if (value != 0) {
            t.vals[n0++] = value;
          }
        }
      }
      if (t.odd) {
        std::sort(signedv.rbegin(), signedv.rend());
        std::copy(signedv.begin(), signedv.end(), t.vals.begin());
        t.words = &code.words();
        t.table_slot = kOddSlot;
        t.v1_last = 0.0;
      } else {
        t.words = &code.words_of_weight(d.golay_weight);
        t.table_slot = even_slot(d.golay_weight);
        t.v1_last = d.golay_weight > 0 ? t.vals[d.golay_weight - 1] : 0.0;
      }
      tables.push_back(t);
    }
  }

  SearchResult run(std::span<const double, kBlockDim> x, int m_lo, int m_hi, Metric metric,
                   bool exhaustive) const;
};

SearchResult LatticeSearcher::Impl::run(std::span<const double, kBlockDim> x, int m_lo, int m_hi,
                                        Metric metric, bool exhaustive) const {
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("search: non-finite input");
  }
  std::array<double, kBlockDim> y;
  double ynorm2 = 0;
  for (int i = 0; i < kBlockDim; ++i) {
    y[i] = kSqrt8 * x[i];
    ynorm2 += y[i] * y[i];
  }
  const double ynorm = std::sqrt(ynorm2);
  if (metric == Metric::kAngular && ynorm == 0.0) {
    throw std::domain_error("search: angular metric is undefined for the zero vector");
  }

  QueryOrder q;
  std::iota(q.pos.begin(), q.pos.end(), 0);
  std::array<double, kBlockDim> mag;
  for (int i = 0; i < kBlockDim; ++i) mag[i] = std::abs(y[i]);
  std::stable_sort(q.pos.begin(), q.pos.end(), [&](int a, int b) { return mag[a] > mag[b]; });
  for (int j = 0; j < kBlockDim; ++j) {
    q.u[j] = mag[q.pos[j]];
    q.neg[j] = y[q.pos[j]] < 0 ? 1 : 0;
  }

  // Upper bound on <y, p> per class: sorted pairing of magnitudes, all
  // constraints ignored. Converted to the metric's comparison scale.
  struct Candidate {
    const ClassTable* table;
    double bound;
  };
  std::vector<Candidate> order;
  order.reserve(tables.size());
  for (const ClassTable& t : tables) {
    if (t.shell < m_lo || t.shell > m_hi) continue;
    double ub_dot = 0;
    for (int j = 0; j < t.nonzero; ++j) ub_dot += t.mags[j] * q.u[j];
    const double bound =
        metric == Metric::kEuclidean ? 2.0 * ub_dot - 16.0 * t.shell : ub_dot / t.norm;
    order.push_back({&t, bound});
  }
  if (order.empty()) throw std::invalid_argument("search: empty shell range");
  std::stable_sort(order.begin(), order.end(),
                   [](const Candidate& a, const Candidate& b) { return a.bound > b.bound; });

  Workspace& ws = t_workspace;
  ws.built.fill(false);
  const auto& code = GolayCode::instance();

  const ClassTable* best_table = nullptr;
  IntegerPoint best_point{};
  double best_internal = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  uint64_t best_index = 0;
  bool best_index_valid = false;

  for (const Candidate& cand : order) {
    if (have_best && !exhaustive) {
      const double slack = 1e-9 * (1.0 + std::abs(best_internal));
      if (cand.bound < best_internal - slack) break;  // sorted: nothing later can win
    }
    const ClassTable& t = *cand.table;
    if (!ws.built[t.table_slot]) {
      if (t.odd) {
        build_odd_table(ws, q, code.words());
      } else {
        build_even_table(ws, q, t.table_slot, t.support_weight, *t.words);
      }
    }
    double class_dot;
    const size_t best_r = scan_class(t, ws, class_dot);
    const IntegerPoint p = materialize(t, q, (*t.words)[best_r]);
    // Canonical scoring keeps the fast path and any exhaustive oracle on the
    // same comparison basis.
    const double internal = metric == Metric::kEuclidean ? 2.0 * dot24(y, p) - 16.0 * t.shell
                                                         : dot24(y, p) / t.norm;
    if (!have_best || internal > best_internal) {
      have_best = true;
      best_internal = internal;
      best_table = &t;
      best_point = p;
      best_index_valid = false;
    } else if (internal == best_internal) {
      if (!best_index_valid) {
        best_index = encode(best_point, *layout);
        best_index_valid = true;
      }
      const uint64_t idx = encode(p, *layout);
      if (idx < best_index) {
        best_table = &t;
        best_point = p;
        best_index = idx;
      }
    }
  }

  SearchResult result;
  result.point = best_point;
  result.index = best_index_valid ? best_index : encode(best_point, *layout);
  if (metric == Metric::kEuclidean) {
    result.score = dist24(y, best_point) / 8.0;
  } else {
    result.score = dot24(y, best_point) / (ynorm * best_table->norm);
  }
  return result;
}

LatticeSearcher::LatticeSearcher(const CodebookLayout& layout)
    : impl_(std::make_unique<Impl>(layout)) {}
LatticeSearcher::~LatticeSearcher() = default;
LatticeSearcher::LatticeSearcher(LatticeSearcher&&) noexcept = default;
LatticeSearcher& LatticeSearcher::operator=(LatticeSearcher&&) noexcept = default;

const CodebookLayout& LatticeSearcher::layout() const { return *impl_->layout; }

SearchResult LatticeSearcher::nearest(std::span<const double, kBlockDim> x,
                                      const SearchConfig& config) const {
  if (config.max_shell < 2 || config.max_shell > impl_->layout->max_shell) {
    throw std::invalid_argument("search: shell bound outside the layout");
  }
  return impl_->run(x, 2, config.max_shell, config.metric, config.exhaustive);
}

SearchResult LatticeSearcher::nearest_in_shells(std::span<const double, kBlockDim> x, int m_lo,
                                                int m_hi, Metric metric, bool exhaustive) const {
  if (m_lo < 2 || m_hi > impl_->layout->max_shell || m_lo > m_hi) {
    throw std::invalid_argument("search: invalid shell range");
  }
  return impl_->run(x, m_lo, m_hi, metric, exhaustive);
}

std::vector<SearchResult> LatticeSearcher::nearest_batch(std::span<const double> xs,
                                                         const SearchConfig& config,
                                                         int threads) const {
  if (xs.size() % kBlockDim != 0) {
    throw std::invalid_argument("search: batch length must be a multiple of 24");
  }
  const size_t n = xs.size() / kBlockDim;
  std::vector<SearchResult> results(n);
  if (n == 0) return results;

  unsigned hw = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  hw = std::max(1u, std::min<unsigned>(hw, static_cast<unsigned>(n)));

  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&](size_t begin, size_t end) {
    try {
      for (size_t i = begin; i < end; ++i) {
        results[i] = nearest(
            std::span<const double, kBlockDim>(xs.data() + i * kBlockDim, kBlockDim), config);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (hw == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (n + hw - 1) / hw;
    for (unsigned tix = 0; tix < hw; ++tix) {
      const size_t begin = tix * chunk;
      const size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace llvq
