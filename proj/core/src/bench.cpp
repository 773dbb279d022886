#include "llvq/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "llvq/detail/parallel.hpp"
#include "llvq/detail/rng.hpp"

namespace llvq {
namespace {

constexpr int64_t kBatchBlocks = 256;  // fixed batch size keeps substreams stable

uint64_t batch_seed(uint64_t seed, int64_t batch) {
  uint64_t s = seed ^ (0x9e3779b97f4a7c15ull + static_cast<uint64_t>(batch));
  return detail::splitmix64(s);
}

void fill_gaussian_batch(uint64_t seed, int64_t batch, int64_t blocks, double* out) {
  detail::GaussianSource gauss(batch_seed(seed, batch));
  for (int64_t i = 0; i < blocks * kBlockDim; ++i) out[i] = gauss.next();
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014327; }
double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }

}  // namespace

RDReport make_rd_report(double bits_per_dim, double mse, int64_t n_blocks, std::string config) {
  RDReport r;
  r.bits_per_dim = bits_per_dim;
  r.mse = mse;
  r.sqnr_bits = -0.5 * std::log2(mse);
  r.retention_pct = 100.0 * r.sqnr_bits / bits_per_dim;
  r.n_blocks = n_blocks;
  r.config = std::move(config);
  return r;
}

RDReport gaussian_rd(const CodebookLayout& layout, const QuantizerConfig& config,
                     int64_t n_blocks, uint64_t seed, int threads) {
  if (n_blocks < 1) throw std::invalid_argument("gaussian_rd: need at least one block");
  const int64_t batches = (n_blocks + kBatchBlocks - 1) / kBatchBlocks;
  LatticeSearcher searcher(layout);
  BlockQuantizer quantizer(layout, searcher, config);

  // Pass 1: tensor scale from the sample's mean block norm.
  std::vector<double> batch_norm(static_cast<size_t>(batches), 0.0);
  detail::parallel_chunks(static_cast<size_t>(batches), threads, [&](size_t begin, size_t end) {
    std::vector<double> data(static_cast<size_t>(kBatchBlocks) * kBlockDim);
    for (size_t b = begin; b < end; ++b) {
      const int64_t blocks =
          std::min<int64_t>(kBatchBlocks, n_blocks - static_cast<int64_t>(b) * kBatchBlocks);
      fill_gaussian_batch(seed, static_cast<int64_t>(b), blocks, data.data());
      double acc = 0;
      for (int64_t k = 0; k < blocks; ++k) {
        double n2 = 0;
        for (int i = 0; i < kBlockDim; ++i) {
          const double v = data[static_cast<size_t>(k * kBlockDim + i)];
          n2 += v * v;
        }
        acc += std::sqrt(n2);
      }
      batch_norm[b] = acc;
    }
  });
  double mean_norm = 0;
  for (double v : batch_norm) mean_norm += v;  // fixed reduction order
  mean_norm /= static_cast<double>(n_blocks);

  const bool spherical = config.mode == QuantMode::kSphericalShaping;
  const double beta = spherical ? mean_norm / mean_codeword_norm(layout)
                                : mean_norm / chi_mean(kBlockDim);

  // One quantization pass. Spherical shaping then refines the tensor scale by
  // one projection pass over the chosen shapes; the rescaled error follows in
  // closed form from the accumulated <q,w>, <q,q> and ||w||^2.
  std::vector<double> acc_err(static_cast<size_t>(batches), 0.0);
  std::vector<double> acc_qw(static_cast<size_t>(batches), 0.0);
  std::vector<double> acc_qq(static_cast<size_t>(batches), 0.0);
  std::vector<double> acc_ww(static_cast<size_t>(batches), 0.0);
  detail::parallel_chunks(static_cast<size_t>(batches), threads, [&](size_t begin, size_t end) {
    std::vector<double> data(static_cast<size_t>(kBatchBlocks) * kBlockDim);
    for (size_t b = begin; b < end; ++b) {
      const int64_t blocks =
          std::min<int64_t>(kBatchBlocks, n_blocks - static_cast<int64_t>(b) * kBatchBlocks);
      fill_gaussian_batch(seed, static_cast<int64_t>(b), blocks, data.data());
      double err = 0, qw = 0, qq = 0, ww = 0;
      for (int64_t k = 0; k < blocks; ++k) {
        std::span<const double, kBlockDim> w(data.data() + k * kBlockDim, kBlockDim);
        const QuantizedBlock qb = quantizer.quantize(w, beta);
        const auto rec = quantizer.dequantize(qb, beta);
        for (int i = 0; i < kBlockDim; ++i) {
          const double d = w[i] - rec[i];
          err += d * d;
          if (spherical) {
            const double shape = rec[i] / beta;  // decoded point at unit scale
            qw += shape * w[i];
            qq += shape * shape;
            ww += w[i] * w[i];
          }
        }
      }
      acc_err[b] = err;
      acc_qw[b] = qw;
      acc_qq[b] = qq;
      acc_ww[b] = ww;
    }
  });
  double err = 0, qw = 0, qq = 0, ww = 0;
  for (size_t b = 0; b < acc_err.size(); ++b) {
    err += acc_err[b];
    qw += acc_qw[b];
    qq += acc_qq[b];
    ww += acc_ww[b];
  }
  double mse = err / (static_cast<double>(n_blocks) * kBlockDim);
  if (spherical && qq > 0) {
    // ||w - beta1 q||^2 summed, with beta1 = <q,w>/<q,q> the one-pass refit
    mse = (ww - qw * qw / qq) / (static_cast<double>(n_blocks) * kBlockDim);
  }

  const double bits = static_cast<double>(config.bits_per_block(layout)) / kBlockDim;
  std::string label = spherical ? "spherical_shaping"
                      : config.mode == QuantMode::kShapeGainIndependent
                          ? "shapegain_independent"
                          : "shapegain_optimal_scale";
  label += " M=" + std::to_string(config.max_shell);
  if (!spherical) label += " gain_bits=" + std::to_string(config.gain_bits);
  return make_rd_report(bits, mse, n_blocks, std::move(label));
}

double ScalarQuantizer::quantize(double x) const {
  size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const size_t mid = (lo + hi) / 2;
    if (x > 0.5 * (levels[mid] + levels[mid + 1])) lo = mid + 1;
    else hi = mid;
  }
  return levels[lo];
}

ScalarQuantizer lloyd_max_gaussian(int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("lloyd_max: bits out of range");
  const int n = 1 << bits;
  ScalarQuantizer q;
  q.levels.resize(n);
  for (int i = 0; i < n; ++i) {
    // equal-mass quantile start via bisection
    const double p = (i + 0.5) / n;
    double lo = -10, hi = 10;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    q.levels[i] = 0.5 * (lo + hi);
  }
  for (int it = 0; it < 100000; ++it) {
    double max_move = 0;
    std::vector<double> next(q.levels.size());
    for (int i = 0; i < n; ++i) {
      const double a = i == 0 ? -std::numeric_limits<double>::infinity()
                              : 0.5 * (q.levels[i - 1] + q.levels[i]);
      const double b = i + 1 == n ? std::numeric_limits<double>::infinity()
                                  : 0.5 * (q.levels[i] + q.levels[i + 1]);
      const double mass = normal_cdf(b) - normal_cdf(a);
      const double m1 = (std::isinf(a) ? 0.0 : normal_pdf(a)) - (std::isinf(b) ? 0.0 : normal_pdf(b));
      next[i] = m1 / mass;
      max_move = std::max(max_move, std::abs(next[i] - q.levels[i]));
    }
    q.levels = std::move(next);
    if (max_move < 1e-14) break;
  }
  // MSE at the fixed point: 1 - sum level^2 * mass
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    const double a = i == 0 ? -std::numeric_limits<double>::infinity()
                            : 0.5 * (q.levels[i - 1] + q.levels[i]);
    const double b = i + 1 == n ? std::numeric_limits<double>::infinity()
                                : 0.5 * (q.levels[i] + q.levels[i + 1]);
    acc += q.levels[i] * q.levels[i] * (normal_cdf(b) - normal_cdf(a));
  }
  q.mse = 1.0 - acc;
  return q;
}

namespace {

// Analytic MSE of the symmetric midrise grid with step delta (outer cells
// saturate): cells [i*delta, (i+1)*delta) with level (i+0.5)*delta, mirrored.
double uniform_grid_mse(int half_levels, double delta) {
  double acc = 0;
  for (int i = 0; i < half_levels; ++i) {
    const double a = i * delta;
    const double b = i + 1 == half_levels ? std::numeric_limits<double>::infinity()
                                          : (i + 1) * delta;
    const double c = (i + 0.5) * delta;
    const double mass = normal_cdf(b) - normal_cdf(a);
    const double m1 = (std::isinf(b) ? 0.0 : -normal_pdf(b)) + normal_pdf(a);
    const double m2 = mass - ((std::isinf(b) ? 0.0 : b * normal_pdf(b)) - a * normal_pdf(a));
    acc += m2 - 2 * c * m1 + c * c * mass;
  }
  return 2 * acc;
}

}  // namespace

ScalarQuantizer uniform_gaussian(int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("uniform: bits out of range");
  const int half = 1 << (bits - 1);
  // golden-section over the step size
  const double phi = 0.6180339887498949;
  double a = 1e-3, b = 8.0 / half;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = uniform_grid_mse(half, x1), f2 = uniform_grid_mse(half, x2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a);
      f1 = uniform_grid_mse(half, x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a);
      f2 = uniform_grid_mse(half, x2);
    }
  }
  const double delta = 0.5 * (a + b);
  ScalarQuantizer q;
  q.levels.resize(static_cast<size_t>(2 * half));
  for (int i = 0; i < half; ++i) {
    q.levels[static_cast<size_t>(half + i)] = (i + 0.5) * delta;
    q.levels[static_cast<size_t>(half - 1 - i)] = -(i + 0.5) * delta;
  }
  q.mse = uniform_grid_mse(half, delta);
  return q;
}

std::vector<RDReport> scalar_baselines(int bits, int64_t n_samples, uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("scalar_baselines: need samples");
  const ScalarQuantizer uni = uniform_gaussian(bits);
  const ScalarQuantizer lm = lloyd_max_gaussian(bits);
  double err_u = 0, err_l = 0;
  detail::GaussianSource gauss(seed);
  for (int64_t i = 0; i < n_samples; ++i) {
    const double x = gauss.next();
    const double du = x - uni.quantize(x);
    const double dl = x - lm.quantize(x);
    err_u += du * du;
    err_l += dl * dl;
  }
  std::vector<RDReport> out;
  out.push_back(make_rd_report(bits, err_u / static_cast<double>(n_samples), n_samples,
                               "uniform bits=" + std::to_string(bits)));
  out.push_back(make_rd_report(bits, err_l / static_cast<double>(n_samples), n_samples,
                               "lloyd_max bits=" + std::to_string(bits)));
  return out;
}

std::vector<AngularRow> angular_study(const CodebookLayout& layout, std::span<const int> shells,
                                      bool union_mode, int64_t n, uint64_t seed, int threads) {
  if (n < 1) throw std::invalid_argument("angular_study: need samples");
  LatticeSearcher searcher(layout);
  std::vector<AngularRow> rows;
  for (int m : shells) {
    if (m < 2 || m > layout.max_shell) {
      throw std::invalid_argument("angular_study: shell outside the layout");
    }
    std::vector<double> distances(static_cast<size_t>(n));
    const int64_t batches = (n + kBatchBlocks - 1) / kBatchBlocks;
    detail::parallel_chunks(static_cast<size_t>(batches), threads, [&](size_t begin, size_t end) {
      std::vector<double> data(static_cast<size_t>(kBatchBlocks) * kBlockDim);
      for (size_t b = begin; b < end; ++b) {
        const int64_t blocks =
            std::min<int64_t>(kBatchBlocks, n - static_cast<int64_t>(b) * kBatchBlocks);
        fill_gaussian_batch(seed, static_cast<int64_t>(b), blocks, data.data());
        for (int64_t k = 0; k < blocks; ++k) {
          std::span<double, kBlockDim> x(data.data() + k * kBlockDim, kBlockDim);
          double norm = 0;
          for (double v : x) norm += v * v;
          norm = std::sqrt(norm);
          for (double& v : x) v /= norm;  // radially uniform unit vector
          const SearchResult r =
              searcher.nearest_in_shells(x, union_mode ? 2 : m, m, Metric::kAngular);
          const double cosv = std::clamp(r.score, -1.0, 1.0);
          distances[static_cast<size_t>(b) * kBatchBlocks + static_cast<size_t>(k)] =
              std::acos(cosv) / 3.141592653589793238462643383280;
        }
      }
    });
    AngularRow row;
    row.m = m;
    row.union_mode = union_mode;
    const uint64_t size = union_mode
                              ? (m == layout.max_shell
                                     ? layout.total
                                     : layout.shell_start[static_cast<size_t>(m - 1)])
                              : shell_size(m);
    row.bits_per_dim = std::log2(static_cast<double>(size)) / kBlockDim;
    row.n = n;
    double acc = 0;
    for (double d : distances) acc += d;
    row.mean_distance = acc / static_cast<double>(n);
    std::vector<double> sorted = distances;
    std::sort(sorted.begin(), sorted.end());
    row.q25 = sorted[static_cast<size_t>(n / 4)];
    row.q50 = sorted[static_cast<size_t>(n / 2)];
    row.q75 = sorted[static_cast<size_t>(3 * n / 4)];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> shaping_vs_shapegain_sweep(double bits_per_dim,
                                                 std::span<const int> gain_bit_options,
                                                 int64_t n_blocks, uint64_t seed, int threads) {
  const double total_bits = bits_per_dim * kBlockDim;
  auto best_shell_for = [&](int budget_bits) {
    int best = 0;
    for (int m = 2; m <= 64; ++m) {
      uint64_t total;
      try {
        total = cumulative_count(m);
      } catch (const std::overflow_error&) {
        break;
      }
      const int need = std::bit_width(total - 1);
      if (need <= budget_bits) best = m;
      else break;
    }
    return best;
  };

  std::vector<SweepRow> rows;
  {
    const int m = best_shell_for(static_cast<int>(total_bits));
    if (m < 2) throw std::invalid_argument("sweep: no shell bound fits the budget");
    const CodebookLayout layout = CodebookLayout::build(m);
    SweepRow row;
    row.code = "spherical Lambda24(" + std::to_string(m) + ")";
    row.mode = QuantMode::kSphericalShaping;
    row.max_shell = m;
    row.gain_bits = 0;
    row.shape_bits_per_dim = static_cast<double>(layout.bits_per_index) / kBlockDim;
    row.gain_bits_per_dim = 0;
    QuantizerConfig qc{QuantMode::kSphericalShaping, m, 0, GainSource::kChiMatched};
    row.report = gaussian_rd(layout, qc, n_blocks, seed, threads);
    rows.push_back(std::move(row));
  }
  for (int gain_bits : gain_bit_options) {
    if (gain_bits < 0 || gain_bits >= total_bits) {
      throw std::invalid_argument("sweep: infeasible gain-bit option");
    }
    const int m = best_shell_for(static_cast<int>(total_bits) - gain_bits);
    if (m < 2) throw std::invalid_argument("sweep: infeasible gain-bit option");
    const CodebookLayout layout = CodebookLayout::build(m);
    SweepRow row;
    row.code = "norm(Lambda24(" + std::to_string(m) + ")) + " + std::to_string(gain_bits) +
               " chi-gain bits";
    row.mode = QuantMode::kShapeGainOptimalScale;
    row.max_shell = m;
    row.gain_bits = gain_bits;
    row.shape_bits_per_dim = static_cast<double>(layout.bits_per_index) / kBlockDim;
    row.gain_bits_per_dim = static_cast<double>(gain_bits) / kBlockDim;
    QuantizerConfig qc{QuantMode::kShapeGainOptimalScale, m, gain_bits, GainSource::kChiMatched};
    row.report = gaussian_rd(layout, qc, n_blocks, seed, threads);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace llvq
