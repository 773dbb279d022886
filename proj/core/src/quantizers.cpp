#include "llvq/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace llvq {
namespace {

// chi_k cell statistics via regularized incomplete gamma:
//   integral_0^x r^(k-1) e^(-r^2/2) dr   = 2^(k/2-1) Gamma(k/2)   P(k/2,   x^2/2)
//   integral_0^x r^k     e^(-r^2/2) dr   = 2^((k-1)/2) Gamma((k+1)/2) P((k+1)/2, x^2/2)
// so the conditional mean over [a,b] is
//   E[chi | a<=chi<b] = chi_mean(k) * (P((k+1)/2) diff) / (P(k/2) diff).
double chi_cdf_diff(double half_k, double a, double b) {
  const double upper = std::isinf(b) ? 1.0 : boost::math::gamma_p(half_k, b * b / 2.0);
  return upper - boost::math::gamma_p(half_k, a * a / 2.0);
}

double chi_cell_mean(int dof, double a, double b) {
  const double mass = chi_cdf_diff(dof / 2.0, a, b);
  const double first = chi_cdf_diff((dof + 1) / 2.0, a, b);
  return chi_mean(dof) * first / mass;
}

// chi quantile by bisection on the CDF (initialization only).
double chi_quantile(int dof, double p) {
  double lo = 0.0, hi = std::sqrt(static_cast<double>(dof)) + 20.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (boost::math::gamma_p(dof / 2.0, mid * mid / 2.0) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double chi_mean(int dof) {
  return std::sqrt(2.0) *
         std::exp(std::lgamma((dof + 1) / 2.0) - std::lgamma(dof / 2.0));
}

int GainCodebook::quantize(double gain) const {
  if (levels.size() == 1) return 0;
  // midpoint cells; upper_bound over boundaries
  int lo = 0, hi = static_cast<int>(levels.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (gain > 0.5 * (levels[mid] + levels[mid + 1])) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

GainCodebook build_gain_codebook(int bits, int dof) {
  if (bits < 0 || bits > 16) throw std::invalid_argument("gain codebook: bits out of range");
  GainCodebook cb;
  cb.bits = bits;
  cb.dof = dof;
  const int n = 1 << bits;
  cb.levels.resize(n);
  if (n == 1) {
    cb.levels[0] = chi_mean(dof);
    return cb;
  }
  // start from equal-mass quantile cells
  for (int i = 0; i < n; ++i) {
    cb.levels[i] = chi_cell_mean(dof, chi_quantile(dof, double(i) / n),
                                 i + 1 == n ? kInf : chi_quantile(dof, double(i + 1) / n));
  }
  for (int it = 0; it < 100000; ++it) {
    double max_rel = 0.0;
    std::vector<double> next(cb.levels.size());
    for (int i = 0; i < n; ++i) {
      const double lo = i == 0 ? 0.0 : 0.5 * (cb.levels[i - 1] + cb.levels[i]);
      const double hi = i + 1 == n ? kInf : 0.5 * (cb.levels[i] + cb.levels[i + 1]);
      next[i] = chi_cell_mean(dof, lo, hi);
      max_rel = std::max(max_rel, std::abs(next[i] - cb.levels[i]) / cb.levels[i]);
    }
    cb.levels = std::move(next);
    if (max_rel < 1e-10) break;
  }
  return cb;
}

GainCodebook build_gain_codebook_from_samples(int bits, std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("gain codebook: no samples");
  GainCodebook cb;
  cb.bits = bits;
  cb.dof = kBlockDim;
  cb.scale_convention = "empirical";
  const int n = 1 << bits;
  cb.levels.resize(n);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(sorted.size() + 1, 0.0);
  for (size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];

  for (int i = 0; i < n; ++i) {
    cb.levels[i] = sorted[std::min(sorted.size() - 1, sorted.size() * (2 * i + 1) / (2 * n))];
  }
  for (int it = 0; it < 100000; ++it) {
    double max_rel = 0.0;
    std::vector<double> next(cb.levels.size());
    size_t lo = 0;
    for (int i = 0; i < n; ++i) {
      const size_t hi =
          i + 1 == n ? sorted.size()
                     : static_cast<size_t>(std::lower_bound(sorted.begin(), sorted.end(),
                                                            0.5 * (cb.levels[i] + cb.levels[i + 1])) -
                                           sorted.begin());
      if (hi > lo) {
        next[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
      } else {
        next[i] = cb.levels[i];  // empty cell keeps its level
      }
      max_rel = std::max(max_rel,
                         std::abs(next[i] - cb.levels[i]) / std::max(1e-300, cb.levels[i]));
      lo = hi;
    }
    cb.levels = std::move(next);
    if (max_rel < 1e-12) break;
  }
  return cb;
}

int QuantizerConfig::bits_per_block(const CodebookLayout& layout) const {
  return layout.bits_per_index + (mode == QuantMode::kSphericalShaping ? 0 : gain_bits);
}

BlockQuantizer::BlockQuantizer(const CodebookLayout& layout, const LatticeSearcher& searcher,
                               QuantizerConfig config)
    : layout_(&layout), searcher_(&searcher), config_(config) {
  if (config.max_shell < 2 || config.max_shell > layout.max_shell) {
    throw std::invalid_argument("quantizer: shell bound outside the layout");
  }
  if (config.mode != QuantMode::kSphericalShaping) {
    gains_ = build_gain_codebook(config.gain_bits);
  }
}

QuantizedBlock BlockQuantizer::quantize(std::span<const double, kBlockDim> w, double beta) const {
  for (double v : w) {
    if (!std::isfinite(v)) throw std::invalid_argument("quantize: non-finite input");
  }
  std::array<double, kBlockDim> x;
  double norm2 = 0;
  for (int i = 0; i < kBlockDim; ++i) {
    x[i] = w[i] / beta;
    norm2 += x[i] * x[i];
  }

  QuantizedBlock qb;
  if (config_.mode == QuantMode::kSphericalShaping) {
    SearchConfig sc{config_.max_shell, Metric::kEuclidean};
    qb.shape_index = searcher_->nearest(x, sc).index;
    return qb;
  }

  if (norm2 == 0.0) {
    // zero block: fixed shape index 0, gain level nearest zero
    qb.shape_index = 0;
    qb.gain_index = gains_.quantize(0.0);
    return qb;
  }

  SearchConfig sc{config_.max_shell, Metric::kAngular};
  const SearchResult shape = searcher_->nearest(x, sc);
  qb.shape_index = shape.index;

  double gain;
  if (config_.mode == QuantMode::kShapeGainIndependent) {
    gain = std::sqrt(norm2);
  } else {
    // post-shape gain: gamma* = <x, s_hat>, the exact minimizer of ||x - g s_hat||.
    // s_hat = p/||p|| in integer coordinates (the sqrt(8) embedding cancels).
    const double pnorm = std::sqrt(static_cast<double>(squared_norm(shape.point)));
    double dot = 0;
    for (int i = 0; i < kBlockDim; ++i) dot += x[i] * shape.point[i];
    gain = dot / pnorm;
  }
  qb.gain_index = gains_.quantize(gain);
  return qb;
}

std::array<double, kBlockDim> BlockQuantizer::dequantize(const QuantizedBlock& block,
                                                         double beta) const {
  const IntegerPoint p = decode(block.shape_index, *layout_);
  std::array<double, kBlockDim> out;
  if (config_.mode == QuantMode::kSphericalShaping) {
    for (int i = 0; i < kBlockDim; ++i) out[i] = beta * p[i] / 2.8284271247461903;
    return out;
  }
  if (block.gain_index < 0 ||
      block.gain_index >= static_cast<int32_t>(gains_.levels.size())) {
    throw std::invalid_argument("dequantize: gain index out of range");
  }
  const double g = gains_.level(block.gain_index);
  const double pnorm = std::sqrt(static_cast<double>(squared_norm(p)));
  for (int i = 0; i < kBlockDim; ++i) out[i] = beta * g * p[i] / pnorm;
  return out;
}

double optimal_scale_weight(std::span<const double> w, std::span<const double> q) {
  if (w.size() != q.size()) throw std::invalid_argument("optimal scale: size mismatch");
  double qw = 0, qq = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    qw += q[i] * w[i];
    qq += q[i] * q[i];
  }
  if (qq == 0.0) throw std::domain_error("optimal scale: zero-norm quantized vector");
  return qw / qq;
}

Eigen::VectorXd optimal_scales_output(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      bool allow_ridge) {
  if (a.rows() != b.size()) throw std::invalid_argument("optimal scales: dimension mismatch");
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd atb = a.transpose() * b;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ata);
  if (lu.isInvertible()) return lu.solve(atb);
  if (!allow_ridge) throw std::domain_error("optimal scales: rank-deficient system");
  const double lambda = 1e-8 * ata.trace() / static_cast<double>(a.cols());
  Eigen::MatrixXd ridged = ata;
  ridged.diagonal().array() += lambda;
  return ridged.ldlt().solve(atb);
}

double mean_codeword_norm(const CodebookLayout& layout) {
  double acc = 0;
  for (int m = 2; m <= layout.max_shell; ++m) {
    const uint64_t begin = layout.shell_start[static_cast<size_t>(m - 2)];
    const uint64_t end = m == layout.max_shell ? layout.total
                                               : layout.shell_start[static_cast<size_t>(m - 1)];
    acc += static_cast<double>(end - begin) * std::sqrt(2.0 * m);
  }
  return acc / static_cast<double>(layout.total);
}

namespace {
double mean_block_norm(std::span<const double> data) {
  if (data.empty() || data.size() % kBlockDim != 0) {
    throw std::invalid_argument("tensor scale: length must be a positive multiple of 24");
  }
  double acc = 0;
  const size_t blocks = data.size() / kBlockDim;
  for (size_t b = 0; b < blocks; ++b) {
    double n2 = 0;
    for (int i = 0; i < kBlockDim; ++i) {
      const double v = data[b * kBlockDim + i];
      n2 += v * v;
    }
    acc += std::sqrt(n2);
  }
  return acc / static_cast<double>(blocks);
}
}  // namespace

double spherical_tensor_scale(std::span<const double> data, const CodebookLayout& layout) {
  return mean_block_norm(data) / mean_codeword_norm(layout);
}

double shapegain_tensor_scale(std::span<const double> data) {
  return mean_block_norm(data) / chi_mean(kBlockDim);
}

}  // namespace llvq
