#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "llvq/codec.hpp"
#include "llvq/search.hpp"

namespace llvq {

/// Scalar quantizer for block gains, matched to the chi distribution with
/// `dof` degrees of freedom (block norms of unit Gaussian data). Levels are
/// the Lloyd-Max fixed point: each level is the conditional mean of its cell,
/// cells are bounded by level midpoints.
struct GainCodebook {
  std::vector<double> levels;  // ascending, 2^bits entries
  int bits = 0;
  int dof = kBlockDim;
  /// Normalizer convention: gains fed to the codebook are block norms divided
  /// by (tensor scale), with the tensor scale chosen so gains are chi-like.
  std::string scale_convention = "block_norm_over_beta";

  int quantize(double gain) const;  // cell index by midpoint rule
  double level(int index) const { return levels.at(static_cast<size_t>(index)); }
};

/// E[chi_dof] = sqrt(2) Gamma((dof+1)/2) / Gamma(dof/2).
double chi_mean(int dof);

/// Lloyd-Max codebook for the chi_dof density, iterated until the largest
/// relative level movement falls below 1e-10. bits = 0 yields the single
/// level E[chi_dof].
GainCodebook build_gain_codebook(int bits, int dof = kBlockDim);

/// Lloyd-Max fitted to empirical samples instead of the analytic density
/// (the alternative gain source for shape-conditioned gains).
GainCodebook build_gain_codebook_from_samples(int bits, std::span<const double> samples);

enum class QuantMode : uint8_t {
  kSphericalShaping = 0,
  kShapeGainIndependent = 1,
  kShapeGainOptimalScale = 2,
};

enum class GainSource : uint8_t { kChiMatched = 0, kEmpiricalLloyd = 1 };

struct QuantizerConfig {
  QuantMode mode = QuantMode::kSphericalShaping;
  int max_shell = 2;
  int gain_bits = 0;
  GainSource gain_source = GainSource::kChiMatched;

  bool has_gain() const { return mode != QuantMode::kSphericalShaping && gain_bits >= 0; }
  /// Fixed-width rate: shape bits plus gain bits.
  int bits_per_block(const CodebookLayout& layout) const;
};

struct QuantizedBlock {
  uint64_t shape_index = 0;
  int32_t gain_index = -1;  // -1 when the mode carries no gain code
};

/// One-block quantize/dequantize for all three modes. The caller supplies the
/// tensor scale beta; blocks are processed as w/beta internally.
class BlockQuantizer {
 public:
  BlockQuantizer(const CodebookLayout& layout, const LatticeSearcher& searcher,
                 QuantizerConfig config);

  QuantizedBlock quantize(std::span<const double, kBlockDim> w, double beta) const;
  std::array<double, kBlockDim> dequantize(const QuantizedBlock& block, double beta) const;

  const GainCodebook& gains() const { return gains_; }
  const QuantizerConfig& config() const { return config_; }
  void set_gains(GainCodebook gains) { gains_ = std::move(gains); }

 private:
  const CodebookLayout* layout_;
  const LatticeSearcher* searcher_;
  QuantizerConfig config_;
  GainCodebook gains_;
};

/// Projection scale: argmin over beta of ||w - beta q||^2 = <q,w>/<q,q>.
double optimal_scale_weight(std::span<const double> w, std::span<const double> q);

/// Least-squares group scales: argmin over beta of ||b - A beta||^2. Falls
/// back to a ridge solve (lambda = 1e-8 tr(AtA)/G) when AtA is singular,
/// unless allow_ridge is false, in which case a rank-deficient system throws.
Eigen::VectorXd optimal_scales_output(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      bool allow_ridge = true);

/// Mean real-space codeword norm under uniform index sampling:
/// sum_m n(m) sqrt(2m) / N(M).
double mean_codeword_norm(const CodebookLayout& layout);

/// Per-tensor scale conventions. Spherical shaping: mean block norm over mean
/// codeword norm (a refinement pass with optimal_scale_weight follows in the
/// tensor pipelines). Shape-gain: mean block norm over E[chi_24], making
/// gains chi-distributed for Gaussian-like data.
double spherical_tensor_scale(std::span<const double> data, const CodebookLayout& layout);
double shapegain_tensor_scale(std::span<const double> data);

}  // namespace llvq
