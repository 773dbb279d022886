#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "llvq/quantizers.hpp"

namespace llvq {

/// Regularized empirical input Hessian with both triangular factors: `chol`
/// satisfies chol * chol^T = hessian + damping I, and `inv_chol` is the lower
/// factor of (hessian + damping I)^{-1}, which drives the corrections.
struct HessianState {
  Eigen::MatrixXd hessian;   // H = X^T X / N, undamped
  Eigen::MatrixXd chol;      // L, lower
  Eigen::MatrixXd inv_chol;  // T, lower: T T^T = (H + damping I)^{-1}
  double damping = 0.0;
  int64_t samples = 0;

  int dim() const { return static_cast<int>(hessian.rows()); }
};

/// H = X^T X / N with damping 0.01 * mean(diag H); both factors are computed
/// once here. Throws on non-finite activations.
HessianState estimate_hessian(const Eigen::MatrixXd& activations);

/// Wraps a precomputed symmetric Hessian (same damping rule).
HessianState hessian_from_matrix(const Eigen::MatrixXd& hessian, int64_t samples);

/// Zero-pads a Hessian state to `dim` columns (padded columns carry zero
/// weight; damping keeps the factorization valid).
HessianState pad_hessian(const HessianState& state, int dim);

/// Correction of the remaining columns R = [c0+nc, D) given the quantization
/// errors of the just-committed columns C = [c0, c0+nc): the minimizer of
/// Tr(dW H dW^T) over dW_R with dW_C fixed, computed as
///   dW_R = dW_C * (T_CC^{-1})^T * T_RC^T
/// from sub-blocks of the inverse factor. delta_c is rows x nc.
Eigen::MatrixXd hessian_correction(const Eigen::MatrixXd& delta_c, const HessianState& state,
                                   int c0, int nc);

enum class HadamardMode : uint8_t { kNone = 0, kInput = 1, kInputOutput = 2 };

/// In-place randomized Hadamard transform: forward is (1/sqrt(n)) H_n diag(s) v
/// with signs s drawn deterministically from the seed; inverse composes to the
/// identity. Length must be a power of two.
void randomized_hadamard(std::span<double> v, uint64_t seed, bool inverse);

struct LayerQuantConfig {
  QuantizerConfig quant;
  bool corrections = true;
  HadamardMode hadamard = HadamardMode::kNone;
  uint64_t hadamard_seed = 1;
  std::optional<double> scale_override;  // fixed beta instead of the tensor convention
  bool per_group_scales = false;
  int threads = 0;
};

/// Quantized weight matrix: per-block shape (and gain) codes plus everything
/// needed to reconstruct.
struct QuantizedLayer {
  QuantizerConfig quant;
  uint64_t layout_fingerprint = 0;
  int64_t rows = 0;
  int64_t cols = 0;         // original column count
  int64_t padded_cols = 0;  // multiple of 24
  double beta = 1.0;
  std::vector<float> group_scales;  // per column-group multipliers (optional)
  HadamardMode hadamard = HadamardMode::kNone;
  uint64_t hadamard_seed = 0;
  GainCodebook gains;                  // levels travel with the artifact
  std::vector<uint64_t> shape_indices; // rows * groups, row-major
  std::vector<uint32_t> gain_indices;  // same layout; empty in spherical mode

  int64_t groups() const { return padded_cols / kBlockDim; }
};

/// Blockwise quantization of a weight matrix with optional Hessian-corrected
/// error propagation: columns are processed in groups of 24 left to right;
/// after each group the remaining columns absorb the analytic correction.
QuantizedLayer quantize_layer(const Eigen::MatrixXd& weights, const HessianState* hessian,
                              const CodebookLayout& layout, const LayerQuantConfig& config);

Eigen::MatrixXd dequantize_layer(const QuantizedLayer& layer, const CodebookLayout& layout);

/// Proxy objective Tr(dW H dW^T) of a reconstruction against the original.
double proxy_loss(const Eigen::MatrixXd& original, const Eigen::MatrixXd& reconstructed,
                  const Eigen::MatrixXd& hessian);

}  // namespace llvq
