#include "llvq/layerquant.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "llvq/detail/parallel.hpp"
#include "llvq/detail/rng.hpp"

namespace llvq {
namespace {

void factorize(HessianState& state) {
  const int d = state.dim();
  Eigen::MatrixXd damped = state.hessian;
  damped.diagonal().array() += state.damping;
  Eigen::LLT<Eigen::MatrixXd> llt(damped);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("hessian: factorization failed; damping insufficient");
  }
  state.chol = llt.matrixL();
  // T: lower factor of the damped inverse, P = T T^T.
  Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::LLT<Eigen::MatrixXd> llt_inv(inverse);
  if (llt_inv.info() != Eigen::Success) {
    throw std::domain_error("hessian: inverse factorization failed");
  }
  state.inv_chol = llt_inv.matrixL();
}

}  // namespace

HessianState estimate_hessian(const Eigen::MatrixXd& activations) {
  if (activations.rows() < 1) throw std::invalid_argument("hessian: need at least one sample");
  if (!activations.allFinite()) throw std::invalid_argument("hessian: non-finite activations");
  HessianState state;
  state.samples = activations.rows();
  state.hessian = activations.transpose() * activations / static_cast<double>(state.samples);
  state.damping = 0.01 * state.hessian.diagonal().mean();
  if (state.damping <= 0.0) state.damping = 1e-8;
  factorize(state);
  return state;
}

HessianState hessian_from_matrix(const Eigen::MatrixXd& hessian, int64_t samples) {
  if (hessian.rows() != hessian.cols()) throw std::invalid_argument("hessian: must be square");
  if (!hessian.allFinite()) throw std::invalid_argument("hessian: non-finite entries");
  HessianState state;
  state.samples = samples;
  state.hessian = 0.5 * (hessian + hessian.transpose());  // enforce symmetry
  state.damping = 0.01 * state.hessian.diagonal().mean();
  if (state.damping <= 0.0) state.damping = 1e-8;
  factorize(state);
  return state;
}

HessianState pad_hessian(const HessianState& state, int dim) {
  if (dim == state.dim()) return state;
  if (dim < state.dim()) throw std::invalid_argument("hessian: cannot shrink");
  HessianState padded;
  padded.samples = state.samples;
  padded.hessian = Eigen::MatrixXd::Zero(dim, dim);
  padded.hessian.topLeftCorner(state.dim(), state.dim()) = state.hessian;
  padded.damping = state.damping;
  factorize(padded);
  return padded;
}

Eigen::MatrixXd hessian_correction(const Eigen::MatrixXd& delta_c, const HessianState& state,
                                   int c0, int nc) {
  const int d = state.dim();
  if (c0 < 0 || nc <= 0 || c0 + nc > d) throw std::invalid_argument("correction: bad column split");
  if (delta_c.cols() != nc) throw std::invalid_argument("correction: delta width mismatch");
  const int nr = d - (c0 + nc);
  if (nr == 0) return Eigen::MatrixXd::Zero(delta_c.rows(), 0);

  // Trailing principal block of the inverse factor is the factor of the
  // conditioned subproblem, so sub-blocks of the one-time T suffice.
  const auto t_cc = state.inv_chol.block(c0, c0, nc, nc);
  const auto t_rc = state.inv_chol.block(c0 + nc, c0, nr, nc);
  if (t_cc.diagonal().minCoeff() <= 0.0) {
    throw std::domain_error("correction: singular triangular block");
  }
  // per row r: delta_r_R = T_RC T_CC^{-1} delta_r_C  (column-vector form)
  Eigen::MatrixXd solved = t_cc.triangularView<Eigen::Lower>().solve(delta_c.transpose());
  return (t_rc * solved).transpose();
}

void randomized_hadamard(std::span<double> v, uint64_t seed, bool inverse) {
  const size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("hadamard: length must be a power of two");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  detail::Rng rng(seed);
  if (!inverse) {
    for (auto& x : v) x = rng.coin() ? -x : x;
  }
  for (size_t h = 1; h < n; h <<= 1) {
    for (size_t i = 0; i < n; i += h << 1) {
      for (size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
  for (auto& x : v) x *= scale;
  if (inverse) {
    detail::Rng rng2(seed);
    for (auto& x : v) x = rng2.coin() ? -x : x;
  }
}

namespace {

void hadamard_rows(Eigen::MatrixXd& m, uint64_t seed, bool inverse) {
  std::vector<double> buf(static_cast<size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) buf[static_cast<size_t>(c)] = m(r, c);
    randomized_hadamard(buf, seed, inverse);
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = buf[static_cast<size_t>(c)];
  }
}

void hadamard_cols(Eigen::MatrixXd& m, uint64_t seed, bool inverse) {
  std::vector<double> buf(static_cast<size_t>(m.rows()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) buf[static_cast<size_t>(r)] = m(r, c);
    randomized_hadamard(buf, seed, inverse);
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = buf[static_cast<size_t>(r)];
  }
}

bool power_of_two(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

QuantizedLayer quantize_layer(const Eigen::MatrixXd& weights, const HessianState* hessian,
                              const CodebookLayout& layout, const LayerQuantConfig& config) {
  if (!weights.allFinite()) throw std::invalid_argument("quantize_layer: non-finite weights");
  const int64_t rows = weights.rows();
  const int64_t cols = weights.cols();
  if (rows < 1 || cols < 1) throw std::invalid_argument("quantize_layer: empty weights");
  if (hessian != nullptr && hessian->dim() != cols) {
    throw std::invalid_argument("quantize_layer: Hessian size does not match weight columns");
  }
  const int64_t padded = (cols + kBlockDim - 1) / kBlockDim * kBlockDim;
  const int64_t groups = padded / kBlockDim;

  QuantizedLayer out;
  out.quant = config.quant;
  out.layout_fingerprint = layout.fingerprint;
  out.rows = rows;
  out.cols = cols;
  out.padded_cols = padded;
  out.hadamard = config.hadamard;
  out.hadamard_seed = config.hadamard == HadamardMode::kNone ? 0 : config.hadamard_seed;

  Eigen::MatrixXd source = weights;
  if (config.hadamard != HadamardMode::kNone) {
    if (!power_of_two(cols) || (config.hadamard == HadamardMode::kInputOutput && !power_of_two(rows))) {
      throw std::invalid_argument(
          "quantize_layer: Hadamard rotation needs power-of-two dimensions; disable it instead");
    }
    hadamard_rows(source, config.hadamard_seed, false);
    if (config.hadamard == HadamardMode::kInputOutput) {
      hadamard_cols(source, config.hadamard_seed + 1, false);
    }
  }
  Eigen::MatrixXd work = Eigen::MatrixXd::Zero(rows, padded);
  work.leftCols(cols) = source;

  HessianState padded_hessian;
  const HessianState* h = nullptr;
  if (hessian != nullptr && config.corrections) {
    if (config.hadamard != HadamardMode::kNone) {
      // rotate the input Hessian along with the input dimension
      HessianState rotated = *hessian;
      Eigen::MatrixXd hm = rotated.hessian;
      hadamard_rows(hm, config.hadamard_seed, false);
      Eigen::MatrixXd hmt = hm.transpose();
      hadamard_rows(hmt, config.hadamard_seed, false);
      rotated = hessian_from_matrix(hmt, hessian->samples);
      padded_hessian = pad_hessian(rotated, static_cast<int>(padded));
    } else {
      padded_hessian = pad_hessian(*hessian, static_cast<int>(padded));
    }
    h = &padded_hessian;
  }

  // Tensor scale: fixed override, or the mode's convention on the (possibly
  // rotated) data actually being quantized.
  LatticeSearcher searcher(layout);
  BlockQuantizer quantizer(layout, searcher, config.quant);

  std::vector<double> flat(static_cast<size_t>(rows * padded));
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < padded; ++c) {
      flat[static_cast<size_t>(r * padded + c)] = work(r, c);
    }
  }
  double beta;
  if (config.scale_override) {
    beta = *config.scale_override;
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument("quantize_layer: scale override must be positive");
    }
  } else if (config.quant.mode == QuantMode::kSphericalShaping) {
    beta = spherical_tensor_scale(flat, layout);
  } else {
    beta = shapegain_tensor_scale(flat);
  }
  out.beta = beta;

  out.shape_indices.assign(static_cast<size_t>(rows * groups), 0);
  const bool has_gain = config.quant.mode != QuantMode::kSphericalShaping;
  if (has_gain) out.gain_indices.assign(static_cast<size_t>(rows * groups), 0);

  Eigen::MatrixXd reconstruction = Eigen::MatrixXd::Zero(rows, padded);
  for (int64_t g = 0; g < groups; ++g) {
    const int64_t c0 = g * kBlockDim;
    Eigen::MatrixXd errors = Eigen::MatrixXd::Zero(rows, kBlockDim);
    detail::parallel_chunks(static_cast<size_t>(rows), config.threads,
                            [&](size_t begin, size_t end) {
      std::array<double, kBlockDim> block;
      for (size_t r = begin; r < end; ++r) {
        for (int i = 0; i < kBlockDim; ++i) block[i] = work(static_cast<int64_t>(r), c0 + i);
        const QuantizedBlock qb = quantizer.quantize(block, beta);
        const size_t slot = r * static_cast<size_t>(groups) + static_cast<size_t>(g);
        out.shape_indices[slot] = qb.shape_index;
        if (has_gain) out.gain_indices[slot] = static_cast<uint32_t>(qb.gain_index);
        const auto rec = quantizer.dequantize(qb, beta);
        for (int i = 0; i < kBlockDim; ++i) {
          reconstruction(static_cast<int64_t>(r), c0 + i) = rec[i];
          errors(static_cast<int64_t>(r), i) = rec[i] - work(static_cast<int64_t>(r), c0 + i);
        }
      }
    });
    if (h != nullptr && c0 + kBlockDim < padded) {
      const Eigen::MatrixXd correction =
          hessian_correction(errors, *h, static_cast<int>(c0), kBlockDim);
      work.rightCols(padded - c0 - kBlockDim) += correction;
    }
  }

  if (config.per_group_scales) {
    out.group_scales.resize(static_cast<size_t>(groups), 1.0f);
    for (int64_t g = 0; g < groups; ++g) {
      const auto wg = work.middleCols(g * kBlockDim, kBlockDim);
      const auto qg = reconstruction.middleCols(g * kBlockDim, kBlockDim);
      const double qq = qg.squaredNorm();
      const double scale = qq == 0.0 ? 1.0 : (qg.cwiseProduct(wg)).sum() / qq;
      out.group_scales[static_cast<size_t>(g)] = static_cast<float>(scale);
    }
  }

  out.gains = quantizer.gains();
  return out;
}

Eigen::MatrixXd dequantize_layer(const QuantizedLayer& layer, const CodebookLayout& layout) {
  if (layer.layout_fingerprint != layout.fingerprint) {
    throw std::invalid_argument("dequantize_layer: layout fingerprint mismatch");
  }
  LatticeSearcher searcher(layout);
  BlockQuantizer quantizer(layout, searcher, layer.quant);
  if (!layer.gains.levels.empty()) quantizer.set_gains(layer.gains);

  const int64_t groups = layer.groups();
  Eigen::MatrixXd padded(layer.rows, layer.padded_cols);
  for (int64_t r = 0; r < layer.rows; ++r) {
    for (int64_t g = 0; g < groups; ++g) {
      const size_t slot = static_cast<size_t>(r * groups + g);
      QuantizedBlock qb;
      qb.shape_index = layer.shape_indices[slot];
      qb.gain_index = layer.gain_indices.empty() ? -1
                                                 : static_cast<int32_t>(layer.gain_indices[slot]);
      double beta = layer.beta;
      if (!layer.group_scales.empty()) beta *= layer.group_scales[static_cast<size_t>(g)];
      const auto rec = quantizer.dequantize(qb, beta);
      for (int i = 0; i < kBlockDim; ++i) padded(r, g * kBlockDim + i) = rec[i];
    }
  }
  Eigen::MatrixXd result = padded.leftCols(layer.cols);
  if (layer.hadamard != HadamardMode::kNone) {
    if (layer.hadamard == HadamardMode::kInputOutput) {
      hadamard_cols(result, layer.hadamard_seed + 1, true);
    }
    hadamard_rows(result, layer.hadamard_seed, true);
  }
  return result;
}

double proxy_loss(const Eigen::MatrixXd& original, const Eigen::MatrixXd& reconstructed,
                  const Eigen::MatrixXd& hessian) {
  const Eigen::MatrixXd delta = reconstructed - original;
  return (delta * hessian * delta.transpose()).trace();
}

}  // namespace llvq
