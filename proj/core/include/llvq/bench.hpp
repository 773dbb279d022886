#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "llvq/quantizers.hpp"

namespace llvq {

/// Rate-distortion summary for one configuration on the unit Gaussian source.
/// sqnr_bits = -0.5 log2(mse); retention_pct = 100 sqnr_bits / bits_per_dim.
struct RDReport {
  double bits_per_dim = 0;
  double mse = 0;
  double sqnr_bits = 0;
  double retention_pct = 0;
  int64_t n_blocks = 0;
  std::string config;
};

RDReport make_rd_report(double bits_per_dim, double mse, int64_t n_blocks, std::string config);

/// Draws n_blocks iid standard-Gaussian 24-vectors, quantizes them under the
/// given config and tensor-scale convention, and reports per-weight MSE.
/// Deterministic in (config, n_blocks, seed) regardless of thread count.
RDReport gaussian_rd(const CodebookLayout& layout, const QuantizerConfig& config,
                     int64_t n_blocks, uint64_t seed, int threads = 0);

/// Symmetric scalar quantizer on N(0,1) with its analytic distortion.
struct ScalarQuantizer {
  std::vector<double> levels;  // ascending
  double mse = 0;              // analytic, at the fixed point / optimized range
  double quantize(double x) const;
};

/// Lloyd-Max fixed point for the standard normal density.
ScalarQuantizer lloyd_max_gaussian(int bits);

/// Optimal-range symmetric uniform (midrise) quantizer: the step minimizing
/// the analytic MSE, outer cells saturating.
ScalarQuantizer uniform_gaussian(int bits);

/// Monte-Carlo reports for the uniform and Lloyd-Max baselines at `bits`.
std::vector<RDReport> scalar_baselines(int bits, int64_t n_samples, uint64_t seed = 1);

/// One row of the nearest-neighbor angle study: mean and quartiles of
/// arccos(<x, q(x)>)/pi over radially uniform unit inputs.
struct AngularRow {
  int m = 0;
  bool union_mode = false;  // single shell m vs union of shells 2..m
  double bits_per_dim = 0;  // log2(code size)/24
  double mean_distance = 0;
  double q25 = 0, q50 = 0, q75 = 0;
  int64_t n = 0;
};

std::vector<AngularRow> angular_study(const CodebookLayout& layout, std::span<const int> shells,
                                      bool union_mode, int64_t n, uint64_t seed, int threads = 0);

/// One row of the fixed-budget comparison between spherical shaping and
/// shape-gain at varying gain-bit allocations.
struct SweepRow {
  std::string code;
  QuantMode mode = QuantMode::kSphericalShaping;
  int max_shell = 0;
  int gain_bits = 0;
  double shape_bits_per_dim = 0;
  double gain_bits_per_dim = 0;
  RDReport report;
};

/// Fixed total budget (bits/dim): one spherical-shaping row plus one
/// shape-gain row per gain-bit option, each paired with the largest shell
/// bound that fits the remaining shape budget. Throws if an option leaves no
/// feasible shell bound.
std::vector<SweepRow> shaping_vs_shapegain_sweep(double bits_per_dim,
                                                 std::span<const int> gain_bit_options,
                                                 int64_t n_blocks, uint64_t seed, int threads = 0);

}  // namespace llvq
