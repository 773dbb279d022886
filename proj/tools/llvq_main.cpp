// llvq: verification, benchmarking, and tensor quantize/dequantize round trips
// on the 24-dimensional lattice codec.

#include <CLI11.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llvq/bench.hpp"
#include "llvq/golay.hpp"
#include "llvq/layerquant.hpp"
#include "llvq/quantized_file.hpp"
#include "llvq/tensor_io.hpp"
#include "llvq/verify.hpp"

namespace {

using namespace llvq;

QuantMode parse_mode(const std::string& name) {
  static const std::map<std::string, QuantMode> modes = {
      {"spherical", QuantMode::kSphericalShaping},
      {"spherical_shaping", QuantMode::kSphericalShaping},
      {"shapegain", QuantMode::kShapeGainOptimalScale},
      {"shapegain_optimal_scale", QuantMode::kShapeGainOptimalScale},
      {"shapegain_independent", QuantMode::kShapeGainIndependent},
  };
  const auto it = modes.find(name);
  if (it == modes.end()) throw CLI::ValidationError("--mode", "unknown mode '" + name + "'");
  return it->second;
}

HadamardMode parse_hadamard(const std::string& name) {
  if (name == "none") return HadamardMode::kNone;
  if (name == "input") return HadamardMode::kInput;
  if (name == "input+output") return HadamardMode::kInputOutput;
  throw CLI::ValidationError("--hadamard", "expected none|input|input+output");
}

Eigen::MatrixXd tensor_to_matrix(const Tensor& t) {
  if (t.dims.size() != 2) throw std::runtime_error("expected a rank-2 tensor");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.dims[0]), static_cast<Eigen::Index>(t.dims[1]));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = t.data[static_cast<size_t>(r) * t.dims[1] + static_cast<size_t>(c)];
    }
  }
  return m;
}

Tensor matrix_to_tensor(const Eigen::MatrixXd& m) {
  Tensor t;
  t.dims = {static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())};
  t.data.resize(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t.data[static_cast<size_t>(r) * static_cast<size_t>(m.cols()) + static_cast<size_t>(c)] =
          static_cast<float>(m(r, c));
    }
  }
  return t;
}

int report_checks(const std::vector<verify::CheckResult>& checks) {
  int failures = 0;
  for (const auto& check : checks) {
    std::cout << (check.passed ? "[pass] " : "[FAIL] ") << check.name;
    if (!check.detail.empty()) std::cout << " (" << check.detail << ")";
    std::cout << "\n";
    if (!check.passed) ++failures;
  }
  return failures;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << header << "\n";
  for (const auto& row : rows) out << row << "\n";
}

std::string rd_csv_row(const RDReport& r, int m, int gain_bits, const std::string& mode,
                       int64_t n, uint64_t seed) {
  std::ostringstream os;
  os << std::setprecision(10) << mode << "," << m << "," << gain_bits << "," << r.bits_per_dim
     << "," << n << "," << seed << "," << r.mse << "," << r.sqnr_bits << "," << r.retention_pct;
  return os.str();
}

constexpr const char* kRdCsvHeader =
    "mode,M,gain_bits,bits_per_dim,n_blocks,seed,mse,sqnr_bits,retention_pct";

int cmd_info(int max_shell) {
  std::cout << "extended binary Golay code generator [I | B], rows as 24-bit words\n";
  std::cout << "(coordinate 0 = least significant bit):\n";
  for (uint32_t row : GolayCode::generator_rows()) {
    std::cout << "  0x" << std::hex << std::setw(6) << std::setfill('0') << row << std::dec
              << std::setfill(' ') << "\n";
  }
  const auto layout = CodebookLayout::build(max_shell);
  std::cout << "\nlayout M=" << max_shell << "  fingerprint 0x" << std::hex
            << layout.fingerprint << std::dec << "\n";
  std::cout << "index width: " << layout.bits_per_index << " bits ("
            << std::fixed << std::setprecision(3)
            << layout.bits_per_index / 24.0 << " bits/dim)\n\n";
  std::cout << "  m        n(m)                N(m)        bits/dim\n";
  uint64_t prev = 0;
  for (int m = 2; m <= max_shell; ++m) {
    const uint64_t upto =
        m == max_shell ? layout.total : layout.shell_start[static_cast<size_t>(m - 1)];
    const uint64_t n = upto - prev;
    prev = upto;
    std::cout << "  " << std::left << std::setw(3) << m << std::right << std::setw(18) << n
              << std::setw(20) << upto << std::setw(12) << std::fixed << std::setprecision(3)
              << std::bit_width(upto - 1) / 24.0 << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& scope, int max_m, int64_t samples, uint64_t seed) {
  int failures = 0;
  if (scope == "golay" || scope == "all") {
    failures += report_checks(verify::golay_checks(true));
  }
  if (scope == "shells" || scope == "all") {
    failures += report_checks(verify::shell_checks(max_m, &std::cout));
  }
  if (scope == "codec" || scope == "all") {
    const auto layout = CodebookLayout::build(max_m);
    failures += report_checks(verify::codec_checks(layout, samples, seed));
  }
  if (failures) {
    std::cout << failures << " check(s) FAILED\n";
    return 1;
  }
  std::cout << "all checks passed\n";
  return 0;
}

struct QuantizeArgs {
  std::string weights_path;
  std::string hessian_path = "none";
  std::string out_path;
  std::string mode = "shapegain";
  int max_shell = 13;
  int gain_bits = 1;
  std::string hadamard = "none";
  uint64_t seed = 1;
  std::optional<double> scale;
  bool per_group_scales = false;
  int threads = 0;
};

int cmd_quantize(const QuantizeArgs& args) {
  const Eigen::MatrixXd weights = tensor_to_matrix(read_tensor(args.weights_path));

  LayerQuantConfig config;
  config.quant.mode = parse_mode(args.mode);
  config.quant.max_shell = args.max_shell;
  config.quant.gain_bits = args.gain_bits;
  config.hadamard = parse_hadamard(args.hadamard);
  config.hadamard_seed = args.seed;
  config.per_group_scales = args.per_group_scales;
  config.threads = args.threads;
  if (args.scale) config.scale_override = *args.scale;

  std::optional<HessianState> hessian;
  if (args.hessian_path != "none") {
    const Eigen::MatrixXd activations = tensor_to_matrix(read_tensor(args.hessian_path));
    if (activations.cols() != weights.cols()) {
      throw std::runtime_error("calibration activations do not match weight columns");
    }
    hessian = estimate_hessian(activations);
  } else {
    config.corrections = false;
  }

  const auto layout = CodebookLayout::build(args.max_shell);
  const QuantizedLayer layer =
      quantize_layer(weights, hessian ? &*hessian : nullptr, layout, config);
  write_quantized_file(args.out_path, layer, layout);

  const Eigen::MatrixXd rec = dequantize_layer(layer, layout);
  const double mse = (rec - weights).squaredNorm() / static_cast<double>(weights.size());
  std::cout << "wrote " << args.out_path << "\n";
  std::cout << "rows=" << layer.rows << " cols=" << layer.cols << " padded=" << layer.padded_cols
            << " beta=" << layer.beta << "\n";
  std::cout << "bits/weight (payload): "
            << static_cast<double>(config.quant.bits_per_block(layout)) / kBlockDim << "\n";
  std::cout << std::setprecision(8) << "reconstruction mse/weight: " << mse << "\n";
  if (hessian) {
    std::cout << "proxy loss tr(dW H dW^T): " << proxy_loss(weights, rec, hessian->hessian)
              << "\n";
  }
  return 0;
}

int cmd_dequantize(const std::string& in_path, const std::string& out_path) {
  const QuantizedLayer layer = read_quantized_file(in_path);
  const auto layout = CodebookLayout::build(layer.quant.max_shell);
  const Eigen::MatrixXd rec = dequantize_layer(layer, layout);
  write_tensor(out_path, matrix_to_tensor(rec));
  std::cout << "wrote " << out_path << " (" << rec.rows() << "x" << rec.cols() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"codebook-free 24-dimensional lattice vector quantizer"};
  app.require_subcommand(1);

  // info
  int info_shell = 13;
  auto* info = app.add_subcommand("info", "print the Golay constant and layout tables");
  info->add_option("--M", info_shell, "shell bound")->check(CLI::Range(2, 32));

  // verify
  std::string verify_scope = "all";
  int verify_max_m = 5;
  int64_t verify_samples = 100'000;
  uint64_t verify_seed = 1;
  auto* verify_cmd = app.add_subcommand("verify", "run built-in invariant checks");
  verify_cmd->add_option("scope", verify_scope, "all|golay|shells|codec")
      ->check(CLI::IsMember({"all", "golay", "shells", "codec"}));
  verify_cmd->add_option("--max-m", verify_max_m, "largest shell to check")
      ->check(CLI::Range(2, 32));
  verify_cmd->add_option("--samples", verify_samples, "codec round-trip sample count");
  verify_cmd->add_option("--seed", verify_seed, "sampling seed");

  // quantize
  QuantizeArgs qargs;
  auto* quant = app.add_subcommand("quantize", "quantize a weight tensor");
  quant->add_option("--weights", qargs.weights_path, "input tensor file")->required();
  quant->add_option("--hessian", qargs.hessian_path,
                    "calibration activations tensor (N x cols), or 'none'");
  quant->add_option("--out", qargs.out_path, "output quantized file")->required();
  quant->add_option("--mode", qargs.mode, "spherical|shapegain|shapegain_independent");
  quant->add_option("--M", qargs.max_shell, "shell bound")->check(CLI::Range(2, 32));
  quant->add_option("--gain-bits", qargs.gain_bits, "gain code width (shape-gain modes)")
      ->check(CLI::Range(0, 8));
  quant->add_option("--hadamard", qargs.hadamard, "none|input|input+output");
  quant->add_option("--seed", qargs.seed, "seed for the rotation sign diagonal");
  double scale_value = 0.0;
  auto* scale_opt = quant->add_option("--scale", scale_value, "fixed tensor scale beta");
  quant->add_flag("--per-group-scales", qargs.per_group_scales,
                  "store per-column-group projection scales");
  quant->add_option("--threads", qargs.threads, "worker threads (0 = hardware)");

  // dequantize
  std::string deq_in, deq_out;
  auto* deq = app.add_subcommand("dequantize", "reconstruct a tensor from a quantized file");
  deq->add_option("--in", deq_in, "quantized file")->required();
  deq->add_option("--out", deq_out, "output tensor file")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "rate-distortion harnesses");
  bench->require_subcommand(1);

  std::string b_mode = "shapegain";
  int b_shell = 12;
  int b_gain_bits = 1;
  int64_t b_n = 100'000;
  uint64_t b_seed = 1;
  int b_threads = 0;
  std::string b_csv;
  auto* bg = bench->add_subcommand("gaussian", "unit Gaussian source rate-distortion");
  bg->add_option("--mode", b_mode, "spherical|shapegain|shapegain_independent");
  bg->add_option("--M", b_shell, "shell bound")->check(CLI::Range(2, 32));
  bg->add_option("--gain-bits", b_gain_bits, "gain code width")->check(CLI::Range(0, 8));
  bg->add_option("--n", b_n, "number of 24-dim blocks");
  bg->add_option("--seed", b_seed, "sample seed");
  bg->add_option("--csv", b_csv, "write a CSV row here");
  bg->add_option("--threads", b_threads, "worker threads (0 = hardware)");

  std::vector<int> a_shells = {2, 3, 4, 5, 6};
  std::string a_mode = "both";
  int64_t a_n = 4000;
  uint64_t a_seed = 1;
  int a_threads = 0;
  std::string a_csv;
  auto* ba = bench->add_subcommand("angular", "nearest-neighbor angle vs bits study");
  ba->add_option("--shells", a_shells, "shells to evaluate");
  ba->add_option("--mode", a_mode, "single|union|both")
      ->check(CLI::IsMember({"single", "union", "both"}));
  ba->add_option("--n", a_n, "unit-vector sample count");
  ba->add_option("--seed", a_seed, "sample seed");
  ba->add_option("--csv", a_csv, "write CSV rows here");
  ba->add_option("--threads", a_threads, "worker threads (0 = hardware)");

  double s_bits = 2.0;
  std::vector<int> s_gains = {0, 1, 2, 4};
  int64_t s_n = 100'000;
  uint64_t s_seed = 1;
  int s_threads = 0;
  std::string s_csv;
  auto* bs = bench->add_subcommand("sweep", "spherical shaping vs shape-gain at a fixed budget");
  bs->add_option("--bits", s_bits, "total bits per dimension")->check(CLI::Range(0.5, 4.0));
  bs->add_option("--gain-bits", s_gains, "gain-bit allocations to try");
  bs->add_option("--n", s_n, "number of 24-dim blocks per row");
  bs->add_option("--seed", s_seed, "sample seed");
  bs->add_option("--csv", s_csv, "write CSV rows here");
  bs->add_option("--threads", s_threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*info) return cmd_info(info_shell);
    if (*verify_cmd) return cmd_verify(verify_scope, verify_max_m, verify_samples, verify_seed);
    if (*quant) {
      if (scale_opt->count() > 0) qargs.scale = scale_value;
      return cmd_quantize(qargs);
    }
    if (*deq) return cmd_dequantize(deq_in, deq_out);

    if (*bg) {
      QuantizerConfig config;
      config.mode = parse_mode(b_mode);
      config.max_shell = b_shell;
      config.gain_bits = b_gain_bits;
      const auto layout = CodebookLayout::build(b_shell);
      const RDReport r = gaussian_rd(layout, config, b_n, b_seed, b_threads);
      std::cout << std::setprecision(6) << r.config << ": bits/dim=" << r.bits_per_dim
                << " mse=" << r.mse << " sqnr_bits=" << r.sqnr_bits
                << " retention=" << r.retention_pct << "%\n";
      if (!b_csv.empty()) {
        write_csv(b_csv, kRdCsvHeader,
                  {rd_csv_row(r, b_shell, config.mode == QuantMode::kSphericalShaping
                                              ? 0
                                              : b_gain_bits,
                              b_mode, b_n, b_seed)});
      }
      return 0;
    }
    if (*ba) {
      int max_shell = 2;
      for (int m : a_shells) max_shell = std::max(max_shell, m);
      const auto layout = CodebookLayout::build(max_shell);
      std::vector<std::string> rows;
      auto run = [&](bool union_mode) {
        for (const AngularRow& row :
             angular_study(layout, a_shells, union_mode, a_n, a_seed, a_threads)) {
          std::ostringstream os;
          os << std::setprecision(10) << (union_mode ? "union" : "single") << "," << row.m << ","
             << row.bits_per_dim << "," << row.n << "," << a_seed << "," << row.mean_distance
             << "," << row.q25 << "," << row.q50 << "," << row.q75;
          rows.push_back(os.str());
          std::cout << (union_mode ? "union 2.." : "single ") << row.m << ": bits/dim="
                    << std::setprecision(4) << row.bits_per_dim
                    << " mean=" << row.mean_distance << " median=" << row.q50 << "\n";
        }
      };
      if (a_mode != "union") run(false);
      if (a_mode != "single") run(true);
      if (!a_csv.empty()) {
        write_csv(a_csv, "mode,m,bits_per_dim,n,seed,mean_angle,q25,q50,q75", rows);
      }
      return 0;
    }
    if (*bs) {
      const auto rows = shaping_vs_shapegain_sweep(s_bits, s_gains, s_n, s_seed, s_threads);
      std::vector<std::string> csv_rows;
      const SweepRow* best = nullptr;
      for (const SweepRow& row : rows) {
        std::cout << std::setprecision(6) << row.code << ": bits/dim=" << std::fixed
                  << std::setprecision(5)
                  << row.shape_bits_per_dim + row.gain_bits_per_dim << std::defaultfloat
                  << " mse=" << row.report.mse << " retention=" << row.report.retention_pct
                  << "%\n";
        if (row.mode != QuantMode::kSphericalShaping &&
            (best == nullptr || row.report.mse < best->report.mse)) {
          best = &row;
        }
        std::ostringstream os;
        os << std::setprecision(10) << '"' << row.code << "\","
           << (row.mode == QuantMode::kSphericalShaping ? "spherical" : "shapegain") << ","
           << row.max_shell << "," << row.gain_bits << "," << row.shape_bits_per_dim << ","
           << row.gain_bits_per_dim << "," << row.report.bits_per_dim << "," << s_n << ","
           << s_seed << "," << row.report.mse << "," << row.report.sqnr_bits << ","
           << row.report.retention_pct;
        csv_rows.push_back(os.str());
      }
      if (best != nullptr) {
        std::cout << "best shape-gain allocation: " << best->gain_bits << " gain bit(s)\n";
      }
      if (!s_csv.empty()) {
        write_csv(s_csv,
                  "code,mode,M,gain_bits,shape_bits_per_dim,gain_bits_per_dim,bits_per_dim,"
                  "n_blocks,seed,mse,sqnr_bits,retention_pct",
                  csv_rows);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
