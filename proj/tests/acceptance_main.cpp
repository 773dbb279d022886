// Acceptance suite: every gate runs at its stated tolerance and prints one
// pass/fail line. Exit code is the number of failed criteria.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "llvq/bench.hpp"
#include "llvq/detail/rng.hpp"
#include "llvq/golay.hpp"
#include "llvq/layerquant.hpp"
#include "llvq/quantized_file.hpp"
#include "llvq/search.hpp"
#include "llvq/verify.hpp"

using namespace llvq;
namespace fs = std::filesystem;

namespace {

constexpr double kSqrt8 = 2.8284271247461903;

int g_failed = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, const std::string& name, bool passed, double seconds,
            const std::string& detail = {}) {
  std::printf("[%d] %-58s %s (%.1f s)%s%s\n", criterion, name.c_str(),
              passed ? "PASS" : "FAIL", seconds, detail.empty() ? "" : "  -- ",
              detail.c_str());
  std::fflush(stdout);
  if (!passed) ++g_failed;
}

// ---------------------------------------------------------------- criterion 1
void criterion_combinatorics() {
  Timer timer;
  bool ok = true;
  std::string detail;

  const uint64_t shell_expect[4] = {196'560ull, 16'773'120ull, 398'034'000ull,
                                    4'629'381'120ull};
  for (int m = 2; m <= 5; ++m) {
    ok &= shell_size(m) == shell_expect[m - 2];
  }
  const uint64_t n13 = cumulative_count(13);
  ok &= n13 == 280'974'212'784'720ull;
  ok &= std::bit_width(n13 - 1) == 48;

  // class cardinalities for shells 2..4, keyed by (shell, parity, leader)
  const std::map<std::pair<int, std::string>, uint64_t> expect = {
      {{2, "even{4^2,0^22}"}, 1104},          {{2, "even{2^8,0^16}"}, 97'152},
      {{2, "odd{3^1,1^23}"}, 98'304},         {{3, "even{4^1,2^8,0^15}"}, 3'108'864},
      {{3, "even{2^12,0^12}"}, 5'275'648},    {{3, "odd{5^1,1^23}"}, 98'304},
      {{3, "odd{3^3,1^21}"}, 8'290'304},      {{4, "even{4^4,0^20}"}, 170'016},
      {{4, "even{8^1,0^23}"}, 48},            {{4, "even{4^2,2^8,0^14}"}, 46'632'960},
      {{4, "even{6^1,2^7,0^16}"}, 777'216},   {{4, "even{4^1,2^12,0^11}"}, 126'615'552},
      {{4, "even{2^16,0^8}"}, 24'870'912},    {{4, "odd{5^1,3^2,1^21}"}, 24'870'912},
      {{4, "odd{3^5,1^19}"}, 174'096'384},
  };
  std::map<std::pair<int, std::string>, uint64_t> got;
  for (const auto& d : enumerate_classes(4)) {
    got[{d.shell, d.leader.to_string()}] = d.cardinality;
  }
  ok &= got == expect;
  ok &= timer.seconds() < 10.0;
  report(1, "combinatorics: Table-1 shell sizes, N(13), Table-2 classes", ok, timer.seconds());
}

// ---------------------------------------------------------------- criterion 2
void criterion_golay() {
  Timer timer;
  bool ok = true;
  for (const auto& check : verify::golay_checks(true)) ok &= check.passed;
  ok &= timer.seconds() < 60.0;
  report(2, "golay: 4096 words, enumerator, closure, 2^24 scan", ok, timer.seconds());
}

// ---------------------------------------------------------------- criterion 3
void criterion_codec() {
  Timer timer;
  bool ok = true;

  const auto layout2 = CodebookLayout::build(2);
  std::vector<uint8_t> hit(layout2.total, 0);
  uint64_t count = 0;
  bool collision = false;
  enumerate_shell_points(2, [&](const IntegerPoint& p) {
    const uint64_t idx = encode(p, layout2);
    if (idx >= layout2.total || hit[idx]) collision = true;
    else hit[idx] = 1;
    ++count;
  });
  ok &= !collision && count == 196'560;

  const auto layout13 = CodebookLayout::build(13);
  detail::Rng rng(20240);
  int mismatches = 0;
  for (int i = 0; i < 100'000; ++i) {
    const uint64_t index = rng.next() % layout13.total;
    if (encode(decode(index, layout13), layout13) != index) ++mismatches;
  }
  ok &= mismatches == 0;
  report(3, "codec bijectivity: Shell(2) exhaustive + 1e5 indices at M=13", ok, timer.seconds(),
         "mismatches " + std::to_string(mismatches));
}

// ---------------------------------------------------------------- criterion 4
void criterion_search_oracle() {
  Timer timer;
  const auto layout = CodebookLayout::build(2);
  LatticeSearcher searcher(layout);
  std::vector<IntegerPoint> points;
  points.reserve(196'560);
  enumerate_shell_points(2, [&](const IntegerPoint& p) { points.push_back(p); });

  detail::GaussianSource gauss(424242);
  int mismatches = 0;
  int metric_disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, kBlockDim> x;
    for (auto& v : x) v = gauss.next();

    uint64_t chosen[2];
    for (Metric metric : {Metric::kEuclidean, Metric::kAngular}) {
      // exhaustive oracle with the same canonical key and tie rule
      const IntegerPoint* best = nullptr;
      double best_key = 0;
      for (const IntegerPoint& p : points) {
        double dot = 0;
        for (int i = 0; i < kBlockDim; ++i) dot += kSqrt8 * x[i] * p[i];
        const double key =
            metric == Metric::kEuclidean ? 2.0 * dot - 32.0 : dot / std::sqrt(32.0);
        if (best == nullptr || key > best_key) {
          best = &p;
          best_key = key;
        } else if (key == best_key && encode(p, layout) < encode(*best, layout)) {
          best = &p;
        }
      }
      const SearchResult fast = searcher.nearest(x, {2, metric});
      if (fast.point != *best) ++mismatches;
      chosen[metric == Metric::kEuclidean ? 0 : 1] = fast.index;
    }
    if (chosen[0] != chosen[1]) ++metric_disagreements;  // single shell: must agree
  }
  report(4, "search optimality: 1e3 Gaussian vs exhaustive Shell(2), both metrics",
         mismatches == 0 && metric_disagreements == 0, timer.seconds(),
         "mismatches " + std::to_string(mismatches) + ", metric disagreements " +
             std::to_string(metric_disagreements));
}

// ---------------------------------------------------------------- criterion 5
void criterion_gaussian_rd() {
  Timer timer;
  const int gain_options[4] = {0, 1, 2, 4};
  const int64_t n = 100'000;
  const auto rows = shaping_vs_shapegain_sweep(2.0, gain_options, n, 20250801, 0);
  // rows: [0] spherical M=13, then shape-gain with 0,1,2,4 gain bits

  const RDReport& sph = rows[0].report;
  const bool sph_ok = std::abs(sph.mse - 0.084) <= 0.003 &&
                      std::abs(sph.retention_pct - 89.4) <= 1.5;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "mse %.4f vs 0.084±0.003, ret %.2f vs 89.4±1.5", sph.mse,
                sph.retention_pct);
  report(5, "RD clause a: spherical shaping M=13 hits the paper value", sph_ok, timer.seconds(),
         buf);

  const RDReport& sg1 = rows[2].report;
  const bool sg_ok =
      std::abs(sg1.mse - 0.078) <= 0.003 && std::abs(sg1.retention_pct - 92.1) <= 1.5;
  std::snprintf(buf, sizeof(buf), "mse %.4f vs 0.078±0.003, ret %.2f vs 92.1±1.5", sg1.mse,
                sg1.retention_pct);
  report(5, "RD clause b: shape-gain norm(L24(12)) + 1 gain bit", sg_ok, timer.seconds(), buf);

  int best_gain = -1;
  double best_mse = 1e300;
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].report.mse < best_mse) {
      best_mse = rows[i].report.mse;
      best_gain = rows[i].gain_bits;
    }
  }
  const bool order_ok = best_gain == 1;
  const bool budget_ok = timer.seconds() < 1800.0;
  std::snprintf(buf, sizeof(buf), "argmin gain bits = %d; total %.0f s (budget 1800)", best_gain,
                timer.seconds());
  report(5, "RD clause c: 1 gain bit best among {0,1,2,4}, within budget",
         order_ok && budget_ok, timer.seconds(), buf);
}

// ---------------------------------------------------------------- criterion 6
void criterion_scalar_baseline() {
  Timer timer;
  const auto reports = scalar_baselines(2, 1'000'000, 99);
  const double mse = reports[1].mse;  // lloyd-max row
  const bool ok = std::abs(mse - 0.1175) <= 0.002;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "mse %.5f vs 0.1175±0.002", mse);
  report(6, "scalar baseline: Lloyd-Max at 2 bits", ok, timer.seconds(), buf);
}

// ---------------------------------------------------------------- criterion 7
void criterion_angular_union() {
  Timer timer;
  const auto layout = CodebookLayout::build(6);
  const int shells[] = {3, 4, 5, 6};
  const int64_t n = 4000;
  const auto singles = angular_study(layout, shells, false, n, 4242, 0);
  const auto unions = angular_study(layout, shells, true, n, 4242, 0);
  bool ok = true;
  std::string detail;
  for (size_t i = 0; i < singles.size(); ++i) {
    const bool row_ok = unions[i].mean_distance <= singles[i].mean_distance * 1.02;
    ok &= row_ok;
    detail += "m=" + std::to_string(singles[i].m) + ":" + (row_ok ? "ok " : "VIOLATED ");
  }
  report(7, "angular study: union <= single + 2% for m <= 6", ok, timer.seconds(), detail);
}

// ---------------------------------------------------------------- criterion 8
void criterion_hessian() {
  Timer timer;
  const auto layout = CodebookLayout::build(2);

  int improved = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    detail::GaussianSource g(9000 + seed);
    Eigen::MatrixXd w(64, 48);
    for (int r = 0; r < 64; ++r) {
      for (int c = 0; c < 48; ++c) w(r, c) = 0.2 * g.next();
    }
    Eigen::MatrixXd x(256, 48);
    for (int r = 0; r < 256; ++r) {
      for (int c = 0; c < 48; ++c) x(r, c) = g.next();
    }
    const HessianState h = estimate_hessian(x);

    LayerQuantConfig with;
    with.quant = {QuantMode::kShapeGainOptimalScale, 2, 2, GainSource::kChiMatched};
    LayerQuantConfig without = with;
    without.corrections = false;

    const double loss_with =
        proxy_loss(w, dequantize_layer(quantize_layer(w, &h, layout, with), layout), h.hessian);
    const double loss_without = proxy_loss(
        w, dequantize_layer(quantize_layer(w, &h, layout, without), layout), h.hessian);
    if (loss_with <= loss_without) ++improved;
  }

  // dense quadratic-minimization oracle on D <= 16 instances
  double max_err = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    detail::GaussianSource g(7100 + seed);
    const int d = 8 + static_cast<int>(seed % 3) * 4;  // 8, 12, 16
    Eigen::MatrixXd x(4 * d, d);
    for (int r = 0; r < x.rows(); ++r) {
      for (int c = 0; c < d; ++c) x(r, c) = g.next();
    }
    const HessianState h = estimate_hessian(x);
    Eigen::MatrixXd damped = h.hessian;
    damped.diagonal().array() += h.damping;
    for (int c0 = 0; c0 + 4 < d; c0 += 4) {
      Eigen::MatrixXd delta(3, 4);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) delta(r, c) = g.next();
      }
      const Eigen::MatrixXd mine = hessian_correction(delta, h, c0, 4);
      const int nr = d - c0 - 4;
      const Eigen::MatrixXd h_rr = damped.block(c0 + 4, c0 + 4, nr, nr);
      const Eigen::MatrixXd h_rc = damped.block(c0 + 4, c0, nr, 4);
      const Eigen::MatrixXd oracle = -(h_rr.ldlt().solve(h_rc * delta.transpose())).transpose();
      max_err = std::max(max_err, (mine - oracle).cwiseAbs().maxCoeff());
    }
  }
  const bool ok = improved >= 95 && max_err < 1e-8;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "improved %d/100 (need >=95), oracle err %.2e", improved,
                max_err);
  report(8, "hessian corrections: proxy-loss wins + dense oracle 1e-8", ok, timer.seconds(), buf);
}

// ---------------------------------------------------------------- criterion 9
void criterion_determinism() {
  Timer timer;
  const auto layout = CodebookLayout::build(3);
  detail::GaussianSource g(31337);
  Eigen::MatrixXd w(32, 96);
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 96; ++c) w(r, c) = 0.2 * g.next();
  }
  Eigen::MatrixXd x(128, 96);
  for (int r = 0; r < 128; ++r) {
    for (int c = 0; c < 96; ++c) x(r, c) = g.next();
  }
  const HessianState h = estimate_hessian(x);

  const fs::path dir = fs::temp_directory_path() / "llvq_acceptance";
  fs::create_directories(dir);
  std::vector<std::string> bytes;
  for (int threads : {1, 4, 1}) {
    LayerQuantConfig config;
    config.quant = {QuantMode::kShapeGainOptimalScale, 3, 1, GainSource::kChiMatched};
    config.threads = threads;
    config.hadamard_seed = 7;
    const QuantizedLayer layer = quantize_layer(w, &h, layout, config);
    const std::string path = (dir / ("det" + std::to_string(bytes.size()) + ".llvq")).string();
    write_quantized_file(path, layer, layout);
    std::ifstream in(path, std::ios::binary);
    bytes.emplace_back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  fs::remove_all(dir);
  const bool ok = !bytes[0].empty() && bytes[0] == bytes[1] && bytes[0] == bytes[2];
  report(9, "determinism: bit-identical files across runs and thread counts", ok,
         timer.seconds());
}

}  // namespace

int main() {
  std::printf("acceptance suite\n----------------\n");
  Timer total;
  criterion_combinatorics();
  criterion_golay();
  criterion_codec();
  criterion_search_oracle();
  criterion_gaussian_rd();
  criterion_scalar_baseline();
  criterion_angular_union();
  criterion_hessian();
  criterion_determinism();
  std::printf("----------------\n%s: %d failed criterion line(s), total %.0f s\n",
              g_failed == 0 ? "ALL PASS" : "FAILURES", g_failed, total.seconds());
  return g_failed;
}
