#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "llvq/detail/rng.hpp"
#include "llvq/layerquant.hpp"

using namespace llvq;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, uint64_t seed, double scale = 1.0) {
  detail::GaussianSource g(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = scale * g.next();
  }
  return m;
}

}  // namespace

TEST_CASE("estimate_hessian basics") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(8, 8);
  const HessianState h = estimate_hessian(id);
  CHECK((h.hessian - id / 8.0).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(h.samples == 8);

  Eigen::MatrixXd x(1, 5);
  x << 1, 2, 3, 4, 5;
  const HessianState rank1 = estimate_hessian(x);
  CHECK((rank1.hessian - x.transpose() * x).norm() == doctest::Approx(0.0).epsilon(1e-12));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rank1.hessian);
  CHECK(svd.singularValues()(1) < 1e-10);

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, std::numeric_limits<double>::infinity(), 0;
  CHECK_THROWS_AS(estimate_hessian(bad), std::invalid_argument);
}

TEST_CASE("hessian matches a naive accumulation") {
  const Eigen::MatrixXd x = random_matrix(50, 12, 99);
  const HessianState h = estimate_hessian(x);
  Eigen::MatrixXd naive = Eigen::MatrixXd::Zero(12, 12);
  for (int n = 0; n < x.rows(); ++n) {
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) naive(i, j) += x(n, i) * x(n, j);
    }
  }
  naive /= x.rows();
  CHECK((h.hessian - naive).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cholesky factor reproduces the damped hessian") {
  const Eigen::MatrixXd x = random_matrix(64, 16, 3);
  const HessianState h = estimate_hessian(x);
  Eigen::MatrixXd damped = h.hessian;
  damped.diagonal().array() += h.damping;
  const double rel = (h.chol * h.chol.transpose() - damped).norm() / damped.norm();
  CHECK(rel < 1e-6);
  // inverse factor: T T^T (H + damping I) = I
  const double rel_inv =
      (h.inv_chol * h.inv_chol.transpose() * damped - Eigen::MatrixXd::Identity(16, 16)).norm();
  CHECK(rel_inv < 1e-8);
}

TEST_CASE("correction vanishes for zero error and identity hessian") {
  const Eigen::MatrixXd x = random_matrix(64, 12, 5);
  const HessianState h = estimate_hessian(x);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 6);
  CHECK(hessian_correction(zero, h, 0, 6).norm() == 0.0);

  const HessianState identity = hessian_from_matrix(Eigen::MatrixXd::Identity(12, 12), 1);
  const Eigen::MatrixXd delta = random_matrix(4, 6, 6);
  CHECK(hessian_correction(delta, identity, 0, 6).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("correction equals the dense quadratic-minimization oracle") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const int d = 8, nc = 4;
    const Eigen::MatrixXd x = random_matrix(40, d, 1000 + seed);
    const HessianState h = estimate_hessian(x);
    Eigen::MatrixXd damped = h.hessian;
    damped.diagonal().array() += h.damping;

    const Eigen::MatrixXd delta_c = random_matrix(3, nc, 2000 + seed);
    const Eigen::MatrixXd mine = hessian_correction(delta_c, h, 0, nc);

    // dense oracle: dW_R = -H_RR^{-1} H_RC dW_C per row
    const Eigen::MatrixXd h_rr = damped.block(nc, nc, d - nc, d - nc);
    const Eigen::MatrixXd h_rc = damped.block(nc, 0, d - nc, nc);
    const Eigen::MatrixXd oracle = -(h_rr.ldlt().solve(h_rc * delta_c.transpose())).transpose();
    CHECK((mine - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("correction oracle holds for interior splits up to D=16") {
  const int d = 16;
  const Eigen::MatrixXd x = random_matrix(64, d, 77);
  const HessianState h = estimate_hessian(x);
  Eigen::MatrixXd damped = h.hessian;
  damped.diagonal().array() += h.damping;
  for (int c0 : {0, 4, 8}) {
    const int nc = 4;
    const int nr = d - c0 - nc;
    const Eigen::MatrixXd delta_c = random_matrix(5, nc, 300 + c0);
    const Eigen::MatrixXd mine = hessian_correction(delta_c, h, c0, nc);
    // conditioning on earlier columns leaves the trailing principal block
    const Eigen::MatrixXd h_rr = damped.block(c0 + nc, c0 + nc, nr, nr);
    const Eigen::MatrixXd h_rc = damped.block(c0 + nc, c0, nr, nc);
    const Eigen::MatrixXd oracle = -(h_rr.ldlt().solve(h_rc * delta_c.transpose())).transpose();
    CHECK((mine - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("quantize_layer is exact on codeword-built weights") {
  const auto layout = CodebookLayout::build(2);
  detail::Rng rng(12);
  Eigen::MatrixXd w(6, 48);
  for (int r = 0; r < 6; ++r) {
    for (int g = 0; g < 2; ++g) {
      const IntegerPoint p = decode(rng.next() % layout.total, layout);
      for (int i = 0; i < kBlockDim; ++i) {
        w(r, g * kBlockDim + i) = p[i] / 2.8284271247461903;
      }
    }
  }
  LayerQuantConfig config;
  config.quant = {QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  config.scale_override = 1.0;
  const QuantizedLayer layer = quantize_layer(w, nullptr, layout, config);
  const Eigen::MatrixXd rec = dequantize_layer(layer, layout);
  CHECK((rec - w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corrections lower the proxy loss on random layers") {
  const auto layout = CodebookLayout::build(2);
  int improved = 0;
  const uint64_t trials = 20;
  for (uint64_t seed = 0; seed < trials; ++seed) {
    const Eigen::MatrixXd w = random_matrix(32, 48, 10 + seed, 0.2);
    const Eigen::MatrixXd x = random_matrix(128, 48, 500 + seed);
    const HessianState h = estimate_hessian(x);

    LayerQuantConfig with;
    with.quant = {QuantMode::kShapeGainOptimalScale, 2, 2, GainSource::kChiMatched};
    LayerQuantConfig without = with;
    without.corrections = false;

    const Eigen::MatrixXd rec_with = dequantize_layer(quantize_layer(w, &h, layout, with), layout);
    const Eigen::MatrixXd rec_without =
        dequantize_layer(quantize_layer(w, &h, layout, without), layout);
    const double loss_with = proxy_loss(w, rec_with, h.hessian);
    const double loss_without = proxy_loss(w, rec_without, h.hessian);
    if (loss_with <= loss_without) ++improved;
  }
  CHECK(improved >= 19);
}

TEST_CASE("corrections only touch later groups") {
  const auto layout = CodebookLayout::build(2);
  const Eigen::MatrixXd w = random_matrix(16, 72, 21, 0.2);
  const Eigen::MatrixXd x = random_matrix(96, 72, 22);
  const HessianState h = estimate_hessian(x);

  LayerQuantConfig with;
  with.quant = {QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  with.scale_override = 1.0;
  LayerQuantConfig without = with;
  without.corrections = false;

  const QuantizedLayer a = quantize_layer(w, &h, layout, with);
  const QuantizedLayer b = quantize_layer(w, &h, layout, without);
  for (int r = 0; r < 16; ++r) {
    // group 0 is quantized before any correction lands
    CHECK(a.shape_indices[static_cast<size_t>(r * 3)] ==
          b.shape_indices[static_cast<size_t>(r * 3)]);
  }
}

TEST_CASE("identity hessian reproduces independent per-block quantization") {
  const auto layout = CodebookLayout::build(2);
  const Eigen::MatrixXd w = random_matrix(8, 48, 31, 0.2);
  const HessianState h = hessian_from_matrix(Eigen::MatrixXd::Identity(48, 48), 1);

  LayerQuantConfig with;
  with.quant = {QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  LayerQuantConfig without = with;
  without.corrections = false;

  const QuantizedLayer a = quantize_layer(w, &h, layout, with);
  const QuantizedLayer b = quantize_layer(w, nullptr, layout, without);
  CHECK(a.shape_indices == b.shape_indices);
}

TEST_CASE("rows are independent: permuting rows permutes the output") {
  const auto layout = CodebookLayout::build(2);
  const Eigen::MatrixXd w = random_matrix(8, 48, 41, 0.2);
  const Eigen::MatrixXd x = random_matrix(64, 48, 42);
  const HessianState h = estimate_hessian(x);
  LayerQuantConfig config;
  config.quant = {QuantMode::kShapeGainOptimalScale, 2, 1, GainSource::kChiMatched};

  Eigen::MatrixXd reversed = w.colwise().reverse();
  const QuantizedLayer orig = quantize_layer(w, &h, layout, config);
  const QuantizedLayer perm = quantize_layer(reversed, &h, layout, config);
  const int64_t groups = orig.groups();
  for (int r = 0; r < 8; ++r) {
    for (int g = 0; g < groups; ++g) {
      CHECK(orig.shape_indices[static_cast<size_t>(r * groups + g)] ==
            perm.shape_indices[static_cast<size_t>((7 - r) * groups + g)]);
    }
  }
}

TEST_CASE("padding isolation: pad columns never disturb real ones") {
  const auto layout = CodebookLayout::build(2);
  const Eigen::MatrixXd w = random_matrix(12, 50, 51, 0.2);
  const Eigen::MatrixXd x = random_matrix(80, 50, 52);
  const HessianState h = estimate_hessian(x);

  LayerQuantConfig config;
  config.quant = {QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  config.scale_override = 0.2;
  const QuantizedLayer narrow = quantize_layer(w, &h, layout, config);
  CHECK(narrow.padded_cols == 72);
  const Eigen::MatrixXd rec_narrow = dequantize_layer(narrow, layout);

  // manually pre-padded equivalent
  Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(12, 72);
  wide.leftCols(50) = w;
  Eigen::MatrixXd xwide = Eigen::MatrixXd::Zero(80, 72);
  xwide.leftCols(50) = x;
  const HessianState hwide = estimate_hessian(xwide);
  const QuantizedLayer wide_layer = quantize_layer(wide, &hwide, layout, config);
  const Eigen::MatrixXd rec_wide = dequantize_layer(wide_layer, layout);

  CHECK((rec_narrow - rec_wide.leftCols(50)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("randomized hadamard transform properties") {
  detail::GaussianSource g(61);
  std::vector<double> v(64);
  for (auto& x : v) x = g.next();
  std::vector<double> original = v;

  randomized_hadamard(v, 9, false);
  double n_rot = 0, n_orig = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    n_rot += v[i] * v[i];
    n_orig += original[i] * original[i];
  }
  CHECK(n_rot == doctest::Approx(n_orig).epsilon(1e-12));

  randomized_hadamard(v, 9, true);
  for (size_t i = 0; i < v.size(); ++i) {
    CHECK(v[i] == doctest::Approx(original[i]).epsilon(1e-12));
  }

  std::vector<double> bad(5);
  CHECK_THROWS_AS(randomized_hadamard(bad, 1, false), std::invalid_argument);

  // 2x2 with both signs positive: (1,0) -> (1/sqrt2, 1/sqrt2)
  uint64_t seed = 0;
  for (;; ++seed) {
    detail::Rng probe(seed);
    if (!probe.coin() && !probe.coin()) break;
  }
  std::vector<double> basis{1.0, 0.0};
  randomized_hadamard(basis, seed, false);
  CHECK(basis[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(basis[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("hadamard-rotated layers invert exactly on rotated codewords") {
  const auto layout = CodebookLayout::build(2);
  detail::Rng rng(71);
  // 64 columns (power of two) pad to 72; the straddling block must still be a
  // lattice point, so its tail that lands in the pad region is kept zero by
  // drawing the third block from the class with support in the first 16 slots.
  Eigen::MatrixXd c(4, 64);
  for (int r = 0; r < 4; ++r) {
    for (int g = 0; g < 2; ++g) {
      const IntegerPoint p = decode(rng.next() % layout.total, layout);
      for (int i = 0; i < kBlockDim; ++i) c(r, g * kBlockDim + i) = p[i] / 2.8284271247461903;
    }
    IntegerPoint tail{};
    tail[r] = 4;
    tail[r + 1] = 4;  // (4,4,0,...): all nonzeros within the first 16 coords
    REQUIRE(classify_point(tail) == PointClass::kEven);
    for (int i = 0; i < 16; ++i) c(r, 48 + i) = tail[i] / 2.8284271247461903;
  }
  const uint64_t seed = 5;
  Eigen::MatrixXd w = c;
  for (int r = 0; r < 4; ++r) {
    std::vector<double> row(64);
    for (int i = 0; i < 64; ++i) row[static_cast<size_t>(i)] = w(r, i);
    randomized_hadamard(row, seed, true);  // W = R^T C so that R W = C
    for (int i = 0; i < 64; ++i) w(r, i) = row[static_cast<size_t>(i)];
  }

  LayerQuantConfig config;
  config.quant = {QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  config.scale_override = 1.0;
  config.hadamard = HadamardMode::kInput;
  config.hadamard_seed = seed;
  const QuantizedLayer layer = quantize_layer(w, nullptr, layout, config);
  CHECK(layer.padded_cols == 72);
  const Eigen::MatrixXd rec = dequantize_layer(layer, layout);
  CHECK((rec - w).cwiseAbs().maxCoeff() < 1e-12);

  // non-power-of-two width is rejected
  LayerQuantConfig bad = config;
  const Eigen::MatrixXd w50 = random_matrix(4, 50, 99);
  CHECK_THROWS_AS(quantize_layer(w50, nullptr, layout, bad), std::invalid_argument);
}

TEST_CASE("hessian/weight dimension mismatch is rejected") {
  const auto layout = CodebookLayout::build(2);
  const Eigen::MatrixXd w = random_matrix(4, 48, 1);
  const HessianState h = estimate_hessian(random_matrix(16, 24, 2));
  LayerQuantConfig config;
  config.quant = {QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  CHECK_THROWS_AS(quantize_layer(w, &h, layout, config), std::invalid_argument);
}
