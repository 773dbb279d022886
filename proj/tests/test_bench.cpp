#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "llvq/bench.hpp"
#include "llvq/detail/rng.hpp"

using namespace llvq;

TEST_CASE("lloyd-max on the gaussian: one and two bits") {
  const ScalarQuantizer one = lloyd_max_gaussian(1);
  REQUIRE(one.levels.size() == 2);
  const double expected = std::sqrt(2.0 / 3.14159265358979323846);
  CHECK(one.levels[0] == doctest::Approx(-expected).epsilon(1e-10));
  CHECK(one.levels[1] == doctest::Approx(expected).epsilon(1e-10));
  CHECK(one.mse == doctest::Approx(1.0 - 2.0 / 3.14159265358979323846).epsilon(1e-10));

  const ScalarQuantizer two = lloyd_max_gaussian(2);
  REQUIRE(two.levels.size() == 4);
  CHECK(two.levels[0] == doctest::Approx(-two.levels[3]).epsilon(1e-10));
  CHECK(two.levels[1] == doctest::Approx(-two.levels[2]).epsilon(1e-10));
  CHECK(two.mse == doctest::Approx(0.1175).epsilon(0.01));

  // quadrature oracle for the fixed-point distortion
  double quad = 0;
  const int steps = 2'000'000;
  const double lo = -10, hi = 10;
  const double h = (hi - lo) / steps;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + i * h;
    const double d = x - two.quantize(x);
    const double f = std::exp(-0.5 * x * x) * 0.3989422804014327;
    const double weight = (i == 0 || i == steps) ? 0.5 : 1.0;
    quad += weight * d * d * f * h;
  }
  CHECK(two.mse == doctest::Approx(quad).epsilon(1e-5));
}

TEST_CASE("optimal-range uniform sits between lloyd-max and crude grids") {
  const ScalarQuantizer uni = uniform_gaussian(2);
  const ScalarQuantizer lm = lloyd_max_gaussian(2);
  CHECK(uni.mse >= lm.mse);
  CHECK(uni.mse < 0.15);
  // equally spaced levels
  const double step = uni.levels[1] - uni.levels[0];
  for (size_t i = 1; i + 1 < uni.levels.size(); ++i) {
    CHECK(uni.levels[i + 1] - uni.levels[i] == doctest::Approx(step).epsilon(1e-9));
  }
}

TEST_CASE("scalar baselines report consistent monte-carlo numbers") {
  const auto reports = scalar_baselines(2, 400'000, 5);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].mse > reports[1].mse);  // uniform worse than lloyd-max
  CHECK(reports[1].mse == doctest::Approx(lloyd_max_gaussian(2).mse).epsilon(0.02));
  for (const auto& r : reports) {
    CHECK(r.sqnr_bits == doctest::Approx(-0.5 * std::log2(r.mse)).epsilon(1e-12));
    CHECK(r.retention_pct == doctest::Approx(100.0 * r.sqnr_bits / r.bits_per_dim).epsilon(1e-9));
  }
}

TEST_CASE("gaussian_rd is deterministic and thread-count independent") {
  const auto layout = CodebookLayout::build(3);
  QuantizerConfig config{QuantMode::kShapeGainOptimalScale, 3, 1, GainSource::kChiMatched};
  const RDReport a = gaussian_rd(layout, config, 2000, 7, 1);
  const RDReport b = gaussian_rd(layout, config, 2000, 7, 4);
  const RDReport c = gaussian_rd(layout, config, 2000, 7, 3);
  CHECK(a.mse == b.mse);
  CHECK(a.mse == c.mse);
  const RDReport other_seed = gaussian_rd(layout, config, 2000, 8, 2);
  CHECK(a.mse != other_seed.mse);
}

TEST_CASE("spherical-shaping error is pointwise non-increasing in the shell bound") {
  // same scale and same inputs; a larger ball can only move points closer
  const auto l4 = CodebookLayout::build(4);
  LatticeSearcher s4(l4);
  QuantizerConfig base{QuantMode::kSphericalShaping, 2, 0, GainSource::kChiMatched};
  detail::GaussianSource g(17);
  double mse[3] = {0, 0, 0};
  const int blocks = 500;
  for (int t = 0; t < blocks; ++t) {
    std::array<double, kBlockDim> w;
    for (auto& v : w) v = g.next();
    for (int mi = 0; mi < 3; ++mi) {
      QuantizerConfig cfg = base;
      cfg.max_shell = 2 + mi;
      BlockQuantizer q(l4, s4, cfg);
      const auto rec = q.dequantize(q.quantize(w, 0.9), 0.9);
      for (int i = 0; i < kBlockDim; ++i) {
        const double d = w[i] - rec[i];
        mse[mi] += d * d;
      }
    }
  }
  CHECK(mse[1] <= mse[0]);
  CHECK(mse[2] <= mse[1]);
}

TEST_CASE("angular study: range, bits, and the union never loses badly") {
  const auto layout = CodebookLayout::build(3);
  const int shells[] = {2, 3};
  const auto singles = angular_study(layout, shells, false, 400, 3, 2);
  const auto unions = angular_study(layout, shells, true, 400, 3, 2);
  REQUIRE(singles.size() == 2);
  REQUIRE(unions.size() == 2);

  CHECK(singles[0].bits_per_dim == doctest::Approx(std::log2(196560.0) / 24).epsilon(1e-12));
  for (const auto& row : singles) {
    CHECK(row.mean_distance > 0.0);
    CHECK(row.mean_distance < 1.0);
    CHECK(row.q25 <= row.q50);
    CHECK(row.q50 <= row.q75);
  }
  // union at m=2 is exactly the single shell
  CHECK(unions[0].mean_distance == singles[0].mean_distance);
  // union at m=3 includes shell 2; cannot be worse than single m=3 by more than noise
  CHECK(unions[1].mean_distance <= singles[1].mean_distance * 1.02);
}

TEST_CASE("sweep rows cover the budget and flag infeasible options") {
  const int gains[] = {0, 1};
  // 1.0 bit/dim budget: 24 bits total; N(3) needs 25 bits, N(2) needs 18,
  // so every row lands on the first shell
  const auto rows = shaping_vs_shapegain_sweep(1.0, gains, 1500, 11, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mode == QuantMode::kSphericalShaping);
  CHECK(rows[0].max_shell == 2);
  CHECK(rows[1].max_shell == 2);  // 0 gain bits
  CHECK(rows[2].max_shell == 2);  // 1 gain bit leaves 23 shape bits
  for (const auto& row : rows) {
    CHECK(row.shape_bits_per_dim + row.gain_bits_per_dim <= 1.0 + 1e-12);
    CHECK(row.report.mse > 0.0);
  }

  const int toobig[] = {40};
  CHECK_THROWS_AS(shaping_vs_shapegain_sweep(1.0, toobig, 100, 1, 1), std::invalid_argument);
}
