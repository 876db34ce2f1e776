#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

#include <Eigen/QR>

#include "stride/sim.hpp"
#include "stride/tv.hpp"
#include "test_util.hpp"

using namespace stride;
using namespace stride::tv;

namespace {

CMatrix dense_w(std::size_t n) { return TvMatrix(n).dense().cast<cdouble>(); }

// Least squares on the explicitly formed (W U, W y) system by complete
// orthogonal decomposition: independent of the SVD path in the library.
CVector oracle_coefficients(const CVector& y, const CMatrix& u) {
  const CMatrix w = dense_w(static_cast<std::size_t>(y.size()));
  const CMatrix wu = w * u;
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(wu);
  cod.setThreshold(1e-10);
  return cod.solve(w * y);
}

std::vector<ComplexArray2D> random_images(std::mt19937_64& rng, std::size_t count, std::size_t kx, std::size_t ky) {
  std::vector<ComplexArray2D> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back(testutil::random_array(rng, kx, ky));
  return v;
}

bool bit_identical(const ComplexArray2D& a, const ComplexArray2D& b) {
  return a.same_shape(b) && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(cdouble)) == 0;
}

}  // namespace

TEST(TvMatrix, ExactEntries) {
  const Eigen::MatrixXd w = TvMatrix(4).dense();
  Eigen::MatrixXd expect(3, 4);
  expect << -1, 1, 0, 0, 0, -1, 1, 0, 0, 0, -1, 1;
  EXPECT_EQ(w, expect);
  for (std::size_t n : {2u, 5u, 64u}) {
    const TvMatrix t(n);
    EXPECT_EQ(t.rows(), n - 1);
    EXPECT_EQ(t.cols(), n);
    const Eigen::MatrixXd d = t.dense();
    EXPECT_EQ(d.rows(), static_cast<Eigen::Index>(n - 1));
    EXPECT_EQ(d.cols(), static_cast<Eigen::Index>(n));
    EXPECT_EQ(d.cwiseAbs().sum(), 2.0 * static_cast<double>(n - 1));
  }
  EXPECT_THROW(TvMatrix(1), Error);
  EXPECT_THROW(TvMatrix(0), Error);
}

TEST(TvMatrix, ApplyMatchesDense) {
  const TvMatrix w(4);
  CVector c = CVector::Constant(4, cdouble(2.5, -1.0));
  EXPECT_EQ(w.apply(c), CVector::Zero(3));
  CVector ramp(4);
  ramp << 0.0, 1.0, 2.0, 3.0;
  EXPECT_EQ(w.apply(ramp), CVector::Ones(3));

  std::mt19937_64 rng(2);
  const CMatrix x = testutil::random_matrix(rng, 9, 3);
  EXPECT_LT((TvMatrix(9).apply(x) - dense_w(9) * x).norm(), 1e-14);
  EXPECT_THROW((void)w.apply(CVector::Zero(5)), Error);
}

TEST(NoiseSubspace, WindowPlacement) {
  EXPECT_EQ(window_start(0, 3, 10), 0u);
  EXPECT_EQ(window_start(1, 3, 10), 0u);
  EXPECT_EQ(window_start(5, 3, 10), 4u);
  EXPECT_EQ(window_start(9, 3, 10), 7u);
  EXPECT_EQ(window_start(0, 7, 64), 0u);
  EXPECT_EQ(window_start(30, 7, 64), 27u);
  EXPECT_EQ(window_start(63, 7, 64), 57u);
  EXPECT_EQ(window_start(4, 7, 7), 0u);
  EXPECT_EQ(window_start(3, 1, 8), 3u);
}

TEST(NoiseSubspace, Construction) {
  std::mt19937_64 rng(4);
  const auto sensors = random_images(rng, 2, 8, 10);
  StrideConfig cfg;
  cfg.delta_y = 7;
  const auto u = build_noise_subspace(sensors, 5, cfg);
  EXPECT_EQ(u.basis.rows(), 8);
  EXPECT_EQ(u.basis.cols(), 14);
  EXPECT_EQ(u.delta_x, 1u);
  ASSERT_EQ(u.source_columns.size(), 14u);
  for (Eigen::Index k = 0; k < 14; ++k) {
    const auto& s = sensors[static_cast<std::size_t>(k / 7)];
    EXPECT_EQ(u.basis.col(k), s.column(u.source_columns[static_cast<std::size_t>(k)]));
  }
  EXPECT_EQ(u.source_columns.front(), 2u);
  EXPECT_EQ(u.source_columns[6], 8u);

  cfg.delta_y = 1;
  const auto u1 = build_noise_subspace(sensors, 3, cfg);
  EXPECT_EQ(u1.basis.col(0), sensors[0].column(3));
  EXPECT_EQ(u1.basis.col(1), sensors[1].column(3));

  cfg.delta_y = 3;
  const auto u3 = build_noise_subspace(sensors, 0, cfg);
  EXPECT_EQ(u3.source_columns, (std::vector<std::size_t>{0, 1, 2, 0, 1, 2}));
}

TEST(NoiseSubspace, ConfigValidation) {
  std::mt19937_64 rng(4);
  const auto sensors = random_images(rng, 1, 8, 6);
  StrideConfig cfg;
  cfg.delta_y = 7;
  EXPECT_THROW((void)build_noise_subspace(sensors, 0, cfg), Error);  // wider than ky
  cfg.delta_y = 4;
  EXPECT_THROW((void)build_noise_subspace(sensors, 0, cfg), Error);  // even
  cfg.delta_y = 3;
  EXPECT_THROW((void)build_noise_subspace(sensors, 6, cfg), Error);  // column out of range
  cfg.pinv_rcond = 0.0;
  EXPECT_THROW(cfg.validate(6), Error);
}

TEST(SolveColumn, ZeroSubspaceLeavesColumn) {
  std::mt19937_64 rng(8);
  const CVector y = testutil::random_vector(rng, 12);
  NoiseSubspace u;
  u.basis = CMatrix::Zero(12, 3);
  u.sensors = 1;
  u.delta_y = 3;
  const auto sol = solve_column(y, u, TvMatrix(12));
  EXPECT_EQ(sol.coefficients, CVector::Zero(3));
  EXPECT_EQ(sol.corrected, y);
}

TEST(SolveColumn, RampPlusSensor) {
  std::mt19937_64 rng(10);
  const CVector s = testutil::random_vector(rng, 8);
  const cdouble a(0.7, -1.3);
  CVector y(8);
  for (Eigen::Index i = 0; i < 8; ++i) y(i) = static_cast<double>(i);
  y += a * s;
  NoiseSubspace u;
  u.basis = s;
  u.sensors = 1;
  const TvMatrix w(8);
  const auto sol = solve_column(y, u, w);
  EXPECT_LE(w.apply(sol.corrected).norm(), w.apply(y).norm());
  const CVector oracle = oracle_coefficients(y, s);
  EXPECT_LT(std::abs(sol.coefficients(0) - oracle(0)) / std::abs(oracle(0)), 1e-8);
}

// Closed form vs. independent dense least squares, plus optimality of the
// TV residual against random alternatives.
TEST(SolveColumn, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> kx_dist(8, 64);
  const std::size_t dys[3] = {1, 3, 7};
  for (int trial = 0; trial < 1000; ++trial) {
    const auto kx = static_cast<std::size_t>(kx_dist(rng));
    const std::size_t dy = dys[trial % 3];
    const std::size_t nc = 1 + static_cast<std::size_t>(trial % 2);
    const std::size_t ky = dy + 4;
    const auto sensors = random_images(rng, nc, kx, ky);
    StrideConfig cfg;
    cfg.delta_y = dy;
    const std::size_t col = static_cast<std::size_t>(trial) % ky;
    const auto u = build_noise_subspace(sensors, col, cfg);
    const CVector y = testutil::random_vector(rng, static_cast<Eigen::Index>(kx));
    const TvMatrix w(kx);
    const auto sol = solve_column(y, u, w);
    const CVector oracle = oracle_coefficients(y, u.basis);
    ASSERT_LT((sol.coefficients - oracle).norm() / oracle.norm(), 1e-8) << "trial " << trial;
    ASSERT_LT((sol.corrected - (y - u.basis * sol.coefficients)).norm(), 1e-12 * y.norm());
  }
}

TEST(SolveColumn, ResidualIsMinimal) {
  std::mt19937_64 rng(77);
  const std::size_t kx = 32;
  const auto sensors = random_images(rng, 2, kx, 16);
  StrideConfig cfg;
  cfg.delta_y = 3;
  const auto u = build_noise_subspace(sensors, 7, cfg);
  const CVector y = testutil::random_vector(rng, kx);
  const TvMatrix w(kx);
  const auto sol = solve_column(y, u, w);
  const double best = w.apply(sol.corrected).norm();
  std::normal_distribution<double> scale_dist(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double scale = std::pow(10.0, -4.0 + 4.0 * (i % 5) / 4.0);
    const CVector alt = sol.coefficients + scale * testutil::random_vector(rng, sol.coefficients.size());
    EXPECT_LE(best, w.apply(y - u.basis * alt).norm() * (1.0 + 1e-12));
  }
}

// (U^H W^H W U)^{-1} U^H W^H W y, solved by LDLT on the normal matrix.
TEST(SolveColumn, NormalEquationFormAgrees) {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t kx = 48;
    const auto sensors = random_images(rng, 2, kx, 9);
    StrideConfig cfg;
    cfg.delta_y = 3;
    const auto u = build_noise_subspace(sensors, 4, cfg);
    const CVector y = testutil::random_vector(rng, kx);
    const CMatrix w = dense_w(kx);
    const CMatrix wu = w * u.basis;
    const CMatrix normal = wu.adjoint() * wu;
    const CVector rhs = wu.adjoint() * (w * y);
    const CVector a_normal = normal.ldlt().solve(rhs);
    const auto sol = solve_column(y, u, TvMatrix(kx));
    EXPECT_LT((sol.coefficients - a_normal).norm() / a_normal.norm(), 1e-8);
  }
}

TEST(SolveColumn, DcShiftEquivariance) {
  std::mt19937_64 rng(31);
  const std::size_t kx = 40;
  const auto sensors = random_images(rng, 2, kx, 12);
  StrideConfig cfg;
  cfg.delta_y = 5;
  const auto u = build_noise_subspace(sensors, 6, cfg);
  const TvMatrix w(kx);
  for (const cdouble c : {cdouble(3.0, 0.0), cdouble(-1.5, 2.25), cdouble(0.0, 1e3)}) {
    const CVector y = testutil::random_vector(rng, kx);
    const auto base = solve_column(y, u, w);
    const auto shifted = solve_column((y.array() + c).matrix(), u, w);
    EXPECT_LT((shifted.coefficients - base.coefficients).norm(), 1e-9 * base.coefficients.norm());
    EXPECT_LT((shifted.corrected - (base.corrected.array() + c).matrix()).norm(), 1e-9 * (y.norm() + std::abs(c)));
  }
}

TEST(SolveColumn, RejectsNonFinite) {
  std::mt19937_64 rng(1);
  NoiseSubspace u;
  u.basis = testutil::random_matrix(rng, 6, 1);
  CVector y = testutil::random_vector(rng, 6);
  y(2) = {std::nan(""), 0.0};
  EXPECT_THROW((void)solve_column(y, u, TvMatrix(6)), Error);
  EXPECT_THROW((void)solve_column(CVector::Zero(5), u, TvMatrix(6)), Error);
}

TEST(CorrectImage, ZeroSensorsBitIdentical) {
  std::mt19937_64 rng(12);
  const auto coil = testutil::random_array(rng, 32, 24);
  const std::vector<ComplexArray2D> sensors(2, ComplexArray2D(32, 24));
  StrideConfig cfg;
  const auto out = correct_image(coil, sensors, cfg);
  EXPECT_TRUE(bit_identical(out, coil));
  const std::vector<ComplexArray2D> none;
  EXPECT_TRUE(bit_identical(correct_image(coil, none, cfg), coil));
}

TEST(CorrectImage, ColumnsIndependentOfScheduling) {
  std::mt19937_64 rng(13);
  const auto coils = random_images(rng, 3, 24, 20);
  const auto sensors = random_images(rng, 2, 24, 20);
  StrideConfig serial;
  serial.threads = 1;
  StrideConfig threaded = serial;
  threaded.threads = 4;
  const auto a = correct_images(coils, sensors, serial);
  const auto b = correct_images(coils, sensors, threaded);
  for (std::size_t c = 0; c < coils.size(); ++c) EXPECT_TRUE(bit_identical(a[c], b[c]));

  // Reverse column order by hand.
  const TvMatrix w(24);
  for (std::size_t col = 20; col-- > 0;) {
    const auto sol = solve_column(coils[1].column(col), build_noise_subspace(sensors, col, serial), w);
    EXPECT_LT((sol.corrected - a[1].column(col)).norm(), 1e-12 * sol.corrected.norm());
  }
  // Per-coil correction equals the shared-pinv batch.
  EXPECT_LT(relative_l2_error(correct_image(coils[2], sensors, serial), a[2]), 1e-13);
}

TEST(CorrectImage, ShapeMismatch) {
  std::mt19937_64 rng(14);
  const auto coil = testutil::random_array(rng, 16, 16);
  const auto sensors = random_images(rng, 1, 16, 15);
  EXPECT_THROW((void)correct_image(coil, sensors, StrideConfig{}), Error);
}

// Narrow-band interference, linear coupling, noiseless sensor. The
// interference term cancels exactly (the output equals the correction of the
// clean image); what remains is signal leakage at phantom edges on the
// interference row, about 1.1% for this phantom.
TEST(CorrectImage, ToneRemovalOnPhantom) {
  const std::size_t n = 64;
  const auto phantom = sim::make_phantom(sim::PhantomKind::contrast_discs, n);
  sim::EmiScenario sc;
  sc.kind = sim::EmiKind::tone;
  std::mt19937_64 rng(3);
  const auto wave = sim::gen_emi_waveform(sc, sim::sample_times(n, n, 0.05, 12.5e-6), rng);
  const cdouble h(0.8, -0.4);
  const ComplexArray2D clean = phantom.as_complex();
  ComplexArray2D coil_k = fft2c(clean);
  coil_k.matrix() += h * wave.matrix();
  const std::vector<ComplexArray2D> sensors{ifft2c(wave)};
  StrideConfig cfg;
  const auto out = correct_image(ifft2c(coil_k), sensors, cfg);
  EXPECT_LT(relative_l2_error(out, correct_image(clean, sensors, cfg)), 1e-9);
  EXPECT_LT(relative_l2_error(out, clean), 0.015);
  EXPECT_GT(relative_l2_error(ifft2c(coil_k), clean), 1.0);
}

TEST(CorrectAcquisition, RequiresSensorsAndReturnsImages) {
  std::mt19937_64 rng(15);
  MultiCoilAcquisition acq(1, 2, 0, 16, 16, Domain::kspace);
  EXPECT_THROW((void)correct_acquisition(acq, StrideConfig{}), Error);
  MultiCoilAcquisition acq2(2, 2, 1, 16, 16, Domain::kspace);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) acq2.set_channel(r, c, testutil::random_array(rng, 16, 16));
  const auto out = correct_acquisition(acq2, StrideConfig{});
  EXPECT_EQ(out.domain(), Domain::image);
  EXPECT_LT(relative_l2_error(out.sensor(1, 0), ifft2c(acq2.sensor(1, 0))), 1e-15);
  const auto expect = correct_image(ifft2c(acq2.imaging(1, 1)), std::vector{ifft2c(acq2.sensor(1, 0))}, StrideConfig{});
  EXPECT_LT(relative_l2_error(out.imaging(1, 1), expect), 1e-13);
}
