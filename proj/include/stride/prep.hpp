#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "stride/core/acquisition.hpp"
#include "stride/parallel.hpp"

namespace stride::prep {

// ---------------------------------------------------------------------------
// Noise pre-whitening

struct NoiseCovariance {
  CMatrix psi;  // channels x channels, Hermitian PSD
  std::size_t samples = 0;
};

/// Psi = N^H N / S for S samples (rows) by channels (columns).
inline NoiseCovariance estimate_noise_covariance(const ComplexArray2D& noise_samples) {
  require(noise_samples.rows() >= 1 && noise_samples.cols() >= 1, ErrorKind::InvalidArgument, "empty noise scan");
  require_finite(noise_samples, "noise scan");
  const auto& n = noise_samples.matrix();
  NoiseCovariance cov;
  cov.samples = noise_samples.rows();
  cov.psi = (n.adjoint() * n) / static_cast<double>(cov.samples);
  // Exact Hermitian symmetry; the product above is only Hermitian to rounding.
  cov.psi = (0.5 * (cov.psi + cov.psi.adjoint())).eval();
  return cov;
}

struct WhiteningTransform {
  CMatrix matrix;  // L^{-1}, Psi + ridge I = L L^H
};

/// Default ridge: 1e-12 * trace(Psi) / N.
inline double default_ridge(const NoiseCovariance& cov) {
  const auto n = static_cast<double>(cov.psi.rows());
  return 1e-12 * cov.psi.trace().real() / n;
}

inline WhiteningTransform whitening_transform(const NoiseCovariance& cov, std::optional<double> ridge = std::nullopt) {
  require(cov.psi.rows() == cov.psi.cols() && cov.psi.rows() > 0, ErrorKind::InvalidArgument, "covariance must be square");
  const double r = ridge.value_or(default_ridge(cov));
  require(r >= 0.0, ErrorKind::InvalidArgument, "ridge must be non-negative");
  CMatrix reg = cov.psi;
  reg.diagonal().array() += r;
  Eigen::LLT<CMatrix> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "noise covariance is not positive definite after ridge");
  }
  const CMatrix l = llt.matrixL();
  WhiteningTransform t;
  t.matrix = l.triangularView<Eigen::Lower>().solve(CMatrix::Identity(l.rows(), l.cols()));
  require(t.matrix.allFinite(), ErrorKind::NotPositiveDefinite, "whitening transform is not finite");
  return t;
}

/// Whitens the imaging channels at every (repeat, kx, ky); sensor channels are
/// left alone. Psi is built from samples-as-rows, so a sample row n maps to
/// n L^{-H}; for a channel column vector that is conj(L^{-1}) x.
inline MultiCoilAcquisition apply_prewhitening(const MultiCoilAcquisition& acq, const WhiteningTransform& t) {
  const auto nc = static_cast<Eigen::Index>(acq.imaging_channels());
  require(t.matrix.rows() == nc && t.matrix.cols() == nc, ErrorKind::ShapeMismatch,
          "whitening transform size differs from imaging channel count");
  MultiCoilAcquisition out = acq;
  const auto samples = static_cast<Eigen::Index>(acq.kx() * acq.ky());
  for (std::size_t r = 0; r < acq.repeats(); ++r) {
    CMatrix stacked(nc, samples);
    for (Eigen::Index c = 0; c < nc; ++c) {
      stacked.row(c) = Eigen::Map<const Eigen::RowVectorXcd>(acq.imaging(r, c).values().data(), samples);
    }
    const CMatrix white = t.matrix.conjugate() * stacked;
    for (Eigen::Index c = 0; c < nc; ++c) {
      Eigen::Map<Eigen::RowVectorXcd>(out.channel_mut(r, static_cast<std::size_t>(c)).values().data(), samples) =
          white.row(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimal singular-value hard threshold for an m x n matrix (m <= n) with
// i.i.d. noise, aspect ratio beta = m / n.

/// lambda*(beta), the known-noise threshold coefficient.
inline double optimal_lambda(double beta) {
  require(beta > 0.0 && beta <= 1.0, ErrorKind::InvalidArgument, "beta must lie in (0, 1]");
  return std::sqrt(2.0 * (beta + 1.0) + 8.0 * beta / ((beta + 1.0) + std::sqrt(beta * beta + 14.0 * beta + 1.0)));
}

/// Median of the Marchenko-Pastur law with ratio beta (support
/// [(1-sqrt b)^2, (1+sqrt b)^2]). The CDF is integrated in the angle
/// x = a + (b-a)(1 - cos t)/2, which removes the square-root endpoints, and the
/// median is found by bisection on t.
inline double marchenko_pastur_median(double beta) {
  require(beta > 0.0 && beta <= 1.0, ErrorKind::InvalidArgument, "beta must lie in (0, 1]");
  const double lo = std::pow(1.0 - std::sqrt(beta), 2);
  const double hi = std::pow(1.0 + std::sqrt(beta), 2);
  const double half_width = 0.5 * (hi - lo);
  const auto x_of = [&](double t) { return lo + half_width * (1.0 - std::cos(t)); };
  // d(CDF)/dt; bounded on [0, pi] even when lo == 0.
  const auto integrand = [&](double t) {
    const double s = std::sin(t);
    const double x = x_of(t);
    if (x <= 0.0) {
      // Limit at t -> 0 when lo == 0: sin^2 t / x -> 2 / half_width.
      return 2.0 * half_width / (2.0 * std::numbers::pi * beta);
    }
    return half_width * half_width * s * s / (2.0 * std::numbers::pi * beta * x);
  };
  // Composite Gauss-Legendre (5 nodes) on [0, t].
  const auto cdf = [&](double t) {
    static constexpr double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                        0.9061798459386640};
    static constexpr double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                          0.4786286704993665, 0.2369268850561891};
    constexpr int panels = 400;
    const double h = t / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * h;
      for (int k = 0; k < 5; ++k) sum += weights[k] * integrand(mid + 0.5 * h * nodes[k]);
    }
    return 0.5 * h * sum;
  };
  double a = 0.0;
  double b = std::numbers::pi;
  for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
    const double m = 0.5 * (a + b);
    (cdf(m) < 0.5 ? a : b) = m;
  }
  return x_of(0.5 * (a + b));
}

/// omega(beta) = lambda*(beta) / sqrt(mu_beta), the unknown-noise coefficient
/// applied to the median singular value.
inline double optimal_omega(double beta) { return optimal_lambda(beta) / std::sqrt(marchenko_pastur_median(beta)); }

/// Known noise: tau = lambda*(beta) sqrt(n) sigma. Unknown noise (no sigma):
/// tau = omega(beta) * median_singular_value.
inline double optimal_hard_threshold(double beta, std::optional<double> sigma_known, std::size_t n_cols,
                                     double median_singular_value = 0.0) {
  require(n_cols >= 1, ErrorKind::InvalidArgument, "n_cols must be >= 1");
  if (sigma_known) {
    require(*sigma_known >= 0.0, ErrorKind::InvalidArgument, "sigma must be non-negative");
    return optimal_lambda(beta) * std::sqrt(static_cast<double>(n_cols)) * *sigma_known;
  }
  require(median_singular_value >= 0.0, ErrorKind::InvalidArgument, "median singular value must be non-negative");
  return optimal_omega(beta) * median_singular_value;
}

struct LowRankResult {
  CMatrix matrix;
  Eigen::Index rank = 0;
  double threshold = 0.0;
};

/// Hard-thresholds the singular values of `m` (either orientation). With no
/// sigma the unknown-noise rule is used.
inline LowRankResult hard_threshold_denoise(const CMatrix& m, std::optional<double> sigma = std::nullopt) {
  LowRankResult out;
  out.matrix = CMatrix::Zero(m.rows(), m.cols());
  if (m.size() == 0) return out;
  const auto small = std::min(m.rows(), m.cols());
  const auto large = std::max(m.rows(), m.cols());
  const double beta = static_cast<double>(small) / static_cast<double>(large);
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  if (s.size() == 0 || s(0) <= 0.0) return out;
  double median = 0.0;
  if (!sigma) {
    std::vector<double> sv(s.data(), s.data() + s.size());
    std::sort(sv.begin(), sv.end());
    const std::size_t k = sv.size();
    median = k % 2 == 1 ? sv[k / 2] : 0.5 * (sv[k / 2 - 1] + sv[k / 2]);
  }
  out.threshold = optimal_hard_threshold(beta, sigma, static_cast<std::size_t>(large), median);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > out.threshold) ++out.rank;
  }
  const Eigen::Index k = out.rank;
  if (k > 0) {
    out.matrix.noalias() = svd.matrixU().leftCols(k) * s.head(k).asDiagonal() * svd.matrixV().leftCols(k).adjoint();
  }
  return out;
}

/// Per sensor channel: repeats x (kx*ky) matrix, hard-threshold SVD with the
/// unknown-noise rule, written back. Imaging channels are untouched. The SVD
/// row space is unitary-invariant, so k-space and image-domain input give the
/// same result up to the transform.
inline MultiCoilAcquisition denoise_sensors(const MultiCoilAcquisition& acq, std::size_t threads = 0) {
  require(acq.sensor_channels() >= 1, ErrorKind::InvalidArgument, "denoise_sensors needs sensor channels");
  MultiCoilAcquisition out = acq;
  const auto samples = static_cast<Eigen::Index>(acq.kx() * acq.ky());
  const auto repeats = static_cast<Eigen::Index>(acq.repeats());
  parallel_for(
      acq.sensor_channels(),
      [&](std::size_t s) {
        const std::size_t ch = acq.imaging_channels() + s;
        CMatrix m(repeats, samples);
        for (Eigen::Index r = 0; r < repeats; ++r) {
          m.row(r) = Eigen::Map<const Eigen::RowVectorXcd>(acq.channel(static_cast<std::size_t>(r), ch).values().data(),
                                                            samples);
        }
        const LowRankResult lr = hard_threshold_denoise(m);
        for (Eigen::Index r = 0; r < repeats; ++r) {
          Eigen::Map<Eigen::RowVectorXcd>(out.channel_mut(static_cast<std::size_t>(r), ch).values().data(), samples) =
              lr.matrix.row(r);
        }
      },
      threads);
  return out;
}

// ---------------------------------------------------------------------------
// Channel combination

/// sqrt(sum_c |img_c|^2) per voxel, stored with zero imaginary part.
inline ComplexArray2D sos_combine(std::span<const ComplexArray2D> coil_images) {
  require(!coil_images.empty(), ErrorKind::InvalidArgument, "sos_combine needs at least one image");
  const auto& ref = coil_images.front();
  Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(static_cast<Eigen::Index>(ref.rows()), static_cast<Eigen::Index>(ref.cols()));
  for (const auto& img : coil_images) {
    require_same_shape(img, ref, "sos_combine inputs");
    acc += img.matrix().array().abs2();
  }
  ComplexArray2D out(ref.rows(), ref.cols());
  out.matrix() = acc.sqrt().matrix().cast<cdouble>();
  return out;
}

inline ComplexArray2D complex_average(std::span<const ComplexArray2D> images) {
  require(!images.empty(), ErrorKind::InvalidArgument, "complex_average needs at least one image");
  ComplexArray2D out(images.front().rows(), images.front().cols());
  for (const auto& img : images) {
    require_same_shape(img, images.front(), "complex_average inputs");
    out.matrix() += img.matrix();
  }
  out.matrix() /= static_cast<double>(images.size());
  return out;
}

}  // namespace stride::prep
