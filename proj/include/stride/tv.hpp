#pragma once

// Image-domain EMI subtraction with a total-variation data term.
//
// For each image column y (length kx) of an imaging coil, the interference is
// modelled as U*A where U stacks the same and neighbouring columns of every
// EMI-sensor image. The coefficients minimise ||W (y - U A)||_2 with W the
// first-difference operator along the readout, i.e.
//
//   A = pinv(W U) W y,   corrected = y - U A.
//
// W annihilates constants, so the fit is blind to DC offsets in y and uses
// smoothness of the underlying image rather than its energy.

#include <cstddef>
#include <span>
#include <vector>

#include "stride/core/acquisition.hpp"
#include "stride/linalg.hpp"
#include "stride/parallel.hpp"

namespace stride::tv {

struct StrideConfig {
  /// Number of adjacent sensor columns per sensor (odd).
  std::size_t delta_y = 7;
  double pinv_rcond = kDefaultRcond;
  /// Handled by the pipeline before correction; recorded here for provenance.
  bool sensor_denoise = false;
  /// Worker threads for the column loop; 0 = hardware concurrency.
  std::size_t threads = 0;

  void validate(std::size_t ky) const {
    require(delta_y >= 1, ErrorKind::InvalidArgument, "delta_y must be >= 1");
    require(delta_y % 2 == 1, ErrorKind::InvalidArgument, "delta_y must be odd");
    require(delta_y <= ky, ErrorKind::InvalidArgument,
            "delta_y (" + std::to_string(delta_y) + ") exceeds ky (" + std::to_string(ky) + ")");
    require(pinv_rcond > 0.0 && pinv_rcond < 1.0, ErrorKind::InvalidArgument, "pinv_rcond must lie in (0, 1)");
  }
};

/// Implicit (n-1) x n forward-difference operator: W(i,i) = -1, W(i,i+1) = +1.
class TvMatrix {
 public:
  explicit TvMatrix(std::size_t n) : n_(n) {
    require(n >= 2, ErrorKind::InvalidArgument, "TV matrix needs n >= 2");
  }

  std::size_t rows() const noexcept { return n_ - 1; }
  std::size_t cols() const noexcept { return n_; }

  template <typename Derived>
  auto apply(const Eigen::MatrixBase<Derived>& x) const {
    require(static_cast<std::size_t>(x.rows()) == n_, ErrorKind::ShapeMismatch, "TV operator input length");
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    return (x.bottomRows(m) - x.topRows(m)).eval();
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      w(i, i) = -1.0;
      w(i, i + 1) = 1.0;
    }
    return w;
  }

 private:
  std::size_t n_;
};

inline TvMatrix build_tv_matrix(std::size_t n) { return TvMatrix(n); }

/// First column of the delta_y-wide window centred on `col`, shifted inward
/// at the image edges so the window never leaves [0, ky).
inline std::size_t window_start(std::size_t col, std::size_t delta_y, std::size_t ky) {
  const std::size_t half = delta_y / 2;
  const std::size_t start = col >= half ? col - half : 0;
  return std::min(start, ky - delta_y);
}

struct NoiseSubspace {
  /// kx x (sensors * delta_y); sensor-major, window columns in ascending order.
  CMatrix basis;
  std::vector<std::size_t> source_columns;  // image column feeding each basis column
  std::size_t sensors = 0;
  std::size_t delta_y = 1;
  /// Cross-column extent along the readout; always 1.
  std::size_t delta_x = 1;
};

inline NoiseSubspace build_noise_subspace(std::span<const ComplexArray2D> sensor_images, std::size_t col,
                                          const StrideConfig& cfg) {
  require(!sensor_images.empty(), ErrorKind::InvalidArgument, "noise subspace needs at least one sensor");
  const std::size_t kx = sensor_images.front().rows();
  const std::size_t ky = sensor_images.front().cols();
  for (const auto& s : sensor_images) require_same_shape(s, sensor_images.front(), "sensor images");
  cfg.validate(ky);
  require(col < ky, ErrorKind::InvalidArgument, "column index out of range");

  NoiseSubspace u;
  u.sensors = sensor_images.size();
  u.delta_y = cfg.delta_y;
  u.basis.resize(static_cast<Eigen::Index>(kx), static_cast<Eigen::Index>(u.sensors * cfg.delta_y));
  const std::size_t start = window_start(col, cfg.delta_y, ky);
  Eigen::Index k = 0;
  for (const auto& s : sensor_images) {
    for (std::size_t c = start; c < start + cfg.delta_y; ++c, ++k) {
      u.basis.col(k) = s.matrix().col(static_cast<Eigen::Index>(c));
      u.source_columns.push_back(c);
    }
  }
  return u;
}

struct ColumnSolution {
  CVector coefficients;
  CVector corrected;
};

/// Pseudoinverse of W*U for one column window; reusable across every coil
/// that shares the same sensors.
class ColumnSolver {
 public:
  ColumnSolver(NoiseSubspace subspace, const TvMatrix& w, double rcond) : u_(std::move(subspace)), w_(w) {
    require(static_cast<std::size_t>(u_.basis.rows()) == w.cols(), ErrorKind::ShapeMismatch,
            "noise subspace length differs from TV operator width");
    require(u_.basis.allFinite(), ErrorKind::NonFinite, "noise subspace");
    pinv_ = pseudo_inverse(w.apply(u_.basis), rcond);
  }

  const NoiseSubspace& subspace() const noexcept { return u_; }
  Eigen::Index rank() const noexcept { return pinv_.rank; }

  ColumnSolution solve(const CVector& y) const {
    require(static_cast<std::size_t>(y.size()) == w_.cols(), ErrorKind::ShapeMismatch, "column length");
    require(y.allFinite(), ErrorKind::NonFinite, "image column");
    ColumnSolution out;
    if (pinv_.rank == 0) {
      out.coefficients = CVector::Zero(u_.basis.cols());
      out.corrected = y;
      return out;
    }
    out.coefficients = pinv_.matrix * w_.apply(y);
    out.corrected = y - u_.basis * out.coefficients;
    return out;
  }

 private:
  NoiseSubspace u_;
  TvMatrix w_;
  PseudoInverse pinv_;
};

inline ColumnSolution solve_column(const CVector& y, const NoiseSubspace& u, const TvMatrix& w,
                                   double rcond = kDefaultRcond) {
  return ColumnSolver(u, w, rcond).solve(y);
}

/// Corrects several coil images against one set of sensor images. Each
/// column's pseudoinverse is computed once and shared by all coils.
inline std::vector<ComplexArray2D> correct_images(std::span<const ComplexArray2D> coil_images,
                                                  std::span<const ComplexArray2D> sensor_images,
                                                  const StrideConfig& cfg) {
  std::vector<ComplexArray2D> out(coil_images.begin(), coil_images.end());
  if (coil_images.empty()) return out;
  const auto& ref = coil_images.front();
  for (const auto& c : coil_images) require_same_shape(c, ref, "coil images");
  for (const auto& s : sensor_images) require_same_shape(s, ref, "sensor image vs coil image");
  for (const auto& c : coil_images) require_finite(c, "coil image");
  if (sensor_images.empty()) return out;
  require(ref.rows() >= 2, ErrorKind::InvalidArgument, "images need at least two rows");
  cfg.validate(ref.cols());

  const TvMatrix w(ref.rows());
  parallel_for(
      ref.cols(),
      [&](std::size_t col) {
        const ColumnSolver solver(build_noise_subspace(sensor_images, col, cfg), w, cfg.pinv_rcond);
        if (solver.rank() == 0) return;
        for (std::size_t i = 0; i < coil_images.size(); ++i) {
          out[i].set_column(col, solver.solve(coil_images[i].column(col)).corrected);
        }
      },
      cfg.threads);
  return out;
}

inline ComplexArray2D correct_image(const ComplexArray2D& coil_image, std::span<const ComplexArray2D> sensor_images,
                                    const StrideConfig& cfg) {
  return std::move(correct_images(std::span(&coil_image, 1), sensor_images, cfg).front());
}

/// Transforms every channel to the image domain (if needed) and corrects each
/// imaging coil against the sensors of the same repeat. Sensor channels are
/// passed through unchanged.
inline MultiCoilAcquisition correct_acquisition(const MultiCoilAcquisition& acq, const StrideConfig& cfg) {
  MultiCoilAcquisition img = acq.domain() == Domain::kspace ? acq.to_image() : acq;
  require(acq.sensor_channels() >= 1, ErrorKind::InvalidArgument, "STRIDE needs at least one EMI sensor");
  for (std::size_t r = 0; r < img.repeats(); ++r) {
    const auto coils = img.imaging_images(r);
    const auto sensors = img.sensor_images(r);
    auto corrected = correct_images(coils, sensors, cfg);
    for (std::size_t c = 0; c < corrected.size(); ++c) img.set_channel(r, c, std::move(corrected[c]));
  }
  return img;
}

}  // namespace stride::tv
