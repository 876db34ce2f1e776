#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "stride/error.hpp"

namespace stride {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Row-major complex storage. Rows run along the readout (kx / x) axis and
/// columns along phase encoding (ky / y), so an image column is one readout
/// profile.
using RowMajorCMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMajorRMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ComplexArray2D {
 public:
  ComplexArray2D() = default;
  ComplexArray2D(std::size_t rows, std::size_t cols)
      : data_(RowMajorCMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {}
  explicit ComplexArray2D(RowMajorCMatrix m) : data_(std::move(m)) {}

  static ComplexArray2D constant(std::size_t rows, std::size_t cols, cdouble value) {
    ComplexArray2D out(rows, cols);
    out.data_.setConstant(value);
    return out;
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(data_.size()); }
  bool empty() const noexcept { return data_.size() == 0; }

  cdouble& operator()(std::size_t r, std::size_t c) {
    return data_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  cdouble operator()(std::size_t r, std::size_t c) const {
    return data_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

  std::span<cdouble> values() noexcept { return {data_.data(), size()}; }
  std::span<const cdouble> values() const noexcept { return {data_.data(), size()}; }

  RowMajorCMatrix& matrix() noexcept { return data_; }
  const RowMajorCMatrix& matrix() const noexcept { return data_; }

  /// Copy of column `c` (length rows()).
  CVector column(std::size_t c) const { return data_.col(static_cast<Eigen::Index>(c)); }
  void set_column(std::size_t c, const CVector& v) { data_.col(static_cast<Eigen::Index>(c)) = v; }

  bool same_shape(const ComplexArray2D& other) const noexcept {
    return rows() == other.rows() && cols() == other.cols();
  }

  bool all_finite() const noexcept { return data_.allFinite(); }

  double norm() const { return data_.norm(); }

  friend bool operator==(const ComplexArray2D& a, const ComplexArray2D& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  RowMajorCMatrix data_;
};

inline void require_finite(const ComplexArray2D& a, const char* what) {
  require(a.all_finite(), ErrorKind::NonFinite, what);
}

inline void require_same_shape(const ComplexArray2D& a, const ComplexArray2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + " (" + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                              "x" + std::to_string(b.cols()) + ")");
  }
}

/// ‖a − b‖₂ / ‖b‖₂, or ‖a‖₂ when b is zero.
inline double relative_l2_error(const ComplexArray2D& a, const ComplexArray2D& b) {
  require_same_shape(a, b, "relative_l2_error");
  const double den = b.norm();
  const double num = (a.matrix() - b.matrix()).norm();
  return den > 0.0 ? num / den : num;
}

}  // namespace stride
