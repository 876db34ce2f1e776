#pragma once

#include <Eigen/SVD>

#include "stride/core/array.hpp"

namespace stride {

inline constexpr double kDefaultRcond = 1e-10;

/// Moore-Penrose pseudoinverse from a thin SVD. Singular values at or below
/// rcond * sigma_max are treated as zero, which gives the minimum-norm
/// least-squares solution on rank-deficient systems.
struct PseudoInverse {
  CMatrix matrix;  // cols(A) x rows(A)
  Eigen::Index rank = 0;
  double sigma_max = 0.0;

  CVector apply(const CVector& b) const { return matrix * b; }
};

inline PseudoInverse pseudo_inverse(const CMatrix& a, double rcond = kDefaultRcond) {
  require(rcond > 0.0 && rcond < 1.0, ErrorKind::InvalidArgument, "rcond must lie in (0, 1)");
  require(a.allFinite(), ErrorKind::NonFinite, "pseudo_inverse input");
  PseudoInverse out;
  out.matrix = CMatrix::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;

  Eigen::JacobiSVD<CMatrix, Eigen::ColPivHouseholderQRPreconditioner> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  out.sigma_max = s.size() > 0 ? s(0) : 0.0;
  if (out.sigma_max <= 0.0) return out;
  const double cutoff = rcond * out.sigma_max;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++out.rank;
  }
  const Eigen::Index k = out.rank;
  out.matrix.noalias() = svd.matrixV().leftCols(k) *
                         (s.head(k).cwiseInverse().asDiagonal() * svd.matrixU().leftCols(k).adjoint());
  return out;
}

inline CVector min_norm_solve(const CMatrix& a, const CVector& b, double rcond = kDefaultRcond) {
  require(a.rows() == b.size(), ErrorKind::ShapeMismatch, "min_norm_solve: rhs length");
  require(b.allFinite(), ErrorKind::NonFinite, "min_norm_solve rhs");
  return pseudo_inverse(a, rcond).apply(b);
}

}  // namespace stride
