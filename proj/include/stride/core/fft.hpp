#pragma once

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "stride/core/array.hpp"

namespace stride {

namespace detail {

// ifftshift -> DFT -> fftshift with unitary scaling, in place on `line`.
// Works for odd lengths as well (ifftshift and fftshift differ there).
inline void centered_dft_1d(Eigen::FFT<double>& engine, std::vector<cdouble>& line,
                            std::vector<cdouble>& scratch, bool forward) {
  const std::size_t n = line.size();
  if (n == 1) return;
  const std::size_t half_down = n / 2;
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = line[(i + half_down) % n];
  if (forward) {
    engine.fwd(line, scratch);
  } else {
    engine.inv(line, scratch);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) scratch[(i + half_down) % n] = line[i] * scale;
  line.swap(scratch);
}

inline ComplexArray2D centered_dft_2d(const ComplexArray2D& in, bool forward) {
  require(in.rows() >= 1 && in.cols() >= 1, ErrorKind::InvalidArgument, "fft2c: empty array");
  require_finite(in, "fft2c/ifft2c input");
  Eigen::FFT<double> engine;
  engine.SetFlag(Eigen::FFT<double>::Unscaled);
  ComplexArray2D out = in;
  const std::size_t rows = in.rows();
  const std::size_t cols = in.cols();
  std::vector<cdouble> line, scratch;

  line.resize(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) line[c] = out(r, c);
    centered_dft_1d(engine, line, scratch, forward);
    line.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = line[c];
  }
  line.resize(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) line[r] = out(r, c);
    centered_dft_1d(engine, line, scratch, forward);
    line.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) out(r, c) = line[r];
  }
  return out;
}

}  // namespace detail

/// Centered, unitary 2D forward DFT (image -> k-space). DC sits at
/// (rows/2, cols/2).
inline ComplexArray2D fft2c(const ComplexArray2D& img) { return detail::centered_dft_2d(img, true); }

/// Inverse of fft2c (k-space -> image).
inline ComplexArray2D ifft2c(const ComplexArray2D& ksp) { return detail::centered_dft_2d(ksp, false); }

}  // namespace stride
