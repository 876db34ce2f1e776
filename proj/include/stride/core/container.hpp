#pragma once

// Binary array container:
//   magic   8 bytes  "STRIDEv1"
//   ndim    u32
//   dims    u64 x ndim
//   dtype   u8       0 = complex float32 (re, im), 1 = complex float64 (re, im)
//   payload row-major interleaved samples
// Everything is little-endian.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "stride/core/array.hpp"

namespace stride {

enum class Dtype : std::uint8_t { complex64 = 0, complex128 = 1 };

inline constexpr std::array<char, 8> kContainerMagic{'S', 'T', 'R', 'I', 'D', 'E', 'v', '1'};

// Readers refuse anything larger than this many samples (16 GiB at dtype 1).
inline constexpr std::uint64_t kMaxContainerSamples = std::uint64_t{1} << 30;

namespace detail {

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void write_le(std::ostream& os, T v) {
  v = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_le(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) return false;
  v = byteswap_if_big(v);
  return true;
}

}  // namespace detail

inline void write_array(std::ostream& os, const ComplexArray2D& arr, Dtype dtype = Dtype::complex128) {
  os.write(kContainerMagic.data(), kContainerMagic.size());
  detail::write_le<std::uint32_t>(os, 2);
  detail::write_le<std::uint64_t>(os, arr.rows());
  detail::write_le<std::uint64_t>(os, arr.cols());
  detail::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(dtype));
  if (dtype == Dtype::complex128) {
    std::vector<double> buf;
    buf.reserve(2 * arr.size());
    for (const cdouble& z : arr.values()) {
      buf.push_back(detail::byteswap_if_big(z.real()));
      buf.push_back(detail::byteswap_if_big(z.imag()));
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  } else {
    std::vector<float> buf;
    buf.reserve(2 * arr.size());
    for (const cdouble& z : arr.values()) {
      buf.push_back(detail::byteswap_if_big(static_cast<float>(z.real())));
      buf.push_back(detail::byteswap_if_big(static_cast<float>(z.imag())));
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

inline ComplexArray2D read_array(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (is.gcount() != static_cast<std::streamsize>(magic.size())) {
    throw Error(ErrorKind::Truncated, "file shorter than header");
  }
  if (magic != kContainerMagic) throw Error(ErrorKind::BadMagic, "expected STRIDEv1");

  std::uint32_t ndim = 0;
  if (!detail::read_le(is, ndim)) throw Error(ErrorKind::Truncated, "missing ndim");
  if (ndim != 2) throw Error(ErrorKind::DimOverflow, "only 2-D arrays are supported, got ndim=" + std::to_string(ndim));
  std::uint64_t dims[2]{};
  for (auto& d : dims) {
    if (!detail::read_le(is, d)) throw Error(ErrorKind::Truncated, "missing dims");
  }
  if (dims[0] == 0 || dims[1] == 0 || dims[0] > kMaxContainerSamples || dims[1] > kMaxContainerSamples ||
      dims[0] * dims[1] > kMaxContainerSamples) {
    throw Error(ErrorKind::DimOverflow,
                "dims " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + " out of range");
  }
  std::uint8_t dtype = 0;
  if (!detail::read_le(is, dtype)) throw Error(ErrorKind::Truncated, "missing dtype");
  if (dtype > 1) throw Error(ErrorKind::UnsupportedDtype, "dtype code " + std::to_string(dtype));

  const std::size_t rows = dims[0];
  const std::size_t cols = dims[1];
  const std::size_t n = rows * cols;
  ComplexArray2D out(rows, cols);
  auto values = out.values();
  if (dtype == 1) {
    std::vector<double> buf(2 * n);
    const auto bytes = static_cast<std::streamsize>(buf.size() * sizeof(double));
    is.read(reinterpret_cast<char*>(buf.data()), bytes);
    if (is.gcount() != bytes) throw Error(ErrorKind::Truncated, "payload ends early");
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = {detail::byteswap_if_big(buf[2 * i]), detail::byteswap_if_big(buf[2 * i + 1])};
    }
  } else {
    std::vector<float> buf(2 * n);
    const auto bytes = static_cast<std::streamsize>(buf.size() * sizeof(float));
    is.read(reinterpret_cast<char*>(buf.data()), bytes);
    if (is.gcount() != bytes) throw Error(ErrorKind::Truncated, "payload ends early");
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = {detail::byteswap_if_big(buf[2 * i]), detail::byteswap_if_big(buf[2 * i + 1])};
    }
  }
  if (!out.all_finite()) throw Error(ErrorKind::NonFinite, "container holds NaN/Inf samples");
  return out;
}

inline void save_array(const std::filesystem::path& path, const ComplexArray2D& arr, Dtype dtype = Dtype::complex128) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_array(os, arr, dtype);
  if (!os) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline ComplexArray2D load_array(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_array(is);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

}  // namespace stride
