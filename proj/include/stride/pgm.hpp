#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>

#include "stride/eval.hpp"

namespace stride::io {

struct PgmScaling {
  double min = 0.0;
  double max = 0.0;
};

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples) with min-max
/// scaling over valid voxels; invalid voxels are written as 0. The scaling is
/// recorded in a sidecar `<path>.txt`.
inline PgmScaling write_pgm16(const std::filesystem::path& path, const eval::RealImage& img,
                              const eval::BoolImage* valid = nullptr) {
  PgmScaling sc{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const auto ok = [&](Eigen::Index i, Eigen::Index j) {
    return (!valid || (*valid)(i, j)) && std::isfinite(img(i, j));
  };
  for (Eigen::Index i = 0; i < img.rows(); ++i) {
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      if (!ok(i, j)) continue;
      sc.min = std::min(sc.min, img(i, j));
      sc.max = std::max(sc.max, img(i, j));
    }
  }
  if (!std::isfinite(sc.min)) sc = {0.0, 0.0};
  const double span = sc.max - sc.min;

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  // Image rows (readout) become PGM rows.
  os << "P5\n" << img.cols() << ' ' << img.rows() << "\n65535\n";
  for (Eigen::Index i = 0; i < img.rows(); ++i) {
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      std::uint16_t v = 0;
      if (ok(i, j) && span > 0.0) v = static_cast<std::uint16_t>(std::lround((img(i, j) - sc.min) / span * 65535.0));
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      os.write(bytes, 2);
    }
  }
  std::ofstream side(path.string() + ".txt", std::ios::trunc);
  side.precision(17);
  side << "min " << sc.min << "\nmax " << sc.max << '\n';
  return sc;
}

}  // namespace stride::io
