#pragma once

// k-space EMI removal with temporal grouping (EDITER-style baseline).
//
// Phase-encode lines are split into temporal groups. Within a group g every
// imaging coil is fitted by least squares on a regressor matrix U_g whose
// columns are the sensor k-space shifted by each (dkx, dky) in a centred
// window, and the fitted interference U_g h_g is subtracted.
//
//   variant A: one PE line per group,               window 1 x 7 (kx x ky)
//   variant B: k-means groups chosen by silhouette, window 1 x 1

#include <cstdint>
#include <span>
#include <vector>

#include "stride/core/acquisition.hpp"
#include "stride/kmeans.hpp"
#include "stride/linalg.hpp"
#include "stride/parallel.hpp"

namespace stride::editer {

enum class Variant { A, B };

struct EditerConfig {
  Variant variant = Variant::A;
  std::size_t delta_kx = 1;
  std::size_t delta_ky = 7;
  std::size_t max_clusters = 10;
  double rcond = kDefaultRcond;
  std::uint64_t seed = 0x5eed;
  std::size_t threads = 0;

  static EditerConfig variant_a() { return EditerConfig{}; }
  static EditerConfig variant_b() {
    EditerConfig c;
    c.variant = Variant::B;
    c.delta_ky = 1;
    return c;
  }

  void validate(std::size_t kx, std::size_t ky) const {
    require(delta_kx >= 1 && delta_kx % 2 == 1, ErrorKind::InvalidArgument, "delta_kx must be odd and >= 1");
    require(delta_ky >= 1 && delta_ky % 2 == 1, ErrorKind::InvalidArgument, "delta_ky must be odd and >= 1");
    require(delta_kx <= kx && delta_ky <= ky, ErrorKind::InvalidArgument, "shift window larger than the matrix");
    require(max_clusters >= 1, ErrorKind::InvalidArgument, "max_clusters must be >= 1");
    require(rcond > 0.0 && rcond < 1.0, ErrorKind::InvalidArgument, "rcond must lie in (0, 1)");
  }
};

struct TemporalGrouping {
  std::vector<std::size_t> assignment;  // PE line -> group id
  std::size_t groups = 0;

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(groups);
    for (std::size_t line = 0; line < assignment.size(); ++line) out[assignment[line]].push_back(line);
    return out;
  }
};

inline TemporalGrouping assign_groups_fixed(std::size_t ky) {
  require(ky >= 1, ErrorKind::InvalidArgument, "ky must be >= 1");
  TemporalGrouping g;
  g.assignment.resize(ky);
  for (std::size_t j = 0; j < ky; ++j) g.assignment[j] = j;
  g.groups = ky;
  return g;
}

struct TransferKernel {
  /// Sensor-major, then dky, then dkx (both ascending from -half to +half).
  CVector coefficients;
  std::size_t sensors = 0;
  std::size_t delta_kx = 1;
  std::size_t delta_ky = 1;
};

/// (|lines| * kx) x (sensors * delta_kx * delta_ky). Row (line i, kx k) of
/// the column for shift (dkx, dky) holds sensor(k + dkx, lines[i] + dky);
/// shifts that leave the acquired matrix read zero.
inline CMatrix build_group_regressors(std::span<const ComplexArray2D> sensor_ksp, std::span<const std::size_t> lines,
                                      std::size_t delta_kx, std::size_t delta_ky) {
  require(!lines.empty(), ErrorKind::InvalidArgument, "empty temporal group");
  require(!sensor_ksp.empty(), ErrorKind::InvalidArgument, "no sensor channels");
  const auto kx = static_cast<long>(sensor_ksp.front().rows());
  const auto ky = static_cast<long>(sensor_ksp.front().cols());
  const long hx = static_cast<long>(delta_kx / 2);
  const long hy = static_cast<long>(delta_ky / 2);
  CMatrix u = CMatrix::Zero(static_cast<Eigen::Index>(lines.size()) * kx,
                            static_cast<Eigen::Index>(sensor_ksp.size() * delta_kx * delta_ky));
  Eigen::Index col = 0;
  for (const auto& s : sensor_ksp) {
    for (long dy = -hy; dy <= hy; ++dy) {
      for (long dx = -hx; dx <= hx; ++dx, ++col) {
        for (std::size_t i = 0; i < lines.size(); ++i) {
          const long j = static_cast<long>(lines[i]) + dy;
          if (j < 0 || j >= ky) continue;
          for (long k = 0; k < kx; ++k) {
            const long kk = k + dx;
            if (kk < 0 || kk >= kx) continue;
            u(static_cast<Eigen::Index>(i) * kx + k, col) = s(static_cast<std::size_t>(kk), static_cast<std::size_t>(j));
          }
        }
      }
    }
  }
  return u;
}

/// Stacks the listed PE lines (columns) of `ksp` into one vector, line-major.
inline CVector gather_lines(const ComplexArray2D& ksp, std::span<const std::size_t> lines) {
  const auto kx = static_cast<Eigen::Index>(ksp.rows());
  CVector y(static_cast<Eigen::Index>(lines.size()) * kx);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    y.segment(static_cast<Eigen::Index>(i) * kx, kx) = ksp.matrix().col(static_cast<Eigen::Index>(lines[i]));
  }
  return y;
}

inline void scatter_lines(ComplexArray2D& ksp, std::span<const std::size_t> lines, const CVector& y) {
  const auto kx = static_cast<Eigen::Index>(ksp.rows());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ksp.matrix().col(static_cast<Eigen::Index>(lines[i])) = y.segment(static_cast<Eigen::Index>(i) * kx, kx);
  }
}

inline TransferKernel estimate_group_kernel(const ComplexArray2D& coil_ksp, std::span<const ComplexArray2D> sensor_ksp,
                                            std::span<const std::size_t> lines, std::size_t delta_kx,
                                            std::size_t delta_ky, double rcond = kDefaultRcond) {
  require(!lines.empty(), ErrorKind::InvalidArgument, "empty temporal group");
  for (const auto& s : sensor_ksp) require_same_shape(s, coil_ksp, "sensor vs coil k-space");
  TransferKernel k;
  k.sensors = sensor_ksp.size();
  k.delta_kx = delta_kx;
  k.delta_ky = delta_ky;
  const CMatrix u = build_group_regressors(sensor_ksp, lines, delta_kx, delta_ky);
  k.coefficients = min_norm_solve(u, gather_lines(coil_ksp, lines), rcond);
  return k;
}

/// Per-line single-tap transfer estimates (one coefficient per coil and
/// sensor), real/imag concatenated, clustered with silhouette-selected k.
inline TemporalGrouping assign_groups_kmeans(std::span<const ComplexArray2D> coil_ksp,
                                             std::span<const ComplexArray2D> sensor_ksp, std::size_t max_clusters,
                                             double rcond = kDefaultRcond, std::uint64_t seed = 0x5eed) {
  require(!coil_ksp.empty(), ErrorKind::InvalidArgument, "no imaging channels");
  require(!sensor_ksp.empty(), ErrorKind::InvalidArgument, "no sensor channels");
  const std::size_t ky = coil_ksp.front().cols();
  const std::size_t nc = sensor_ksp.size();
  cluster::Points features(static_cast<Eigen::Index>(ky), static_cast<Eigen::Index>(2 * coil_ksp.size() * nc));
  for (std::size_t j = 0; j < ky; ++j) {
    const std::size_t line[1] = {j};
    const PseudoInverse pinv = pseudo_inverse(build_group_regressors(sensor_ksp, line, 1, 1), rcond);
    for (std::size_t c = 0; c < coil_ksp.size(); ++c) {
      const CVector h = pinv.apply(gather_lines(coil_ksp[c], line));
      for (std::size_t s = 0; s < nc; ++s) {
        const auto f = static_cast<Eigen::Index>(2 * (c * nc + s));
        features(static_cast<Eigen::Index>(j), f) = h(static_cast<Eigen::Index>(s)).real();
        features(static_cast<Eigen::Index>(j), f + 1) = h(static_cast<Eigen::Index>(s)).imag();
      }
    }
  }
  const auto result = cluster::select_k_by_silhouette(features, max_clusters, seed);
  TemporalGrouping g;
  g.assignment = result.labels;
  g.groups = result.k;
  return g;
}

/// Subtracts the fitted interference from every imaging coil in place.
inline void correct_repeat(std::span<ComplexArray2D> coil_ksp, std::span<const ComplexArray2D> sensor_ksp,
                           const TemporalGrouping& grouping, const EditerConfig& cfg) {
  const auto groups = grouping.members();
  parallel_for(
      groups.size(),
      [&](std::size_t g) {
        const auto& lines = groups[g];
        if (lines.empty()) return;
        const CMatrix u = build_group_regressors(sensor_ksp, lines, cfg.delta_kx, cfg.delta_ky);
        const PseudoInverse pinv = pseudo_inverse(u, cfg.rcond);
        if (pinv.rank == 0) return;
        for (auto& coil : coil_ksp) {
          const CVector y = gather_lines(coil, lines);
          const CVector h = pinv.apply(y);
          scatter_lines(coil, lines, y - u * h);
        }
      },
      cfg.threads);
}

/// Applies the configured variant to every repeat (each repeat is grouped
/// independently). Input may be in either domain; output is k-space.
inline MultiCoilAcquisition correct_kspace(const MultiCoilAcquisition& acq, const EditerConfig& cfg) {
  require(acq.sensor_channels() >= 1, ErrorKind::InvalidArgument, "EDITER needs at least one EMI sensor");
  MultiCoilAcquisition ksp = acq.domain() == Domain::image ? acq.to_kspace() : acq;
  cfg.validate(ksp.kx(), ksp.ky());
  for (std::size_t r = 0; r < ksp.repeats(); ++r) {
    auto coils = ksp.imaging_images(r);
    const auto sensors = ksp.sensor_images(r);
    const TemporalGrouping grouping = cfg.variant == Variant::A
                                          ? assign_groups_fixed(ksp.ky())
                                          : assign_groups_kmeans(coils, sensors, cfg.max_clusters, cfg.rcond, cfg.seed);
    correct_repeat(coils, sensors, grouping, cfg);
    for (std::size_t c = 0; c < coils.size(); ++c) ksp.set_channel(r, c, std::move(coils[c]));
  }
  return ksp;
}

}  // namespace stride::editer
