#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stride/error.hpp"

namespace stride::cluster {

using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::size_t k = 1;
  double silhouette = 0.0;
};

/// Relabels so ids are contiguous from 0 in order of first appearance.
inline std::size_t canonicalize_labels(std::vector<std::size_t>& labels) {
  std::vector<std::size_t> remap;
  std::vector<bool> seen;
  std::size_t next = 0;
  for (auto& l : labels) {
    if (l >= seen.size()) {
      seen.resize(l + 1, false);
      remap.resize(l + 1, 0);
    }
    if (!seen[l]) {
      seen[l] = true;
      remap[l] = next++;
    }
    l = remap[l];
  }
  return next;
}

/// Points closer than rel_tol * (largest point norm) count as one; features
/// computed by least squares agree only to rounding.
inline std::size_t count_distinct(const Points& p, double rel_tol = 1e-9) {
  const double scale = p.size() ? p.rowwise().norm().maxCoeff() : 0.0;
  const double tol2 = (rel_tol * scale) * (rel_tol * scale);
  std::size_t distinct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    bool dup = false;
    for (Eigen::Index j = 0; j < i && !dup; ++j) dup = (p.row(i) - p.row(j)).squaredNorm() <= tol2;
    if (!dup) ++distinct;
  }
  return distinct;
}

/// Lloyd's algorithm. The first centre is drawn from a fixed-seed generator;
/// the rest are farthest-point picks (lowest index on ties), so the result is
/// fully deterministic.
inline std::vector<std::size_t> kmeans(const Points& p, std::size_t k, std::uint64_t seed = 0x5eed,
                                       int max_iter = 300) {
  const auto n = static_cast<std::size_t>(p.rows());
  require(k >= 1 && k <= n, ErrorKind::InvalidArgument, "k must lie in [1, n]");
  std::mt19937_64 rng(seed);
  Points centres(static_cast<Eigen::Index>(k), p.cols());
  centres.row(0) = p.row(static_cast<Eigen::Index>(rng() % n));
  Eigen::VectorXd nearest = (p.rowwise() - centres.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    centres.row(static_cast<Eigen::Index>(c)) = p.row(far);
    nearest = nearest.cwiseMin((p.rowwise() - centres.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());
  }

  std::vector<std::size_t> labels(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centres.rowwise() - p.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      if (labels[i] != static_cast<std::size_t>(best)) {
        labels[i] = static_cast<std::size_t>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Points sums = Points::Zero(static_cast<Eigen::Index>(k), p.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(labels[i])) += p.row(static_cast<Eigen::Index>(i));
      ++counts[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centres.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      } else {
        // Empty cluster: move it onto the point worst served by its centre.
        Eigen::VectorXd err(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
          err(static_cast<Eigen::Index>(i)) =
              (p.row(static_cast<Eigen::Index>(i)) - centres.row(static_cast<Eigen::Index>(labels[i]))).squaredNorm();
        }
        Eigen::Index far = 0;
        err.maxCoeff(&far);
        centres.row(static_cast<Eigen::Index>(c)) = p.row(far);
      }
    }
  }
  return labels;
}

/// Mean silhouette coefficient (Euclidean). Singleton clusters score 0.
inline double silhouette(const Points& p, const std::vector<std::size_t>& labels, std::size_t k) {
  const auto n = static_cast<std::size_t>(p.rows());
  if (k < 2 || n < 2) return 0.0;
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) ++sizes[l];
  double total = 0.0;
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      dist_sum[labels[j]] += (p.row(static_cast<Eigen::Index>(i)) - p.row(static_cast<Eigen::Index>(j))).norm();
    }
    const std::size_t own = labels[i];
    if (sizes[own] <= 1) continue;
    const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own && sizes[c] > 0) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0 && std::isfinite(b)) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

/// Runs k-means for k = 2..max_k (capped by the number of distinct points)
/// and keeps the best silhouette. Falls back to a single cluster when the
/// best silhouette is below `min_silhouette`.
inline KMeansResult select_k_by_silhouette(const Points& p, std::size_t max_k, std::uint64_t seed = 0x5eed,
                                           double min_silhouette = 0.2) {
  const auto n = static_cast<std::size_t>(p.rows());
  KMeansResult best;
  best.labels.assign(n, 0);
  best.k = 1;
  best.silhouette = 0.0;
  if (n < 2 || max_k < 2) return best;
  const std::size_t limit = std::min(max_k, count_distinct(p));
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 2; k <= limit; ++k) {
    auto labels = kmeans(p, k, seed);
    const std::size_t used = canonicalize_labels(labels);
    const double score = silhouette(p, labels, used);
    if (score > best_score) {
      best_score = score;
      best.labels = std::move(labels);
      best.k = used;
      best.silhouette = score;
    }
  }
  if (best_score < min_silhouette) {
    best.labels.assign(n, 0);
    best.k = 1;
    best.silhouette = std::max(0.0, best_score);
  }
  return best;
}

}  // namespace stride::cluster
