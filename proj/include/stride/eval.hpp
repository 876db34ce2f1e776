#pragma once

// Repeated-acquisition image-quality metrics: voxelwise SNR, EMI removal
// percentage and RMSE, a baseline-derived mask, and the CSV files the CLI
// emits.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stride/core/array.hpp"
#include "stride/stats.hpp"

namespace stride::eval {

using RealImage = RowMajorRMatrix;
using BoolImage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// One real image per repeat.
using ImageStack = std::vector<RealImage>;

inline constexpr double kStdEpsilon = 1e-12;

/// Values plus a validity flag per voxel (false = saturated or undefined).
struct RealMap {
  RealImage values;
  BoolImage valid;
};

struct MetricMaps {
  RealMap snr;
  RealMap emi_removal_pct;
  RealImage rmse;
  BoolImage mask;
};

inline void require_stack(const ImageStack& s, const char* what) {
  require(!s.empty(), ErrorKind::InvalidArgument, std::string(what) + ": empty stack");
  for (const auto& img : s) {
    require(img.rows() == s.front().rows() && img.cols() == s.front().cols(), ErrorKind::ShapeMismatch,
            std::string(what) + ": images differ in shape");
  }
}

/// Real part of each image (SoS images carry zero imaginary part).
inline ImageStack to_real_stack(const std::vector<ComplexArray2D>& images) {
  ImageStack out;
  out.reserve(images.size());
  for (const auto& img : images) out.emplace_back(img.matrix().real());
  return out;
}

inline RealImage mean_image(const ImageStack& s) {
  require_stack(s, "mean_image");
  RealImage acc = RealImage::Zero(s.front().rows(), s.front().cols());
  for (const auto& img : s) acc += img;
  return acc / static_cast<double>(s.size());
}

/// Sample standard deviation across repeats (ddof = 1).
inline RealImage std_image(const ImageStack& s) {
  require_stack(s, "std_image");
  require(s.size() >= 2, ErrorKind::InvalidArgument, "std needs at least two repeats");
  const RealImage mu = mean_image(s);
  RealImage acc = RealImage::Zero(mu.rows(), mu.cols());
  for (const auto& img : s) acc.array() += (img - mu).array().square();
  return (acc / static_cast<double>(s.size() - 1)).cwiseSqrt();
}

/// mean / std per voxel; voxels with std < 1e-12 are flagged invalid.
inline RealMap snr_map(const ImageStack& s) {
  const RealImage mu = mean_image(s);
  const RealImage sd = std_image(s);
  RealMap m;
  m.valid = sd.array() >= kStdEpsilon;
  m.values = m.valid.select(mu.array() / sd.array(), 0.0).matrix();
  return m;
}

/// 100 (sd_corrupted - sd_corrected) / sd_corrupted per voxel; undefined
/// where sd_corrupted < 1e-12.
inline RealMap emi_removal_map(const ImageStack& corrected, const ImageStack& corrupted) {
  const RealImage sd_fix = std_image(corrected);
  const RealImage sd_bad = std_image(corrupted);
  require(sd_fix.rows() == sd_bad.rows() && sd_fix.cols() == sd_bad.cols(), ErrorKind::ShapeMismatch,
          "emi_removal_map: stacks differ in image shape");
  RealMap m;
  m.valid = sd_bad.array() >= kStdEpsilon;
  m.values = m.valid.select(100.0 * (sd_bad.array() - sd_fix.array()) / sd_bad.array(), 0.0).matrix();
  return m;
}

/// sqrt(mean over repeats of (x - gt)^2) per voxel.
inline RealImage rmse_map(const ImageStack& s, const RealImage& ground_truth) {
  require_stack(s, "rmse_map");
  require(ground_truth.rows() == s.front().rows() && ground_truth.cols() == s.front().cols(), ErrorKind::ShapeMismatch,
          "rmse_map: ground truth shape");
  RealImage acc = RealImage::Zero(ground_truth.rows(), ground_truth.cols());
  for (const auto& img : s) acc.array() += (img - ground_truth).array().square();
  return (acc / static_cast<double>(s.size())).cwiseSqrt();
}

inline constexpr double kDefaultMaskFraction = 0.1;

/// |v| >= fraction * max|v|. An all-zero image yields an empty mask unless
/// fraction is 0.
inline BoolImage make_mask(const RealImage& baseline_mean, double threshold_frac = kDefaultMaskFraction) {
  require(threshold_frac >= 0.0 && threshold_frac <= 1.0, ErrorKind::InvalidArgument, "threshold_frac must lie in [0, 1]");
  const Eigen::ArrayXXd mag = baseline_mean.array().abs();
  const double peak = mag.size() ? mag.maxCoeff() : 0.0;
  if (threshold_frac == 0.0) return BoolImage::Constant(baseline_mean.rows(), baseline_mean.cols(), true);
  if (peak <= 0.0) return BoolImage::Constant(baseline_mean.rows(), baseline_mean.cols(), false);
  return (baseline_mean.array().abs() >= threshold_frac * peak);
}

/// Values where both the mask and the map's validity flag are set.
inline std::vector<double> masked_values(const RealMap& m, const BoolImage& mask) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      if (mask(i, j) && m.valid(i, j)) out.push_back(m.values(i, j));
    }
  }
  return out;
}

inline std::vector<double> masked_values(const RealImage& img, const BoolImage& mask) {
  return masked_values(RealMap{img, BoolImage::Constant(img.rows(), img.cols(), true)}, mask);
}

inline MetricMaps compute_metric_maps(const ImageStack& corrected, const ImageStack* corrupted, const ImageStack& baseline,
                                      double mask_fraction = kDefaultMaskFraction) {
  MetricMaps m;
  const RealImage gt = mean_image(baseline);
  m.mask = make_mask(gt, mask_fraction);
  m.snr = snr_map(corrected);
  if (corrupted) {
    m.emi_removal_pct = emi_removal_map(corrected, *corrupted);
  } else {
    m.emi_removal_pct = RealMap{RealImage::Zero(gt.rows(), gt.cols()), BoolImage::Constant(gt.rows(), gt.cols(), false)};
  }
  m.rmse = rmse_map(corrected, gt);
  return m;
}

struct Summary {
  std::string method;
  std::string scenario;
  double mean_snr = std::numeric_limits<double>::quiet_NaN();
  double mean_removal_pct = std::numeric_limits<double>::quiet_NaN();
  double rmse_total = std::numeric_limits<double>::quiet_NaN();
  std::size_t mask_voxels = 0;
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Masked means; rmse_total is the RMS error over every masked voxel and
/// repeat (sqrt of the masked mean of rmse^2).
inline Summary summarize(const MetricMaps& maps, const BoolImage& mask, std::string method = {}, std::string scenario = {}) {
  Summary s;
  s.method = std::move(method);
  s.scenario = std::move(scenario);
  s.mask_voxels = static_cast<std::size_t>(mask.count());
  s.mean_snr = mean_of(masked_values(maps.snr, mask));
  s.mean_removal_pct = mean_of(masked_values(maps.emi_removal_pct, mask));
  auto sq = masked_values(maps.rmse, mask);
  for (auto& v : sq) v = v * v;
  s.rmse_total = std::sqrt(mean_of(sq));
  return s;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline void write_metrics_csv(const std::filesystem::path& path, const std::vector<Summary>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << "method,scenario,mean_snr,mean_removal_pct,rmse_total\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.scenario << ',' << format_number(r.mean_snr) << ',' << format_number(r.mean_removal_pct)
       << ',' << format_number(r.rmse_total) << '\n';
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ManifestMismatch, "bad number '" + s + "' in metrics csv");
  }
}

inline std::vector<Summary> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != "method,scenario,mean_snr,mean_removal_pct,rmse_total") {
    throw Error(ErrorKind::ManifestMismatch, path.string() + ": unexpected metrics header");
  }
  std::vector<Summary> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw Error(ErrorKind::ManifestMismatch, path.string() + ": malformed row '" + line + "'");
    Summary s;
    s.method = cells[0];
    s.scenario = cells[1];
    s.mean_snr = parse_number(cells[2]);
    s.mean_removal_pct = parse_number(cells[3]);
    s.rmse_total = parse_number(cells[4]);
    rows.push_back(std::move(s));
  }
  return rows;
}

struct TTestRow {
  std::string scenario;
  std::string metric;
  std::string method_a;
  std::string method_b;
  stats::WelchResult result;
};

inline void write_ttest_csv(const std::filesystem::path& path, const std::vector<TTestRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << "scenario,metric,method_a,method_b,t,dof,p\n";
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.metric << ',' << r.method_a << ',' << r.method_b << ',' << format_number(r.result.t)
       << ',' << format_number(r.result.dof) << ',' << format_number(r.result.p) << '\n';
  }
}

}  // namespace stride::eval
