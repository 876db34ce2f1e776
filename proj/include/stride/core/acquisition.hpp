#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stride/core/array.hpp"
#include "stride/core/fft.hpp"

namespace stride {

enum class Domain { kspace, image };

inline const char* to_string(Domain d) { return d == Domain::kspace ? "kspace" : "image"; }

inline Domain domain_from_string(const std::string& s) {
  if (s == "kspace") return Domain::kspace;
  if (s == "image") return Domain::image;
  throw Error(ErrorKind::ManifestMismatch, "unknown domain '" + s + "'");
}

/// Informational acquisition metadata. Only dwell and TR feed the simulator's
/// timing model; nothing downstream depends on the rest.
struct AcquisitionMetadata {
  std::string scenario = "none";
  double fov_mm = 256.0;
  double tr_s = 0.05;
  double te_s = 0.007238;
  double dwell_s = 12.5e-6;
};

/// Repeats x channels x (kx, ky). Channels [0, imaging) are imaging coils,
/// [imaging, imaging + sensors) are EMI sensors.
class MultiCoilAcquisition {
 public:
  MultiCoilAcquisition() = default;
  MultiCoilAcquisition(std::size_t repeats, std::size_t imaging, std::size_t sensors, std::size_t kx,
                       std::size_t ky, Domain domain)
      : imaging_(imaging), sensors_(sensors), kx_(kx), ky_(ky), domain_(domain) {
    require(imaging >= 1, ErrorKind::InvalidArgument, "acquisition needs at least one imaging channel");
    require(kx >= 1 && ky >= 1, ErrorKind::InvalidArgument, "acquisition matrix must be non-empty");
    data_.assign(repeats, std::vector<ComplexArray2D>(imaging + sensors, ComplexArray2D(kx, ky)));
  }

  std::size_t repeats() const noexcept { return data_.size(); }
  std::size_t imaging_channels() const noexcept { return imaging_; }
  std::size_t sensor_channels() const noexcept { return sensors_; }
  std::size_t channels() const noexcept { return imaging_ + sensors_; }
  std::size_t kx() const noexcept { return kx_; }
  std::size_t ky() const noexcept { return ky_; }
  Domain domain() const noexcept { return domain_; }

  AcquisitionMetadata& metadata() noexcept { return meta_; }
  const AcquisitionMetadata& metadata() const noexcept { return meta_; }

  const ComplexArray2D& channel(std::size_t repeat, std::size_t ch) const { return data_.at(repeat).at(ch); }
  const ComplexArray2D& imaging(std::size_t repeat, std::size_t coil) const { return channel(repeat, coil); }
  const ComplexArray2D& sensor(std::size_t repeat, std::size_t s) const { return channel(repeat, imaging_ + s); }

  /// Replaces one channel; the array must match (kx, ky).
  void set_channel(std::size_t repeat, std::size_t ch, ComplexArray2D arr) {
    require(arr.rows() == kx_ && arr.cols() == ky_, ErrorKind::ShapeMismatch, "channel array shape differs from acquisition");
    data_.at(repeat).at(ch) = std::move(arr);
  }

  /// Mutable access for in-place updates that keep the shape.
  ComplexArray2D& channel_mut(std::size_t repeat, std::size_t ch) { return data_.at(repeat).at(ch); }

  std::vector<ComplexArray2D> imaging_images(std::size_t repeat) const {
    const auto& r = data_.at(repeat);
    return {r.begin(), r.begin() + static_cast<std::ptrdiff_t>(imaging_)};
  }
  std::vector<ComplexArray2D> sensor_images(std::size_t repeat) const {
    const auto& r = data_.at(repeat);
    return {r.begin() + static_cast<std::ptrdiff_t>(imaging_), r.end()};
  }

  /// Same layout and metadata, all channels zero, in `domain`.
  MultiCoilAcquisition like(Domain domain) const {
    MultiCoilAcquisition out(repeats(), imaging_, sensors_, kx_, ky_, domain);
    out.meta_ = meta_;
    return out;
  }

  MultiCoilAcquisition to_image() const { return transformed(Domain::kspace, Domain::image); }
  MultiCoilAcquisition to_kspace() const { return transformed(Domain::image, Domain::kspace); }

 private:
  MultiCoilAcquisition transformed(Domain from, Domain to) const {
    require(domain_ == from, ErrorKind::InvalidArgument,
            std::string("acquisition is already in ") + stride::to_string(domain_) + " domain");
    MultiCoilAcquisition out = like(to);
    for (std::size_t r = 0; r < repeats(); ++r) {
      for (std::size_t c = 0; c < channels(); ++c) {
        out.data_[r][c] = to == Domain::image ? ifft2c(data_[r][c]) : fft2c(data_[r][c]);
      }
    }
    return out;
  }

  std::size_t imaging_ = 0;
  std::size_t sensors_ = 0;
  std::size_t kx_ = 0;
  std::size_t ky_ = 0;
  Domain domain_ = Domain::kspace;
  AcquisitionMetadata meta_;
  std::vector<std::vector<ComplexArray2D>> data_;
};

}  // namespace stride
