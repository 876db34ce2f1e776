#pragma once

// Dataset directory layout:
//   manifest.json           counts, channel roles, domain, metadata
//   rep{r:03}_ch{c:02}.sca  one container per (repeat, channel)
//   noise.sca               optional noise-only scan, samples x imaging channels

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "stride/core/acquisition.hpp"
#include "stride/core/container.hpp"

namespace stride {

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kNoiseScanName = "noise.sca";

inline std::string channel_file_name(std::size_t repeat, std::size_t channel) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rep%03zu_ch%02zu.sca", repeat, channel);
  return buf;
}

struct Dataset {
  MultiCoilAcquisition acquisition;
  /// Samples x imaging channels, used for pre-whitening.
  std::optional<ComplexArray2D> noise_scan;
  /// Free-form scenario description written by the simulator.
  nlohmann::json scenario = nlohmann::json::object();
};

inline nlohmann::json make_manifest(const Dataset& ds, Dtype dtype) {
  const auto& acq = ds.acquisition;
  nlohmann::json roles = nlohmann::json::array();
  for (std::size_t c = 0; c < acq.channels(); ++c) roles.push_back(c < acq.imaging_channels() ? "imaging" : "sensor");
  const auto& m = acq.metadata();
  nlohmann::json j;
  j["format"] = "stride-dataset";
  j["version"] = 1;
  j["repeats"] = acq.repeats();
  j["imaging_channels"] = acq.imaging_channels();
  j["sensor_channels"] = acq.sensor_channels();
  j["kx"] = acq.kx();
  j["ky"] = acq.ky();
  j["domain"] = to_string(acq.domain());
  j["dtype"] = static_cast<int>(dtype);
  j["channel_roles"] = roles;
  j["metadata"] = {{"scenario", m.scenario}, {"fov_mm", m.fov_mm}, {"tr_s", m.tr_s}, {"te_s", m.te_s},
                   {"dwell_s", m.dwell_s}};
  j["scenario"] = ds.scenario;
  j["noise_scan"] = ds.noise_scan ? nlohmann::json(kNoiseScanName) : nlohmann::json(nullptr);
  return j;
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds, Dtype dtype = Dtype::complex128) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  const auto& acq = ds.acquisition;
  for (std::size_t r = 0; r < acq.repeats(); ++r) {
    for (std::size_t c = 0; c < acq.channels(); ++c) save_array(dir / channel_file_name(r, c), acq.channel(r, c), dtype);
  }
  if (ds.noise_scan) save_array(dir / kNoiseScanName, *ds.noise_scan, dtype);
  std::ofstream os(dir / kManifestName, std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write manifest in " + dir.string());
  os << make_manifest(ds, dtype).dump(2) << '\n';
}

inline void save_dataset(const std::filesystem::path& dir, const MultiCoilAcquisition& acq,
                         Dtype dtype = Dtype::complex128) {
  save_dataset(dir, Dataset{acq, std::nullopt, nlohmann::json::object()}, dtype);
}

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / kManifestName);
  if (!is) throw Error(ErrorKind::Io, "no manifest.json in " + dir.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ManifestMismatch, std::string("manifest parse error: ") + e.what());
  }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const nlohmann::json j = read_manifest(dir);
  Dataset ds;
  try {
    const auto repeats = j.at("repeats").get<std::size_t>();
    const auto imaging = j.at("imaging_channels").get<std::size_t>();
    const auto sensors = j.at("sensor_channels").get<std::size_t>();
    const auto kx = j.at("kx").get<std::size_t>();
    const auto ky = j.at("ky").get<std::size_t>();
    const Domain domain = domain_from_string(j.at("domain").get<std::string>());
    require(imaging >= 1, ErrorKind::ManifestMismatch, "manifest lists no imaging channels");
    if (j.contains("channel_roles")) {
      const auto& roles = j.at("channel_roles");
      require(roles.size() == imaging + sensors, ErrorKind::ManifestMismatch,
              "channel_roles length disagrees with channel counts");
      for (std::size_t c = 0; c < roles.size(); ++c) {
        const auto role = roles[c].get<std::string>();
        require(role == (c < imaging ? "imaging" : "sensor"), ErrorKind::ManifestMismatch,
                "channel " + std::to_string(c) + " has unexpected role '" + role + "'");
      }
    }
    ds.acquisition = MultiCoilAcquisition(repeats, imaging, sensors, kx, ky, domain);
    if (j.contains("metadata")) {
      const auto& m = j.at("metadata");
      auto& meta = ds.acquisition.metadata();
      meta.scenario = m.value("scenario", meta.scenario);
      meta.fov_mm = m.value("fov_mm", meta.fov_mm);
      meta.tr_s = m.value("tr_s", meta.tr_s);
      meta.te_s = m.value("te_s", meta.te_s);
      meta.dwell_s = m.value("dwell_s", meta.dwell_s);
    }
    if (j.contains("scenario")) ds.scenario = j.at("scenario");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ManifestMismatch, std::string("manifest field error: ") + e.what());
  }

  auto& acq = ds.acquisition;
  for (std::size_t r = 0; r < acq.repeats(); ++r) {
    for (std::size_t c = 0; c < acq.channels(); ++c) {
      const auto path = dir / channel_file_name(r, c);
      if (!std::filesystem::exists(path)) {
        throw Error(ErrorKind::ManifestMismatch, "manifest expects " + path.filename().string() + " but it is missing");
      }
      ComplexArray2D arr = load_array(path);
      require(arr.rows() == acq.kx() && arr.cols() == acq.ky(), ErrorKind::ManifestMismatch,
              path.filename().string() + " shape disagrees with manifest");
      acq.set_channel(r, c, std::move(arr));
    }
  }
  // Extra channel files beyond the manifest's count also indicate a mismatch.
  if (acq.repeats() > 0 && std::filesystem::exists(dir / channel_file_name(0, acq.channels()))) {
    throw Error(ErrorKind::ManifestMismatch, "directory holds more channels than the manifest lists");
  }
  if (j.contains("noise_scan") && j.at("noise_scan").is_string()) {
    ComplexArray2D noise = load_array(dir / j.at("noise_scan").get<std::string>());
    require(noise.cols() == acq.imaging_channels(), ErrorKind::ManifestMismatch,
            "noise scan channel count disagrees with imaging channels");
    ds.noise_scan = std::move(noise);
  }
  return ds;
}

}  // namespace stride
