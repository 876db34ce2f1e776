#pragma once

// End-to-end correction: optional sensor denoising -> optional pre-whitening
// -> EMI removal -> sum-of-squares combination per repeat.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stride/core/dataset.hpp"
#include "stride/editer.hpp"
#include "stride/eval.hpp"
#include "stride/prep.hpp"
#include "stride/tv.hpp"

namespace stride::pipeline {

enum class Method { none, stride, editer_a, editer_b };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::stride: return "stride";
    case Method::editer_a: return "editer-a";
    case Method::editer_b: return "editer-b";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "none") return Method::none;
  if (s == "stride") return Method::stride;
  if (s == "editer-a" || s == "editer_a") return Method::editer_a;
  if (s == "editer-b" || s == "editer_b") return Method::editer_b;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + s + "'");
}

struct RunConfig {
  Method method = Method::stride;
  tv::StrideConfig stride;
  editer::EditerConfig editer = editer::EditerConfig::variant_a();
  bool prewhiten = false;
  bool denoise_sensors = false;
  /// Workers over repeats; 0 = hardware concurrency.
  std::size_t threads = 0;

  static RunConfig for_method(Method m) {
    RunConfig c;
    c.method = m;
    c.editer = m == Method::editer_b ? editer::EditerConfig::variant_b() : editer::EditerConfig::variant_a();
    c.stride.sensor_denoise = false;
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"method", to_string(method)}, {"prewhiten", prewhiten}, {"denoise_sensors", denoise_sensors}};
    if (method == Method::stride) j["stride"] = {{"delta_y", stride.delta_y}, {"pinv_rcond", stride.pinv_rcond}};
    if (method == Method::editer_a || method == Method::editer_b) {
      j["editer"] = {{"variant", editer.variant == editer::Variant::A ? "A" : "B"},
                     {"delta_kx", editer.delta_kx},
                     {"delta_ky", editer.delta_ky},
                     {"max_clusters", editer.max_clusters},
                     {"rcond", editer.rcond}};
    }
    return j;
  }
};

struct CorrectionResult {
  MultiCoilAcquisition images;         // image domain, corrected imaging coils + sensors
  std::vector<ComplexArray2D> combined;  // SoS per repeat
};

/// Runs the configured pipeline. `noise_scan` (samples x imaging channels) is
/// required when cfg.prewhiten is set.
inline CorrectionResult run_correction(const MultiCoilAcquisition& input, const RunConfig& cfg,
                                       const std::optional<ComplexArray2D>& noise_scan = std::nullopt) {
  if (cfg.method != Method::none) {
    require(input.sensor_channels() >= 1, ErrorKind::InvalidArgument,
            std::string("method ") + to_string(cfg.method) + " needs EMI sensor channels");
  }
  MultiCoilAcquisition acq = input.domain() == Domain::kspace ? input : input.to_kspace();
  if (cfg.denoise_sensors) {
    require(acq.sensor_channels() >= 1, ErrorKind::InvalidArgument, "--denoise-sensors needs sensor channels");
    acq = prep::denoise_sensors(acq, cfg.threads);
  }
  if (cfg.prewhiten) {
    if (!noise_scan) throw Error(ErrorKind::ManifestMismatch, "pre-whitening requested but dataset has no noise scan");
    const auto cov = prep::estimate_noise_covariance(*noise_scan);
    acq = prep::apply_prewhitening(acq, prep::whitening_transform(cov));
  }

  CorrectionResult out;
  out.images = acq.like(Domain::image);
  out.combined.resize(acq.repeats());

  auto stride_cfg = cfg.stride;
  stride_cfg.threads = 1;
  auto editer_cfg = cfg.editer;
  editer_cfg.threads = 1;
  if (cfg.method == Method::stride) stride_cfg.validate(acq.ky());
  if (cfg.method == Method::editer_a || cfg.method == Method::editer_b) editer_cfg.validate(acq.kx(), acq.ky());

  parallel_for(
      acq.repeats(),
      [&](std::size_t r) {
        std::vector<ComplexArray2D> coils;
        std::vector<ComplexArray2D> sensors;
        if (cfg.method == Method::editer_a || cfg.method == Method::editer_b) {
          auto coil_ksp = acq.imaging_images(r);
          const auto sensor_ksp = acq.sensor_images(r);
          const auto grouping = editer_cfg.variant == editer::Variant::A
                                    ? editer::assign_groups_fixed(acq.ky())
                                    : editer::assign_groups_kmeans(coil_ksp, sensor_ksp, editer_cfg.max_clusters,
                                                                   editer_cfg.rcond, editer_cfg.seed);
          editer::correct_repeat(coil_ksp, sensor_ksp, grouping, editer_cfg);
          for (const auto& k : coil_ksp) coils.push_back(ifft2c(k));
          for (const auto& k : sensor_ksp) sensors.push_back(ifft2c(k));
        } else {
          for (std::size_t c = 0; c < acq.imaging_channels(); ++c) coils.push_back(ifft2c(acq.imaging(r, c)));
          for (std::size_t s = 0; s < acq.sensor_channels(); ++s) sensors.push_back(ifft2c(acq.sensor(r, s)));
          if (cfg.method == Method::stride) coils = tv::correct_images(coils, sensors, stride_cfg);
        }
        out.combined[r] = prep::sos_combine(coils);
        for (std::size_t c = 0; c < coils.size(); ++c) out.images.channel_mut(r, c) = std::move(coils[c]);
        for (std::size_t s = 0; s < sensors.size(); ++s) {
          out.images.channel_mut(r, acq.imaging_channels() + s) = std::move(sensors[s]);
        }
      },
      cfg.threads);
  return out;
}

// ---------------------------------------------------------------------------
// Corrected-output directory:
//   correction.json        method, parameters, source scenario
//   sos_rep{r:03}.sca      combined magnitude image per repeat
//   coils/                 image-domain dataset of all channels

inline constexpr const char* kCorrectionInfoName = "correction.json";

inline std::string sos_file_name(std::size_t repeat) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sos_rep%03zu.sca", repeat);
  return buf;
}

struct CorrectedOutput {
  std::string method;
  std::string scenario;
  std::vector<ComplexArray2D> combined;
};

inline void save_correction(const std::filesystem::path& dir, const CorrectionResult& res, const RunConfig& cfg,
                            const std::string& scenario, bool write_coils = true) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t r = 0; r < res.combined.size(); ++r) save_array(dir / sos_file_name(r), res.combined[r]);
  if (write_coils) save_dataset(dir / "coils", res.images);
  nlohmann::json info = cfg.to_json();
  info["scenario"] = scenario;
  info["repeats"] = res.combined.size();
  std::ofstream os(dir / kCorrectionInfoName, std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write correction.json in " + dir.string());
  os << info.dump(2) << '\n';
}

inline CorrectedOutput load_correction(const std::filesystem::path& dir) {
  std::ifstream is(dir / kCorrectionInfoName);
  if (!is) throw Error(ErrorKind::Io, "no correction.json in " + dir.string());
  CorrectedOutput out;
  std::size_t repeats = 0;
  try {
    const auto j = nlohmann::json::parse(is);
    out.method = j.at("method").get<std::string>();
    out.scenario = j.value("scenario", std::string("unknown"));
    repeats = j.at("repeats").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ManifestMismatch, std::string("correction.json: ") + e.what());
  }
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto path = dir / sos_file_name(r);
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::ManifestMismatch, "missing " + path.string());
    out.combined.push_back(load_array(path));
    require(out.combined.back().same_shape(out.combined.front()), ErrorKind::ManifestMismatch,
            path.string() + " shape differs from repeat 0");
  }
  return out;
}

}  // namespace stride::pipeline
