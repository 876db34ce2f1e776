#pragma once

// Synthetic multi-coil acquisitions with injected interference.
//
// Timing model: sample k of PE line j in repeat r is acquired at
//   t = (r * ky + j) * TR + k * dwell,
// so interference phase runs continuously across lines and repeats.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "stride/core/dataset.hpp"
#include "stride/core/fft.hpp"

namespace stride::sim {

// ---------------------------------------------------------------------------
// Seeding

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { thermal = 1, envelope = 2, noise_scan = 3, coupling = 4 };

/// Independent generator per (seed, repeat, stream).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t repeat, Stream stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(repeat * 0x100 + static_cast<std::uint64_t>(stream))));
}

/// Standard normal draws via Box-Muller on 53-bit uniforms, so sequences do
/// not depend on the standard library's distribution implementation.
class Gaussian {
 public:
  explicit Gaussian(std::mt19937_64& rng) : rng_(rng) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Phantoms

enum class PhantomKind { contrast_discs, resolution_dots, uniform_disc };

inline const char* to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::contrast_discs: return "contrast_discs";
    case PhantomKind::resolution_dots: return "resolution_dots";
    case PhantomKind::uniform_disc: return "uniform_disc";
  }
  return "?";
}

inline PhantomKind phantom_from_string(const std::string& s) {
  if (s == "contrast_discs") return PhantomKind::contrast_discs;
  if (s == "resolution_dots") return PhantomKind::resolution_dots;
  if (s == "uniform_disc") return PhantomKind::uniform_disc;
  throw Error(ErrorKind::InvalidArgument, "unknown phantom '" + s + "'");
}

struct Phantom {
  PhantomKind kind = PhantomKind::uniform_disc;
  std::size_t n = 0;
  RowMajorRMatrix intensity;  // n x n, values in [0, 1]

  ComplexArray2D as_complex() const { return ComplexArray2D(RowMajorCMatrix(intensity.cast<cdouble>())); }
};

inline Phantom make_phantom(PhantomKind kind, std::size_t n) {
  require(n >= 4, ErrorKind::InvalidArgument, "phantom size must be >= 4");
  Phantom p;
  p.kind = kind;
  p.n = n;
  const auto ni = static_cast<Eigen::Index>(n);
  p.intensity = RowMajorRMatrix::Zero(ni, ni);
  const double c = static_cast<double>(n / 2);
  const double big_r = 0.4 * static_cast<double>(n);
  const auto inside = [](double x, double y, double cx, double cy, double r) {
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r;
  };
  const auto fill_disc = [&](double cx, double cy, double r, double value) {
    for (Eigen::Index x = 0; x < ni; ++x) {
      for (Eigen::Index y = 0; y < ni; ++y) {
        if (inside(static_cast<double>(x), static_cast<double>(y), cx, cy, r)) p.intensity(x, y) = value;
      }
    }
  };

  switch (kind) {
    case PhantomKind::uniform_disc:
      fill_disc(c, c, big_r, 1.0);
      break;
    case PhantomKind::contrast_discs: {
      fill_disc(c, c, big_r, 0.3);
      // Four graded sub-discs on a ring.
      const double ring = 0.2 * static_cast<double>(n);
      const double small_r = 0.09 * static_cast<double>(n);
      const double levels[4] = {0.45, 0.6, 0.8, 1.0};
      for (int i = 0; i < 4; ++i) {
        const double a = std::numbers::pi / 4.0 + i * std::numbers::pi / 2.0;
        fill_disc(c + ring * std::cos(a), c + ring * std::sin(a), small_r, levels[i]);
      }
      break;
    }
    case PhantomKind::resolution_dots: {
      fill_disc(c, c, big_r, 0.25);
      // Three 4x4 dot clusters with pitch 4, 3 and 2 pixels (scaled with n).
      const double scale = static_cast<double>(n) / 64.0;
      const double pitches[3] = {4.0 * scale, 3.0 * scale, 2.0 * scale};
      const double anchors[3][2] = {{c - 0.25 * n, c - 0.2 * n}, {c - 0.25 * n, c + 0.05 * n}, {c + 0.08 * n, c - 0.08 * n}};
      for (int k = 0; k < 3; ++k) {
        const auto pitch = std::max(2.0, std::round(pitches[k]));
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b) {
            const auto x = static_cast<Eigen::Index>(std::round(anchors[k][0] + a * pitch));
            const auto y = static_cast<Eigen::Index>(std::round(anchors[k][1] + b * pitch));
            if (x >= 0 && x < ni && y >= 0 && y < ni) p.intensity(x, y) = 1.0;
          }
        }
      }
      break;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Interference scenarios

enum class EmiKind { none, square_am, white_am, sweep, tone };

inline const char* to_string(EmiKind k) {
  switch (k) {
    case EmiKind::none: return "none";
    case EmiKind::square_am: return "square";
    case EmiKind::white_am: return "white";
    case EmiKind::sweep: return "sweep";
    case EmiKind::tone: return "tone";
  }
  return "?";
}

inline EmiKind emi_kind_from_string(const std::string& s) {
  if (s == "none") return EmiKind::none;
  if (s == "square" || s == "square_am") return EmiKind::square_am;
  if (s == "white" || s == "white_am") return EmiKind::white_am;
  if (s == "sweep") return EmiKind::sweep;
  if (s == "tone") return EmiKind::tone;
  throw Error(ErrorKind::InvalidArgument, "unknown scenario '" + s + "'");
}

/// Baseband description of an interferer. The default carrier sits slightly
/// off the line-rate grid (offset * TR is not an integer) so the interference
/// is not phase-coherent from one PE line to the next.
struct EmiScenario {
  EmiKind kind = EmiKind::none;
  double carrier_offset_hz = 10007.0;
  double modulation_hz = 10000.0;
  double sweep_span_hz = 10000.0;
  double sweep_rate_hz = 1.0;
  double amplitude = 4.0;

  void validate() const {
    require(std::isfinite(carrier_offset_hz) && std::isfinite(amplitude), ErrorKind::InvalidArgument,
            "scenario parameters must be finite");
    if (kind == EmiKind::sweep) {
      require(sweep_span_hz > 0.0, ErrorKind::InvalidArgument, "sweep span must be > 0");
      require(sweep_rate_hz > 0.0, ErrorKind::InvalidArgument, "sweep rate must be > 0");
    }
    if (kind == EmiKind::square_am) require(modulation_hz > 0.0, ErrorKind::InvalidArgument, "modulation rate must be > 0");
  }

  nlohmann::json to_json() const {
    return {{"kind", to_string(kind)},           {"carrier_offset_hz", carrier_offset_hz},
            {"modulation_hz", modulation_hz},    {"sweep_span_hz", sweep_span_hz},
            {"sweep_rate_hz", sweep_rate_hz},    {"amplitude", amplitude}};
  }

  static EmiScenario from_json(const nlohmann::json& j) {
    EmiScenario s;
    try {
      s.kind = emi_kind_from_string(j.value("kind", std::string("none")));
      s.carrier_offset_hz = j.value("carrier_offset_hz", s.carrier_offset_hz);
      s.modulation_hz = j.value("modulation_hz", s.modulation_hz);
      s.sweep_span_hz = j.value("sweep_span_hz", s.sweep_span_hz);
      s.sweep_rate_hz = j.value("sweep_rate_hz", s.sweep_rate_hz);
      s.amplitude = j.value("amplitude", s.amplitude);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, std::string("scenario json: ") + e.what());
    }
    s.validate();
    return s;
  }
};

/// Triangle wave with period 1, range [-1, 1], tri(0) = -1, tri(0.5) = +1.
inline double triangle(double u) {
  const double r = u - std::floor(u);
  return r < 0.5 ? -1.0 + 4.0 * r : 3.0 - 4.0 * r;
}

/// Integral of triangle() from 0 to u (zero over every full period).
inline double triangle_integral(double u) {
  const double r = u - std::floor(u);
  return r < 0.5 ? -r + 2.0 * r * r : 3.0 * (r - 0.5) - 2.0 * (r * r - 0.25);
}

/// +1 on [0, 0.5) of each period of `phase_cycles`, -1 on [0.5, 1).
/// Sample instants often fall exactly on an edge (dwell divides the half
/// period), so phases within 1e-6 cycles of an edge snap onto it; otherwise
/// rounding in t would pick the sign at random.
inline double square_wave(double phase_cycles) {
  constexpr double snap = 1e-6;
  const double half_periods = 2.0 * phase_cycles;
  const double nearest = std::round(half_periods);
  const double h = std::abs(half_periods - nearest) < snap ? nearest : std::floor(half_periods);
  return std::fmod(h, 2.0) == 0.0 ? 1.0 : -1.0;
}

/// Acquisition times (seconds) for one repeat, kx x ky.
inline RowMajorRMatrix sample_times(std::size_t kx, std::size_t ky, double tr_s, double dwell_s, std::size_t repeat = 0) {
  require(tr_s > 0.0 && dwell_s > 0.0, ErrorKind::InvalidArgument, "TR and dwell must be > 0");
  require(static_cast<double>(kx) * dwell_s <= tr_s, ErrorKind::InvalidArgument, "readout longer than TR");
  RowMajorRMatrix t(static_cast<Eigen::Index>(kx), static_cast<Eigen::Index>(ky));
  for (std::size_t j = 0; j < ky; ++j) {
    const double line_start = static_cast<double>(repeat * ky + j) * tr_s;
    for (std::size_t k = 0; k < kx; ++k) {
      t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = line_start + static_cast<double>(k) * dwell_s;
    }
  }
  return t;
}

/// Unit-scaled interference waveform times `amplitude`, one sample per entry
/// of `times`. `rng` feeds the white-noise envelope only.
inline ComplexArray2D gen_emi_waveform(const EmiScenario& sc, const RowMajorRMatrix& times, std::mt19937_64& rng) {
  sc.validate();
  ComplexArray2D w(static_cast<std::size_t>(times.rows()), static_cast<std::size_t>(times.cols()));
  if (sc.kind == EmiKind::none) return w;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Gaussian gauss(rng);
  // White envelope is drawn in acquisition order (line by line).
  for (Eigen::Index j = 0; j < times.cols(); ++j) {
    for (Eigen::Index k = 0; k < times.rows(); ++k) {
      const double t = times(k, j);
      // Carrier phase in cycles; reduced before multiplying by 2 pi to keep
      // precision for long acquisitions.
      double cycles = sc.carrier_offset_hz * t;
      double envelope = 1.0;
      switch (sc.kind) {
        case EmiKind::tone: break;
        case EmiKind::square_am: envelope = square_wave(sc.modulation_hz * t); break;
        case EmiKind::white_am: envelope = gauss(); break;
        case EmiKind::sweep:
          cycles += sc.sweep_span_hz / sc.sweep_rate_hz * triangle_integral(sc.sweep_rate_hz * t);
          break;
        case EmiKind::none: break;
      }
      const double phase = two_pi * (cycles - std::floor(cycles));
      w(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) = sc.amplitude * envelope * std::polar(1.0, phase);
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Channel coupling and thermal noise

struct CouplingModel {
  std::vector<cdouble> coil_emi_gain;    // per imaging coil
  std::vector<cdouble> sensor_emi_gain;  // per sensor
  std::vector<cdouble> coil_sensitivity; // MR signal gain per imaging coil
  double sigma_img = 0.02;               // per real/imag component
  double sigma_emi = 0.02;
  double dwell_s = 12.5e-6;
  double tr_s = 0.05;

  std::size_t imaging() const noexcept { return coil_emi_gain.size(); }
  std::size_t sensors() const noexcept { return sensor_emi_gain.size(); }

  void validate() const {
    require(!coil_emi_gain.empty(), ErrorKind::InvalidArgument, "coupling needs at least one imaging coil");
    require(coil_sensitivity.size() == coil_emi_gain.size(), ErrorKind::InvalidArgument,
            "coil sensitivity and EMI gain counts differ");
    require(sigma_img >= 0.0 && sigma_emi >= 0.0, ErrorKind::InvalidArgument, "noise std must be >= 0");
    require(dwell_s > 0.0 && tr_s > 0.0, ErrorKind::InvalidArgument, "dwell and TR must be > 0");
  }

  nlohmann::json to_json() const {
    const auto arr = [](const std::vector<cdouble>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& z : v) a.push_back({z.real(), z.imag()});
      return a;
    };
    return {{"coil_emi_gain", arr(coil_emi_gain)}, {"sensor_emi_gain", arr(sensor_emi_gain)},
            {"coil_sensitivity", arr(coil_sensitivity)}, {"sigma_img", sigma_img}, {"sigma_emi", sigma_emi},
            {"dwell_s", dwell_s}, {"tr_s", tr_s}};
  }
};

/// Random but seed-determined coupling: coil EMI gains |g| in [0.5, 1.5],
/// coil sensitivities |s| in [0.5, 1], first sensor gain 1, other sensors
/// |g| in [0.7, 1.3]; all with uniform random phase.
inline CouplingModel make_default_coupling(std::size_t imaging, std::size_t sensors, std::uint64_t seed) {
  require(imaging >= 1, ErrorKind::InvalidArgument, "need at least one imaging coil");
  auto rng = make_rng(seed, 0, Stream::coupling);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const auto phasor = [&](double lo, double hi) {
    const double mag = uniform(lo, hi);
    return std::polar(mag, uniform(-std::numbers::pi, std::numbers::pi));
  };
  CouplingModel m;
  for (std::size_t c = 0; c < imaging; ++c) m.coil_emi_gain.push_back(phasor(0.5, 1.5));
  for (std::size_t c = 0; c < imaging; ++c) m.coil_sensitivity.push_back(phasor(0.5, 1.0));
  for (std::size_t s = 0; s < sensors; ++s) m.sensor_emi_gain.push_back(s == 0 ? cdouble(1.0, 0.0) : phasor(0.7, 1.3));
  return m;
}

/// Per-coil k-space of the gain-scaled phantom; sensors carry no MR signal.
/// Returns imaging channels followed by `sensors` zero channels.
inline std::vector<ComplexArray2D> synthesize_kspace(const Phantom& phantom, std::span<const cdouble> coil_gains,
                                                     std::size_t sensors = 0) {
  require(!coil_gains.empty(), ErrorKind::InvalidArgument, "need at least one coil gain");
  const ComplexArray2D base = fft2c(phantom.as_complex());
  std::vector<ComplexArray2D> out;
  out.reserve(coil_gains.size() + sensors);
  for (const auto& g : coil_gains) out.emplace_back(RowMajorCMatrix(base.matrix() * g));
  for (std::size_t s = 0; s < sensors; ++s) out.emplace_back(base.rows(), base.cols());
  return out;
}

inline void add_complex_noise(ComplexArray2D& arr, double sigma, Gaussian& gauss) {
  if (sigma <= 0.0) return;
  for (auto& z : arr.values()) {
    const double re = gauss();
    const double im = gauss();
    z += cdouble(sigma * re, sigma * im);
  }
}

/// Adds gain x waveform to every channel of one repeat, then i.i.d. complex
/// Gaussian thermal noise (sigma_img on coils, sigma_emi on sensors).
/// `clean` holds imaging channels followed by sensor channels, in k-space.
inline std::vector<ComplexArray2D> inject_emi(std::vector<ComplexArray2D> clean, const EmiScenario& scenario,
                                              const CouplingModel& coupling, std::uint64_t seed, std::size_t repeat = 0) {
  coupling.validate();
  require(clean.size() == coupling.imaging() + coupling.sensors(), ErrorKind::InvalidArgument,
          "channel count differs from coupling model");
  for (const auto& c : clean) require_same_shape(c, clean.front(), "clean channels");
  if (scenario.kind != EmiKind::none && coupling.sensors() > 0) {
    bool any_sensor = false;
    for (const auto& g : coupling.sensor_emi_gain) any_sensor = any_sensor || std::abs(g) > 0.0;
    require(any_sensor, ErrorKind::InvalidArgument, "active interference needs a sensor with non-zero gain");
  }
  const std::size_t kx = clean.front().rows();
  const std::size_t ky = clean.front().cols();
  auto env_rng = make_rng(seed, repeat, Stream::envelope);
  const ComplexArray2D wave =
      gen_emi_waveform(scenario, sample_times(kx, ky, coupling.tr_s, coupling.dwell_s, repeat), env_rng);
  auto noise_rng = make_rng(seed, repeat, Stream::thermal);
  Gaussian gauss(noise_rng);
  for (std::size_t c = 0; c < clean.size(); ++c) {
    const bool is_coil = c < coupling.imaging();
    const cdouble gain = is_coil ? coupling.coil_emi_gain[c] : coupling.sensor_emi_gain[c - coupling.imaging()];
    if (scenario.kind != EmiKind::none && gain != cdouble(0.0, 0.0)) clean[c].matrix() += gain * wave.matrix();
    add_complex_noise(clean[c], is_coil ? coupling.sigma_img : coupling.sigma_emi, gauss);
  }
  return clean;
}

/// Noise-only scan: samples x imaging channels at sigma_img.
inline ComplexArray2D simulate_noise_scan(const CouplingModel& coupling, std::size_t samples, std::uint64_t seed) {
  ComplexArray2D out(samples, coupling.imaging());
  auto rng = make_rng(seed, 0, Stream::noise_scan);
  Gaussian gauss(rng);
  add_complex_noise(out, coupling.sigma_img, gauss);
  return out;
}

struct StudyConfig {
  std::size_t repeats = 64;
  std::uint64_t seed = 1;
  std::size_t noise_scan_samples = 2048;
  double fov_mm = 256.0;
  double te_s = 0.007238;
};

/// `repeats` acquisitions with fresh thermal noise and continuous waveform
/// timing, plus a noise-only scan. Writes the dataset when `out_dir` is set.
inline Dataset simulate_study(const Phantom& phantom, const EmiScenario& scenario, const CouplingModel& coupling,
                              const StudyConfig& cfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  coupling.validate();
  scenario.validate();
  require(cfg.repeats >= 1, ErrorKind::InvalidArgument, "repeats must be >= 1");
  const auto clean = synthesize_kspace(phantom, coupling.coil_sensitivity, coupling.sensors());
  Dataset ds;
  ds.acquisition = MultiCoilAcquisition(cfg.repeats, coupling.imaging(), coupling.sensors(), phantom.n, phantom.n,
                                        Domain::kspace);
  auto& meta = ds.acquisition.metadata();
  meta.scenario = to_string(scenario.kind);
  meta.fov_mm = cfg.fov_mm;
  meta.tr_s = coupling.tr_s;
  meta.te_s = cfg.te_s;
  meta.dwell_s = coupling.dwell_s;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    auto channels = inject_emi(clean, scenario, coupling, cfg.seed, r);
    for (std::size_t c = 0; c < channels.size(); ++c) ds.acquisition.set_channel(r, c, std::move(channels[c]));
  }
  if (cfg.noise_scan_samples > 0) ds.noise_scan = simulate_noise_scan(coupling, cfg.noise_scan_samples, cfg.seed);
  ds.scenario = scenario.to_json();
  ds.scenario["phantom"] = to_string(phantom.kind);
  ds.scenario["seed"] = cfg.seed;
  ds.scenario["coupling"] = coupling.to_json();
  if (out_dir) save_dataset(*out_dir, ds);
  return ds;
}

/// Clean (EMI- and noise-free) image of each imaging coil.
inline std::vector<ComplexArray2D> ground_truth_images(const Phantom& phantom, const CouplingModel& coupling) {
  std::vector<ComplexArray2D> out;
  const ComplexArray2D base = phantom.as_complex();
  for (const auto& g : coupling.coil_sensitivity) out.emplace_back(RowMajorCMatrix(base.matrix() * g));
  return out;
}

}  // namespace stride::sim
