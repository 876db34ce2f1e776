// stride: simulate EMI-corrupted acquisitions, correct them, evaluate and
// report.
//
//   stride simulate --scenario square --matrix 64 --coils 4 --sensors 2 --repeats 64 --out data/square
//   stride correct  --in data/square --method stride --dy 7 --out out/square_stride
//   stride evaluate --in out/square_stride out/square_none --baseline out/baseline --out eval
//   stride report   --in eval/metrics.csv

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stride/stride.hpp"

namespace fs = std::filesystem;
using namespace stride;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kDataFormat = 3, kNumerical = 4 };

struct SimulateArgs {
  std::string scenario = "square";
  std::string scenario_file;
  std::string phantom = "contrast_discs";
  std::size_t matrix = 64;
  std::size_t coils = 4;
  std::size_t sensors = 2;
  std::size_t repeats = 64;
  std::uint64_t seed = 1;
  std::size_t noise_samples = 2048;
  std::optional<double> sigma_img;
  std::optional<double> sigma_emi;
  std::optional<double> amplitude;
  std::string out;
};

struct CorrectArgs {
  std::string in;
  std::string out;
  std::string method = "stride";
  std::size_t dy = 7;
  std::optional<std::size_t> dkx;
  std::optional<std::size_t> dky;
  bool prewhiten = false;
  bool denoise_sensors = false;
  bool skip_coils = false;
  std::size_t threads = 0;
};

struct EvaluateArgs {
  std::vector<std::string> in;
  std::string baseline;
  std::string out;
  double mask_fraction = eval::kDefaultMaskFraction;
};

struct ReportArgs {
  std::string in;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  sim::EmiScenario scenario;
  if (!a.scenario_file.empty()) {
    std::ifstream is(a.scenario_file);
    if (!is) throw Error(ErrorKind::Io, "cannot read " + a.scenario_file);
    try {
      scenario = sim::EmiScenario::from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ManifestMismatch, a.scenario_file + ": " + e.what());
    }
  } else {
    scenario.kind = sim::emi_kind_from_string(a.scenario);
  }
  if (a.amplitude) scenario.amplitude = *a.amplitude;

  auto coupling = sim::make_default_coupling(a.coils, a.sensors, a.seed);
  if (a.sigma_img) coupling.sigma_img = *a.sigma_img;
  if (a.sigma_emi) coupling.sigma_emi = *a.sigma_emi;

  sim::StudyConfig cfg;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.noise_scan_samples = a.noise_samples;
  const auto phantom = sim::make_phantom(sim::phantom_from_string(a.phantom), a.matrix);
  const Dataset ds = sim::simulate_study(phantom, scenario, coupling, cfg, fs::path(a.out));

  const auto& acq = ds.acquisition;
  std::cout << "wrote " << a.out << ": scenario=" << sim::to_string(scenario.kind) << " phantom=" << a.phantom
            << " matrix=" << acq.kx() << "x" << acq.ky() << " coils=" << acq.imaging_channels()
            << " sensors=" << acq.sensor_channels() << " repeats=" << acq.repeats() << " seed=" << a.seed
            << " noise_scan=" << (ds.noise_scan ? ds.noise_scan->rows() : 0) << "\n";
  return kOk;
}

int cmd_correct(const CorrectArgs& a) {
  const Dataset ds = load_dataset(a.in);
  auto cfg = pipeline::RunConfig::for_method(pipeline::method_from_string(a.method));
  cfg.stride.delta_y = a.dy;
  if (a.dkx) cfg.editer.delta_kx = *a.dkx;
  if (a.dky) cfg.editer.delta_ky = *a.dky;
  cfg.prewhiten = a.prewhiten;
  cfg.denoise_sensors = a.denoise_sensors;
  cfg.threads = a.threads;

  const auto result = pipeline::run_correction(ds.acquisition, cfg, ds.noise_scan);
  const std::string scenario = ds.acquisition.metadata().scenario;
  pipeline::save_correction(a.out, result, cfg, scenario, !a.skip_coils);
  std::cout << "corrected " << a.in << " -> " << a.out << " method=" << pipeline::to_string(cfg.method)
            << " scenario=" << scenario << " repeats=" << result.combined.size() << "\n";
  return kOk;
}

struct LoadedStack {
  std::string method;
  std::string scenario;
  std::string source;
  eval::ImageStack stack;
};

// A corrected-output directory, or a raw dataset combined without correction.
LoadedStack load_stack(const fs::path& dir) {
  LoadedStack s;
  s.source = dir.string();
  if (fs::exists(dir / pipeline::kCorrectionInfoName)) {
    auto c = pipeline::load_correction(dir);
    s.method = c.method;
    s.scenario = c.scenario;
    s.stack = eval::to_real_stack(c.combined);
  } else {
    const Dataset ds = load_dataset(dir);
    const auto res = pipeline::run_correction(ds.acquisition, pipeline::RunConfig::for_method(pipeline::Method::none));
    s.method = "none";
    s.scenario = ds.acquisition.metadata().scenario;
    s.stack = eval::to_real_stack(res.combined);
  }
  require(!s.stack.empty(), ErrorKind::ManifestMismatch, dir.string() + " holds no repeats");
  return s;
}

std::string map_name(const std::string& method, const std::string& scenario, const char* metric) {
  return method + "_" + scenario + "_" + metric + ".pgm";
}

int cmd_evaluate(const EvaluateArgs& a) {
  const LoadedStack baseline = load_stack(a.baseline);
  std::vector<LoadedStack> inputs;
  for (const auto& p : a.in) inputs.push_back(load_stack(p));

  // Uncorrected reference per scenario for the removal percentage.
  std::map<std::string, const LoadedStack*> corrupted;
  for (const auto& s : inputs) {
    if (s.method == "none" && !corrupted.count(s.scenario)) corrupted[s.scenario] = &s;
  }

  const fs::path out(a.out);
  fs::create_directories(out / "maps");
  const eval::RealImage gt = eval::mean_image(baseline.stack);
  const eval::BoolImage mask = eval::make_mask(gt, a.mask_fraction);

  std::vector<eval::Summary> rows;
  std::map<std::string, std::vector<std::pair<std::string, eval::RealMap>>> snr_by_scenario;
  for (const auto& s : inputs) {
    require(s.stack.front().rows() == gt.rows() && s.stack.front().cols() == gt.cols(), ErrorKind::ManifestMismatch,
            s.source + " image shape differs from baseline");
    const auto it = corrupted.find(s.scenario);
    const eval::ImageStack* bad = it == corrupted.end() ? nullptr : &it->second->stack;
    const auto maps = eval::compute_metric_maps(s.stack, bad, baseline.stack, a.mask_fraction);
    rows.push_back(eval::summarize(maps, mask, s.method, s.scenario));
    snr_by_scenario[s.scenario].emplace_back(s.method, maps.snr);

    io::write_pgm16(out / "maps" / map_name(s.method, s.scenario, "snr"), maps.snr.values, &maps.snr.valid);
    io::write_pgm16(out / "maps" / map_name(s.method, s.scenario, "removal"), maps.emi_removal_pct.values,
                    &maps.emi_removal_pct.valid);
    io::write_pgm16(out / "maps" / map_name(s.method, s.scenario, "rmse"), maps.rmse);
  }
  eval::write_metrics_csv(out / "metrics.csv", rows);

  // Voxelwise masked SNR comparisons between every method pair in a scenario.
  std::vector<eval::TTestRow> tests;
  for (const auto& [scenario, entries] : snr_by_scenario) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (std::size_t j = i + 1; j < entries.size(); ++j) {
        const auto va = eval::masked_values(entries[i].second, mask);
        const auto vb = eval::masked_values(entries[j].second, mask);
        if (va.size() < 2 || vb.size() < 2) continue;
        tests.push_back({scenario, "snr", entries[i].first, entries[j].first, stats::welch_t_test(va, vb)});
      }
    }
  }
  eval::write_ttest_csv(out / "ttest.csv", tests);
  std::cout << "wrote " << (out / "metrics.csv").string() << " (" << rows.size() << " rows), "
            << (out / "ttest.csv").string() << " (" << tests.size() << " rows), maps in "
            << (out / "maps").string() << "\n";
  return kOk;
}

std::string render_report(const std::vector<eval::Summary>& rows) {
  std::vector<std::string> methods;
  std::vector<std::string> scenarios;
  std::map<std::pair<std::string, std::string>, eval::Summary> cell;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) scenarios.push_back(r.scenario);
    cell[{r.method, r.scenario}] = r;
  }
  std::ostringstream os;
  const auto table = [&](const char* title, double eval::Summary::*field) {
    os << title << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-12s", "method");
    os << buf;
    for (const auto& sc : scenarios) {
      std::snprintf(buf, sizeof(buf), " %12s", sc.c_str());
      os << buf;
    }
    os << "\n";
    for (const auto& m : methods) {
      std::snprintf(buf, sizeof(buf), "%-12s", m.c_str());
      os << buf;
      for (const auto& sc : scenarios) {
        const auto it = cell.find({m, sc});
        if (it == cell.end()) {
          std::snprintf(buf, sizeof(buf), " %12s", "-");
        } else {
          std::snprintf(buf, sizeof(buf), " %12.5g", it->second.*field);
        }
        os << buf;
      }
      os << "\n";
    }
    os << "\n";
  };
  table("RMSE (masked, total)", &eval::Summary::rmse_total);
  table("Mean SNR (masked)", &eval::Summary::mean_snr);
  table("Mean EMI removal % (masked)", &eval::Summary::mean_removal_pct);
  return os.str();
}

int cmd_report(const ReportArgs& a) {
  fs::path p(a.in);
  if (fs::is_directory(p)) p /= "metrics.csv";
  const std::string text = render_report(eval::read_metrics_csv(p));
  std::cout << text;
  if (!a.out.empty()) {
    std::ofstream os(a.out, std::ios::trunc);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + a.out);
    os << text;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMI removal for multi-coil MR acquisitions"};
  app.require_subcommand(1);

  const std::vector<std::string> scenarios{"none", "square", "white", "sweep", "tone"};
  const std::vector<std::string> methods{"stride", "editer-a", "editer-b", "none"};

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a repeated acquisition study");
  sim_cmd->add_option("--scenario", sa.scenario, "EMI scenario")->check(CLI::IsMember(scenarios));
  sim_cmd->add_option("--scenario-file", sa.scenario_file, "JSON scenario description (overrides --scenario)")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--phantom", sa.phantom, "Phantom")
      ->check(CLI::IsMember({"contrast_discs", "resolution_dots", "uniform_disc"}));
  sim_cmd->add_option("--matrix", sa.matrix, "Matrix size N (N x N)")->check(CLI::Range(4, 4096));
  sim_cmd->add_option("--coils", sa.coils, "Imaging coils")->check(CLI::Range(1, 128));
  sim_cmd->add_option("--sensors", sa.sensors, "EMI sensors")->check(CLI::Range(0, 64));
  sim_cmd->add_option("--repeats", sa.repeats, "Repeated acquisitions")->check(CLI::Range(1, 100000));
  sim_cmd->add_option("--seed", sa.seed, "Random seed");
  sim_cmd->add_option("--noise-samples", sa.noise_samples, "Noise-only scan samples (0 = none)");
  sim_cmd->add_option("--sigma-img", sa.sigma_img, "Thermal noise std on imaging coils");
  sim_cmd->add_option("--sigma-emi", sa.sigma_emi, "Thermal noise std on sensors");
  sim_cmd->add_option("--amplitude", sa.amplitude, "Interference amplitude");
  sim_cmd->add_option("--out", sa.out, "Output dataset directory")->required();

  CorrectArgs ca;
  auto* cor_cmd = app.add_subcommand("correct", "Remove EMI from a dataset");
  cor_cmd->add_option("--in", ca.in, "Input dataset directory")->required()->check(CLI::ExistingDirectory);
  cor_cmd->add_option("--out", ca.out, "Output directory")->required();
  cor_cmd->add_option("--method", ca.method, "Correction method")
      ->transform(CLI::IsMember({"stride", "editer-a", "editer-b", "editer_a", "editer_b", "none"}));
  cor_cmd->add_option("--dy", ca.dy, "STRIDE window width (odd)");
  cor_cmd->add_option("--dkx", ca.dkx, "EDITER kernel width along kx");
  cor_cmd->add_option("--dky", ca.dky, "EDITER kernel width along ky");
  cor_cmd->add_flag("--prewhiten", ca.prewhiten, "Pre-whiten imaging channels with the noise scan");
  cor_cmd->add_flag("--denoise-sensors", ca.denoise_sensors, "Hard-threshold SVD denoising of sensor data");
  cor_cmd->add_flag("--skip-coils", ca.skip_coils, "Only write combined images");
  cor_cmd->add_option("--threads", ca.threads, "Worker threads (0 = all cores)");

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compute metric maps, CSVs and t-tests");
  eval_cmd->add_option("--in", ea.in, "Corrected output or dataset directories")->required()->expected(1, -1)
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--baseline", ea.baseline, "EMI-free baseline (corrected output or dataset)")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", ea.out, "Output directory")->required();
  eval_cmd->add_option("--mask-fraction", ea.mask_fraction, "Mask threshold as a fraction of the peak")
      ->check(CLI::Range(0.0, 1.0));

  ReportArgs ra;
  auto* rep_cmd = app.add_subcommand("report", "Print a method x scenario table");
  rep_cmd->add_option("--in", ra.in, "metrics.csv or a directory containing it")->required()->check(CLI::ExistingPath);
  rep_cmd->add_option("--out", ra.out, "Also write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim_cmd) return cmd_simulate(sa);
    if (*cor_cmd) return cmd_correct(ca);
    if (*eval_cmd) return cmd_evaluate(ea);
    if (*rep_cmd) return cmd_report(ra);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.is_data_format()) return kDataFormat;
    if (e.is_numerical()) return kNumerical;
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
