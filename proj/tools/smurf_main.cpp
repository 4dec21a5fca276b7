// smurf: simulate, fit, and summarize separably-Markov random field models
// of binary spike rasters.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 I/O failure,
// 4 numeric abort (a fit left its trusted parameter range).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "smurf/errors.hpp"
#include "smurf/io.hpp"
#include "smurf/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

// Seed precedence: --seed flag, then SMURF_SEED, then the config file.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           std::uint64_t config_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("SMURF_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw std::invalid_argument("SMURF_SEED is not an unsigned integer");
    return v;
  }
  return config_seed;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw smurf::io_error("cannot create output directory " + dir.string());
}

smurf::Raster load_raster_checked(const fs::path& path) {
  smurf::Raster raster = smurf::load_raster_json(path);
  const auto violations = smurf::validate_raster(raster);
  if (!violations.empty()) {
    std::string msg = "invalid raster " + path.string() + ":";
    for (const auto& v : violations) {
      msg += "\n  " + v.message;
      if (v.k || v.r)
        msg += " (k=" + std::to_string(v.k) + ", r=" + std::to_string(v.r) +
               ")";
    }
    throw std::invalid_argument(msg);
  }
  return raster;
}

struct CommonOpts {
  std::optional<std::uint64_t> seed;
  bool json_out = false;
  int jobs = 1;
};

void emit(const json& payload, bool json_out) {
  if (json_out) std::cout << payload.dump() << "\n";
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_path,
                 const CommonOpts& opts) {
  smurf::RunManifest manifest;
  manifest.command = "simulate";
  manifest.config_path = config_path.string();
  manifest.tool_version = smurf::version_string;
  manifest.started = smurf::iso8601_utc_now();

  smurf::SimConfig cfg = smurf::load_sim_config(config_path);
  cfg.seed = resolve_seed(opts.seed, cfg.seed);
  manifest.seed = cfg.seed;

  const smurf::Raster raster = smurf::simulate_raster(cfg);
  if (out_path.has_parent_path()) ensure_out_dir(out_path.parent_path());
  smurf::save_raster_json(raster, out_path);

  manifest.inputs = {config_path.string()};
  manifest.outputs = {out_path.string()};
  manifest.finished = smurf::iso8601_utc_now();
  smurf::write_manifest(manifest, out_path.has_parent_path()
                                      ? out_path.parent_path()
                                      : fs::path("."));

  std::cerr << "simulate: wrote " << out_path.string() << " ("
            << raster.n_bins << " bins x " << raster.n_trials
            << " trials, seed " << cfg.seed << ")\n";
  emit({{"command", "simulate"},
        {"raster", out_path.string()},
        {"n_bins", raster.n_bins},
        {"n_trials", raster.n_trials},
        {"seed", cfg.seed}},
       opts.json_out);
  return kExitOk;
}

int cmd_fit(const fs::path& raster_path, const fs::path& config_path,
            const fs::path& out_dir, bool draws_sidecar,
            const CommonOpts& opts) {
  smurf::RunManifest manifest;
  manifest.command = "fit";
  manifest.config_path = config_path.string();
  manifest.tool_version = smurf::version_string;
  manifest.started = smurf::iso8601_utc_now();

  const smurf::Raster raster = load_raster_checked(raster_path);
  smurf::FitConfig cfg = smurf::load_fit_config(config_path);
  cfg.seed = resolve_seed(opts.seed, cfg.seed);
  manifest.seed = cfg.seed;

  ensure_out_dir(out_dir);
  const smurf::FitResult fit = smurf::fit_em(
      raster, cfg, opts.jobs, [](int iter, const smurf::EmTraceEntry& t) {
        std::cerr << "fit: iter " << iter << " sigma2_eps=" << t.sigma2_eps
                  << " sigma2_del=" << t.sigma2_del << "\n";
      });

  const std::string sidecar = draws_sidecar ? "draws.bin" : "";
  const fs::path fit_path = out_dir / "fit.json";
  smurf::save_fit_result(fit, fit_path, sidecar);

  manifest.inputs = {raster_path.string(), config_path.string()};
  manifest.outputs = {fit_path.string()};
  if (draws_sidecar) manifest.outputs.push_back((out_dir / sidecar).string());
  manifest.finished = smurf::iso8601_utc_now();
  smurf::write_manifest(manifest, out_dir);

  std::cerr << "fit: " << (fit.converged ? "converged" : "stopped") << " after "
            << fit.iterations << " iterations, sigma2_eps="
            << fit.params.sigma2_eps << " sigma2_del=" << fit.params.sigma2_del
            << "\n";
  emit({{"command", "fit"},
        {"fit", fit_path.string()},
        {"converged", fit.converged},
        {"iterations", fit.iterations},
        {"sigma2_eps", fit.params.sigma2_eps},
        {"sigma2_del", fit.params.sigma2_del},
        {"alpha_x", fit.params.alpha_x},
        {"alpha_z", fit.params.alpha_z},
        {"seed", cfg.seed}},
       opts.json_out);
  return kExitOk;
}

int cmd_summarize(const fs::path& fit_path, const fs::path& raster_path,
                  const fs::path& out_dir, int baseline_trials,
                  int baseline_bins, double threshold,
                  const CommonOpts& opts) {
  smurf::RunManifest manifest;
  manifest.command = "summarize";
  manifest.config_path = "";
  manifest.tool_version = smurf::version_string;
  manifest.started = smurf::iso8601_utc_now();

  const smurf::Raster raster = load_raster_checked(raster_path);
  const smurf::LoadedFit loaded = smurf::load_fit_result(fit_path);
  if (!loaded.has_draws)
    throw std::invalid_argument(
        "fit result has no draws sidecar; re-run fit with --draws-sidecar");
  if (loaded.fit.draws.n_bins != raster.n_bins ||
      loaded.fit.draws.n_trials != raster.n_trials)
    throw std::invalid_argument(
        "fit draws and raster disagree on lattice dimensions");

  smurf::BaselineSpec baseline = smurf::default_baseline(raster);
  if (baseline_trials > 0) baseline.baseline_trials = baseline_trials;
  if (baseline_bins > 0) baseline.baseline_bins = baseline_bins;

  ensure_out_dir(out_dir);
  const smurf::SummarySurface surface =
      smurf::summarize_draws(loaded.fit.draws, raster, baseline, threshold);
  smurf::save_summary(surface, out_dir);

  manifest.seed = loaded.fit.draws.seed;
  manifest.inputs = {fit_path.string(), raster_path.string()};
  for (const char* name : {"prob_map.csv", "cif_mean.csv", "wt_effect.csv",
                           "ct_effect.csv", "detection.json"})
    manifest.outputs.push_back((out_dir / name).string());
  manifest.finished = smurf::iso8601_utc_now();
  smurf::write_manifest(manifest, out_dir);

  const smurf::Detection& det = surface.detection;
  if (det.detected)
    std::cerr << "summarize: learning detected at trial " << det.learning_trial
              << ", bin " << det.learning_bin << " ("
              << det.learning_time_ms << " ms after cue)\n";
  else
    std::cerr << "summarize: no learning detected at threshold " << threshold
              << "\n";
  json det_json{{"detected", det.detected}, {"threshold", det.threshold}};
  if (det.detected) {
    det_json["learning_trial"] = det.learning_trial;
    det_json["learning_bin"] = det.learning_bin;
    det_json["learning_time_ms"] = det.learning_time_ms;
  }
  emit({{"command", "summarize"},
        {"out_dir", out_dir.string()},
        {"detection", det_json}},
       opts.json_out);
  return kExitOk;
}

int cmd_sweep(const fs::path& config_path, const fs::path& out_dir,
              const CommonOpts& opts) {
  smurf::RunManifest manifest;
  manifest.command = "sweep";
  manifest.config_path = config_path.string();
  manifest.tool_version = smurf::version_string;
  manifest.started = smurf::iso8601_utc_now();

  smurf::SweepConfig cfg = smurf::load_sweep_config(config_path);
  cfg.base.seed = resolve_seed(opts.seed, cfg.base.seed);
  manifest.seed = cfg.base.seed;

  ensure_out_dir(out_dir);
  const auto rows = smurf::sensitivity_sweep(cfg.base, cfg.conditioned_rates_hz,
                                             cfg.replicates, cfg.fit,
                                             cfg.threshold, opts.jobs);
  const fs::path csv_path = out_dir / "sweep.csv";
  smurf::save_sweep_csv(rows, csv_path);

  manifest.inputs = {config_path.string()};
  manifest.outputs = {csv_path.string()};
  manifest.finished = smurf::iso8601_utc_now();
  smurf::write_manifest(manifest, out_dir);

  json jrows = json::array();
  for (const auto& row : rows) {
    std::cerr << "sweep: rate " << row.conditioned_rate_hz << " Hz (ratio "
              << row.ratio << "): " << row.detections << " detections, mean "
              << row.mean_learning_time_ms << " ms, mean trial "
              << row.mean_learning_trial << "\n";
    jrows.push_back({{"conditioned_rate_hz", row.conditioned_rate_hz},
                     {"ratio", row.ratio},
                     {"detections", row.detections},
                     {"mean_learning_time_ms", row.mean_learning_time_ms},
                     {"mean_learning_trial", row.mean_learning_trial}});
  }
  emit({{"command", "sweep"}, {"sweep", csv_path.string()}, {"rows", jrows}},
       opts.json_out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separably-Markov random field models of binary spike rasters"};
  app.set_version_flag("--version", smurf::version_string);
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path;
  std::string raster_path;
  std::string fit_path;
  std::string out_path;
  std::string out_dir = ".";
  bool draws_sidecar = false;
  int baseline_trials = 0;
  int baseline_bins = 0;
  double threshold = 0.95;

  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--seed", opts.seed,
                    "Seed override (wins over SMURF_SEED and the config)");
    sub->add_flag("--json", opts.json_out,
                  "Emit a machine-readable run summary on stdout");
    if (with_jobs)
      sub->add_option("--jobs", opts.jobs, "Worker threads (results identical for any value)")
          ->check(CLI::PositiveNumber);
  };

  CLI::App* sim = app.add_subcommand("simulate",
                                     "Draw a synthetic conditioning raster");
  sim->add_option("--config", config_path, "Simulation config JSON")
      ->required();
  sim->add_option("--out", out_path, "Output raster JSON path")->required();
  add_common(sim, false);

  CLI::App* fit = app.add_subcommand("fit", "Fit the model to a raster");
  fit->add_option("--raster", raster_path, "Input raster JSON")->required();
  fit->add_option("--config", config_path, "Fit config JSON")->required();
  fit->add_option("--out-dir", out_dir, "Output directory")->required();
  fit->add_flag("--draws-sidecar", draws_sidecar,
                "Also write raw posterior draws (draws.bin)");
  add_common(fit, true);

  CLI::App* summ = app.add_subcommand(
      "summarize", "Posterior summaries and learning detection from a fit");
  summ->add_option("--fit", fit_path, "fit.json from a previous fit")
      ->required();
  summ->add_option("--raster", raster_path, "Raster the fit was run on")
      ->required();
  summ->add_option("--out-dir", out_dir, "Output directory")->required();
  summ->add_option("--baseline-trials", baseline_trials,
                   "Baseline trial count (default: trials before conditioning)");
  summ->add_option("--baseline-bins", baseline_bins,
                   "Baseline bin count (default: bins before the cue)");
  summ->add_option("--threshold", threshold,
                   "Detection probability threshold in (0,1]");
  add_common(summ, false);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Sensitivity sweep over conditioned rates");
  sweep->add_option("--config", config_path, "Sweep config JSON")->required();
  sweep->add_option("--out-dir", out_dir, "Output directory")->required();
  add_common(sweep, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadInput;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_path, opts);
    if (fit->parsed())
      return cmd_fit(raster_path, config_path, out_dir, draws_sidecar, opts);
    if (summ->parsed())
      return cmd_summarize(fit_path, raster_path, out_dir, baseline_trials,
                           baseline_bins, threshold, opts);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir, opts);
  } catch (const smurf::numeric_error& e) {
    std::cerr << "error (numeric): " << e.what() << "\n";
    return kExitNumeric;
  } catch (const smurf::io_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
