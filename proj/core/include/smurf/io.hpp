#ifndef SMURF_IO_HPP
#define SMURF_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "smurf/gibbs_em.hpp"
#include "smurf/raster.hpp"
#include "smurf/simulator.hpp"
#include "smurf/summaries.hpp"

// On-disk formats.  Schema errors and malformed payloads raise
// std::invalid_argument; filesystem failures raise smurf::io_error.  All
// JSON readers are strict: unknown keys are rejected so typos fail loudly
// instead of silently falling back to defaults.

namespace smurf {

// Raster JSON: {delta_s, cue_bin, cond_start_trial, u_x, u_z, bins} with
// bins as R arrays of K integers (trial-major, matching Raster storage).
Raster load_raster_json(const std::filesystem::path& path);
void save_raster_json(const Raster& raster, const std::filesystem::path& path);

// Raster CSV carries only the bins matrix (R rows by K columns); the
// landmarks are supplied by the caller and the step inputs are synthesized
// from them.
Raster load_raster_csv(const std::filesystem::path& path, double delta_s,
                       int cue_bin, int cond_start_trial);
void save_raster_csv(const Raster& raster, const std::filesystem::path& path);

// Config files mirror SimConfig / FitConfig field for field; absent keys
// keep their defaults.
SimConfig load_sim_config(const std::filesystem::path& path);
FitConfig load_fit_config(const std::filesystem::path& path);

struct SweepConfig {
  SimConfig base;
  std::vector<double> conditioned_rates_hz;
  int replicates = 1;
  FitConfig fit;
  double threshold = 0.95;
};
SweepConfig load_sweep_config(const std::filesystem::path& path);

// Fit result JSON plus an optional raw-draws sidecar next to it.  The
// sidecar is the 8-byte magic "SMRFDRW1" followed by native little-endian
// 64-bit floats, draw-major: for each retained draw the K x-values then the
// R z-values.  Dimensions live in the JSON, not the sidecar.
inline constexpr char draws_sidecar_magic[9] = "SMRFDRW1";

void save_fit_result(const FitResult& fit, const std::filesystem::path& json_path,
                     const std::string& sidecar_name);  // "" = no sidecar

struct LoadedFit {
  FitResult fit;
  bool has_draws = false;
};
LoadedFit load_fit_result(const std::filesystem::path& json_path);

// Summary exports into a directory: prob_map.csv and cif_mean.csv as bare
// R-row by K-column matrices, wt_effect.csv / ct_effect.csv as quantile
// tables with a header row, detection.json for the learning report.
void save_summary(const SummarySurface& surface,
                  const std::filesystem::path& dir);

void save_sweep_csv(const std::vector<SweepRow>& rows,
                    const std::filesystem::path& path);

// Provenance record; one per run, written as manifest.json in the output
// directory via a temp file and rename so readers never see a partial one.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version;
  std::string started;
  std::string finished;
};
void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& dir);

std::string iso8601_utc_now();

}  // namespace smurf

#endif
