#ifndef SMURF_SIMULATOR_HPP
#define SMURF_SIMULATOR_HPP

#include <cstdint>
#include <vector>

#include "smurf/gibbs_em.hpp"
#include "smurf/raster.hpp"

namespace smurf {

// Two-region conditioning protocol: every bin fires at baseline_rate_hz
// except the block at or after the cue bin in at-or-after-conditioning
// trials, which fires at conditioned_rate_hz.  Defaults are the 45-trial,
// 2 s, 1 ms protocol with the cue at 1 s and conditioning from trial 16.
struct SimConfig {
  int n_trials = 45;
  double trial_len_s = 2.0;
  double delta_s = 0.001;
  double cue_onset_s = 1.0;
  int cond_start_trial = 16;
  double baseline_rate_hz = 20.0;
  double conditioned_rate_hz = 60.0;
  // When count > 0, trials [start_trial, start_trial + count - 1] are
  // zeroed after simulation (simulated acquisition failures).
  int error_start_trial = 0;
  int error_trial_count = 0;
  std::uint64_t seed = 0;
};

// Number of bins and the 1-based first bin of the conditioned-stimulus
// period implied by a config; shared with file loaders so every consumer
// rounds the same way.
int sim_n_bins(const SimConfig& cfg);
int sim_cue_bin(const SimConfig& cfg);

// Draws the Bernoulli lattice and fills in the cue/conditioning landmarks
// and the step inputs u_x = 1{k >= cue_bin}, u_z = 1{r >= cond_start}.
// The output always passes validate_raster.
Raster simulate_raster(const SimConfig& cfg);

// Zeroes every bin of trials [start_trial, start_trial + count - 1].
// Idempotent; count = 0 is a no-op.
void inject_error_trials(Raster& raster, int start_trial, int count);

struct SweepRow {
  double conditioned_rate_hz = 0.0;
  double ratio = 0.0;  // conditioned / baseline
  int detections = 0;
  double mean_learning_time_ms = 0.0;
  double mean_learning_trial = 0.0;
};

// Simulate + fit + detect over a grid of conditioned rates, `replicates`
// independent rasters per rate.  Replicate seeds are derived from
// (base.seed, rate index, replicate index), so every cell is reproducible
// in isolation and rows do not depend on execution order or jobs.
// Non-detections enter the averages at the sentinel (last bin, last trial).
std::vector<SweepRow> sensitivity_sweep(const SimConfig& base,
                                        const std::vector<double>& rates,
                                        int replicates,
                                        const FitConfig& fit_cfg,
                                        double threshold, int jobs = 1);

}  // namespace smurf

#endif
