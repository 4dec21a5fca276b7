#include "smurf/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "parallel_util.hpp"
#include "smurf/rng.hpp"
#include "smurf/summaries.hpp"

namespace smurf {

namespace {

// trial_len/delta and cue_onset/delta are conceptually exact integers but
// arrive through binary floating point (1.0/0.005 != 200 exactly), so bin
// counts snap to the nearest integer when within rounding slop.
long snapped_ratio_floor(double num, double den) {
  const double v = num / den;
  const double r = std::round(v);
  if (std::fabs(v - r) < 1e-6) return static_cast<long>(r);
  return static_cast<long>(std::floor(v));
}

void check_sim_config(const SimConfig& cfg) {
  if (cfg.n_trials < 1)
    throw std::invalid_argument("sim config: n_trials must be >= 1");
  if (!(cfg.delta_s > 0.0) || !std::isfinite(cfg.delta_s))
    throw std::invalid_argument("sim config: delta_s must be positive");
  if (!(cfg.trial_len_s > 0.0))
    throw std::invalid_argument("sim config: trial_len_s must be positive");
  if (sim_n_bins(cfg) < 1)
    throw std::invalid_argument("sim config: trial shorter than one bin");
  if (cfg.cue_onset_s < 0.0 || cfg.cue_onset_s >= cfg.trial_len_s)
    throw std::invalid_argument(
        "sim config: cue_onset_s must lie in [0, trial_len_s)");
  if (cfg.cond_start_trial < 1 || cfg.cond_start_trial > cfg.n_trials)
    throw std::invalid_argument(
        "sim config: cond_start_trial must lie in [1, n_trials]");
  for (double rate : {cfg.baseline_rate_hz, cfg.conditioned_rate_hz}) {
    if (!(rate >= 0.0) || !std::isfinite(rate))
      throw std::invalid_argument("sim config: rates must be finite and >= 0");
    if (rate * cfg.delta_s > 1.0)
      throw std::invalid_argument(
          "sim config: rate * delta_s exceeds 1, not a Bernoulli probability");
  }
  if (cfg.error_trial_count < 0)
    throw std::invalid_argument("sim config: error_trial_count must be >= 0");
}

}  // namespace

int sim_n_bins(const SimConfig& cfg) {
  return static_cast<int>(snapped_ratio_floor(cfg.trial_len_s, cfg.delta_s));
}

int sim_cue_bin(const SimConfig& cfg) {
  return static_cast<int>(snapped_ratio_floor(cfg.cue_onset_s, cfg.delta_s)) +
         1;
}

Raster simulate_raster(const SimConfig& cfg) {
  check_sim_config(cfg);
  const int K = sim_n_bins(cfg);
  const int R = cfg.n_trials;

  Raster raster;
  raster.n_bins = K;
  raster.n_trials = R;
  raster.delta_s = cfg.delta_s;
  raster.cue_bin = sim_cue_bin(cfg);
  raster.cond_start_trial = cfg.cond_start_trial;
  raster.u_x.resize(K);
  for (int k = 1; k <= K; ++k) raster.u_x[k - 1] = k >= raster.cue_bin;
  raster.u_z.resize(R);
  for (int r = 1; r <= R; ++r) raster.u_z[r - 1] = r >= cfg.cond_start_trial;

  const double p_base = cfg.baseline_rate_hz * cfg.delta_s;
  const double p_cond = cfg.conditioned_rate_hz * cfg.delta_s;
  raster.bins.resize(static_cast<std::size_t>(K) * R);
  RngStream rng(RngStream::derive(cfg.seed, {0x5157ULL}));
  for (int r = 1; r <= R; ++r) {
    const bool cond_trial = r >= cfg.cond_start_trial;
    for (int k = 1; k <= K; ++k) {
      const double p = (cond_trial && k >= raster.cue_bin) ? p_cond : p_base;
      raster.set_bin(k, r, rng.uniform() < p ? 1 : 0);
    }
  }

  if (cfg.error_trial_count > 0)
    inject_error_trials(raster, cfg.error_start_trial, cfg.error_trial_count);
  return raster;
}

void inject_error_trials(Raster& raster, int start_trial, int count) {
  if (count == 0) return;
  if (count < 0 || start_trial < 1 ||
      start_trial + count - 1 > raster.n_trials)
    throw std::invalid_argument(
        "inject_error_trials: trial range outside the raster");
  for (int r = start_trial; r <= start_trial + count - 1; ++r)
    for (int k = 1; k <= raster.n_bins; ++k) raster.set_bin(k, r, 0);
}

std::vector<SweepRow> sensitivity_sweep(const SimConfig& base,
                                        const std::vector<double>& rates,
                                        int replicates,
                                        const FitConfig& fit_cfg,
                                        double threshold, int jobs) {
  if (rates.empty())
    throw std::invalid_argument("sensitivity_sweep: no rates given");
  if (replicates < 1)
    throw std::invalid_argument("sensitivity_sweep: replicates must be >= 1");
  if (!(base.baseline_rate_hz > 0.0))
    throw std::invalid_argument(
        "sensitivity_sweep: baseline rate must be positive to form ratios");

  struct CellOut {
    bool detected = false;
    double time_ms = 0.0;
    double trial = 0.0;
  };
  const int n_rates = static_cast<int>(rates.size());
  const int n_cells = n_rates * replicates;
  std::vector<CellOut> cells(n_cells);

  detail::run_indexed(n_cells, jobs, [&](int idx) {
    const int rate_idx = idx / replicates;
    const int rep_idx = idx % replicates;
    SimConfig cell_cfg = base;
    cell_cfg.conditioned_rate_hz = rates[rate_idx];
    cell_cfg.seed = RngStream::derive(
        base.seed, {static_cast<std::uint64_t>(rate_idx),
                    static_cast<std::uint64_t>(rep_idx)});
    const Raster raster = simulate_raster(cell_cfg);

    FitConfig f = fit_cfg;
    f.seed = RngStream::derive(cell_cfg.seed, {0xF17ULL});
    const FitResult fit = fit_em(raster, f);

    const BaselineSpec baseline = default_baseline(raster);
    const auto prob_map = learning_probability_map(fit.draws, baseline);
    const Detection det =
        detect_learning(prob_map, raster, baseline, threshold);

    CellOut& out = cells[idx];
    out.detected = det.detected;
    // The sentinel places a miss at the far corner of the lattice so it
    // drags the averages toward "late or never".
    const int bin = det.detected ? det.learning_bin : raster.n_bins;
    const int trial = det.detected ? det.learning_trial : raster.n_trials;
    out.time_ms = (bin - raster.cue_bin) * raster.delta_s * 1000.0;
    out.trial = trial;
  });

  std::vector<SweepRow> rows(n_rates);
  for (int i = 0; i < n_rates; ++i) {
    SweepRow& row = rows[i];
    row.conditioned_rate_hz = rates[i];
    row.ratio = rates[i] / base.baseline_rate_hz;
    double time_sum = 0.0;
    double trial_sum = 0.0;
    for (int j = 0; j < replicates; ++j) {
      const CellOut& c = cells[i * replicates + j];
      row.detections += c.detected ? 1 : 0;
      time_sum += c.time_ms;
      trial_sum += c.trial;
    }
    row.mean_learning_time_ms = time_sum / replicates;
    row.mean_learning_trial = trial_sum / replicates;
  }
  return rows;
}

}  // namespace smurf
