// Microbenchmarks for the fit's hot loops.  The Gibbs sweep dominates end
// to end runtime (PG draws over the K*R lattice, then two path samplers),
// so the PG and sweep numbers are the ones to watch when touching either.

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "smurf/ffbs.hpp"
#include "smurf/gibbs_em.hpp"
#include "smurf/pg.hpp"
#include "smurf/raster.hpp"
#include "smurf/rng.hpp"
#include "smurf/simulator.hpp"
#include "smurf/summaries.hpp"

namespace {

using namespace smurf;

SimConfig desk_protocol() {
  SimConfig cfg;
  cfg.n_trials = 45;
  cfg.trial_len_s = 2.0;
  cfg.delta_s = 0.005;
  cfg.cue_onset_s = 1.0;
  cfg.cond_start_trial = 16;
  cfg.baseline_rate_hz = 20.0;
  cfg.conditioned_rate_hz = 60.0;
  cfg.seed = 7;
  return cfg;
}

void BM_PgDraw(benchmark::State& state) {
  const double c = state.range(0) / 10.0;
  RngStream rng(1);
  double acc = 0.0;
  for (auto _ : state) acc += sample_pg1(c, rng);
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PgDraw)->Arg(0)->Arg(10)->Arg(25)->Arg(40);

void BM_FfbsPath(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RngStream rng(2);
  PseudoObs obs;
  obs.mean.resize(n);
  obs.precision.resize(n);
  for (int k = 0; k < n; ++k) {
    obs.mean[k] = rng.normal();
    obs.precision[k] = 1.0 + rng.uniform();
  }
  Dynamics1D dyn{1.0, 0.0, 0.01, std::vector<std::uint8_t>(n, 0)};
  for (auto _ : state) {
    const FilterState fs = forward_filter(obs, dyn);
    benchmark::DoNotOptimize(backward_sample(fs, dyn, rng));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_FfbsPath)->Arg(400)->Arg(2000);

// One full sweep at the desk-study scale (400 bins x 45 trials): 18000 PG
// draws plus both path updates.  Fit cost is essentially this times the
// total sweep count.
void BM_GibbsSweepDesk(benchmark::State& state) {
  const Raster raster = simulate_raster(desk_protocol());
  ModelParams theta;
  theta.sigma2_eps = 0.01;
  theta.sigma2_del = 0.05;
  LatentState st;
  st.x.assign(raster.n_bins, 0.0);
  st.z.assign(raster.n_trials, 0.0);
  st.w.assign(raster.bins.size(), 0.25);
  RngStream rng(3);
  for (auto _ : state) gibbs_sweep(st, raster, theta, rng);
  state.SetItemsProcessed(state.iterations() * raster.bins.size());
}
BENCHMARK(BM_GibbsSweepDesk)->Unit(benchmark::kMillisecond);

// Full summary pass (surface mean, both effect curves with quantiles,
// probability map, detection scan) over a realistic retained-draw count.
void BM_SummariesDesk(benchmark::State& state) {
  const Raster raster = simulate_raster(desk_protocol());
  const int n = 200;
  PosteriorDraws draws;
  draws.n_draws = n;
  draws.n_bins = raster.n_bins;
  draws.n_trials = raster.n_trials;
  RngStream rng(4);
  draws.x.resize(static_cast<std::size_t>(n) * raster.n_bins);
  draws.z.resize(static_cast<std::size_t>(n) * raster.n_trials);
  for (auto& v : draws.x) v = 0.1 * rng.normal();
  for (auto& v : draws.z) v = 0.1 * rng.normal();
  const BaselineSpec base = default_baseline(raster);
  for (auto _ : state)
    benchmark::DoNotOptimize(summarize_draws(draws, raster, base, 0.95));
  state.SetItemsProcessed(state.iterations() * n * raster.bins.size());
}
BENCHMARK(BM_SummariesDesk)->Unit(benchmark::kMillisecond);

void BM_SimulateDesk(benchmark::State& state) {
  SimConfig cfg = desk_protocol();
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_raster(cfg));
    ++cfg.seed;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SimulateDesk)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
