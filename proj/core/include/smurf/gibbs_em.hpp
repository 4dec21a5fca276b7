#ifndef SMURF_GIBBS_EM_HPP
#define SMURF_GIBBS_EM_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "smurf/ffbs.hpp"
#include "smurf/pg.hpp"
#include "smurf/raster.hpp"
#include "smurf/rng.hpp"

namespace smurf {

struct FitConfig {
  int n_gibbs_per_iter = 5000;  // total sweeps per expectation pass
  int burn_in = 500;            // discarded sweeps at the head of each pass
  int max_em_iters = 100;
  double conv_tol = 1e-5;  // absolute tolerance on both sigma2 updates
  std::uint64_t seed = 0;
  bool estimate_alpha = false;
  double rho_x = 1.0;
  double rho_z = 1.0;
};

struct EmTraceEntry {
  double sigma2_eps = 0.0;
  double sigma2_del = 0.0;
  double alpha_x = 0.0;
  double alpha_z = 0.0;
};

struct FitResult {
  ModelParams params;     // final M-step output
  PosteriorDraws draws;   // retained draws of the final expectation pass
  std::vector<EmTraceEntry> trace;  // one entry per EM iteration
  bool converged = false;
  int iterations = 0;
  PgClampStats pg_stats;
};

struct InitResult {
  ModelParams params;
  LatentState state;
};

// State-noise variances are floored here after every M-step; an estimate
// escaping [sigma2_floor, sigma2_trace_cap] aborts the fit with
// numeric_error, since nothing downstream is trustworthy past that point.
inline constexpr double sigma2_floor = 1e-8;
inline constexpr double sigma2_trace_cap = 1e3;

// One systematic-scan sweep, in place:
//   (1) w_{k,r} ~ PG(1, |x_k + z_r|) over the whole lattice,
//   (2) x ~ p(x | w, z, data) via forward filtering, backward sampling,
//   (3) z ~ p(z | w, x, data) the same way, conditioned on the new x.
// Step (1) runs in trial stripes whose RNG streams are derived from a
// single value drawn off `rng`, so the sweep output is identical for every
// jobs count.  Throws numeric_error when any |x_k + z_r| exceeds the PG
// conditioning cap.
void gibbs_sweep(LatentState& state, const Raster& raster,
                 const ModelParams& params, RngStream& rng, int jobs = 1,
                 PgClampStats* stats = nullptr);

// Runs burn_in discarded sweeps followed by retained ones, warm-starting
// from (and finally leaving behind) `state` so consecutive passes continue
// one chain.
PosteriorDraws e_step(const Raster& raster, const ModelParams& params,
                      const FitConfig& cfg, RngStream& rng, LatentState& state,
                      int jobs = 1, PgClampStats* stats = nullptr);

// Closed-form maximizers for the random-walk model (rho = 1):
//   alpha = sum_k E[s_k - s_{k-1}] u_k / sum_k u_k^2   (0 when the input is
//   all zero or alpha estimation is off), and sigma2 = the posterior-average
//   mean squared increment residual, floored at sigma2_floor.
ModelParams m_step(const PosteriorDraws& draws, const Raster& raster,
                   const ModelParams& prev);

// Moment-matched starting point built from two 1-D fits of the same model
// with the opposite path pinned to zero: the trial-collapsed fit yields
// (sigma2_eps, initial x), the bin-collapsed fit (sigma2_del, initial z);
// the lattice w is set to the PG mean at the initial paths.
InitResult initialize(const Raster& raster, const FitConfig& cfg,
                      RngStream& rng, int jobs = 1,
                      PgClampStats* stats = nullptr);

// Monte-Carlo EM: initialize, then alternate e_step / m_step until both
// sigma2 components move less than conv_tol between successive iterations
// or max_em_iters is reached.  Bit-reproducible for a fixed cfg.seed,
// independent of jobs.  on_iter, when set, observes each trace entry as it
// is produced (progress reporting only; it must not mutate anything).
using IterCallback = std::function<void(int iteration, const EmTraceEntry&)>;
FitResult fit_em(const Raster& raster, const FitConfig& cfg, int jobs = 1,
                 const IterCallback& on_iter = {});

}  // namespace smurf

#endif
