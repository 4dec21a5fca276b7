#ifndef SMURF_PG_HPP
#define SMURF_PG_HPP

#include <cstdint>

#include "smurf/rng.hpp"

namespace smurf {

// Polya-Gamma PG(1,c) sampling.  PG(1,0) is the infinite weighted sum
// (2/pi^2) sum_m E_m / (2m-1)^2 over iid Exp(1) variates; PG(1,c) tilts
// that density by exp(-c^2 w / 2) (normalizer cosh(c/2)) and therefore
// depends on c only through c^2.  Draws conditioned on a logistic state
// c = x + z turn Bernoulli observations into Gaussian pseudo-observations
// with precision w.

// E[PG(1,c)] = tanh(c/2)/(2c), continuously extended to 1/4 at c = 0.
double pg1_mean(double c);

// Exact draw via alternating-series rejection on the tilted Jacobi
// representation PG(1,c) = J*(1,|c|/2)/4.  Expected cost is O(1) uniformly
// in c: the dominating kernel's total mass stays within a percent of 1.
// Throws std::invalid_argument when |c| > pg_max_abs_c or c is not finite;
// a conditioning value that large means the latent states have diverged.
double sample_pg1(double c, RngStream& rng);

inline constexpr double pg_max_abs_c = 1e4;

// Truncated sum-of-gammas draw from the definitional series, kept solely to
// cross-validate the exact sampler.  n_terms >= 200 is required; the mean
// deficit of the dropped tail at that depth is about 2.5e-4.
double sample_pg1_series(double c, RngStream& rng, int n_terms = 200);

// Draws used as observation precisions are floored at pg_draw_floor.  The
// floor is unreachable for any |c| <= pg_max_abs_c in exact arithmetic, so
// a nonzero count is itself a diagnostic worth surfacing.
inline constexpr double pg_draw_floor = 1e-12;

struct PgClampStats {
  std::uint64_t draws = 0;
  std::uint64_t clamped = 0;
};

double sample_pg1_clamped(double c, RngStream& rng, PgClampStats& stats);

}  // namespace smurf

#endif
