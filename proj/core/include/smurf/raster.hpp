#ifndef SMURF_RASTER_HPP
#define SMURF_RASTER_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace smurf {

// Binary spike raster on a K x R lattice: K time bins per trial, R trials.
// Bin and trial indices are 1-based in every interface (accessors, violation
// reports, file formats); the flat storage below is an internal detail and
// holds trials contiguously, i.e. element (k,r) lives at (r-1)*K + (k-1).
struct Raster {
  int n_bins = 0;    // K
  int n_trials = 0;  // R
  double delta_s = 0.0;
  int cue_bin = 1;            // first bin of the conditioned-stimulus period
  int cond_start_trial = 1;   // first conditioning trial
  std::vector<std::uint8_t> u_x;   // length K, entries in {0,1}
  std::vector<std::uint8_t> u_z;   // length R, entries in {0,1}
  std::vector<std::uint8_t> bins;  // length K*R, entries in {0,1}

  std::size_t bin_index(int k, int r) const {
    return static_cast<std::size_t>(r - 1) * n_bins + (k - 1);
  }
  int bin(int k, int r) const { return bins[bin_index(k, r)]; }
  void set_bin(int k, int r, int v) {
    bins[bin_index(k, r)] = static_cast<std::uint8_t>(v);
  }
  // All K bins of trial r, in time order.
  std::span<const std::uint8_t> trial(int r) const {
    return {bins.data() + static_cast<std::size_t>(r - 1) * n_bins,
            static_cast<std::size_t>(n_bins)};
  }
};

// One violated Raster invariant.  k/r are 1-based locations, 0 when the
// violation is not tied to a lattice cell.
struct RasterViolation {
  std::string message;
  int k = 0;
  int r = 0;
};

// Checks every structural invariant and returns the full list of violations
// rather than stopping at the first, so callers can report them all at once.
std::vector<RasterViolation> validate_raster(const Raster& raster);

// State-equation and observation parameters.  rho_* are fixed at 1 for the
// random-walk model used throughout; they are carried explicitly so the
// filtering code never hard-codes the walk.
struct ModelParams {
  double rho_x = 1.0;
  double rho_z = 1.0;
  double alpha_x = 0.0;
  double alpha_z = 0.0;
  double sigma2_eps = 1.0;  // within-trial state-noise variance
  double sigma2_del = 1.0;  // cross-trial state-noise variance
  bool estimate_alpha = false;
};

// One Gibbs configuration of the latent field: the within-trial path x
// (length K), the cross-trial path z (length R), and the augmentation field
// w (K*R, same layout as Raster::bins).  x_0 = z_0 = 0 are implicit and
// never stored.
struct LatentState {
  std::vector<double> x;
  std::vector<double> z;
  std::vector<double> w;
};

// Retained (x,z) Gibbs draws from one expectation pass, stored flat with
// draw i occupying [i*K, (i+1)*K) of x and [i*R, (i+1)*R) of z.
struct PosteriorDraws {
  int n_draws = 0;
  int n_bins = 0;    // K
  int n_trials = 0;  // R
  std::vector<double> x;  // n_draws * K
  std::vector<double> z;  // n_draws * R
  ModelParams theta_at;   // parameters the draws were generated under
  int burn_in_discarded = 0;
  std::uint64_t seed = 0;

  std::span<const double> x_draw(int i) const {
    return {x.data() + static_cast<std::size_t>(i) * n_bins,
            static_cast<std::size_t>(n_bins)};
  }
  std::span<const double> z_draw(int i) const {
    return {z.data() + static_cast<std::size_t>(i) * n_trials,
            static_cast<std::size_t>(n_trials)};
  }
};

// Conditional intensity per bin: logistic(x+z), the probability of a spike
// in one bin of width delta_s.  Strictly inside (0,1) even when x+z is far
// into a saturated tail.  Throws std::invalid_argument on non-finite input.
double cif(double x, double z);

// Converts a per-bin spike probability to a rate in Hz.
// Requires 0 <= lambda_bin <= 1 and delta_s > 0.
double rate_hz(double lambda_bin, double delta_s);

}  // namespace smurf

#endif
