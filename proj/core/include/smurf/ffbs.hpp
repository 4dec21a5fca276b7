#ifndef SMURF_FFBS_HPP
#define SMURF_FFBS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "smurf/raster.hpp"
#include "smurf/rng.hpp"

namespace smurf {

// Which 1-D chain a lattice collapse targets: the within-trial path x
// (sum over trials at each bin) or the cross-trial path z (sum over bins
// at each trial).
enum class CollapseAxis { within, cross };

// Gaussian pseudo-observations y_k ~ N(state_k, 1/precision[k]) produced by
// conditioning the augmented likelihood on the opposite path.  A zero
// precision encodes "no information at this step"; its mean slot is 0 and
// the filter copies the prediction through such steps.
struct PseudoObs {
  std::vector<double> mean;
  std::vector<double> precision;
};

// First-order linear-Gaussian dynamics for one chain:
//   s_k = rho s_{k-1} + alpha u_k + noise,  noise ~ N(0, sigma2),  s_0 = 0.
// An empty u stands for an all-zero input sequence.
struct Dynamics1D {
  double rho = 1.0;
  double alpha = 0.0;
  double sigma2 = 1.0;
  std::span<const std::uint8_t> u = {};
};

// Slot k-1 holds the moments for step k = 1..N.
struct FilterState {
  std::vector<double> pred_mean;
  std::vector<double> pred_var;
  std::vector<double> filt_mean;
  std::vector<double> filt_var;
};

// Collapses the augmented lattice into per-step pseudo-observations for one
// chain.  w has the Raster layout (trial-contiguous); other_path is z when
// axis == within and x when axis == cross.  With every w > 0 the collapsed
//   precision[k] = sum_r w_{k,r}
//   mean[k]      = sum_r (dN_{k,r} - 1/2 - w_{k,r} z_r) / precision[k]
// is an exact rewrite of the conditional, not an approximation.
PseudoObs collapse_pseudo_obs(const Raster& raster, std::span<const double> w,
                              std::span<const double> other_path,
                              CollapseAxis axis);

// Standard Kalman recursion written in precision form, so steps with
// precision[k] = 0 need no special casing beyond mean handling:
//   pred_var[k] = rho^2 filt_var[k-1] + sigma2
//   filt_var[k] = pred_var[k] / (1 + precision[k] pred_var[k])
// Always 0 < filt_var[k] <= pred_var[k].
// Throws std::invalid_argument for sigma2 <= 0 or non-finite inputs.
FilterState forward_filter(const PseudoObs& obs, const Dynamics1D& dyn);

// Joint draw of the whole path from its smoothing distribution: sample the
// final state from the filter, then walk back through
//   x_k | x_{k+1} ~ N(m*_k, v*_k),
//   v*_k = filt_var[k] sigma2 / (rho^2 filt_var[k] + sigma2).
std::vector<double> backward_sample(const FilterState& fs,
                                    const Dynamics1D& dyn, RngStream& rng);

// collapse + filter + backward draw for one chain in a single call.
std::vector<double> sample_path_given(const Raster& raster,
                                      std::span<const double> w,
                                      std::span<const double> other_path,
                                      CollapseAxis axis, const Dynamics1D& dyn,
                                      RngStream& rng);

}  // namespace smurf

#endif
