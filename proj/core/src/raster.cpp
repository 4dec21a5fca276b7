#include "smurf/raster.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace smurf {

std::vector<RasterViolation> validate_raster(const Raster& raster) {
  std::vector<RasterViolation> out;
  auto fail = [&out](std::string msg, int k = 0, int r = 0) {
    out.push_back({std::move(msg), k, r});
  };

  if (raster.n_bins < 1) fail("n_bins must be a positive integer");
  if (raster.n_trials < 1) fail("n_trials must be a positive integer");
  if (!(raster.delta_s > 0.0) || !std::isfinite(raster.delta_s))
    fail("delta_s must be positive and finite");

  if (raster.n_bins >= 1 &&
      (raster.cue_bin < 1 || raster.cue_bin > raster.n_bins))
    fail("cue_bin must lie in [1, n_bins]");
  if (raster.n_trials >= 1 && (raster.cond_start_trial < 1 ||
                               raster.cond_start_trial > raster.n_trials))
    fail("cond_start_trial must lie in [1, n_trials]");

  if (raster.n_bins < 1 || raster.n_trials < 1) return out;

  const auto K = static_cast<std::size_t>(raster.n_bins);
  const auto R = static_cast<std::size_t>(raster.n_trials);

  if (raster.u_x.size() != K) {
    fail("u_x length does not match n_bins");
  } else {
    for (std::size_t k = 0; k < K; ++k)
      if (raster.u_x[k] > 1)
        fail("u_x entry outside {0,1}", static_cast<int>(k) + 1, 0);
  }
  if (raster.u_z.size() != R) {
    fail("u_z length does not match n_trials");
  } else {
    for (std::size_t r = 0; r < R; ++r)
      if (raster.u_z[r] > 1)
        fail("u_z entry outside {0,1}", 0, static_cast<int>(r) + 1);
  }

  if (raster.bins.size() != K * R) {
    fail("bins storage does not match n_bins * n_trials");
    return out;
  }
  for (int r = 1; r <= raster.n_trials; ++r)
    for (int k = 1; k <= raster.n_bins; ++k)
      if (raster.bins[raster.bin_index(k, r)] > 1)
        fail("bin entry outside {0,1}", k, r);
  return out;
}

double cif(double x, double z) {
  if (!std::isfinite(x) || !std::isfinite(z))
    throw std::invalid_argument("cif: non-finite state input");
  double t = x + z;
  // Branch on sign so neither exp() can overflow, then pin the result off
  // the endpoints: downstream code divides by cif values and by 1-cif.
  double p = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                      : std::exp(t) / (1.0 + std::exp(t));
  const double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return p < lo ? lo : (p > hi ? hi : p);
}

double rate_hz(double lambda_bin, double delta_s) {
  if (!(delta_s > 0.0) || !std::isfinite(delta_s))
    throw std::invalid_argument("rate_hz: delta_s must be positive");
  if (!(lambda_bin >= 0.0 && lambda_bin <= 1.0))
    throw std::invalid_argument("rate_hz: lambda_bin must lie in [0,1]");
  return lambda_bin / delta_s;
}

}  // namespace smurf
