#include "smurf/ffbs.hpp"

#include <cmath>
#include <stdexcept>

namespace smurf {

PseudoObs collapse_pseudo_obs(const Raster& raster, std::span<const double> w,
                              std::span<const double> other_path,
                              CollapseAxis axis) {
  const int K = raster.n_bins;
  const int R = raster.n_trials;
  if (w.size() != static_cast<std::size_t>(K) * R)
    throw std::invalid_argument("collapse_pseudo_obs: w size mismatch");

  PseudoObs obs;
  if (axis == CollapseAxis::within) {
    if (other_path.size() != static_cast<std::size_t>(R))
      throw std::invalid_argument(
          "collapse_pseudo_obs: expected z of length n_trials");
    obs.precision.assign(K, 0.0);
    std::vector<double> num(K, 0.0);
    for (int r = 0; r < R; ++r) {
      const double* wrow = w.data() + static_cast<std::size_t>(r) * K;
      const std::uint8_t* drow =
          raster.bins.data() + static_cast<std::size_t>(r) * K;
      const double z = other_path[r];
      for (int k = 0; k < K; ++k) {
        obs.precision[k] += wrow[k];
        num[k] += drow[k] - 0.5 - wrow[k] * z;
      }
    }
    obs.mean.assign(K, 0.0);
    for (int k = 0; k < K; ++k)
      if (obs.precision[k] > 0.0) obs.mean[k] = num[k] / obs.precision[k];
  } else {
    if (other_path.size() != static_cast<std::size_t>(K))
      throw std::invalid_argument(
          "collapse_pseudo_obs: expected x of length n_bins");
    obs.precision.assign(R, 0.0);
    obs.mean.assign(R, 0.0);
    for (int r = 0; r < R; ++r) {
      const double* wrow = w.data() + static_cast<std::size_t>(r) * K;
      const std::uint8_t* drow =
          raster.bins.data() + static_cast<std::size_t>(r) * K;
      double prec = 0.0;
      double num = 0.0;
      for (int k = 0; k < K; ++k) {
        prec += wrow[k];
        num += drow[k] - 0.5 - wrow[k] * other_path[k];
      }
      obs.precision[r] = prec;
      if (prec > 0.0) obs.mean[r] = num / prec;
    }
  }
  return obs;
}

FilterState forward_filter(const PseudoObs& obs, const Dynamics1D& dyn) {
  const std::size_t n = obs.mean.size();
  if (obs.precision.size() != n)
    throw std::invalid_argument("forward_filter: mean/precision length mismatch");
  if (!(dyn.sigma2 > 0.0) || !std::isfinite(dyn.sigma2))
    throw std::invalid_argument("forward_filter: sigma2 must be positive");
  if (!std::isfinite(dyn.rho) || !std::isfinite(dyn.alpha))
    throw std::invalid_argument("forward_filter: non-finite dynamics");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(obs.mean[k]) || !std::isfinite(obs.precision[k]) ||
        obs.precision[k] < 0.0)
      throw std::invalid_argument("forward_filter: bad pseudo-observation");
  }

  FilterState fs;
  fs.pred_mean.resize(n);
  fs.pred_var.resize(n);
  fs.filt_mean.resize(n);
  fs.filt_var.resize(n);

  double prev_mean = 0.0;  // s_0 = 0 exactly, with no uncertainty
  double prev_var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double uk = dyn.u.empty() ? 0.0 : static_cast<double>(dyn.u[k]);
    const double pm = dyn.rho * prev_mean + dyn.alpha * uk;
    const double pv = dyn.rho * dyn.rho * prev_var + dyn.sigma2;
    fs.pred_mean[k] = pm;
    fs.pred_var[k] = pv;
    const double fv = pv / (1.0 + obs.precision[k] * pv);
    fs.filt_var[k] = fv;
    fs.filt_mean[k] = pm + fv * obs.precision[k] * (obs.mean[k] - pm);
    prev_mean = fs.filt_mean[k];
    prev_var = fv;
  }
  return fs;
}

std::vector<double> backward_sample(const FilterState& fs,
                                    const Dynamics1D& dyn, RngStream& rng) {
  const std::size_t n = fs.filt_mean.size();
  std::vector<double> path(n);
  if (n == 0) return path;

  path[n - 1] =
      fs.filt_mean[n - 1] + std::sqrt(fs.filt_var[n - 1]) * rng.normal();
  for (std::size_t k = n - 1; k-- > 0;) {
    const double fv = fs.filt_var[k];
    const double denom = dyn.rho * dyn.rho * fv + dyn.sigma2;
    const double u_next = dyn.u.empty() ? 0.0 : static_cast<double>(dyn.u[k + 1]);
    const double gain = dyn.rho * fv / denom;
    const double mstar =
        fs.filt_mean[k] +
        gain * (path[k + 1] - dyn.rho * fs.filt_mean[k] - dyn.alpha * u_next);
    const double vstar = fv * dyn.sigma2 / denom;
    path[k] = mstar + std::sqrt(vstar) * rng.normal();
  }
  return path;
}

std::vector<double> sample_path_given(const Raster& raster,
                                      std::span<const double> w,
                                      std::span<const double> other_path,
                                      CollapseAxis axis, const Dynamics1D& dyn,
                                      RngStream& rng) {
  const PseudoObs obs = collapse_pseudo_obs(raster, w, other_path, axis);
  const FilterState fs = forward_filter(obs, dyn);
  return backward_sample(fs, dyn, rng);
}

}  // namespace smurf
