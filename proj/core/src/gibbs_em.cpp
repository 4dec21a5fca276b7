#include "smurf/gibbs_em.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "parallel_util.hpp"
#include "smurf/errors.hpp"

namespace smurf {

namespace {

// Scale of the internal 1-D fits used only to produce starting values; a
// rough sigma2 and a representative path are all that is needed.
constexpr int kInitSweeps = 150;
constexpr int kInitBurn = 50;
constexpr int kInitMaxIters = 12;
constexpr double kInitTol = 1e-4;

void check_fit_config(const FitConfig& cfg) {
  if (cfg.n_gibbs_per_iter < 1)
    throw std::invalid_argument("fit config: n_gibbs_per_iter must be >= 1");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.n_gibbs_per_iter)
    throw std::invalid_argument(
        "fit config: burn_in must lie in [0, n_gibbs_per_iter)");
  if (cfg.max_em_iters < 1)
    throw std::invalid_argument("fit config: max_em_iters must be >= 1");
  if (!(cfg.conv_tol > 0.0))
    throw std::invalid_argument("fit config: conv_tol must be positive");
  if (!std::isfinite(cfg.rho_x) || !std::isfinite(cfg.rho_z))
    throw std::invalid_argument("fit config: non-finite rho");
}

// PG refresh of the whole augmentation field.  Each trial is a stripe with
// its own stream derived from w_seed, which makes the field a function of
// (w_seed, x, z) alone regardless of how stripes are scheduled.
void update_w_field(const Raster& raster, const std::vector<double>& x,
                    const std::vector<double>& z, std::vector<double>& w,
                    std::uint64_t w_seed, int jobs, PgClampStats* stats) {
  const int K = raster.n_bins;
  const int R = raster.n_trials;
  std::vector<PgClampStats> local(R);
  detail::run_indexed(R, jobs, [&](int r) {
    RngStream stream(RngStream::derive(w_seed, {static_cast<std::uint64_t>(r)}));
    double* wrow = w.data() + static_cast<std::size_t>(r) * K;
    const double zr = z[r];
    PgClampStats& st = local[r];
    for (int k = 0; k < K; ++k) {
      const double c = x[k] + zr;
      if (!(std::fabs(c) <= pg_max_abs_c))
        throw numeric_error(
            "gibbs sweep: |x_k + z_r| = " + std::to_string(std::fabs(c)) +
            " at bin " + std::to_string(k + 1) + ", trial " +
            std::to_string(r + 1) + " exceeds the PG conditioning cap");
      wrow[k] = sample_pg1_clamped(c, stream, st);
    }
  });
  if (stats != nullptr) {
    for (const auto& st : local) {
      stats->draws += st.draws;
      stats->clamped += st.clamped;
    }
  }
}

Dynamics1D x_dynamics(const Raster& raster, const ModelParams& p) {
  return {p.rho_x, p.alpha_x, p.sigma2_eps, raster.u_x};
}

Dynamics1D z_dynamics(const Raster& raster, const ModelParams& p) {
  return {p.rho_z, p.alpha_z, p.sigma2_del, raster.u_z};
}

// Increment statistics of one path family across draws:
//   sum_sq = sum_i sum_k (s_k - s_{k-1})^2,  sum_du = sum_i sum_k ds_k u_k.
struct IncrementStats {
  double sum_sq = 0.0;
  double sum_du = 0.0;
};

IncrementStats accumulate_increments(const std::vector<double>& flat,
                                     int n_draws, int len,
                                     const std::vector<std::uint8_t>& u) {
  IncrementStats st;
  for (int i = 0; i < n_draws; ++i) {
    const double* s = flat.data() + static_cast<std::size_t>(i) * len;
    double prev = 0.0;  // s_0 = 0
    for (int k = 0; k < len; ++k) {
      const double d = s[k] - prev;
      st.sum_sq += d * d;
      if (u[k]) st.sum_du += d;
      prev = s[k];
    }
  }
  return st;
}

void check_sigma2_trace(double s2, const char* which) {
  if (!(s2 <= sigma2_trace_cap) || !std::isfinite(s2))
    throw numeric_error(std::string("m-step: ") + which +
                        " left the trusted range [1e-8, 1e3]");
}

}  // namespace

void gibbs_sweep(LatentState& state, const Raster& raster,
                 const ModelParams& params, RngStream& rng, int jobs,
                 PgClampStats* stats) {
  const std::uint64_t w_seed = rng.next_u64();
  update_w_field(raster, state.x, state.z, state.w, w_seed, jobs, stats);
  state.x = sample_path_given(raster, state.w, state.z, CollapseAxis::within,
                              x_dynamics(raster, params), rng);
  state.z = sample_path_given(raster, state.w, state.x, CollapseAxis::cross,
                              z_dynamics(raster, params), rng);
}

PosteriorDraws e_step(const Raster& raster, const ModelParams& params,
                      const FitConfig& cfg, RngStream& rng, LatentState& state,
                      int jobs, PgClampStats* stats) {
  const int K = raster.n_bins;
  const int R = raster.n_trials;
  PosteriorDraws draws;
  draws.n_bins = K;
  draws.n_trials = R;
  draws.n_draws = cfg.n_gibbs_per_iter - cfg.burn_in;
  draws.theta_at = params;
  draws.burn_in_discarded = cfg.burn_in;
  draws.seed = cfg.seed;
  draws.x.reserve(static_cast<std::size_t>(draws.n_draws) * K);
  draws.z.reserve(static_cast<std::size_t>(draws.n_draws) * R);

  for (int s = 0; s < cfg.n_gibbs_per_iter; ++s) {
    gibbs_sweep(state, raster, params, rng, jobs, stats);
    if (s >= cfg.burn_in) {
      draws.x.insert(draws.x.end(), state.x.begin(), state.x.end());
      draws.z.insert(draws.z.end(), state.z.begin(), state.z.end());
    }
  }
  return draws;
}

ModelParams m_step(const PosteriorDraws& draws, const Raster& raster,
                   const ModelParams& prev) {
  if (draws.n_draws < 1)
    throw std::invalid_argument("m_step: no draws retained");
  const int n = draws.n_draws;
  ModelParams out = prev;

  auto solve = [n](const IncrementStats& st, const std::vector<std::uint8_t>& u,
                   int len, bool estimate, double& alpha, double& sigma2) {
    double u2 = 0.0;
    for (auto v : u) u2 += v;  // entries are 0/1 so sum == sum of squares
    alpha = 0.0;
    if (estimate && u2 > 0.0) alpha = st.sum_du / n / u2;
    // sum_i sum_k (ds - alpha u)^2 expanded around the accumulated sums.
    const double rss = st.sum_sq - 2.0 * alpha * st.sum_du +
                       static_cast<double>(n) * alpha * alpha * u2;
    sigma2 = rss / (static_cast<double>(n) * len);
    if (sigma2 < sigma2_floor) sigma2 = sigma2_floor;
  };

  const IncrementStats sx =
      accumulate_increments(draws.x, n, draws.n_bins, raster.u_x);
  const IncrementStats sz =
      accumulate_increments(draws.z, n, draws.n_trials, raster.u_z);
  solve(sx, raster.u_x, draws.n_bins, prev.estimate_alpha, out.alpha_x,
        out.sigma2_eps);
  solve(sz, raster.u_z, draws.n_trials, prev.estimate_alpha, out.alpha_z,
        out.sigma2_del);
  check_sigma2_trace(out.sigma2_eps, "sigma2_eps");
  check_sigma2_trace(out.sigma2_del, "sigma2_del");
  return out;
}

namespace {

// One-dimensional fit of the same model with the opposite path held at
// zero.  Returns the last path draw; sigma2 lands in *sigma2_out.
std::vector<double> fit_1d(const Raster& raster, CollapseAxis axis,
                           const FitConfig& cfg, RngStream& rng, int jobs,
                           PgClampStats* stats, double* sigma2_out) {
  const int K = raster.n_bins;
  const int R = raster.n_trials;
  const int len = axis == CollapseAxis::within ? K : R;
  const int other_len = axis == CollapseAxis::within ? R : K;
  const double rho = axis == CollapseAxis::within ? cfg.rho_x : cfg.rho_z;
  const auto& u = axis == CollapseAxis::within ? raster.u_x : raster.u_z;

  std::vector<double> path(len, 0.0);
  const std::vector<double> zeros(other_len, 0.0);
  std::vector<double> w(static_cast<std::size_t>(K) * R, pg1_mean(0.0));
  double sigma2 = 1.0;

  for (int iter = 0; iter < kInitMaxIters; ++iter) {
    const Dynamics1D dyn{rho, 0.0, sigma2, u};
    double sum_sq = 0.0;
    int retained = 0;
    for (int s = 0; s < kInitSweeps; ++s) {
      const std::uint64_t w_seed = rng.next_u64();
      if (axis == CollapseAxis::within)
        update_w_field(raster, path, zeros, w, w_seed, jobs, stats);
      else
        update_w_field(raster, zeros, path, w, w_seed, jobs, stats);
      path = sample_path_given(raster, w, zeros, axis, dyn, rng);
      if (s >= kInitBurn) {
        double prev = 0.0;
        for (int k = 0; k < len; ++k) {
          const double d = path[k] - prev;
          sum_sq += d * d;
          prev = path[k];
        }
        ++retained;
      }
    }
    double next = sum_sq / (static_cast<double>(retained) * len);
    if (next < sigma2_floor) next = sigma2_floor;
    const bool done = std::fabs(next - sigma2) < kInitTol;
    sigma2 = next;
    if (done) break;
  }
  *sigma2_out = sigma2;
  return path;
}

}  // namespace

InitResult initialize(const Raster& raster, const FitConfig& cfg,
                      RngStream& rng, int jobs, PgClampStats* stats) {
  InitResult init;
  init.params.rho_x = cfg.rho_x;
  init.params.rho_z = cfg.rho_z;
  init.params.estimate_alpha = cfg.estimate_alpha;

  init.state.x = fit_1d(raster, CollapseAxis::within, cfg, rng, jobs, stats,
                        &init.params.sigma2_eps);
  init.state.z = fit_1d(raster, CollapseAxis::cross, cfg, rng, jobs, stats,
                        &init.params.sigma2_del);

  const int K = raster.n_bins;
  const int R = raster.n_trials;
  init.state.w.resize(static_cast<std::size_t>(K) * R);
  for (int r = 0; r < R; ++r)
    for (int k = 0; k < K; ++k)
      init.state.w[static_cast<std::size_t>(r) * K + k] =
          pg1_mean(init.state.x[k] + init.state.z[r]);
  return init;
}

FitResult fit_em(const Raster& raster, const FitConfig& cfg, int jobs,
                 const IterCallback& on_iter) {
  const auto violations = validate_raster(raster);
  if (!violations.empty())
    throw std::invalid_argument("fit_em: invalid raster: " +
                                violations.front().message);
  check_fit_config(cfg);

  FitResult result;
  RngStream init_rng(RngStream::derive(cfg.seed, {1}));
  RngStream chain_rng(RngStream::derive(cfg.seed, {2}));

  InitResult init = initialize(raster, cfg, init_rng, jobs, &result.pg_stats);
  ModelParams params = init.params;
  LatentState state = std::move(init.state);

  bool converged = false;
  PosteriorDraws last_draws;
  for (int iter = 0; iter < cfg.max_em_iters; ++iter) {
    last_draws =
        e_step(raster, params, cfg, chain_rng, state, jobs, &result.pg_stats);
    params = m_step(last_draws, raster, params);
    result.trace.push_back(
        {params.sigma2_eps, params.sigma2_del, params.alpha_x, params.alpha_z});
    if (on_iter) on_iter(iter + 1, result.trace.back());
    if (iter >= 1) {
      const auto& cur = result.trace[iter];
      const auto& pre = result.trace[iter - 1];
      if (std::fabs(cur.sigma2_eps - pre.sigma2_eps) < cfg.conv_tol &&
          std::fabs(cur.sigma2_del - pre.sigma2_del) < cfg.conv_tol) {
        converged = true;
      }
    }
    if (converged) break;
  }

  result.params = params;
  result.draws = std::move(last_draws);
  result.converged = converged;
  result.iterations = static_cast<int>(result.trace.size());
  return result;
}

}  // namespace smurf
