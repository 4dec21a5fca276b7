// Acceptance suite: replays the headline studies end to end and holds the
// results to fixed quantitative bands.  One [PASS]/[FAIL] line per criterion
// on stdout, diagnostics on stderr, exit code = number of failures.
//
//   1  exact PG(1,c) sampler moments across the tilt range
//   2  path draws against a dense Gaussian solve of the same posterior
//   3  full Gibbs pipeline against tensor quadrature on tiny lattices
//   4  closed-form M-step against a derivative-free maximizer
//   5  desk-scale conditioning study: effect curves and probability map
//   6  detection accuracy over replicates at rate ratio 3.0
//   7  the same with an injected three-trial acquisition failure
//   8  sensitivity sweep across rate ratios, including the null ratio
//   9  byte-identical CLI fits under --jobs 1
//
// A subset of criteria can be selected by number on the command line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "smurf/ffbs.hpp"
#include "smurf/gibbs_em.hpp"
#include "smurf/pg.hpp"
#include "smurf/raster.hpp"
#include "smurf/rng.hpp"
#include "smurf/simulator.hpp"
#include "smurf/summaries.hpp"
#include "support/dense_gaussian.hpp"
#include "support/numerical_opt.hpp"
#include "support/quadrature.hpp"

using namespace smurf;
namespace fs = std::filesystem;

namespace {

struct Reporter {
  int failures = 0;

  void run(int index, const char* title, const std::function<bool()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string error;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL",
                index, title, secs);
    std::fflush(stdout);
    if (!error.empty()) std::cerr << "  criterion " << index << " aborted: "
                                  << error << "\n";
    if (!ok) ++failures;
  }
};

bool check(bool cond, const std::string& label) {
  if (!cond) std::cerr << "  failed: " << label << "\n";
  return cond;
}

// Agreement in the leading four significant digits, as a relative band.
bool agree4(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 || std::abs(a - b) <= 5e-5 * scale;
}

// The desk-scale protocol every study below shares: 45 trials of 2 s at
// 5 ms resolution, cue at 1 s, conditioning from trial 16, 20 Hz baseline.
SimConfig desk_protocol() {
  SimConfig cfg;
  cfg.n_trials = 45;
  cfg.trial_len_s = 2.0;
  cfg.delta_s = 0.005;
  cfg.cue_onset_s = 1.0;
  cfg.cond_start_trial = 16;
  cfg.baseline_rate_hz = 20.0;
  cfg.conditioned_rate_hz = 60.0;
  return cfg;
}

FitConfig desk_fit(int max_iters) {
  FitConfig cfg;
  cfg.n_gibbs_per_iter = 2000;
  cfg.burn_in = 500;
  cfg.max_em_iters = max_iters;
  cfg.conv_tol = 1e-5;
  // alpha stays fixed at zero; the random walks absorb the conditioning step.
  return cfg;
}

// ---- criterion 1 ---------------------------------------------------------

bool criterion_pg_moments() {
  const int n = 100000;
  RngStream rng(0xACC1);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = sample_pg1(0.0, rng);
    s += w;
    s2 += w * w;
  }
  const double mean0 = s / n;
  const double var0 = s2 / n - mean0 * mean0;
  bool ok = check(std::abs(mean0 - 0.25) <= 0.005,
                  "mean at c=0 within 0.005 of 1/4");
  ok &= check(std::abs(var0 - 1.0 / 24.0) <= 0.002,
              "variance at c=0 within 0.002 of 1/24");

  for (double c : {0.5, 1.0, 2.0, 4.0}) {
    double cs = 0.0, cs2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = sample_pg1(c, rng);
      cs += w;
      cs2 += w * w;
    }
    const double mean = cs / n;
    const double se = std::sqrt((cs2 / n - mean * mean) / n);
    std::ostringstream label;
    label << "mean at c=" << c << " within 4 standard errors of tanh(c/2)/2c";
    ok &= check(std::abs(mean - pg1_mean(c)) <= 4.0 * se, label.str());
  }
  return ok;
}

// ---- criterion 2 ---------------------------------------------------------

bool criterion_ffbs_dense() {
  RngStream meta(0xACC2);
  bool ok = true;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 2 + static_cast<int>(meta.uniform() * 7);  // 2..8 steps
    PseudoObs obs;
    obs.mean.resize(n);
    obs.precision.resize(n);
    for (int k = 0; k < n; ++k) {
      obs.mean[k] = 1.5 * meta.normal();
      obs.precision[k] = meta.uniform() < 0.2 ? 0.0 : 0.2 + 3.0 * meta.uniform();
    }
    std::vector<std::uint8_t> u(n);
    for (auto& v : u) v = meta.uniform() < 0.5 ? 1 : 0;
    const Dynamics1D dyn{1.0, meta.normal(), 0.1 + meta.uniform(), u};

    const testsupport::DenseGaussian ref = testsupport::path_posterior(obs, dyn);
    const FilterState fs = forward_filter(obs, dyn);
    const int draws = 50000;
    RngStream rng(1000 + inst);
    std::vector<double> s(n, 0.0), s2(n, 0.0);
    for (int i = 0; i < draws; ++i) {
      const std::vector<double> path = backward_sample(fs, dyn, rng);
      for (int k = 0; k < n; ++k) {
        s[k] += path[k];
        s2[k] += path[k] * path[k];
      }
    }
    for (int k = 0; k < n; ++k) {
      const double mean = s[k] / draws;
      const double var = s2[k] / draws - mean * mean;
      const double tv = ref.cov[static_cast<std::size_t>(k) * n + k];
      std::ostringstream label;
      label << "instance " << inst << " state " << k;
      ok &= check(std::abs(mean - ref.mean[k]) <=
                      4.0 * std::sqrt(tv / draws),
                  label.str() + ": mean within 4 SE of dense solve");
      ok &= check(std::abs(var / tv - 1.0) <=
                      4.0 * std::sqrt(2.0 / (draws - 1.0)),
                  label.str() + ": variance within 4 SE of dense solve");
    }
  }
  return ok;
}

// ---- criterion 3 ---------------------------------------------------------

bool gibbs_vs_quadrature(const Raster& raster, const ModelParams& theta,
                         int nodes, int sweeps, std::uint64_t seed,
                         const char* label) {
  // Node-count convergence guards the oracle itself.
  const auto coarse =
      testsupport::tiny_posterior_cell_means(raster, theta, nodes - 8);
  const auto oracle =
      testsupport::tiny_posterior_cell_means(raster, theta, nodes);
  for (std::size_t c = 0; c < oracle.size(); ++c)
    if (std::abs(coarse[c] - oracle[c]) > 1e-8) {
      std::cerr << "  quadrature not node-converged on " << label << "\n";
      return false;
    }

  const int K = raster.n_bins, R = raster.n_trials;
  LatentState state;
  state.x.assign(K, 0.0);
  state.z.assign(R, 0.0);
  state.w.assign(static_cast<std::size_t>(K) * R, 0.25);
  RngStream rng(seed);
  const int burn = 5000;
  for (int s = 0; s < burn; ++s) gibbs_sweep(state, raster, theta, rng);
  std::vector<double> acc(oracle.size(), 0.0);
  for (int s = 0; s < sweeps; ++s) {
    gibbs_sweep(state, raster, theta, rng);
    for (int r = 1; r <= R; ++r)
      for (int k = 1; k <= K; ++k)
        acc[raster.bin_index(k, r)] += cif(state.x[k - 1], state.z[r - 1]);
  }
  bool ok = true;
  for (std::size_t c = 0; c < oracle.size(); ++c) {
    const double got = acc[c] / sweeps;
    std::ostringstream msg;
    msg << label << " cell " << c << ": |" << got << " - " << oracle[c]
        << "| <= 0.02";
    ok &= check(std::abs(got - oracle[c]) <= 0.02, msg.str());
  }
  return ok;
}

bool criterion_pipeline_quadrature() {
  Raster r22;
  r22.n_bins = 2;
  r22.n_trials = 2;
  r22.delta_s = 0.001;
  r22.cue_bin = 2;
  r22.cond_start_trial = 2;
  r22.u_x = {0, 1};
  r22.u_z = {0, 1};
  r22.bins = {1, 0, 0, 1};
  ModelParams t22;
  t22.alpha_x = 0.4;
  t22.alpha_z = -0.2;
  t22.sigma2_eps = 0.5;
  t22.sigma2_del = 0.8;

  Raster r32;
  r32.n_bins = 3;
  r32.n_trials = 2;
  r32.delta_s = 0.001;
  r32.cue_bin = 2;
  r32.cond_start_trial = 2;
  r32.u_x = {0, 1, 1};
  r32.u_z = {0, 1};
  r32.bins = {1, 0, 1, 0, 1, 1};
  ModelParams t32;
  t32.alpha_x = 0.3;
  t32.alpha_z = 0.2;
  t32.sigma2_eps = 0.4;
  t32.sigma2_del = 0.6;

  bool ok = gibbs_vs_quadrature(r22, t22, 32, 200000, 0xACC3, "2x2");
  ok &= gibbs_vs_quadrature(r32, t32, 28, 300000, 0xACC3 + 1, "3x2");
  return ok;
}

// ---- criterion 4 ---------------------------------------------------------

bool criterion_mstep_numerical() {
  RngStream meta(0xACC4);
  bool ok = true;
  for (int set = 0; set < 10; ++set) {
    const int K = 8, R = 6, n = 50;
    Raster raster;
    raster.n_bins = K;
    raster.n_trials = R;
    raster.delta_s = 0.001;
    raster.u_x.resize(K);
    raster.u_z.resize(R);
    for (auto& v : raster.u_x) v = meta.uniform() < 0.5 ? 1 : 0;
    for (auto& v : raster.u_z) v = meta.uniform() < 0.5 ? 1 : 0;
    raster.u_x[K - 1] = 1;
    raster.u_z[R - 1] = 1;
    raster.bins.assign(static_cast<std::size_t>(K) * R, 0);

    // Random walks with genuine drift so the maximizers sit away from zero.
    PosteriorDraws draws;
    draws.n_draws = n;
    draws.n_bins = K;
    draws.n_trials = R;
    const double ax = 0.3 + meta.uniform(), az = -0.2 - meta.uniform();
    const double sx = 0.2 + 0.5 * meta.uniform(),
                 sz = 0.3 + 0.5 * meta.uniform();
    for (int i = 0; i < n; ++i) {
      double cur = 0.0;
      for (int k = 0; k < K; ++k) {
        cur += ax * raster.u_x[k] + std::sqrt(sx) * meta.normal();
        draws.x.push_back(cur);
      }
      cur = 0.0;
      for (int r = 0; r < R; ++r) {
        cur += az * raster.u_z[r] + std::sqrt(sz) * meta.normal();
        draws.z.push_back(cur);
      }
    }

    ModelParams prev;
    prev.estimate_alpha = set % 3 != 2;  // a third of the sets pin alpha
    const ModelParams got = m_step(draws, raster, prev);

    auto loglik = [&](const std::vector<double>& flat, int len,
                      const std::vector<std::uint8_t>& u, double a, double s2) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        const double* s = flat.data() + static_cast<std::size_t>(i) * len;
        double prevv = 0.0;
        for (int k = 0; k < len; ++k) {
          const double resid = s[k] - prevv - a * (u[k] ? 1.0 : 0.0);
          total +=
              -0.5 * std::log(2.0 * M_PI * s2) - resid * resid / (2.0 * s2);
          prevv = s[k];
        }
      }
      return total / n;
    };
    const auto mx = testsupport::profile_max(
        [&](double a, double s2) { return loglik(draws.x, K, raster.u_x, a, s2); },
        !prev.estimate_alpha);
    const auto mz = testsupport::profile_max(
        [&](double a, double s2) { return loglik(draws.z, R, raster.u_z, a, s2); },
        !prev.estimate_alpha);

    std::ostringstream which;
    which << "set " << set;
    ok &= check(agree4(got.alpha_x, mx.alpha),
                which.str() + ": alpha_x to 4 significant digits");
    ok &= check(agree4(got.sigma2_eps, mx.sigma2),
                which.str() + ": sigma2_eps to 4 significant digits");
    ok &= check(agree4(got.alpha_z, mz.alpha),
                which.str() + ": alpha_z to 4 significant digits");
    ok &= check(agree4(got.sigma2_del, mz.sigma2),
                which.str() + ": sigma2_del to 4 significant digits");
  }
  return ok;
}

// ---- criterion 5 ---------------------------------------------------------

bool criterion_desk_study() {
  SimConfig sim = desk_protocol();
  sim.seed = 0xACC5;
  const Raster raster = simulate_raster(sim);

  FitConfig cfg = desk_fit(40);
  cfg.seed = 0xF175;
  const FitResult fit = fit_em(raster, cfg, 1);
  std::cerr << "  fit: " << fit.iterations << " iterations, sigma2_eps="
            << fit.params.sigma2_eps << " sigma2_del=" << fit.params.sigma2_del
            << " alpha_x=" << fit.params.alpha_x
            << " alpha_z=" << fit.params.alpha_z << "\n";

  const int cond = raster.cond_start_trial;  // 16
  const int R = raster.n_trials;             // 45
  const int K = raster.n_bins;               // 400
  const int cue = raster.cue_bin;            // 201

  // Cross-trial curve, rescaled so the habituation segment averages one: the
  // segment level must sit in [0.8, 1.2] and the conditioning plateau mean in
  // [1.6, 2.4]. Per-trial spread is printed but not gated: the exact
  // x_0 = z_0 = 0 anchors pull trial 1 upward by about a fifth of a logit at
  // this firing level, independent of the trial's own data.
  const auto curve = baseline_relative_ct_curve(fit.draws, cond - 1);
  bool ok = true;
  double hab_level = 0.0, hab_lo = curve[0], hab_hi = curve[0];
  int lo_at = 1, hi_at = 1;
  for (int r = 0; r < cond - 1; ++r) {
    hab_level += curve[r];
    if (curve[r] < hab_lo) { hab_lo = curve[r]; lo_at = r + 1; }
    if (curve[r] > hab_hi) { hab_hi = curve[r]; hi_at = r + 1; }
  }
  hab_level /= cond - 1;
  std::cerr << "  habituation per-trial spread: " << hab_lo << " (trial "
            << lo_at << ") .. " << hab_hi << " (trial " << hi_at << ")\n";
  std::ostringstream habl;
  habl << "habituation level " << hab_level << " in [0.8, 1.2]";
  ok &= check(hab_level > 0.8 && hab_level < 1.2, habl.str());
  double plateau = 0.0;
  for (int r = cond + 2; r <= R; ++r) plateau += curve[r - 1];
  plateau /= R - cond - 2 + 1;
  std::ostringstream plat;
  plat << "plateau mean over trials " << cond + 3 << ".." << R << " is "
       << plateau << ", in [1.6, 2.4]";
  ok &= check(plateau > 1.6 && plateau < 2.4, plat.str());

  // Probability map: saturated across the conditioning region, outside a
  // three-trial and 100 ms transition band.
  const BaselineSpec base = default_baseline(raster);
  const auto pm = learning_probability_map(fit.draws, base);
  const int k_from = cue + static_cast<int>(0.1 / raster.delta_s);  // +100 ms
  int hits = 0, total = 0;
  for (int r = cond + 3; r <= R; ++r)
    for (int k = k_from + 1; k <= K; ++k) {
      ++total;
      if (pm[raster.bin_index(k, r)] > 0.95) ++hits;
    }
  const double coverage = static_cast<double>(hits) / total;
  std::ostringstream cov;
  cov << "probability map exceeds 0.95 on " << coverage
      << " of the settled conditioning region (need 0.90)";
  ok &= check(coverage >= 0.90, cov.str());

  double hab_sum = 0.0;
  for (int r = 1; r < cond; ++r)
    for (int k = 1; k <= K; ++k) hab_sum += pm[raster.bin_index(k, r)];
  const double hab_mean = hab_sum / (static_cast<double>(cond - 1) * K);
  std::ostringstream hab;
  hab << "mean habituation-region probability " << hab_mean << " below 0.5";
  ok &= check(hab_mean < 0.5, hab.str());
  return ok;
}

// ---- criteria 6 and 7 ----------------------------------------------------

bool detection_replicates(std::uint64_t base_seed, bool inject_errors,
                          const char* label) {
  int good = 0;
  for (int rep = 0; rep < 10; ++rep) {
    SimConfig sim = desk_protocol();
    sim.seed = RngStream::derive(base_seed, {static_cast<std::uint64_t>(rep)});
    if (inject_errors) {
      sim.error_start_trial = 21;
      sim.error_trial_count = 3;
    }
    const Raster raster = simulate_raster(sim);

    FitConfig cfg = desk_fit(25);
    cfg.seed = RngStream::derive(sim.seed, {0xF17});
    const FitResult fit = fit_em(raster, cfg, 1);

    const BaselineSpec base = default_baseline(raster);
    const auto pm = learning_probability_map(fit.draws, base);
    const Detection det = detect_learning(pm, raster, base, 0.95);
    const bool trial_ok =
        det.detected && det.learning_trial >= 16 && det.learning_trial <= 18;
    const bool time_ok = det.detected && det.learning_time_ms >= 0.0 &&
                         det.learning_time_ms <= 100.0;
    std::cerr << "  " << label << " replicate " << rep << ": "
              << (det.detected
                      ? "trial " + std::to_string(det.learning_trial) + ", " +
                            std::to_string(det.learning_time_ms) + " ms"
                      : std::string("no detection"))
              << (trial_ok && time_ok ? "" : "  [outside bands]") << "\n";
    if (trial_ok && time_ok) ++good;
  }
  std::ostringstream msg;
  msg << label << ": " << good << "/10 replicates inside the bands (need 8)";
  return check(good >= 8, msg.str());
}

bool criterion_detection() {
  return detection_replicates(0xACC6, false, "clean");
}

bool criterion_detection_with_errors() {
  return detection_replicates(0xACC7, true, "error-trials");
}

// ---- criterion 8 ---------------------------------------------------------

bool criterion_sweep() {
  SimConfig base = desk_protocol();
  base.seed = 0xACC8;
  FitConfig cfg = desk_fit(20);
  const std::vector<double> rates{20.0, 30.0, 45.0};  // ratios 1, 1.5, 2.25
  const auto rows = sensitivity_sweep(base, rates, 3, cfg, 0.95, 1);
  for (const auto& row : rows)
    std::cerr << "  rate " << row.conditioned_rate_hz << " (ratio "
              << row.ratio << "): " << row.detections << " detections, mean "
              << row.mean_learning_time_ms << " ms, mean trial "
              << row.mean_learning_trial << "\n";

  const double sentinel_ms = (400 - 201) * base.delta_s * 1000.0;  // 995
  bool ok = check(rows[0].detections == 0,
                  "null ratio produces no detections");
  ok &= check(rows[0].mean_learning_trial == 45.0,
              "null ratio averages at the sentinel trial");
  ok &= check(std::abs(rows[0].mean_learning_time_ms - sentinel_ms) < 1e-9,
              "null ratio averages at the sentinel time");
  ok &= check(rows[0].mean_learning_time_ms >=
                  rows[1].mean_learning_time_ms - 1e-9,
              "mean delay does not increase from ratio 1.0 to 1.5");
  ok &= check(rows[1].mean_learning_time_ms >=
                  rows[2].mean_learning_time_ms - 1e-9,
              "mean delay does not increase from ratio 1.5 to 2.25");
  ok &= check(rows[1].detections <= rows[2].detections,
              "detections do not decrease with the ratio");
  return ok;
}

// ---- criterion 9 ---------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_cli_reproducible() {
  const fs::path dir =
      fs::temp_directory_path() / ("smurf_acceptance_" +
                                   std::to_string(::getpid()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};

  {
    std::ofstream sim(dir / "sim.json");
    sim << R"({"n_trials":45,"trial_len_s":2.0,"delta_s":0.005,
      "cue_onset_s":1.0,"cond_start_trial":16,"baseline_rate_hz":20.0,
      "conditioned_rate_hz":60.0,"seed":9})";
    std::ofstream fit(dir / "fit.json");
    fit << R"({"n_gibbs_per_iter":300,"burn_in":100,"max_em_iters":3,
      "seed":31,"estimate_alpha":true})";
  }
  auto run = [&](const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + SMURF_CLI_PATH +
                            "' " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  bool ok = check(run("simulate --config sim.json --out raster.json"),
                  "simulate succeeds");
  ok &= check(run("fit --raster raster.json --config fit.json --out-dir a "
                  "--draws-sidecar --jobs 1"),
              "first fit succeeds");
  ok &= check(run("fit --raster raster.json --config fit.json --out-dir b "
                  "--draws-sidecar --jobs 1"),
              "second fit succeeds");
  if (!ok) return false;
  ok &= check(slurp(dir / "a" / "fit.json") == slurp(dir / "b" / "fit.json"),
              "fit.json byte-identical across runs");
  ok &= check(slurp(dir / "a" / "draws.bin") == slurp(dir / "b" / "draws.bin"),
              "draws.bin byte-identical across runs");
  const std::string fit_text = slurp(dir / "a" / "fit.json");
  ok &= check(!fit_text.empty() && fit_text.find("\"n_draws\": 200") !=
                                       std::string::npos,
              "fit retained the configured draw count");
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int i) { return selected.empty() || selected.count(i); };

  Reporter rep;
  if (wanted(1))
    rep.run(1, "exact PG sampler moments", criterion_pg_moments);
  if (wanted(2))
    rep.run(2, "path draws match the dense Gaussian solve", criterion_ffbs_dense);
  if (wanted(3))
    rep.run(3, "Gibbs pipeline matches tensor quadrature",
            criterion_pipeline_quadrature);
  if (wanted(4))
    rep.run(4, "M-step matches a numerical maximizer", criterion_mstep_numerical);
  if (wanted(5))
    rep.run(5, "desk-scale study: effect curves and probability map",
            criterion_desk_study);
  if (wanted(6))
    rep.run(6, "detection accuracy at rate ratio 3.0", criterion_detection);
  if (wanted(7))
    rep.run(7, "detection tolerates injected error trials",
            criterion_detection_with_errors);
  if (wanted(8))
    rep.run(8, "sensitivity sweep orders ratios correctly", criterion_sweep);
  if (wanted(9))
    rep.run(9, "CLI fits are byte-reproducible", criterion_cli_reproducible);
  return rep.failures;
}
