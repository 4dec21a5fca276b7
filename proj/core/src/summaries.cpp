#include "smurf/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace smurf {

namespace {

void check_draws(const PosteriorDraws& draws) {
  if (draws.n_draws < 1 || draws.n_bins < 1 || draws.n_trials < 1)
    throw std::invalid_argument("summaries: empty draw set");
  const auto K = static_cast<std::size_t>(draws.n_bins);
  const auto R = static_cast<std::size_t>(draws.n_trials);
  const auto n = static_cast<std::size_t>(draws.n_draws);
  if (draws.x.size() != n * K || draws.z.size() != n * R)
    throw std::invalid_argument("summaries: draw storage size mismatch");
}

void check_baseline(const BaselineSpec& b, int K, int R) {
  if (b.baseline_trials < 1 || b.baseline_trials > R)
    throw std::invalid_argument(
        "summaries: baseline_trials must lie in [1, n_trials]");
  if (b.baseline_bins < 1 || b.baseline_bins > K)
    throw std::invalid_argument(
        "summaries: baseline_bins must lie in [1, n_bins]");
}

// lambda*delta surface of draw i in Raster layout (trial-contiguous).
void draw_surface(const PosteriorDraws& draws, int i,
                  std::vector<double>& lam) {
  const int K = draws.n_bins;
  const int R = draws.n_trials;
  const auto x = draws.x_draw(i);
  const auto z = draws.z_draw(i);
  lam.resize(static_cast<std::size_t>(K) * R);
  for (int r = 0; r < R; ++r) {
    double* row = lam.data() + static_cast<std::size_t>(r) * K;
    for (int k = 0; k < K; ++k) row[k] = cif(x[k], z[r]);
  }
}

// Binary-counter pairwise summation of equal-length vectors.  The combine
// tree depends only on the number of vectors added, never on timing, so
// streamed reductions stay reproducible.
class PairwiseAccumulator {
 public:
  explicit PairwiseAccumulator(std::size_t len) : len_(len) {}

  void add(const std::vector<double>& v) {
    std::vector<double> cur(v);
    std::uint64_t c = count_;
    std::size_t lvl = 0;
    while (c & 1u) {
      for (std::size_t j = 0; j < len_; ++j) cur[j] += levels_[lvl][j];
      levels_[lvl].clear();
      c >>= 1;
      ++lvl;
    }
    if (lvl >= levels_.size()) levels_.resize(lvl + 1);
    levels_[lvl] = std::move(cur);
    ++count_;
  }

  std::vector<double> finalize() const {
    std::vector<double> acc(len_, 0.0);
    for (const auto& lv : levels_)
      if (!lv.empty())
        for (std::size_t j = 0; j < len_; ++j) acc[j] += lv[j];
    return acc;
  }

 private:
  std::size_t len_;
  std::uint64_t count_ = 0;
  std::vector<std::vector<double>> levels_;
};

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = q * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Pointwise quantiles across draws of a draw-major value table.
EffectQuantiles table_quantiles(const std::vector<double>& per_draw, int n,
                                int len) {
  EffectQuantiles q;
  q.q025.resize(len);
  q.q25.resize(len);
  q.median.resize(len);
  q.q75.resize(len);
  q.q975.resize(len);
  std::vector<double> col(n);
  for (int j = 0; j < len; ++j) {
    for (int i = 0; i < n; ++i)
      col[i] = per_draw[static_cast<std::size_t>(i) * len + j];
    std::sort(col.begin(), col.end());
    q.q025[j] = quantile_sorted(col, 0.025);
    q.q25[j] = quantile_sorted(col, 0.25);
    q.median[j] = quantile_sorted(col, 0.5);
    q.q75[j] = quantile_sorted(col, 0.75);
    q.q975[j] = quantile_sorted(col, 0.975);
  }
  return q;
}

}  // namespace

BaselineSpec default_baseline(const Raster& raster) {
  return {raster.cond_start_trial - 1, raster.cue_bin - 1};
}

std::vector<double> cif_surface_mean(const PosteriorDraws& draws) {
  check_draws(draws);
  const std::size_t cells =
      static_cast<std::size_t>(draws.n_bins) * draws.n_trials;
  PairwiseAccumulator acc(cells);
  std::vector<double> lam;
  for (int i = 0; i < draws.n_draws; ++i) {
    draw_surface(draws, i, lam);
    acc.add(lam);
  }
  std::vector<double> mean = acc.finalize();
  const double inv_n = 1.0 / draws.n_draws;
  for (double& v : mean) v *= inv_n;
  return mean;
}

std::vector<double> cif_surface_quantile(const PosteriorDraws& draws,
                                         double q) {
  check_draws(draws);
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("cif_surface_quantile: q must be in (0,1)");
  const int K = draws.n_bins;
  const int R = draws.n_trials;
  const int n = draws.n_draws;
  std::vector<double> out(static_cast<std::size_t>(K) * R);
  std::vector<double> col(n);
  for (int r = 0; r < R; ++r) {
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < n; ++i)
        col[i] = cif(draws.x[static_cast<std::size_t>(i) * K + k],
                     draws.z[static_cast<std::size_t>(i) * R + r]);
      std::sort(col.begin(), col.end());
      out[static_cast<std::size_t>(r) * K + k] = quantile_sorted(col, q);
    }
  }
  return out;
}

EffectSamples within_trial_effect(const PosteriorDraws& draws,
                                  double delta_s) {
  check_draws(draws);
  if (!(delta_s > 0.0))
    throw std::invalid_argument("within_trial_effect: delta_s must be positive");
  const int K = draws.n_bins;
  const int R = draws.n_trials;
  EffectSamples out;
  out.len = K;
  out.per_draw.resize(static_cast<std::size_t>(draws.n_draws) * K);
  std::vector<double> lam;
  for (int i = 0; i < draws.n_draws; ++i) {
    draw_surface(draws, i, lam);
    double* wt = out.per_draw.data() + static_cast<std::size_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int r = 0; r < R; ++r) s += lam[static_cast<std::size_t>(r) * K + k];
      wt[k] = s / R / delta_s;  // trial-averaged lambda*delta, then to Hz
    }
  }
  out.quantiles = table_quantiles(out.per_draw, draws.n_draws, K);
  return out;
}

EffectSamples cross_trial_effect(const PosteriorDraws& draws) {
  check_draws(draws);
  const int K = draws.n_bins;
  const int R = draws.n_trials;
  EffectSamples out;
  out.len = R;
  out.per_draw.resize(static_cast<std::size_t>(draws.n_draws) * R);
  std::vector<double> lam;
  std::vector<double> wt(K);
  for (int i = 0; i < draws.n_draws; ++i) {
    draw_surface(draws, i, lam);
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int r = 0; r < R; ++r) s += lam[static_cast<std::size_t>(r) * K + k];
      wt[k] = s / R;  // strictly positive: cif never returns 0
    }
    double* ct = out.per_draw.data() + static_cast<std::size_t>(i) * R;
    for (int r = 0; r < R; ++r) {
      const double* row = lam.data() + static_cast<std::size_t>(r) * K;
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += row[k] / wt[k];
      ct[r] = s / K;
    }
  }
  out.quantiles = table_quantiles(out.per_draw, draws.n_draws, R);
  return out;
}

std::vector<double> baseline_relative_ct_curve(const PosteriorDraws& draws,
                                               int baseline_trials) {
  if (baseline_trials < 1 || baseline_trials > draws.n_trials)
    throw std::invalid_argument(
        "baseline_relative_ct_curve: baseline_trials out of range");
  const EffectSamples ct = cross_trial_effect(draws);
  const int R = draws.n_trials;
  std::vector<double> mean(R, 0.0);
  for (int i = 0; i < draws.n_draws; ++i)
    for (int r = 0; r < R; ++r)
      mean[r] += ct.per_draw[static_cast<std::size_t>(i) * R + r];
  for (double& v : mean) v /= draws.n_draws;
  double base = 0.0;
  for (int r = 0; r < baseline_trials; ++r) base += mean[r];
  base /= baseline_trials;
  for (double& v : mean) v /= base;
  return mean;
}

std::vector<double> learning_probability_map(const PosteriorDraws& draws,
                                             const BaselineSpec& baseline) {
  check_draws(draws);
  const int K = draws.n_bins;
  const int R = draws.n_trials;
  check_baseline(baseline, K, R);
  const int Br = baseline.baseline_trials;
  const int Bk = baseline.baseline_bins;

  const std::size_t cells = static_cast<std::size_t>(K) * R;
  std::vector<std::uint32_t> hits(cells, 0);  // integer counts: exact
  std::vector<double> lam;
  std::vector<double> trial_base(K);  // per-bin mean over baseline trials
  std::vector<double> bin_base(R);    // per-trial mean over baseline bins
  for (int i = 0; i < draws.n_draws; ++i) {
    draw_surface(draws, i, lam);
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      for (int r = 0; r < Br; ++r) s += lam[static_cast<std::size_t>(r) * K + k];
      trial_base[k] = s / Br;
    }
    for (int r = 0; r < R; ++r) {
      const double* row = lam.data() + static_cast<std::size_t>(r) * K;
      double s = 0.0;
      for (int k = 0; k < Bk; ++k) s += row[k];
      bin_base[r] = s / Bk;
    }
    for (int r = 0; r < R; ++r) {
      const double* row = lam.data() + static_cast<std::size_t>(r) * K;
      std::uint32_t* hrow = hits.data() + static_cast<std::size_t>(r) * K;
      const double vb = bin_base[r];
      for (int k = 0; k < K; ++k)
        if (row[k] > trial_base[k] && row[k] > vb) ++hrow[k];
    }
  }
  std::vector<double> out(cells);
  const double inv_n = 1.0 / draws.n_draws;
  for (std::size_t j = 0; j < cells; ++j) out[j] = hits[j] * inv_n;
  return out;
}

Detection detect_learning(const std::vector<double>& prob_map,
                          const Raster& raster, const BaselineSpec& baseline,
                          double threshold) {
  const int K = raster.n_bins;
  const int R = raster.n_trials;
  check_baseline(baseline, K, R);
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument(
        "detect_learning: threshold must lie in (0, 1]");
  if (prob_map.size() != static_cast<std::size_t>(K) * R)
    throw std::invalid_argument("detect_learning: prob_map size mismatch");

  Detection det;
  det.threshold = threshold;
  for (int r = baseline.baseline_trials + 1; r <= R && !det.detected; ++r) {
    const double* row = prob_map.data() + static_cast<std::size_t>(r - 1) * K;
    for (int k = baseline.baseline_bins + 1; k <= K; ++k) {
      if (row[k - 1] >= threshold) {
        det.detected = true;
        det.learning_trial = r;
        det.learning_bin = k;
        det.learning_time_ms =
            (k - raster.cue_bin) * raster.delta_s * 1000.0;
        break;
      }
    }
  }
  return det;
}

SummarySurface summarize_draws(const PosteriorDraws& draws,
                               const Raster& raster,
                               const BaselineSpec& baseline,
                               double threshold) {
  SummarySurface s;
  s.n_bins = draws.n_bins;
  s.n_trials = draws.n_trials;
  s.cif_mean = cif_surface_mean(draws);
  s.wt_effect = within_trial_effect(draws, raster.delta_s);
  s.ct_effect = cross_trial_effect(draws);
  s.prob_map = learning_probability_map(draws, baseline);
  s.detection = detect_learning(s.prob_map, raster, baseline, threshold);
  return s;
}

}  // namespace smurf
