#ifndef SMURF_SUMMARIES_HPP
#define SMURF_SUMMARIES_HPP

#include <vector>

#include "smurf/raster.hpp"

namespace smurf {

// Reference region used by the probability map and learning detection:
// the first baseline_trials trials and first baseline_bins bins are treated
// as "before anything happened".  Defaults derived from a raster are the
// habituation trials and the pre-cue bins.
struct BaselineSpec {
  int baseline_trials = 0;  // B_r
  int baseline_bins = 0;    // B_k
};

BaselineSpec default_baseline(const Raster& raster);

// Pointwise quantiles of a per-draw effect sequence; one slot per bin (or
// per trial), quantile levels 2.5/25/50/75/97.5 percent.
struct EffectQuantiles {
  std::vector<double> q025;
  std::vector<double> q25;
  std::vector<double> median;
  std::vector<double> q75;
  std::vector<double> q975;
};

// Per-draw effect values (draw-major, draw i at [i*len, (i+1)*len)) together
// with their pointwise quantiles.
struct EffectSamples {
  int len = 0;
  std::vector<double> per_draw;
  EffectQuantiles quantiles;
};

struct Detection {
  bool detected = false;
  int learning_trial = 0;   // 1-based; 0 when not detected
  int learning_bin = 0;     // 1-based; 0 when not detected
  double learning_time_ms = 0.0;  // relative to cue onset
  double threshold = 0.0;
};

struct SummarySurface {
  int n_bins = 0;
  int n_trials = 0;
  std::vector<double> prob_map;  // K*R, Raster layout
  std::vector<double> cif_mean;  // K*R, posterior mean of lambda*delta
  EffectSamples wt_effect;       // per bin, reported in Hz
  EffectSamples ct_effect;       // per trial, unitless
  Detection detection;
};

// Posterior mean of the lambda*delta surface, one pass over draws with a
// fixed-tree pairwise reduction so the result does not depend on how the
// stream is scheduled.
std::vector<double> cif_surface_mean(const PosteriorDraws& draws);

// Pointwise posterior quantile of lambda*delta at level q, computed cell by
// cell (memory stays O(n_draws), not O(n_draws * K * R)).
std::vector<double> cif_surface_quantile(const PosteriorDraws& draws,
                                         double q);

// e^WT_{i,k} = (1/R) sum_r lambda_{k,r} for draw i, converted to Hz.
EffectSamples within_trial_effect(const PosteriorDraws& draws, double delta_s);

// e^CT_{i,r} = (1/K) sum_k lambda_{k,r} / e^WT_{i,k}, per draw.  Dividing
// by the same draw's trial-averaged profile makes each trial's value a
// relative excess; by construction the average of e^CT over all R trials
// is exactly 1 within every draw.
EffectSamples cross_trial_effect(const PosteriorDraws& draws);

// Posterior-mean cross-trial curve rescaled by its own mean over the
// baseline trials.  This is the curve to read learning off: baseline trials
// sit at ~1 and conditioned trials at the fitted rate ratio, which the raw
// mean-1 normalization of cross_trial_effect cannot show directly.
std::vector<double> baseline_relative_ct_curve(const PosteriorDraws& draws,
                                               int baseline_trials);

// P(k,r) = fraction of draws whose lambda(k,r) strictly exceeds both the
// draw's baseline-trials mean at bin k and the draw's baseline-bins mean at
// trial r.  Ties count as non-exceedance.
std::vector<double> learning_probability_map(const PosteriorDraws& draws,
                                             const BaselineSpec& baseline);

// Scans trials after the baseline block, earliest trial first, and inside
// the detected trial earliest bin first, for P >= threshold.  Time is
// (learning_bin - cue_bin) * delta_s, so a detection in the cue bin itself
// reads 0 ms.
Detection detect_learning(const std::vector<double>& prob_map,
                          const Raster& raster, const BaselineSpec& baseline,
                          double threshold);

// All of the above at once over one set of draws.
SummarySurface summarize_draws(const PosteriorDraws& draws,
                               const Raster& raster,
                               const BaselineSpec& baseline, double threshold);

}  // namespace smurf

#endif
