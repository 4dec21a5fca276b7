#include "smurf/pg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smurf {

namespace {

constexpr double kPi = std::numbers::pi;

// Crossover point between the two series representations of the Jacobi
// density.  Both alternating expansions converge on either side; 0.64 keeps
// the dominating first term tight, which is what makes the acceptance rate
// of the rejection loop ~0.999.
constexpr double kTrunc = 0.64;

double std_normal_cdf(double v) {
  return 0.5 * std::erfc(-v / std::numbers::sqrt2);
}

// P(X <= kTrunc) for X ~ inverse-Gaussian(mu = 1/z, lambda = 1), z >= 0.
// z = 0 degenerates to the Levy law, whose CDF is 2 Phi(-1/sqrt(t)).
double trunc_ig_mass(double z) {
  const double t = kTrunc;
  const double rt = std::sqrt(t);
  if (z == 0.0) return 2.0 * std_normal_cdf(-1.0 / rt);
  if (z > 35.0) return 1.0;  // mass beyond t is < 1e-290 once mu < 1/35
  return std_normal_cdf((t * z - 1.0) / rt) +
         std::exp(2.0 * z) * std_normal_cdf(-(t * z + 1.0) / rt);
}

// Inverse-Gaussian(1/z, 1) conditioned on (0, kTrunc].
double sample_trunc_ig(double z, RngStream& rng) {
  const double t = kTrunc;
  if (z * t < 1.0) {
    // Mean above the truncation point: sample the Levy law restricted to
    // (0,t] through the one-sided normal tail (1/X is a chi-square(1) tail),
    // then thin by exp(-z^2 X / 2) to introduce the drift.
    for (;;) {
      double e1;
      double e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      const double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (z == 0.0 || rng.uniform() <= std::exp(-0.5 * z * z * x)) return x;
    }
  }
  // Mean below the truncation point: standard inverse-Gaussian transform
  // of a squared normal, retried until the draw lands inside (0,t].
  const double mu = 1.0 / z;
  for (;;) {
    double y = rng.normal();
    y *= y;
    const double muy = mu * y;
    double x = mu * (1.0 + 0.5 * muy - 0.5 * std::sqrt(4.0 * muy + muy * muy));
    if (x <= 0.0) x = std::numeric_limits<double>::min();  // squeeze underflow
    if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    if (x <= t) return x;
  }
}

}  // namespace

double pg1_mean(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("pg1_mean: non-finite c");
  const double a = std::fabs(c);
  // tanh(c/2)/(2c) loses precision near 0; the series is 1/4 - c^2/48 + ...
  if (a < 1e-4) return 0.25 - c * c / 48.0;
  return std::tanh(0.5 * a) / (2.0 * a);
}

double sample_pg1(double c, RngStream& rng) {
  if (!std::isfinite(c))
    throw std::invalid_argument("sample_pg1: non-finite c");
  if (std::fabs(c) > pg_max_abs_c)
    throw std::invalid_argument(
        "sample_pg1: |c| = " + std::to_string(std::fabs(c)) +
        " exceeds 1e4; latent states have diverged");

  const double z = 0.5 * std::fabs(c);  // PG(1,c) = J*(1, |c|/2) / 4
  const double t = kTrunc;
  const double big_k = kPi * kPi / 8.0 + 0.5 * z * z;

  // Proposal: exponential(rate K) beyond t, truncated inverse-Gaussian
  // below.  Piece masses underflow together for large z, so the mixing
  // probability is formed from log masses.
  const double log_p = std::log(kPi / (2.0 * big_k)) - big_k * t;
  const double log_q = std::numbers::ln2 - z + std::log(trunc_ig_mass(z));
  const double d = log_q - log_p;
  const double p_right =
      d > 36.0 ? 0.0 : (d < -36.0 ? 1.0 : 1.0 / (1.0 + std::exp(d)));

  for (;;) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    const double x =
        u < p_right ? t + rng.exponential() / big_k : sample_trunc_ig(z, rng);

    // Alternating-series accept/reject in ratio form: partial sums of
    // a_n(x)/a_0(x) sandwich the true acceptance probability, so only the
    // well-scaled ratios (2n+1) exp(-n(n+1) h(x)) are ever evaluated.
    const double h =
        x <= t ? 2.0 / x : 0.5 * kPi * kPi * x;
    double s = 1.0;
    for (int n = 1;; ++n) {
      const double ratio = (2.0 * n + 1.0) * std::exp(-n * (n + 1.0) * h);
      if (n & 1) {
        s -= ratio;
        if (v <= s) return 0.25 * x;
      } else {
        s += ratio;
        if (v > s) break;  // above the upper envelope: reject this proposal
      }
    }
  }
}

double sample_pg1_series(double c, RngStream& rng, int n_terms) {
  if (n_terms < 200)
    throw std::invalid_argument(
        "sample_pg1_series: fewer than 200 terms is outside the supported "
        "truncation regime");
  if (!std::isfinite(c))
    throw std::invalid_argument("sample_pg1_series: non-finite c");
  const double shift = c * c / (4.0 * kPi * kPi);
  double acc = 0.0;
  for (int m = 1; m <= n_terms; ++m) {
    const double dm = m - 0.5;
    acc += rng.exponential() / (dm * dm + shift);
  }
  return acc / (2.0 * kPi * kPi);
}

double sample_pg1_clamped(double c, RngStream& rng, PgClampStats& stats) {
  double w = sample_pg1(c, rng);
  ++stats.draws;
  if (w < pg_draw_floor) {
    w = pg_draw_floor;
    ++stats.clamped;
  }
  return w;
}

}  // namespace smurf
