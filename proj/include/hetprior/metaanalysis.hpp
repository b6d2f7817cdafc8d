#pragma once

// Bayesian random-effects meta-analysis of a single data set by deterministic
// integration over a tau grid. For fixed tau the effect mu has a normal
// conditional posterior, so p(tau | y) follows from the marginal likelihood
// with mu integrated out, and p(mu | y) is a normal mixture over the grid.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hetprior/dist.hpp"
#include "hetprior/error.hpp"
#include "hetprior/frequentist.hpp"
#include "hetprior/numeric.hpp"

namespace hetprior {

/// Effect prior: flat when empty.
using EffectPrior = std::optional<Normal>;

struct GridDensity {
  std::vector<double> x;
  std::vector<double> density;
};

struct TauPosterior {
  GridDensity grid;
  /// Cumulative probability at each grid point (trapezoid rule).
  std::vector<double> cdf;

  double quantile(double p) const {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
    if (it == cdf.begin()) return grid.x.front();
    if (it == cdf.end()) return grid.x.back();
    const auto i = static_cast<std::size_t>(it - cdf.begin());
    const double span = cdf[i] - cdf[i - 1];
    const double t = span > 0.0 ? (p - cdf[i - 1]) / span : 0.0;
    return grid.x[i - 1] + t * (grid.x[i] - grid.x[i - 1]);
  }
};

namespace detail {

struct ConditionalMu {
  double mean = 0.0;
  double variance = 0.0;
  double log_marginal = 0.0;  // log L(tau) up to a constant
};

/// mu | tau, y with the normal effect prior entering as a pseudo-study whose
/// variance does not depend on tau.
inline ConditionalMu conditional_mu(const SingleMeta& sm, const EffectPrior& mp, double tau) {
  double sw = 0.0, swy = 0.0, slogw = 0.0;
  for (std::size_t i = 0; i < sm.k(); ++i) {
    const double w = 1.0 / (sm.se()[i] * sm.se()[i] + tau * tau);
    sw += w;
    swy += w * sm.y()[i];
    slogw += std::log(w);
  }
  if (mp) {
    const double w0 = 1.0 / (mp->sd() * mp->sd());
    sw += w0;
    swy += w0 * mp->mean();
  }
  const double mean = swy / sw;
  double q = 0.0;
  for (std::size_t i = 0; i < sm.k(); ++i) {
    const double w = 1.0 / (sm.se()[i] * sm.se()[i] + tau * tau);
    q += w * (sm.y()[i] - mean) * (sm.y()[i] - mean);
  }
  if (mp) q += (mp->mean() - mean) * (mp->mean() - mean) / (mp->sd() * mp->sd());
  return {mean, 1.0 / sw, 0.5 * slogw - 0.5 * std::log(sw) - 0.5 * q};
}

inline void append_sqrt_spaced(std::vector<double>& g, double hi, int n) {
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / (n - 1);
    g.push_back(hi * u * u);
  }
}

}  // namespace detail

inline constexpr int kTauGridPoints = 2000;
inline constexpr double kTailMass = 1e-6;

/// Normalized posterior density of tau on an adaptive grid.
///
/// Grid: square-root spaced points on [0, upper] (dense near the boundary),
/// points at prior quantiles, and square-root spaced points on the data's
/// own scale. `upper` starts at the prior's 0.9999 quantile and doubles until
/// a bound on the posterior mass beyond it drops below 1e-6.
inline TauPosterior tau_marginal(const SingleMeta& sm, const Distribution& prior, const EffectPrior& mu_prior = {}) {
  const auto [plo, phi] = support(prior);
  if (plo < 0.0) throw ArgumentError("tau_marginal: heterogeneity prior must live on [0, inf)");
  double upper = quantile(prior, 0.9999);
  if (!std::isfinite(upper) || !(upper > 0.0)) throw GridError("tau_marginal: prior has no finite 0.9999 quantile");

  auto log_post = [&](double t) {
    const double lp = log_density(prior, t);
    return lp == -numeric::kInf ? lp : lp + detail::conditional_mu(sm, mu_prior, t).log_marginal;
  };
  // Largest log L over [t, inf) on a geometric probe; L decays like
  // tau^-(k-1) eventually, so the probe captures the supremum.
  auto sup_log_lik_beyond = [&](double t) {
    double best = -numeric::kInf;
    for (int m = 0; m < 80; ++m, t *= 1.5) best = std::max(best, detail::conditional_mu(sm, mu_prior, t).log_marginal);
    return best;
  };

  double data_scale = *std::max_element(sm.se().begin(), sm.se().end());
  {
    const auto [ymin, ymax] = std::minmax_element(sm.y().begin(), sm.y().end());
    data_scale = 5.0 * (data_scale + (*ymax - *ymin));
  }

  for (int attempt = 0; attempt < 60; ++attempt) {
    std::vector<double> g;
    detail::append_sqrt_spaced(g, upper, kTauGridPoints);
    for (int i = 0; i < kTauGridPoints / 2; ++i) {
      const double q = quantile(prior, (i + 0.5) / (kTauGridPoints / 2));
      if (q < upper) g.push_back(q);
    }
    detail::append_sqrt_spaced(g, std::min(upper, data_scale), kTauGridPoints / 2);
    if (phi < upper) g.push_back(phi);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());

    std::vector<double> lp(g.size());
    double lmax = -numeric::kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      lp[i] = log_post(g[i]);
      lmax = std::max(lmax, lp[i]);
    }
    if (!std::isfinite(lmax)) throw GridError("tau_marginal: posterior vanishes on the grid");
    std::vector<double> dens(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dens[i] = std::exp(lp[i] - lmax);
    std::vector<double> cum(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) cum[i] = cum[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (g[i] - g[i - 1]);
    const double z = cum.back();

    // posterior tail beyond `upper` <= (1 - F(upper)) * sup L / Z
    const double prior_tail = 1.0 - cdf(prior, upper);
    double tail = 0.0;
    if (prior_tail > 0.0) tail = prior_tail * std::exp(sup_log_lik_beyond(upper) - lmax) / z;
    if (tail < kTailMass) {
      TauPosterior out;
      out.grid.x = std::move(g);
      out.grid.density.resize(dens.size());
      out.cdf.resize(dens.size());
      for (std::size_t i = 0; i < dens.size(); ++i) {
        out.grid.density[i] = dens[i] / z;
        out.cdf[i] = cum[i] / z;
      }
      return out;
    }
    upper *= 2.0;
  }
  throw GridError("tau_marginal: posterior tail mass does not fall below 1e-6");
}

struct MuSummary {
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  GridDensity density;
};

struct TauSummary {
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  GridDensity density;
};

struct MetaAnalysisResult {
  MuSummary mu;
  TauSummary tau;
  std::string prior;
  CiSuite comparators;
  bool has_comparators = false;
  double tau_dl = 0.0;
};

/// Normal mixture over the tau grid: p(mu | y) = sum_g w_g N(mu; m_g, V_g).
class MuMixture {
 public:
  MuMixture(const SingleMeta& sm, const TauPosterior& tp, const EffectPrior& mp) {
    const auto& x = tp.grid.x;
    const auto& d = tp.grid.density;
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double h = 0.5 * (x[i] - x[i - 1]);
      w[i - 1] += h * d[i - 1];
      w[i] += h * d[i];
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (w[i] <= 0.0) continue;
      const auto c = detail::conditional_mu(sm, mp, x[i]);
      weight_.push_back(w[i] / total);
      mean_.push_back(c.mean);
      sd_.push_back(std::sqrt(c.variance));
    }
  }

  double cdf(double mu) const {
    double s = 0.0;
    for (std::size_t g = 0; g < weight_.size(); ++g) {
      s += weight_[g] * 0.5 * std::erfc(-(mu - mean_[g]) / (sd_[g] * std::numbers::sqrt2));
    }
    return s;
  }
  double pdf(double mu) const {
    double s = 0.0;
    for (std::size_t g = 0; g < weight_.size(); ++g) {
      const double z = (mu - mean_[g]) / sd_[g];
      s += weight_[g] * std::exp(-0.5 * z * z) / (sd_[g] * std::sqrt(2.0 * std::numbers::pi));
    }
    return s;
  }
  double mean() const {
    double s = 0.0;
    for (std::size_t g = 0; g < weight_.size(); ++g) s += weight_[g] * mean_[g];
    return s;
  }
  double sd() const {
    const double m = mean();
    double s = 0.0;
    for (std::size_t g = 0; g < weight_.size(); ++g) {
      s += weight_[g] * (sd_[g] * sd_[g] + (mean_[g] - m) * (mean_[g] - m));
    }
    return std::sqrt(s);
  }
  double quantile(double p) const {
    double lo = mean_.front(), hi = mean_.front();
    double step = sd_.front();
    for (std::size_t g = 0; g < mean_.size(); ++g) step = std::max(step, sd_[g]);
    for (double m : mean_) {
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    lo -= step;
    hi += step;
    while (cdf(lo) > p) lo -= (hi - lo);
    while (cdf(hi) < p) hi += (hi - lo);
    return numeric::find_root([&](double m) { return cdf(m) - p; }, lo, hi, {.x_tol = 1e-12, .f_tol = 1e-14});
  }

 private:
  std::vector<double> weight_, mean_, sd_;
};

/// Bayesian random-effects analysis with the given heterogeneity prior;
/// central 95% credible intervals. Frequentist comparators (DL-based normal,
/// HKSJ, mKH) are attached when k >= 2.
inline MetaAnalysisResult bayes_ma(const SingleMeta& sm, const Distribution& prior, const EffectPrior& mu_prior = {}) {
  const auto tp = tau_marginal(sm, prior, mu_prior);
  const MuMixture mix(sm, tp, mu_prior);

  MetaAnalysisResult r;
  r.prior = to_string(prior);
  r.tau.median = tp.quantile(0.5);
  r.tau.lo95 = tp.quantile(0.025);
  r.tau.hi95 = tp.quantile(0.975);
  r.tau.density = tp.grid;

  r.mu.mean = mix.mean();
  r.mu.sd = mix.sd();
  r.mu.median = mix.quantile(0.5);
  r.mu.lo95 = mix.quantile(0.025);
  r.mu.hi95 = mix.quantile(0.975);

  // mu density: uniform core over the central 99.98%, tails continued with
  // geometrically growing steps out to the 1e-9 quantiles.
  const double c_lo = mix.quantile(1e-4), c_hi = mix.quantile(1.0 - 1e-4);
  const double t_lo = mix.quantile(1e-9), t_hi = mix.quantile(1.0 - 1e-9);
  constexpr int core = 2001;
  const double h = (c_hi - c_lo) / (core - 1);
  std::vector<double> xs;
  for (double x = c_lo, step = h; x > t_lo; step *= 1.02) {
    x -= step;
    xs.push_back(std::max(x, t_lo));
  }
  std::reverse(xs.begin(), xs.end());
  for (int i = 0; i < core; ++i) xs.push_back(c_lo + i * h);
  for (double x = c_hi, step = h; x < t_hi; step *= 1.02) {
    x += step;
    xs.push_back(std::min(x, t_hi));
  }
  r.mu.density.x = xs;
  r.mu.density.density.reserve(xs.size());
  for (double x : xs) r.mu.density.density.push_back(mix.pdf(x));

  if (sm.k() >= 2) {
    r.tau_dl = dl_estimate(sm).tau;
    r.comparators = ci_suite(sm, r.tau_dl);
    r.has_comparators = true;
  }
  return r;
}

/// Trapezoid integral of a grid density.
inline double integrate(const GridDensity& g) {
  double s = 0.0;
  for (std::size_t i = 1; i < g.x.size(); ++i) s += 0.5 * (g.density[i] + g.density[i - 1]) * (g.x[i] - g.x[i - 1]);
  return s;
}

}  // namespace hetprior
