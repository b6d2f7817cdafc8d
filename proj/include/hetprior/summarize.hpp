#pragma once

// Condensing MCMC output into simple, communicable heterogeneity priors:
//  1. conditional distribution at a point estimate of the hyperparameter(s),
//  2. analytic approximation of the scale mixture (half-t, Lomax, log-normal),
//  3. direct fit to the predictive draws (maximum likelihood or moments).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hetprior/dist.hpp"
#include "hetprior/error.hpp"
#include "hetprior/model.hpp"
#include "hetprior/sampler.hpp"
#include "hetprior/stats.hpp"

namespace hetprior {

enum class PointStatistic { Mean, Median, Q95 };
enum class PriorMethod { PointEstimate, MixtureMatch, DirectFitML, DirectFitMoments };

inline std::string to_string(PointStatistic s) {
  switch (s) {
    case PointStatistic::Mean: return "mean";
    case PointStatistic::Median: return "median";
    case PointStatistic::Q95: return "q95";
  }
  return "?";
}

inline PointStatistic parse_point_statistic(std::string_view s) {
  if (s == "mean") return PointStatistic::Mean;
  if (s == "median") return PointStatistic::Median;
  if (s == "q95") return PointStatistic::Q95;
  throw InputError("unknown point statistic '" + std::string(s) + "' (mean, median, q95)");
}

inline std::string to_string(PriorMethod m) {
  switch (m) {
    case PriorMethod::PointEstimate: return "point-estimate";
    case PriorMethod::MixtureMatch: return "mixture-match";
    case PriorMethod::DirectFitML: return "direct-fit-ml";
    case PriorMethod::DirectFitMoments: return "direct-fit-moments";
  }
  return "?";
}

/// Families available for direct fits to predictive draws.
enum class FitFamily { HalfNormal, HalfStudentT, Exponential, HalfCauchy, LogNormal, Lomax };

inline std::string to_string(FitFamily f) {
  switch (f) {
    case FitFamily::HalfNormal: return "half-normal";
    case FitFamily::HalfStudentT: return "half-t";
    case FitFamily::Exponential: return "exp";
    case FitFamily::HalfCauchy: return "half-cauchy";
    case FitFamily::LogNormal: return "log-normal";
    case FitFamily::Lomax: return "lomax";
  }
  return "?";
}

inline FitFamily parse_fit_family(std::string_view s) {
  if (s == "half-normal") return FitFamily::HalfNormal;
  if (s == "half-t" || s == "half-student-t") return FitFamily::HalfStudentT;
  if (s == "exp" || s == "exponential") return FitFamily::Exponential;
  if (s == "half-cauchy") return FitFamily::HalfCauchy;
  if (s == "log-normal" || s == "lognormal") return FitFamily::LogNormal;
  if (s == "lomax") return FitFamily::Lomax;
  throw InputError("unknown fit family '" + std::string(s) + "'");
}

struct PriorSpec {
  Distribution distribution;
  PriorMethod method = PriorMethod::PointEstimate;
  std::optional<PointStatistic> statistic;
  std::string source;
  /// Decimal places used for the published (rounded) form.
  int rounding = 2;
  /// An upper-quantile point estimate, deliberately on the safe side.
  bool conservative = false;
  /// Degrees of freedom hit the cap; the half-t is numerically a half-normal.
  bool effectively_half_normal = false;
  std::optional<double> log_likelihood;

  /// Parameters rounded to `rounding` decimals; a positive parameter that
  /// would round to zero keeps two significant digits instead.
  Distribution rounded() const {
    auto p = parameters(distribution);
    const auto is_location = std::holds_alternative<LogNormal>(distribution) ||
                             std::holds_alternative<Normal>(distribution) ||
                             std::holds_alternative<Uniform>(distribution);
    const double f = std::pow(10.0, rounding);
    for (std::size_t i = 0; i < p.size(); ++i) {
      double r = std::round(p[i] * f) / f;
      const bool positive_param = !(is_location && i == 0);
      if (positive_param && p[i] > 0.0 && r <= 0.0) {
        const double g = std::pow(10.0, 1.0 - std::floor(std::log10(p[i])));
        r = std::round(p[i] * g) / g;
      }
      p[i] = r;
    }
    return make_distribution(family_name(distribution), p);
  }

  std::string text() const { return to_string(rounded()); }
};

inline PriorSpec make_prior_spec(Distribution d, PriorMethod m, std::optional<PointStatistic> stat,
                                 std::string source) {
  return {std::move(d), m, stat, std::move(source), 2, false, false, std::nullopt};
}

namespace detail {

inline double statistic_of(std::span<const double> draws, PointStatistic s) {
  switch (s) {
    case PointStatistic::Mean: return sample_mean(draws);
    case PointStatistic::Median: return empirical_quantile(draws, 0.5);
    case PointStatistic::Q95: return empirical_quantile(draws, 0.95);
  }
  return numeric::kNaN;
}

}  // namespace detail

/// Conditional distribution P(theta_hat) with theta_hat the chosen posterior
/// statistic of each hyperparameter.
inline PriorSpec point_estimate_prior(const PosteriorSamples& s, HetFamily family, PointStatistic stat,
                                      std::string source = {}) {
  if (s.hyper_names.empty()) throw InputError("point_estimate_prior: samples carry no hyperparameters");
  std::vector<double> theta;
  for (const auto& h : s.hyper_names) theta.push_back(detail::statistic_of(s.pooled(h), stat));
  auto p = make_prior_spec(het_distribution(family, theta), PriorMethod::PointEstimate, stat, std::move(source));
  p.conservative = stat == PointStatistic::Q95;
  return p;
}

/// Analytic approximation of the predictive scale mixture.
inline PriorSpec mixture_match_prior(const PosteriorSamples& s, HetFamily family, std::string source = {}) {
  auto p = make_prior_spec(HalfNormal(1.0), PriorMethod::MixtureMatch, std::nullopt, std::move(source));
  switch (family) {
    case HetFamily::HalfNormal:
    case HetFamily::Exponential: {
      const auto scale = s.pooled("scale");
      const double m = sample_mean(scale);
      const double sd = std::sqrt(sample_variance(scale));
      if (sd == 0.0) {
        p.distribution = family == HetFamily::HalfNormal ? Distribution(HalfNormal(m)) : Exponential(m);
        p.effectively_half_normal = family == HetFamily::HalfNormal;
      } else if (family == HetFamily::HalfNormal) {
        const auto match = scale_mixture_half_t(m, sd);
        p.distribution = match.dist;
        p.effectively_half_normal = match.capped;
      } else {
        p.distribution = exp_mixture_lomax(m, sd);
      }
      return p;
    }
    case HetFamily::LogNormal: {
      std::vector<double> log_theta;
      for (double t : s.pooled("scale")) log_theta.push_back(std::log(t));
      double mean_sigma2 = 0.0;
      const auto shape = s.pooled("shape");
      for (double v : shape) mean_sigma2 += v * v;
      mean_sigma2 /= static_cast<double>(shape.size());
      p.distribution = LogNormal(sample_mean(log_theta), std::sqrt(mean_sigma2 + sample_variance(log_theta)));
      return p;
    }
    case HetFamily::HalfCauchy:
      throw ArgumentError("mixture_match_prior: no analytic scale-mixture approximation for half-Cauchy");
  }
  throw ArgumentError("mixture_match_prior: unknown family");
}

// ---------------------------------------------------------------------------
// Nelder-Mead

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimizer (standard reflection/expansion/
/// contraction/shrink coefficients 1, 2, 1/2, 1/2).
inline SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                                 double step = 0.1, int max_evals = 10000, double tol = 1e-10) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  std::vector<double> val(n + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? numeric::kInf : v;
  };
  for (std::size_t i = 0; i <= n; ++i) val[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  while (evals < max_evals) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
    const auto best = order.front(), worst = order.back(), second = order[n - 1];
    double diam = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t d = 0; d < n; ++d) diam = std::max(diam, std::abs(pts[i][d] - pts[best][d]));
    }
    if (std::isfinite(val[best]) && std::abs(val[worst] - val[best]) <= tol * (std::abs(val[best]) + tol) &&
        diam <= 1e-8) {
      return {pts[best], val[best], evals, true};
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d) x[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
      return x;
    };
    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
      val[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
  return {pts[best], val[best], evals, false};
}

// ---------------------------------------------------------------------------
// Direct fits

inline constexpr double kMaxLomaxShape = 1e6;

namespace detail {

inline Distribution fit_family_distribution(FitFamily f, std::span<const double> p) {
  switch (f) {
    case FitFamily::HalfNormal: return HalfNormal(p[0]);
    case FitFamily::HalfStudentT: return HalfStudentT(p[0], p[1]);
    case FitFamily::Exponential: return Exponential(p[0]);
    case FitFamily::HalfCauchy: return HalfCauchy(p[0]);
    case FitFamily::LogNormal: return LogNormal(p[0], p[1]);
    case FitFamily::Lomax: return Lomax(p[0], p[1]);
  }
  throw ArgumentError("unknown fit family");
}

inline void require_positive_draws(std::span<const double> draws, const char* what) {
  for (double x : draws) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ArgumentError(std::string(what) + ": draws must be positive and finite");
  }
}

}  // namespace detail

/// Moment estimate of the chosen family from the draws' mean and sd.
inline PriorSpec fit_predictive_moments(std::span<const double> draws, FitFamily family, std::string source = {}) {
  detail::require_positive_draws(draws, "fit_predictive_moments");
  const double m = sample_mean(draws);
  const double sd = std::sqrt(sample_variance(draws));
  const double cv = sd / m;
  auto p = make_prior_spec(HalfNormal(1.0), PriorMethod::DirectFitMoments, std::nullopt, std::move(source));
  switch (family) {
    case FitFamily::HalfNormal:
      p.distribution = HalfNormal(m / std::sqrt(2.0 / std::numbers::pi));
      break;
    case FitFamily::Exponential:
      p.distribution = Exponential(m);
      break;
    case FitFamily::HalfStudentT: {
      const auto match = half_t_moment_fit(m, sd);
      p.distribution = match.dist;
      p.effectively_half_normal = match.capped;
      break;
    }
    case FitFamily::Lomax: {
      // cv^2 = alpha / (alpha - 2) for a Lomax, so cv must exceed 1
      if (!(cv > 1.0)) {
        throw InfeasibleError("Lomax moment fit needs a coefficient of variation above 1, got " + std::to_string(cv));
      }
      const double alpha = 2.0 * cv * cv / (cv * cv - 1.0);
      p.distribution = Lomax(alpha, m * (alpha - 1.0));
      break;
    }
    case FitFamily::LogNormal: {
      const double s2 = std::log1p(cv * cv);
      p.distribution = LogNormal(std::log(m) - 0.5 * s2, std::sqrt(s2));
      break;
    }
    case FitFamily::HalfCauchy:
      throw InfeasibleError("half-Cauchy has no moments; use the maximum-likelihood fit");
  }
  p.log_likelihood = log_likelihood(p.distribution, draws);
  return p;
}

/// Maximum-likelihood fit by Nelder-Mead over the logs of the positive
/// parameters (log-normal location unconstrained), started from the moment
/// estimate where one exists and restarted once at the optimum found.
inline PriorSpec fit_predictive_ml(std::span<const double> draws, FitFamily family, std::string source = {}) {
  if (draws.size() < 1000) throw ArgumentError("fit_predictive_ml: need at least 1000 draws");
  detail::require_positive_draws(draws, "fit_predictive_ml");
  const double m = sample_mean(draws);
  const double sd = std::sqrt(sample_variance(draws));

  std::vector<double> start;  // natural parameters
  bool capped = false;
  switch (family) {
    case FitFamily::HalfNormal: {
      double s2 = 0.0;
      for (double x : draws) s2 += x * x;
      start = {std::sqrt(s2 / static_cast<double>(draws.size()))};
      break;
    }
    case FitFamily::Exponential: start = {m}; break;
    case FitFamily::HalfCauchy: start = {empirical_quantile(draws, 0.5)}; break;
    case FitFamily::LogNormal: {
      std::vector<double> logs;
      for (double x : draws) logs.push_back(std::log(x));
      start = {sample_mean(logs), std::sqrt(sample_variance(logs))};
      break;
    }
    case FitFamily::HalfStudentT:
      if (sd / m > kHalfNormalCv * (1.0 + 1e-6)) {
        const auto d = half_t_moment_fit(m, sd).dist;
        start = {std::min(d.df(), 1e3), d.scale()};
      } else {
        start = {100.0, m / half_t_unit_mean(100.0)};
      }
      break;
    case FitFamily::Lomax:
      if (sd / m > 1.0 + 1e-6) {
        const auto d = std::get<Lomax>(fit_predictive_moments(draws, family).distribution);
        start = {std::min(d.shape(), 1e4), d.scale()};
      } else {
        start = {100.0, 99.0 * m};
      }
      break;
  }

  const bool has_location = family == FitFamily::LogNormal;
  auto to_natural = [&](std::span<const double> u) {
    std::vector<double> p(u.begin(), u.end());
    for (std::size_t i = has_location ? 1 : 0; i < p.size(); ++i) p[i] = std::exp(p[i]);
    return p;
  };
  std::vector<double> u0 = start;
  for (std::size_t i = has_location ? 1 : 0; i < u0.size(); ++i) u0[i] = std::log(u0[i]);

  auto objective = [&](std::span<const double> u) {
    const auto p = to_natural(u);
    for (std::size_t i = has_location ? 1 : 0; i < p.size(); ++i) {
      if (!(p[i] > 0.0) || !std::isfinite(p[i])) return numeric::kInf;
    }
    if (family == FitFamily::HalfStudentT && p[0] > kMaxDf) return numeric::kInf;
    if (family == FitFamily::Lomax && p[0] > kMaxLomaxShape) return numeric::kInf;
    return -log_likelihood(detail::fit_family_distribution(family, p), draws);
  };

  constexpr int kBudget = 10000;
  auto r = nelder_mead(objective, u0, 0.1, kBudget);
  int used = r.evaluations;
  if (r.converged && used < kBudget) {
    const auto again = nelder_mead(objective, r.x, 0.05, kBudget - used);
    used += again.evaluations;
    if (again.value <= r.value) r = again;
    r.converged = again.converged;
  }
  if (!r.converged || !std::isfinite(r.value)) {
    std::ostringstream msg;
    msg << "fit_predictive_ml(" << to_string(family) << "): no convergence after " << used
        << " evaluations; best -loglik " << r.value << " at (";
    const auto p = to_natural(r.x);
    for (std::size_t i = 0; i < p.size(); ++i) msg << (i ? ", " : "") << p[i];
    msg << ")";
    throw FitError(msg.str());
  }
  const auto p = to_natural(r.x);
  if (family == FitFamily::HalfStudentT && p[0] >= kMaxDf * (1.0 - 1e-3)) capped = true;
  auto spec = make_prior_spec(detail::fit_family_distribution(family, p), PriorMethod::DirectFitML, std::nullopt,
                              std::move(source));
  spec.effectively_half_normal = capped;
  spec.log_likelihood = -r.value;
  return spec;
}

// ---------------------------------------------------------------------------
// Comparison table

struct ApproximationRow {
  std::string label;
  std::optional<double> mean;
  std::optional<double> sd;
  double median = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
};

inline ApproximationRow analytic_row(const std::string& label, const Distribution& d) {
  const auto mo = moments(d);
  return {label, mo.mean, mo.sd, quantile(d, 0.5), quantile(d, 0.95), quantile(d, 0.99)};
}

/// Empirical tau* row (when draws are given) followed by one analytic row per
/// prior, evaluated at the published (rounded) parameters.
inline std::vector<ApproximationRow> approximation_table(const std::vector<PriorSpec>& specs,
                                                         std::span<const double> tau_pred) {
  if (specs.empty()) throw ArgumentError("approximation_table: need at least one prior");
  std::vector<ApproximationRow> rows;
  if (tau_pred.size() >= 2) {
    const auto s = summarize_samples(tau_pred);
    rows.push_back({"prediction tau*", s.mean, s.sd, s.median, s.q95, s.q99});
  }
  for (const auto& p : specs) rows.push_back(analytic_row(p.text(), p.rounded()));
  return rows;
}

}  // namespace hetprior
