#pragma once

// Frequentist random-effects machinery for a single meta-analysis:
// DerSimonian-Laird and Paule-Mandel heterogeneity estimates and the
// normal / HKSJ / modified Knapp-Hartung intervals for the pooled effect.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "hetprior/data.hpp"
#include "hetprior/error.hpp"
#include "hetprior/numeric.hpp"
#include "hetprior/stats.hpp"

namespace hetprior {

/// One meta-analysis: estimates y_i with standard errors sigma_i.
class SingleMeta {
 public:
  SingleMeta(std::vector<double> y, std::vector<double> se) : y_(std::move(y)), se_(std::move(se)) {
    if (y_.empty()) throw ArgumentError("meta-analysis needs at least one study");
    if (y_.size() != se_.size()) throw ArgumentError("estimates and standard errors differ in length");
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (!std::isfinite(y_[i])) throw ArgumentError("non-finite estimate");
      if (!(std::isfinite(se_[i]) && se_[i] > 0.0)) throw ArgumentError("standard errors must be positive");
    }
  }
  explicit SingleMeta(const MetaAnalysis& a) : SingleMeta(estimates_of(a), std_errs_of(a)) {}

  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<double>& se() const noexcept { return se_; }
  std::size_t k() const noexcept { return y_.size(); }

 private:
  static std::vector<double> estimates_of(const MetaAnalysis& a) {
    std::vector<double> v;
    for (const auto& s : a.studies) v.push_back(s.estimate);
    return v;
  }
  static std::vector<double> std_errs_of(const MetaAnalysis& a) {
    std::vector<double> v;
    for (const auto& s : a.studies) v.push_back(s.std_err);
    return v;
  }

  std::vector<double> y_, se_;
};

/// The single analysis of a collection that must contain exactly one.
inline SingleMeta single_meta_from(const MetaAnalysisCollection& c) {
  if (c.size() != 1) {
    throw InputError("expected exactly one analysis_id, found " + std::to_string(c.size()));
  }
  return SingleMeta(c[0]);
}

/// Weighted mean and its variance for weights 1/(sigma_i^2 + tau^2).
struct PooledEstimate {
  double mean = 0.0;
  double variance = 0.0;  // 1 / sum(w)
  double q = 0.0;         // sum w_i (y_i - mean)^2
};

inline PooledEstimate pooled(const SingleMeta& sm, double tau) {
  double sw = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < sm.k(); ++i) {
    const double w = 1.0 / (sm.se()[i] * sm.se()[i] + tau * tau);
    sw += w;
    swy += w * sm.y()[i];
  }
  PooledEstimate p{swy / sw, 1.0 / sw, 0.0};
  for (std::size_t i = 0; i < sm.k(); ++i) {
    const double w = 1.0 / (sm.se()[i] * sm.se()[i] + tau * tau);
    p.q += w * (sm.y()[i] - p.mean) * (sm.y()[i] - p.mean);
  }
  return p;
}

struct DlEstimate {
  double tau = 0.0;
  double q = 0.0;
};

inline DlEstimate dl_estimate(const SingleMeta& sm) {
  if (sm.k() < 2) throw DomainError("DerSimonian-Laird estimate needs at least two studies");
  double sw = 0.0, sw2 = 0.0;
  for (double s : sm.se()) {
    const double w = 1.0 / (s * s);
    sw += w;
    sw2 += w * w;
  }
  const double q = pooled(sm, 0.0).q;
  const double k1 = static_cast<double>(sm.k() - 1);
  const double tau2 = std::max(0.0, (q - k1) / (sw - sw2 / sw));
  return {std::sqrt(tau2), q};
}

/// Paule-Mandel: generalized Q statistic equated to its expectation k - 1.
inline double pm_estimate(const SingleMeta& sm) {
  if (sm.k() < 2) throw DomainError("Paule-Mandel estimate needs at least two studies");
  const double k1 = static_cast<double>(sm.k() - 1);
  auto f = [&](double tau) { return pooled(sm, tau).q - k1; };
  if (f(0.0) <= 0.0) return 0.0;
  const double max_se = *std::max_element(sm.se().begin(), sm.se().end());
  double hi = max_se;
  while (f(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e3 * max_se) throw NumericalError("pm_estimate: no sign change below 1000 * max(se)");
  }
  return numeric::find_root(f, 0.0, hi, {.x_tol = 1e-12, .f_tol = 0.0, .max_iter = 1000});
}

struct LabeledInterval {
  std::string label;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
};

struct CiSuite {
  LabeledInterval normal;
  LabeledInterval hksj;
  LabeledInterval mkh;
};

/// Normal, HKSJ and modified Knapp-Hartung (variance factor floored at 1)
/// 95% intervals, all centred at the pooled mean for the given tau.
inline CiSuite ci_suite(const SingleMeta& sm, double tau) {
  if (sm.k() < 2) throw DomainError("ci_suite needs at least two studies");
  if (!(tau >= 0.0)) throw ArgumentError("ci_suite: tau must be non-negative");
  const auto p = pooled(sm, tau);
  const double k1 = static_cast<double>(sm.k() - 1);
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.975);
  const double t = boost::math::quantile(boost::math::students_t_distribution<double>(k1), 0.975);
  const double q = p.q / k1;
  const double se = std::sqrt(p.variance);
  CiSuite s;
  s.normal = {"normal", p.mean, p.mean - z * se, p.mean + z * se};
  const double hk = t * std::sqrt(q * p.variance);
  s.hksj = {"HKSJ", p.mean, p.mean - hk, p.mean + hk};
  const double mk = t * std::sqrt(std::max(1.0, q) * p.variance);
  s.mkh = {"mKH", p.mean, p.mean - mk, p.mean + mk};
  return s;
}

enum class TauEstimator { DL, PM };

struct TauEstimates {
  std::vector<std::string> analysis_ids;
  std::vector<double> estimates;
  std::vector<std::string> warnings;
  double fraction_zero = 0.0;
  double mean = 0.0;
  double median = 0.0;
};

/// Per-analysis heterogeneity point estimates; single-study analyses are
/// skipped with a warning.
inline TauEstimates tau_estimate_collection(const MetaAnalysisCollection& c, TauEstimator method) {
  TauEstimates r;
  for (const auto& a : c.analyses()) {
    if (a.size() < 2) {
      r.warnings.push_back("analysis '" + a.id + "' skipped: a single study admits no estimate");
      continue;
    }
    const SingleMeta sm(a);
    r.analysis_ids.push_back(a.id);
    r.estimates.push_back(method == TauEstimator::DL ? dl_estimate(sm).tau : pm_estimate(sm));
  }
  if (!r.estimates.empty()) {
    const auto zeros = std::count(r.estimates.begin(), r.estimates.end(), 0.0);
    r.fraction_zero = static_cast<double>(zeros) / static_cast<double>(r.estimates.size());
    r.mean = sample_mean(r.estimates);
    r.median = empirical_quantile(r.estimates, 0.5);
  }
  return r;
}

}  // namespace hetprior
