#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetprior/data.hpp"
#include "hetprior/dist.hpp"
#include "hetprior/error.hpp"

namespace hetprior {

/// Parametric family of the heterogeneity stage tau_j | theta.
enum class HetFamily { HalfNormal, Exponential, HalfCauchy, LogNormal };

inline std::string to_string(HetFamily f) {
  switch (f) {
    case HetFamily::HalfNormal: return "half-normal";
    case HetFamily::Exponential: return "exponential";
    case HetFamily::HalfCauchy: return "half-cauchy";
    case HetFamily::LogNormal: return "log-normal";
  }
  return "?";
}

inline HetFamily parse_het_family(std::string_view s) {
  if (s == "half-normal" || s == "halfnormal") return HetFamily::HalfNormal;
  if (s == "exponential" || s == "exp") return HetFamily::Exponential;
  if (s == "half-cauchy" || s == "halfcauchy") return HetFamily::HalfCauchy;
  if (s == "log-normal" || s == "lognormal") return HetFamily::LogNormal;
  throw InputError("unknown heterogeneity family '" + std::string(s) + "'");
}

/// Extended normal-normal hierarchical model:
///   y_ij ~ N(mu_j, sigma_ij^2 + tau_j^2),  mu_j ~ N(mu_p, sigma_p^2),
///   tau_j ~ P(theta),  theta ~ hyperprior.
/// With `fixed_tau_prior` set the heterogeneity stage is replaced by that
/// fixed prior and no hyperparameters are sampled.
struct ModelSpec {
  HetFamily family = HetFamily::HalfNormal;
  Distribution scale_hyperprior = Uniform(0.0, 10.0);
  /// Used only by the log-normal family.
  Distribution shape_hyperprior = Uniform(0.0, 5.0);
  std::optional<Distribution> fixed_tau_prior;
  double effect_prior_mean = 0.0;
  /// +infinity gives a flat effect prior.
  double effect_prior_sd = 100.0;

  std::vector<std::string> hyper_names() const {
    if (fixed_tau_prior) return {};
    if (family == HetFamily::LogNormal) return {"scale", "shape"};
    return {"scale"};
  }

  std::vector<Distribution> hyperpriors() const {
    if (fixed_tau_prior) return {};
    if (family == HetFamily::LogNormal) return {scale_hyperprior, shape_hyperprior};
    return {scale_hyperprior};
  }

  void validate() const {
    if (!(effect_prior_sd > 0.0)) throw ConfigError("effect prior sd must be positive");
    if (!std::isfinite(effect_prior_mean)) throw ConfigError("effect prior mean must be finite");
    for (const auto& h : hyperpriors()) {
      const auto [lo, hi] = support(h);
      if (!(lo >= 0.0)) {
        throw ConfigError("hyperprior " + to_string(h) + " puts mass on non-positive values");
      }
    }
    if (fixed_tau_prior && !(support(*fixed_tau_prior).first >= 0.0)) {
      throw ConfigError("heterogeneity prior " + to_string(*fixed_tau_prior) + " must live on [0, inf)");
    }
  }
};

/// Conditional heterogeneity distribution P(theta). theta = (scale) or,
/// for the log-normal family, (scale theta = exp(mu), shape sigma).
inline Distribution het_distribution(HetFamily f, std::span<const double> theta) {
  switch (f) {
    case HetFamily::HalfNormal: return HalfNormal(theta[0]);
    case HetFamily::Exponential: return Exponential(theta[0]);
    case HetFamily::HalfCauchy: return HalfCauchy(theta[0]);
    case HetFamily::LogNormal: return LogNormal::from_theta(theta[0], theta[1]);
  }
  throw ArgumentError("unknown family");
}

/// Log-likelihood of one analysis' estimates given (mu, tau); the normal
/// constant is included so that -2x this is the deviance contribution.
inline double analysis_log_likelihood(const MetaAnalysis& a, double mu, double tau) {
  constexpr double log_2pi = 1.8378770664093454836;
  double ll = 0.0;
  for (const auto& s : a.studies) {
    const double v = s.std_err * s.std_err + tau * tau;
    const double r = s.estimate - mu;
    ll -= 0.5 * (log_2pi + std::log(v) + r * r / v);
  }
  return ll;
}

}  // namespace hetprior
