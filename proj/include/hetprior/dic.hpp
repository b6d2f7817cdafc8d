#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetprior/data.hpp"
#include "hetprior/dist.hpp"
#include "hetprior/error.hpp"
#include "hetprior/model.hpp"
#include "hetprior/sampler.hpp"
#include "hetprior/stats.hpp"

namespace hetprior {

/// -2 log-likelihood of the whole collection at per-analysis (mu_j, tau_j).
inline double deviance(const MetaAnalysisCollection& c, std::span<const double> mu, std::span<const double> tau) {
  if (mu.size() != c.size() || tau.size() != c.size()) {
    throw ArgumentError("deviance: mu and tau must have one entry per analysis");
  }
  double ll = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) ll += analysis_log_likelihood(c[j], mu[j], tau[j]);
  return -2.0 * ll;
}

struct DicResult {
  std::string family;
  double dic = 0.0;
  double p_d = 0.0;
  double mean_deviance = 0.0;
  double plug_in_deviance = 0.0;
};

/// DIC with the NNHM-stage parameters in focus: the plug-in deviance is
/// evaluated at the posterior means of every mu_j and tau_j.
inline DicResult compute_dic(const PosteriorSamples& s, const MetaAnalysisCollection& c,
                             std::string family = {}) {
  if (!s.find("deviance")) throw InputError("compute_dic: samples carry no deviance trace");
  if (!s.has_latent() || s.n_analyses != c.size()) {
    throw InputError("compute_dic: samples lack per-analysis mu/tau draws matching the collection");
  }
  std::vector<double> mu_bar(c.size()), tau_bar(c.size());
  for (std::size_t j = 0; j < c.size(); ++j) {
    mu_bar[j] = sample_mean(s.pooled(mu_name(j)));
    tau_bar[j] = sample_mean(s.pooled(tau_name(j)));
  }
  DicResult r;
  r.family = std::move(family);
  r.mean_deviance = sample_mean(s.pooled("deviance"));
  r.plug_in_deviance = deviance(c, mu_bar, tau_bar);
  r.p_d = r.mean_deviance - r.plug_in_deviance;
  r.dic = r.mean_deviance + r.p_d;
  return r;
}

/// One row of the model comparison table: DIC plus predictive summaries.
struct ModelComparisonRow {
  HetFamily family;
  std::optional<DicResult> dic;
  /// Empirical tau* summary; mean/sd are withheld for the half-Cauchy model,
  /// whose predictive distribution has no moments.
  std::optional<double> pred_mean;
  std::optional<double> pred_sd;
  double pred_median = 0.0;
  double pred_q95 = 0.0;
  double pred_q99 = 0.0;
  std::optional<std::string> error;
};

/// Fits every family with the same template and settings and returns the rows
/// sorted by DIC (failed fits last, in input order).
inline std::vector<ModelComparisonRow> compare_models(const MetaAnalysisCollection& c,
                                                      const std::vector<HetFamily>& families,
                                                      const ModelSpec& templ, const McmcConfig& cfg) {
  if (families.size() < 2) throw ArgumentError("compare_models: need at least two families");
  std::vector<ModelComparisonRow> rows;
  for (auto f : families) {
    ModelComparisonRow row{f, std::nullopt, std::nullopt, std::nullopt, 0.0, 0.0, 0.0, std::nullopt};
    try {
      ModelSpec m = templ;
      m.family = f;
      m.fixed_tau_prior.reset();
      const auto s = run_hierarchical(c, m, cfg);
      row.dic = compute_dic(s, c, to_string(f));
      const auto sum = summarize_samples(s.pooled("tau_pred"));
      if (f != HetFamily::HalfCauchy) {
        row.pred_mean = sum.mean;
        row.pred_sd = sum.sd;
      }
      row.pred_median = sum.median;
      row.pred_q95 = sum.q95;
      row.pred_q99 = sum.q99;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.dic && b.dic) return a.dic->dic < b.dic->dic;
    return a.dic.has_value() && !b.dic.has_value();
  });
  return rows;
}

}  // namespace hetprior
