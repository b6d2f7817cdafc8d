// End-to-end use of the library: simulate a historical corpus, fit the
// half-normal heterogeneity model, condense the predictive tau* into priors
// and use the mixture-matched one in a new two-study meta-analysis.

#include <cstdio>
#include <vector>

#include "hetprior/dic.hpp"
#include "hetprior/metaanalysis.hpp"
#include "hetprior/sampler.hpp"
#include "hetprior/simulate.hpp"
#include "hetprior/summarize.hpp"

using namespace hetprior;

int main() {
  Rng rng(derive_seed(2024, 0));
  SimulationSpec spec;
  spec.n_analyses = 40;
  spec.studies_per_analysis = 5;
  spec.std_err = 0.2;
  spec.heterogeneity = HalfNormal(0.22);
  const auto corpus = simulate_collection(spec, rng);

  ModelSpec model;  // half-normal, scale ~ U(0, 10)
  McmcConfig cfg;
  cfg.burn_in = 1000;
  cfg.kept = 4000;
  cfg.seed = 11;
  const auto draws = run_hierarchical(corpus, model, cfg);
  const auto diag = diagnostics(draws);
  const auto dic = compute_dic(draws, corpus, "half-normal");
  std::printf("fit: max R-hat %.3f, DIC %.1f (pD %.1f)\n", diag.max_rhat().value_or(0.0), dic.dic, dic.p_d);

  std::vector<PriorSpec> priors = {
      point_estimate_prior(draws, model.family, PointStatistic::Median),
      mixture_match_prior(draws, model.family),
      fit_predictive_ml(draws.pooled("tau_pred"), FitFamily::HalfStudentT),
  };
  for (const auto& r : approximation_table(priors, draws.pooled("tau_pred"))) {
    std::printf("%-24s median %.3f  q95 %.3f  q99 %.3f\n", r.label.c_str(), r.median, r.q95, r.q99);
  }

  const SingleMeta fresh({-0.30, -0.25}, {0.40, 0.35});
  const auto res = bayes_ma(fresh, priors[1].rounded());
  std::printf("\nnew analysis with %s\n", res.prior.c_str());
  std::printf("  mu  median %.3f  95%% CrI [%.3f, %.3f]\n", res.mu.median, res.mu.lo95, res.mu.hi95);
  std::printf("  tau median %.3f  95%% CrI [%.3f, %.3f]\n", res.tau.median, res.tau.lo95, res.tau.hi95);
  for (const auto* ci : {&res.comparators.normal, &res.comparators.hksj, &res.comparators.mkh}) {
    std::printf("  %-6s [%.3f, %.3f]\n", ci->label.c_str(), ci->lo, ci->hi);
  }
}
