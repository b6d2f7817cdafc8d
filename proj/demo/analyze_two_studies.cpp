// A meta-analysis of two studies with identical estimates: the frequentist
// heterogeneity estimate collapses to zero, so the Bayesian analysis under
// an informative prior is the better-behaved summary.

#include <cstdio>

#include "hetprior/frequentist.hpp"
#include "hetprior/metaanalysis.hpp"

using namespace hetprior;

int main() {
  const SingleMeta sm({-0.3, -0.3}, {0.4, 0.4});

  const auto dl = dl_estimate(sm);
  std::printf("DL tau = %.3f (Q = %.3f), PM tau = %.3f\n", dl.tau, dl.q, pm_estimate(sm));
  const auto ci = ci_suite(sm, dl.tau);
  for (const auto* i : {&ci.normal, &ci.hksj, &ci.mkh}) {
    std::printf("%-7s %.3f [%.3f, %.3f]  width %.3f\n", i->label.c_str(), i->estimate, i->lo, i->hi, i->width());
  }

  for (const char* text : {"half-t(8.2,0.20)", "half-normal(0.5)", "half-cauchy(0.1)"}) {
    const auto prior = parse_distribution(text);
    const auto r = bayes_ma(sm, prior);
    std::printf("\nprior %s\n", to_string(prior).c_str());
    std::printf("  mu  %.3f [%.3f, %.3f]  width/normal %.3f\n", r.mu.median, r.mu.lo95, r.mu.hi95,
                (r.mu.hi95 - r.mu.lo95) / ci.normal.width());
    std::printf("  tau %.3f [%.3f, %.3f]  (prior median %.3f)\n", r.tau.median, r.tau.lo95, r.tau.hi95,
                quantile(prior, 0.5));
  }
}
