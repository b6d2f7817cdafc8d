#include <gtest/gtest.h>

#include <numbers>

#include "hetprior/dic.hpp"
#include "hetprior/simulate.hpp"

using namespace hetprior;

namespace {

MetaAnalysisCollection single(std::vector<double> y, std::vector<double> se) {
  MetaAnalysis a{"A", {}};
  for (std::size_t i = 0; i < y.size(); ++i) a.studies.push_back({"A", std::to_string(i), y[i], se[i], 0});
  return MetaAnalysisCollection({a});
}

// Hand-built samples with the given per-iteration (mu, tau) for one analysis.
PosteriorSamples samples_for(const MetaAnalysisCollection& c, const std::vector<double>& mu,
                             const std::vector<double>& tau) {
  PosteriorSamples s;
  s.hyper_names = {};
  s.n_analyses = 1;
  std::vector<double> dev;
  for (std::size_t i = 0; i < mu.size(); ++i) dev.push_back(deviance(c, {{mu[i]}}, {{tau[i]}}));
  s.traces = {{"mu[1]", {mu}}, {"tau[1]", {tau}}, {"tau_pred", {tau}}, {"deviance", {dev}}};
  return s;
}

}  // namespace

TEST(Dic, DevianceAnalyticValues) {
  const auto c = single({0.0}, {1.0});
  EXPECT_NEAR(deviance(c, std::vector{0.0}, std::vector{0.0}), std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(deviance(c, std::vector{0.0}, std::vector{std::sqrt(3.0)}), std::log(8.0 * std::numbers::pi), 1e-12);
  EXPECT_THROW(deviance(c, std::vector<double>{}, std::vector{0.0}), ArgumentError);
}

TEST(Dic, DevianceInvariantUnderStudyPermutation) {
  const auto a = single({0.1, -0.4, 0.9}, {0.2, 0.5, 0.3});
  const auto b = single({0.9, 0.1, -0.4}, {0.3, 0.2, 0.5});
  EXPECT_NEAR(deviance(a, std::vector{0.2}, std::vector{0.3}), deviance(b, std::vector{0.2}, std::vector{0.3}),
              1e-12);
}

TEST(Dic, DevianceDecreasesTowardsMomentFit) {
  const auto c = single({-0.5, 0.1, 0.6, 1.2}, {0.2, 0.2, 0.2, 0.2});
  const SingleMeta sm(c[0]);
  const double mu = pooled(sm, 0.0).mean;
  // ML in tau for fixed mu on equal-se data: tau^2 = mean (y - mu)^2 - se^2
  double r2 = 0.0;
  for (double y : sm.y()) r2 += (y - mu) * (y - mu);
  const double tau_hat = std::sqrt(r2 / 4.0 - 0.04);
  double prev = deviance(c, std::vector{mu}, std::vector{0.0});
  for (double t = 0.05; t <= tau_hat; t += 0.05) {
    const double d = deviance(c, std::vector{mu}, std::vector{t});
    EXPECT_LT(d, prev);
    prev = d;
  }
  prev = deviance(c, std::vector{mu}, std::vector{3.0 * tau_hat});
  for (double t = 3.0 * tau_hat - 0.05; t >= tau_hat; t -= 0.05) {
    const double d = deviance(c, std::vector{mu}, std::vector{t});
    EXPECT_LT(d, prev);
    prev = d;
  }
}

TEST(Dic, DegenerateSamples) {
  const auto c = single({0.3, 0.5}, {0.2, 0.1});
  const auto s = samples_for(c, std::vector(50, 0.4), std::vector(50, 0.1));
  const auto r = compute_dic(s, c);
  EXPECT_NEAR(r.p_d, 0.0, 1e-12);
  EXPECT_NEAR(r.dic, r.plug_in_deviance, 1e-12);
}

TEST(Dic, IdentitiesAndPlugInIteration) {
  const auto c = single({0.3, 0.5, -0.2}, {0.2, 0.1, 0.3});
  Rng rng(4);
  std::vector<double> mu, tau;
  for (int i = 0; i < 200; ++i) {
    mu.push_back(0.2 + 0.1 * rng.normal());
    tau.push_back(std::abs(0.2 * rng.normal()));
  }
  const auto r = compute_dic(samples_for(c, mu, tau), c);
  EXPECT_NEAR(r.dic - r.mean_deviance, r.p_d, 1e-12);
  EXPECT_NEAR(r.mean_deviance - r.plug_in_deviance, r.p_d, 1e-12);

  // append an iteration at the posterior means: p_D cannot increase
  mu.push_back(sample_mean(mu));
  tau.push_back(sample_mean(tau));
  const auto r2 = compute_dic(samples_for(c, mu, tau), c);
  EXPECT_LE(r2.p_d, r.p_d + 1e-12);
}

TEST(Dic, MissingTracesAreInputErrors) {
  const auto c = single({0.3, 0.5}, {0.2, 0.1});
  auto s = samples_for(c, {0.1, 0.2}, {0.1, 0.2});
  auto no_dev = s;
  no_dev.traces.pop_back();
  EXPECT_THROW(compute_dic(no_dev, c), InputError);
  auto no_latent = s;
  no_latent.traces.erase(no_latent.traces.begin(), no_latent.traces.begin() + 2);
  EXPECT_THROW(compute_dic(no_latent, c), InputError);
}

TEST(Dic, SampledRunSatisfiesIdentities) {
  Rng rng(21);
  const auto c = simulate_collection(SimulationSpec{}, rng);
  McmcConfig cfg;
  cfg.chains = 2;
  cfg.burn_in = 300;
  cfg.kept = 1000;
  const auto r = compute_dic(run_hierarchical(c, ModelSpec{}, cfg), c, "half-normal");
  EXPECT_NEAR(r.dic, r.mean_deviance + r.p_d, 1e-9);
  EXPECT_GT(r.p_d, 0.0);
  EXPECT_EQ(r.family, "half-normal");
}

TEST(Dic, CompareModelsRanksGeneratingFamilyFirst) {
  SimulationSpec spec;
  spec.n_analyses = 40;
  spec.heterogeneity = HalfNormal(0.3);
  Rng rng(99);
  const auto c = simulate_collection(spec, rng);
  McmcConfig cfg;
  cfg.chains = 2;
  cfg.burn_in = 1000;
  cfg.kept = 4000;
  cfg.seed = 3;
  const std::vector<HetFamily> fams = {HetFamily::HalfCauchy, HetFamily::HalfNormal};
  const auto rows = compare_models(c, fams, ModelSpec{}, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].family, HetFamily::HalfNormal);
  ASSERT_TRUE(rows[0].dic && rows[1].dic);
  EXPECT_LE(rows[0].dic->dic, rows[1].dic->dic);
  EXPECT_FALSE(rows[1].pred_mean);
  EXPECT_TRUE(rows[0].pred_mean);

  const auto again = compare_models(c, fams, ModelSpec{}, cfg);
  EXPECT_EQ(again[0].dic->dic, rows[0].dic->dic);
  EXPECT_EQ(again[1].pred_q99, rows[1].pred_q99);
  EXPECT_THROW(compare_models(c, {HetFamily::HalfNormal}, ModelSpec{}, cfg), ArgumentError);
}

TEST(Dic, CompareModelsKeepsGoingAfterFailure) {
  Rng rng(5);
  const auto c = simulate_collection(SimulationSpec{}, rng);
  ModelSpec templ;
  templ.shape_hyperprior = Normal(0.0, 1.0);  // invalid, but only the log-normal family uses it
  McmcConfig cfg;
  cfg.chains = 1;
  cfg.burn_in = 10;
  cfg.kept = 50;
  const auto rows = compare_models(c, {HetFamily::LogNormal, HetFamily::HalfNormal}, templ, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].family, HetFamily::HalfNormal);
  EXPECT_TRUE(rows[0].dic);
  EXPECT_TRUE(rows[1].error);
  EXPECT_FALSE(rows[1].dic);
}
