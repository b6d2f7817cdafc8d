#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <vector>

#include "hetprior/dist.hpp"
#include "hetprior/stats.hpp"

using namespace hetprior;

namespace {

// Reference values computed independently with scipy.stats.
struct TableRow {
  Distribution d;
  std::optional<double> mean, sd;
  double q50, q95, q99;
};

std::vector<TableRow> table_rows() {
  return {
      {HalfNormal(0.22), 0.17553, 0.13262, 0.14839, 0.43119, 0.56668},
      {HalfStudentT(8.2, 0.20), 0.176296, 0.147726, 0.141116, 0.459250, 0.666348},
      {Lomax(9.9, 1.5), 0.168539, 0.188671, 0.108786, 0.530058, 0.888424},
      {LogNormal(-2.6, 1.7), 0.315058, 1.298760, 0.074274, 1.216832, 3.875952},
      {HalfCauchy(0.10), std::nullopt, std::nullopt, 0.1, 1.270620, 6.365674},
  };
}

std::vector<Distribution> zoo() {
  return {HalfNormal(0.22),       HalfStudentT(8.2, 0.2), HalfStudentT(1.5, 2.0), Exponential(0.3),
          HalfCauchy(0.1),        LogNormal(-2.6, 1.7),   LogNormal(0.4, 0.3),    Lomax(9.9, 1.5),
          Lomax(2.5, 0.7),        ScaledInvChi(8.2, 0.5), InvGamma(4.0, 2.0),     Normal(-1.0, 2.5),
          Uniform(0.0, 10.0)};
}

double integrate_density(const Distribution& d) {
  const auto [lo, hi] = support(d);
  auto f = [&](double x) { return density(d, x); };
  if (std::isfinite(lo) && std::isfinite(hi)) return boost::math::quadrature::tanh_sinh<double>().integrate(f, lo, hi);
  // split at the median so each half is a one-sided infinite integral
  const double m = quantile(d, 0.5);
  boost::math::quadrature::exp_sinh<double> es;
  double total = es.integrate([&](double t) { return f(m + t); }, 0.0, std::numeric_limits<double>::infinity());
  if (std::isfinite(lo)) {
    total += boost::math::quadrature::tanh_sinh<double>().integrate(f, lo, m);
  } else {
    total += es.integrate([&](double t) { return f(m - t); }, 0.0, std::numeric_limits<double>::infinity());
  }
  return total;
}

}  // namespace

TEST(Dist, TableValuesFromPrintedParameters) {
  for (const auto& r : table_rows()) {
    SCOPED_TRACE(to_string(r.d));
    const auto m = moments(r.d);
    ASSERT_EQ(m.mean.has_value(), r.mean.has_value());
    ASSERT_EQ(m.sd.has_value(), r.sd.has_value());
    if (r.mean) {
      EXPECT_NEAR(*m.mean, *r.mean, 5e-6);
    }
    if (r.sd) {
      EXPECT_NEAR(*m.sd, *r.sd, 5e-6);
    }
    EXPECT_NEAR(quantile(r.d, 0.5), r.q50, 5e-6);
    EXPECT_NEAR(quantile(r.d, 0.95), r.q95, 5e-6);
    EXPECT_NEAR(quantile(r.d, 0.99), r.q99, 5e-6);
  }
}

TEST(Dist, LogDensityClosedForms) {
  EXPECT_NEAR(log_density(HalfNormal(0.22), 0.0), 1.288336379985048, 1e-12);
  EXPECT_NEAR(log_density(HalfCauchy(0.3), 0.0), std::log(2.0 / (std::numbers::pi * 0.3)), 1e-13);
  for (const auto& d : zoo()) {
    if (support(d).first >= 0.0) {
      EXPECT_EQ(log_density(d, -1.0), -std::numeric_limits<double>::infinity());
    }
  }
}

TEST(Dist, CdfExamples) {
  EXPECT_NEAR(cdf(HalfNormal(0.22), 0.43), 0.949363, 1e-6);
  EXPECT_NEAR(cdf(HalfCauchy(0.10), 0.10), 0.5, 1e-14);
  EXPECT_EQ(cdf(HalfNormal(1.0), -3.0), 0.0);
  EXPECT_DOUBLE_EQ(cdf(Normal(0.0, 1.0), std::numeric_limits<double>::infinity()), 1.0);
}

TEST(Dist, DensityIntegratesToOne) {
  for (const auto& d : zoo()) {
    SCOPED_TRACE(to_string(d));
    EXPECT_NEAR(integrate_density(d), 1.0, 1e-6);
  }
}

TEST(Dist, QuantileCdfInverse) {
  const double ps[] = {0.001, 0.01, 0.05, 0.5, 0.95, 0.99, 0.999};
  for (const auto& d : zoo()) {
    SCOPED_TRACE(to_string(d));
    for (double p : ps) {
      const double x = quantile(d, p);
      EXPECT_NEAR(cdf(d, x), p, 1e-10);
      EXPECT_NEAR(quantile(d, cdf(d, x)), x, 1e-8 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST(Dist, QuantileRejectsBadProbability) {
  EXPECT_THROW(quantile(HalfNormal(1.0), 0.0), ArgumentError);
  EXPECT_THROW(quantile(HalfNormal(1.0), 1.0), ArgumentError);
  EXPECT_THROW(quantile(HalfNormal(1.0), std::nan("")), ArgumentError);
}

TEST(Dist, UndefinedMomentsAreExplicit) {
  EXPECT_FALSE(moments(HalfCauchy(0.1)).mean);
  EXPECT_FALSE(moments(HalfCauchy(0.1)).cv);
  EXPECT_NEAR(moments(HalfCauchy(0.1)).median, 0.1, 1e-14);
  EXPECT_TRUE(moments(HalfStudentT(1.5, 1.0)).mean);
  EXPECT_FALSE(moments(HalfStudentT(1.5, 1.0)).sd);
  EXPECT_FALSE(moments(HalfStudentT(1.0, 1.0)).mean);
  EXPECT_FALSE(moments(Lomax(2.0, 1.0)).sd);
  EXPECT_TRUE(moments(Lomax(2.0, 1.0)).mean);
  const auto m = moments(HalfNormal(0.22));
  EXPECT_DOUBLE_EQ(*m.cv, *m.sd / *m.mean);
}

TEST(Dist, LimitsTowardsSimplerFamilies) {
  for (int i = 1; i <= 9; ++i) {
    const double p = i / 10.0;
    EXPECT_NEAR(quantile(HalfStudentT(1e6, 0.3), p), quantile(HalfNormal(0.3), p), 1e-4 * 0.3);
    EXPECT_NEAR(quantile(Lomax(1e6, 1e6 * 0.2), p), quantile(Exponential(0.2), p), 1e-4 * 0.2);
  }
}

TEST(Dist, SamplingIsDeterministic) {
  Rng a(99), b(99);
  EXPECT_EQ(sample(HalfStudentT(8.2, 0.2), a, 1000), sample(HalfStudentT(8.2, 0.2), b, 1000));
  Rng r(1);
  EXPECT_THROW(sample(HalfNormal(1.0), r, 0), ArgumentError);
}

TEST(Dist, SampleMomentsAgreeWithClosedForms) {
  constexpr std::size_t n = 1'000'000;
  std::uint64_t seed = 17;
  for (const auto& d : zoo()) {
    const auto m = moments(d);
    if (!m.sd) continue;
    SCOPED_TRACE(to_string(d));
    Rng rng(seed++);
    const auto x = sample(d, rng, n);
    const double se = *m.sd / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(sample_mean(x), *m.mean, 4.0 * se);
  }
}

TEST(Dist, HalfNormalMonteCarloMean) {
  Rng rng(2024);
  const auto x = sample(HalfNormal(0.22), rng, 1'000'000);
  EXPECT_NEAR(sample_mean(x), 0.17553, 3.0 * 0.13262 / 1000.0);
  EXPECT_NEAR(empirical_quantile(x, 0.95), 0.43119, 0.005);
}

TEST(Dist, HalfTMonteCarloUpperQuantile) {
  Rng rng(5);
  const auto x = sample(HalfStudentT(8.2, 0.20), rng, 1'000'000);
  EXPECT_NEAR(empirical_quantile(x, 0.99), 0.67, 0.01);
}

TEST(Dist, CanonicalTextRoundTrip) {
  for (const auto& d : zoo()) {
    EXPECT_EQ(parse_distribution(to_string(d)), d) << to_string(d);
  }
  EXPECT_EQ(parse_distribution("half-t(8.2,0.20)"), Distribution(HalfStudentT(8.2, 0.2)));
  EXPECT_EQ(parse_distribution("lomax(9.9; 1.5)"), Distribution(Lomax(9.9, 1.5)));
  EXPECT_EQ(to_string(HalfNormal(0.22)), "half-normal(0.22)");
  EXPECT_EQ(to_string(LogNormal(-2.6, 1.7)), "log-normal(-2.6,1.7)");
  EXPECT_THROW(parse_distribution("gamma(1,2)"), InputError);
  EXPECT_THROW(parse_distribution("half-normal(0.2"), InputError);
  EXPECT_THROW(parse_distribution("half-normal(-1)"), Error);
  EXPECT_THROW(parse_distribution("uniform(3,1)"), Error);
}

TEST(Dist, HalfTCv) {
  EXPECT_NEAR(half_t_cv(13.6), 0.79994, 5e-5);
  EXPECT_NEAR(half_t_cv(8.2), 0.83794, 5e-5);
  EXPECT_NEAR(half_t_cv(1e6), kHalfNormalCv, 1e-3);
  EXPECT_THROW(half_t_cv(2.0), DomainError);
  double prev = half_t_cv(2.01);
  for (double nu = 2.05; nu < 5000.0; nu *= 1.05) {
    const double v = half_t_cv(nu);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, kHalfNormalCv);
    prev = v;
  }
}

TEST(Dist, SolveHalfTNu) {
  const auto s = solve_half_t_nu(0.8);
  EXPECT_NEAR(s.df, 13.583, 1e-3);
  EXPECT_FALSE(s.capped);
  EXPECT_NEAR(half_t_cv(s.df), 0.8, 1e-8);
  EXPECT_NEAR(solve_half_t_nu(half_t_cv(8.2)).df, 8.2, 1e-6);
  EXPECT_NEAR(solve_half_t_nu(0.88).df, 6.0636, 1e-3);
  EXPECT_THROW(solve_half_t_nu(0.70), InfeasibleError);
  EXPECT_TRUE(solve_half_t_nu(kHalfNormalCv + 1e-12).capped);
}

TEST(Dist, HalfTMomentFit) {
  const auto f = half_t_moment_fit(0.5, 0.4);
  EXPECT_NEAR(f.dist.df(), 13.6, 0.1);
  EXPECT_NEAR(f.dist.scale(), 0.5913, 1e-3);
  EXPECT_NEAR(half_t_unit_mean(13.6), 0.8455, 5e-4);

  // fixed point: the moments of the fit reproduce the inputs
  for (auto [m, s] : {std::pair{0.5, 0.4}, {0.17, 0.15}, {1.0, 0.9}, {0.3, 0.23}}) {
    const auto g = half_t_moment_fit(m, s);
    const auto mo = moments(g.dist);
    EXPECT_NEAR(*mo.mean, m, 1e-6);
    EXPECT_NEAR(*mo.sd, s, 1e-6);
  }
  // exact moments of half-t(8.2, 0.20) map back to it
  const auto mo = moments(HalfStudentT(8.2, 0.20));
  const auto back = half_t_moment_fit(*mo.mean, *mo.sd);
  EXPECT_NEAR(back.dist.df(), 8.2, 1e-5);
  EXPECT_NEAR(back.dist.scale(), 0.20, 1e-7);
  // rounded summaries (0.17, 0.15) land near ν = 6
  const auto r = half_t_moment_fit(0.17, 0.15);
  EXPECT_NEAR(r.dist.df(), 5.986, 5e-3);
  EXPECT_NEAR(r.dist.scale(), 0.18500, 5e-4);
}

TEST(Dist, ScaleMixtureHalfT) {
  const auto m = scale_mixture_half_t(0.22, 0.064);
  EXPECT_NEAR(m.dist.df(), 8.1283, 1e-3);
  EXPECT_NEAR(m.dist.scale(), 0.19895, 1e-4);
  EXPECT_NEAR(m.dist.df(), 8.2, 0.2);
  EXPECT_NEAR(m.dist.scale(), 0.20, 0.01);

  const auto degenerate = scale_mixture_half_t(0.22, 1e-9);
  EXPECT_TRUE(degenerate.capped);
  EXPECT_DOUBLE_EQ(degenerate.dist.df(), kMaxDf);
  EXPECT_NEAR(degenerate.dist.scale(), 0.22, 1e-4);
}

TEST(Dist, ScaleMixtureHalfTMonteCarlo) {
  const auto m = scale_mixture_half_t(0.22, 0.064);
  const double nu = m.dist.df();
  // the matched mixing law: s = c / chi_nu with mean 0.22
  const ScaledInvChi mix(nu, 0.22 / inv_chi_unit_mean(nu));
  Rng rng(77);
  std::vector<double> x(1'000'000);
  for (auto& v : x) v = draw(HalfNormal(draw(mix, rng)), rng);
  for (double p : {0.5, 0.9, 0.95, 0.99}) EXPECT_NEAR(empirical_quantile(x, p), quantile(m.dist, p), 0.01);
}

TEST(Dist, ExpMixtureLomax) {
  const auto a = exp_mixture_lomax(0.2, 0.2);
  EXPECT_DOUBLE_EQ(a.shape(), 3.0);
  EXPECT_DOUBLE_EQ(a.scale(), 0.4);
  const auto b = exp_mixture_lomax(1.0, 0.5);
  EXPECT_DOUBLE_EQ(b.shape(), 6.0);
  EXPECT_DOUBLE_EQ(b.scale(), 5.0);
}

TEST(Dist, ExpMixtureLomaxMonteCarlo) {
  const double mean = 0.2, sd = 0.1;
  const auto l = exp_mixture_lomax(mean, sd);
  // inverse-gamma with mean 0.2, sd 0.1 mixing an exponential scale
  const double a = 2.0 + (mean / sd) * (mean / sd);
  const InvGamma ig(a, mean * (a - 1.0));
  EXPECT_DOUBLE_EQ(a, l.shape());
  Rng rng(8);
  std::vector<double> x(1'000'000);
  for (auto& v : x) v = draw(Exponential(draw(ig, rng)), rng);
  for (double p : {0.5, 0.9, 0.95, 0.99}) EXPECT_NEAR(empirical_quantile(x, p), quantile(l, p), 0.01);
}

TEST(Dist, LogNormalFromTheta) {
  const auto d = lognormal_from_theta(std::exp(-2.6), 1.7);
  EXPECT_NEAR(d.mu(), -2.6, 1e-14);
  const auto m = moments(d);
  EXPECT_NEAR(m.median, 0.07, 0.005);
  EXPECT_NEAR(*m.mean, 0.32, 0.005);
  EXPECT_NEAR(*m.mean, d.theta() * std::sqrt(std::exp(1.7 * 1.7)), 1e-12);
  EXPECT_NEAR(*moments(lognormal_from_theta(0.3, 0.5)).cv, *moments(lognormal_from_theta(4.0, 0.5)).cv, 1e-12);
  const auto narrow = moments(lognormal_from_theta(0.3, 1e-8));
  EXPECT_NEAR(*narrow.mean, 0.3, 1e-12);
  EXPECT_NEAR(narrow.median, 0.3, 1e-12);
}

TEST(Dist, LogLikelihoodMatchesSumOfLogDensities) {
  const std::vector<double> x = {0.05, 0.2, 0.31, 1.7};
  for (const auto& d : zoo()) {
    double s = 0.0;
    for (double v : x) s += log_density(d, v);
    if (std::isfinite(s)) {
      EXPECT_NEAR(log_likelihood(d, x), s, 1e-10 * std::abs(s) + 1e-12) << to_string(d);
    } else {
      EXPECT_EQ(log_likelihood(d, x), s) << to_string(d);
    }
  }
}
