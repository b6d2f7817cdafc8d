#pragma once

// Distribution zoo for heterogeneity models, hyperpriors and fitted priors,
// plus the moment-matching formulas that turn scale-parameter uncertainty
// into half-Student-t / Lomax / log-normal approximations.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "hetprior/data.hpp"
#include "hetprior/error.hpp"
#include "hetprior/numeric.hpp"
#include "hetprior/rng.hpp"

namespace hetprior {

namespace detail {
inline double require_positive(double v, const char* what) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ArgumentError(std::string(what) + " must be positive and finite");
  }
  return v;
}
}  // namespace detail

class HalfNormal {
 public:
  explicit HalfNormal(double scale) : scale_(detail::require_positive(scale, "half-normal scale")) {}
  double scale() const noexcept { return scale_; }
  friend bool operator==(const HalfNormal&, const HalfNormal&) = default;

 private:
  double scale_;
};

class HalfStudentT {
 public:
  HalfStudentT(double df, double scale)
      : df_(detail::require_positive(df, "half-t degrees of freedom")),
        scale_(detail::require_positive(scale, "half-t scale")) {}
  double df() const noexcept { return df_; }
  double scale() const noexcept { return scale_; }
  friend bool operator==(const HalfStudentT&, const HalfStudentT&) = default;

 private:
  double df_, scale_;
};

/// Exponential parametrized by its scale (mean), not its rate.
class Exponential {
 public:
  explicit Exponential(double scale) : scale_(detail::require_positive(scale, "exponential scale")) {}
  double scale() const noexcept { return scale_; }
  friend bool operator==(const Exponential&, const Exponential&) = default;

 private:
  double scale_;
};

class HalfCauchy {
 public:
  explicit HalfCauchy(double scale) : scale_(detail::require_positive(scale, "half-Cauchy scale")) {}
  double scale() const noexcept { return scale_; }
  friend bool operator==(const HalfCauchy&, const HalfCauchy&) = default;

 private:
  double scale_;
};

/// Log-normal with location mu and shape sigma. theta = exp(mu) is its scale
/// parameter (and its median).
class LogNormal {
 public:
  LogNormal(double mu, double sigma)
      : mu_(mu), sigma_(detail::require_positive(sigma, "log-normal sigma")) {
    if (!std::isfinite(mu)) throw ArgumentError("log-normal mu must be finite");
  }
  static LogNormal from_theta(double theta, double sigma) {
    return LogNormal(std::log(detail::require_positive(theta, "log-normal theta")), sigma);
  }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  double theta() const noexcept { return std::exp(mu_); }
  friend bool operator==(const LogNormal&, const LogNormal&) = default;

 private:
  double mu_, sigma_;
};

/// Pareto type II with density alpha/lambda (1 + x/lambda)^-(alpha+1).
class Lomax {
 public:
  Lomax(double shape, double scale)
      : shape_(detail::require_positive(shape, "Lomax shape")),
        scale_(detail::require_positive(scale, "Lomax scale")) {}
  double shape() const noexcept { return shape_; }
  double scale() const noexcept { return scale_; }
  friend bool operator==(const Lomax&, const Lomax&) = default;

 private:
  double shape_, scale_;
};

/// X = scale / chi_df: the mixing law of a normal scale that yields Student-t.
class ScaledInvChi {
 public:
  ScaledInvChi(double df, double scale)
      : df_(detail::require_positive(df, "scaled-inverse-chi df")),
        scale_(detail::require_positive(scale, "scaled-inverse-chi scale")) {}
  double df() const noexcept { return df_; }
  double scale() const noexcept { return scale_; }
  friend bool operator==(const ScaledInvChi&, const ScaledInvChi&) = default;

 private:
  double df_, scale_;
};

/// X = scale / Gamma(shape, 1).
class InvGamma {
 public:
  InvGamma(double shape, double scale)
      : shape_(detail::require_positive(shape, "inverse-gamma shape")),
        scale_(detail::require_positive(scale, "inverse-gamma scale")) {}
  double shape() const noexcept { return shape_; }
  double scale() const noexcept { return scale_; }
  friend bool operator==(const InvGamma&, const InvGamma&) = default;

 private:
  double shape_, scale_;
};

class Normal {
 public:
  Normal(double mean, double sd) : mean_(mean), sd_(detail::require_positive(sd, "normal sd")) {
    if (!std::isfinite(mean)) throw ArgumentError("normal mean must be finite");
  }
  double mean() const noexcept { return mean_; }
  double sd() const noexcept { return sd_; }
  friend bool operator==(const Normal&, const Normal&) = default;

 private:
  double mean_, sd_;
};

class Uniform {
 public:
  Uniform(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw ArgumentError("uniform bounds must be finite with lo < hi");
    }
  }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  friend bool operator==(const Uniform&, const Uniform&) = default;

 private:
  double lo_, hi_;
};

using Distribution = std::variant<HalfNormal, HalfStudentT, Exponential, HalfCauchy, LogNormal, Lomax,
                                  ScaledInvChi, InvGamma, Normal, Uniform>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Mean/sd/cv are absent where the moment does not exist.
struct MomentSummary {
  std::optional<double> mean;
  std::optional<double> sd;
  std::optional<double> cv;
  double median = 0.0;
};

inline constexpr double kHalfNormalCv = 0.75551063976286722;  // sqrt(pi/2 - 1)
inline constexpr double kMaxDf = 1e4;

// ---------------------------------------------------------------------------
// Names and canonical text form

inline std::string family_name(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const HalfNormal&) { return "half-normal"; },
                        [](const HalfStudentT&) { return "half-t"; },
                        [](const Exponential&) { return "exp"; },
                        [](const HalfCauchy&) { return "half-cauchy"; },
                        [](const LogNormal&) { return "log-normal"; },
                        [](const Lomax&) { return "lomax"; },
                        [](const ScaledInvChi&) { return "scaled-inv-chi"; },
                        [](const InvGamma&) { return "inv-gamma"; },
                        [](const Normal&) { return "normal"; },
                        [](const Uniform&) { return "uniform"; },
                    },
                    d);
}

inline std::vector<double> parameters(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const HalfNormal& x) { return std::vector{x.scale()}; },
                        [](const HalfStudentT& x) { return std::vector{x.df(), x.scale()}; },
                        [](const Exponential& x) { return std::vector{x.scale()}; },
                        [](const HalfCauchy& x) { return std::vector{x.scale()}; },
                        [](const LogNormal& x) { return std::vector{x.mu(), x.sigma()}; },
                        [](const Lomax& x) { return std::vector{x.shape(), x.scale()}; },
                        [](const ScaledInvChi& x) { return std::vector{x.df(), x.scale()}; },
                        [](const InvGamma& x) { return std::vector{x.shape(), x.scale()}; },
                        [](const Normal& x) { return std::vector{x.mean(), x.sd()}; },
                        [](const Uniform& x) { return std::vector{x.lo(), x.hi()}; },
                    },
                    d);
}

/// Builds a distribution from its canonical family name (aliases accepted).
inline Distribution make_distribution(std::string_view family, std::span<const double> p) {
  auto need = [&](std::size_t n) {
    if (p.size() != n) {
      throw InputError(std::string(family) + " takes " + std::to_string(n) + " parameter(s), got " +
                       std::to_string(p.size()));
    }
  };
  try {
    if (family == "half-normal" || family == "halfnormal") {
      need(1);
      return HalfNormal(p[0]);
    }
    if (family == "half-t" || family == "half-student-t") {
      need(2);
      return HalfStudentT(p[0], p[1]);
    }
    if (family == "exp" || family == "exponential") {
      need(1);
      return Exponential(p[0]);
    }
    if (family == "half-cauchy" || family == "halfcauchy") {
      need(1);
      return HalfCauchy(p[0]);
    }
    if (family == "log-normal" || family == "lognormal") {
      need(2);
      return LogNormal(p[0], p[1]);
    }
    if (family == "lomax") {
      need(2);
      return Lomax(p[0], p[1]);
    }
    if (family == "scaled-inv-chi") {
      need(2);
      return ScaledInvChi(p[0], p[1]);
    }
    if (family == "inv-gamma") {
      need(2);
      return InvGamma(p[0], p[1]);
    }
    if (family == "normal") {
      need(2);
      return Normal(p[0], p[1]);
    }
    if (family == "uniform") {
      need(2);
      return Uniform(p[0], p[1]);
    }
  } catch (const ArgumentError& e) {
    throw InputError(std::string(family) + ": " + e.what());
  }
  throw InputError("unknown distribution family '" + std::string(family) + "'");
}

/// Canonical text form, e.g. `half-t(8.2,0.2)`. Numbers use the shortest
/// representation that reads back to the same double.
inline std::string to_string(const Distribution& d) {
  std::string out = family_name(d) + '(';
  const auto p = parameters(d);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ',';
    out += detail::format_double(p[i]);
  }
  return out + ')';
}

inline Distribution parse_distribution(std::string_view text) {
  const auto t = detail::trim(text);
  const auto open = t.find('(');
  if (open == std::string_view::npos || t.back() != ')') {
    throw InputError("cannot parse distribution '" + std::string(text) + "': expected family(params)");
  }
  std::string family(detail::trim(t.substr(0, open)));
  std::transform(family.begin(), family.end(), family.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto inner = t.substr(open + 1, t.size() - open - 2);
  std::vector<double> p;
  std::size_t pos = 0;
  while (pos <= inner.size()) {
    auto end = inner.find_first_of(",;", pos);
    if (end == std::string_view::npos) end = inner.size();
    const auto v = detail::parse_double(inner.substr(pos, end - pos));
    if (!v) throw InputError("cannot parse parameter list of '" + std::string(text) + "'");
    p.push_back(*v);
    pos = end + 1;
  }
  return make_distribution(family, p);
}

// ---------------------------------------------------------------------------
// Density, cdf, quantile

/// Support as a closed interval [lo, hi] (possibly infinite).
inline std::pair<double, double> support(const Distribution& d) {
  using numeric::kInf;
  return std::visit(Overloaded{
                        [](const Normal&) { return std::pair{-kInf, kInf}; },
                        [](const Uniform& u) { return std::pair{u.lo(), u.hi()}; },
                        [](const auto&) { return std::pair{0.0, kInf}; },
                    },
                    d);
}

inline double log_density(const Distribution& d, double x) {
  using numeric::kInf;
  using std::log;
  constexpr double log_2pi = 1.8378770664093454836;
  if (std::isnan(x)) return numeric::kNaN;
  return std::visit(
      Overloaded{
          [&](const HalfNormal& h) {
            if (x < 0.0) return -kInf;
            const double z = x / h.scale();
            return 0.5 * log(2.0 / std::numbers::pi) - log(h.scale()) - 0.5 * z * z;
          },
          [&](const HalfStudentT& h) {
            if (x < 0.0) return -kInf;
            const double nu = h.df(), t = x / h.scale();
            return std::numbers::ln2 + numeric::log_gamma_half_ratio(0.5 * nu) -
                   0.5 * log(nu * std::numbers::pi) - log(h.scale()) -
                   0.5 * (nu + 1.0) * std::log1p(t * t / nu);
          },
          [&](const Exponential& e) {
            if (x < 0.0) return -kInf;
            return -log(e.scale()) - x / e.scale();
          },
          [&](const HalfCauchy& h) {
            if (x < 0.0) return -kInf;
            const double z = x / h.scale();
            return log(2.0 / (std::numbers::pi * h.scale())) - std::log1p(z * z);
          },
          [&](const LogNormal& l) {
            if (x <= 0.0) return -kInf;
            const double z = (log(x) - l.mu()) / l.sigma();
            return -log(x) - log(l.sigma()) - 0.5 * log_2pi - 0.5 * z * z;
          },
          [&](const Lomax& l) {
            if (x < 0.0) return -kInf;
            return log(l.shape()) - log(l.scale()) - (l.shape() + 1.0) * std::log1p(x / l.scale());
          },
          [&](const ScaledInvChi& s) {
            if (x <= 0.0) return -kInf;
            const double nu = s.df(), y = s.scale() / x;
            return (nu - 1.0) * log(y) - 0.5 * y * y - (0.5 * nu - 1.0) * std::numbers::ln2 -
                   numeric::log_gamma(0.5 * nu) + log(s.scale()) - 2.0 * log(x);
          },
          [&](const InvGamma& g) {
            if (x <= 0.0) return -kInf;
            return g.shape() * log(g.scale()) - numeric::log_gamma(g.shape()) -
                   (g.shape() + 1.0) * log(x) - g.scale() / x;
          },
          [&](const Normal& n) {
            const double z = (x - n.mean()) / n.sd();
            return -log(n.sd()) - 0.5 * log_2pi - 0.5 * z * z;
          },
          [&](const Uniform& u) {
            if (x < u.lo() || x > u.hi()) return -kInf;
            return -log(u.hi() - u.lo());
          },
      },
      d);
}

inline double density(const Distribution& d, double x) { return std::exp(log_density(d, x)); }

inline double cdf(const Distribution& d, double x) {
  namespace bm = boost::math;
  if (std::isnan(x)) return numeric::kNaN;
  if (x == numeric::kInf) return 1.0;
  if (x == -numeric::kInf) return 0.0;
  return std::visit(
      Overloaded{
          [&](const HalfNormal& h) {
            return x <= 0.0 ? 0.0 : bm::erf(x / (h.scale() * std::numbers::sqrt2));
          },
          [&](const HalfStudentT& h) {
            if (x <= 0.0) return 0.0;
            const double t = x / h.scale();
            const double t2 = t * t;
            // P(|T| <= t) = I_{t^2/(nu+t^2)}(1/2, nu/2)
            return bm::ibeta(0.5, 0.5 * h.df(), t2 / (h.df() + t2));
          },
          [&](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-x / e.scale()); },
          [&](const HalfCauchy& h) {
            return x <= 0.0 ? 0.0 : 2.0 / std::numbers::pi * std::atan(x / h.scale());
          },
          [&](const LogNormal& l) {
            if (x <= 0.0) return 0.0;
            return 0.5 * bm::erfc(-(std::log(x) - l.mu()) / (l.sigma() * std::numbers::sqrt2));
          },
          [&](const Lomax& l) {
            return x <= 0.0 ? 0.0 : -std::expm1(-l.shape() * std::log1p(x / l.scale()));
          },
          [&](const ScaledInvChi& s) {
            if (x <= 0.0) return 0.0;
            return bm::gamma_q(0.5 * s.df(), s.scale() * s.scale() / (2.0 * x * x));
          },
          [&](const InvGamma& g) { return x <= 0.0 ? 0.0 : bm::gamma_q(g.shape(), g.scale() / x); },
          [&](const Normal& n) {
            return 0.5 * bm::erfc(-(x - n.mean()) / (n.sd() * std::numbers::sqrt2));
          },
          [&](const Uniform& u) {
            if (x <= u.lo()) return 0.0;
            if (x >= u.hi()) return 1.0;
            return (x - u.lo()) / (u.hi() - u.lo());
          },
      },
      d);
}

inline double quantile(const Distribution& d, double p) {
  namespace bm = boost::math;
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("quantile: probability must lie in (0, 1)");
  return std::visit(
      Overloaded{
          [&](const HalfNormal& h) { return h.scale() * std::numbers::sqrt2 * bm::erf_inv(p); },
          [&](const HalfStudentT& h) {
            const bm::students_t_distribution<double> t(h.df());
            return h.scale() * bm::quantile(bm::complement(t, 0.5 * (1.0 - p)));
          },
          [&](const Exponential& e) { return -e.scale() * std::log1p(-p); },
          [&](const HalfCauchy& h) { return h.scale() * std::tan(0.5 * std::numbers::pi * p); },
          [&](const LogNormal& l) {
            return std::exp(l.mu() - l.sigma() * std::numbers::sqrt2 * bm::erfc_inv(2.0 * p));
          },
          [&](const Lomax& l) { return l.scale() * std::expm1(-std::log1p(-p) / l.shape()); },
          [&](const ScaledInvChi& s) {
            return s.scale() / std::sqrt(2.0 * bm::gamma_q_inv(0.5 * s.df(), p));
          },
          [&](const InvGamma& g) { return g.scale() / bm::gamma_q_inv(g.shape(), p); },
          [&](const Normal& n) {
            return n.mean() - n.sd() * std::numbers::sqrt2 * bm::erfc_inv(2.0 * p);
          },
          [&](const Uniform& u) { return u.lo() + p * (u.hi() - u.lo()); },
      },
      d);
}

// ---------------------------------------------------------------------------
// Moments

/// E[X] for the unit-scale half-Student-t, nu > 1.
inline double half_t_unit_mean(double nu) {
  if (!(nu > 1.0)) throw DomainError("half-t mean requires df > 1");
  return 2.0 * std::sqrt(nu / std::numbers::pi) * std::exp(numeric::log_gamma_half_ratio(0.5 * nu)) /
         (nu - 1.0);
}

/// E[1/chi_nu] for nu > 1.
inline double inv_chi_unit_mean(double nu) {
  if (!(nu > 1.0)) throw DomainError("inverse-chi mean requires df > 1");
  return std::exp(-numeric::log_gamma_half_ratio(0.5 * (nu - 1.0))) / std::numbers::sqrt2;
}

inline MomentSummary moments(const Distribution& d) {
  MomentSummary m;
  m.median = quantile(d, 0.5);
  auto set = [&](double mean, std::optional<double> sd) {
    m.mean = mean;
    m.sd = sd;
    if (sd && mean != 0.0) m.cv = *sd / mean;
  };
  std::visit(Overloaded{
                 [&](const HalfNormal& h) {
                   set(h.scale() * std::sqrt(2.0 / std::numbers::pi),
                       h.scale() * std::sqrt(1.0 - 2.0 / std::numbers::pi));
                 },
                 [&](const HalfStudentT& h) {
                   const double nu = h.df();
                   if (!(nu > 1.0)) return;
                   const double e1 = half_t_unit_mean(nu);
                   std::optional<double> sd;
                   if (nu > 2.0) sd = h.scale() * std::sqrt(nu / (nu - 2.0) - e1 * e1);
                   set(h.scale() * e1, sd);
                 },
                 [&](const Exponential& e) { set(e.scale(), e.scale()); },
                 [&](const HalfCauchy&) {},
                 [&](const LogNormal& l) {
                   const double s2 = l.sigma() * l.sigma();
                   const double mean = std::exp(l.mu() + 0.5 * s2);
                   set(mean, mean * std::sqrt(std::expm1(s2)));
                 },
                 [&](const Lomax& l) {
                   const double a = l.shape();
                   if (!(a > 1.0)) return;
                   std::optional<double> sd;
                   if (a > 2.0) sd = l.scale() / (a - 1.0) * std::sqrt(a / (a - 2.0));
                   set(l.scale() / (a - 1.0), sd);
                 },
                 [&](const ScaledInvChi& s) {
                   const double nu = s.df();
                   if (!(nu > 1.0)) return;
                   const double e1 = inv_chi_unit_mean(nu);
                   std::optional<double> sd;
                   if (nu > 2.0) sd = s.scale() * std::sqrt(1.0 / (nu - 2.0) - e1 * e1);
                   set(s.scale() * e1, sd);
                 },
                 [&](const InvGamma& g) {
                   const double a = g.shape();
                   if (!(a > 1.0)) return;
                   std::optional<double> sd;
                   if (a > 2.0) sd = g.scale() / ((a - 1.0) * std::sqrt(a - 2.0));
                   set(g.scale() / (a - 1.0), sd);
                 },
                 [&](const Normal& n) { set(n.mean(), n.sd()); },
                 [&](const Uniform& u) { set(0.5 * (u.lo() + u.hi()), (u.hi() - u.lo()) / std::sqrt(12.0)); },
             },
             d);
  return m;
}

// ---------------------------------------------------------------------------
// Sampling

inline double draw(const Distribution& d, Rng& rng) {
  return std::visit(Overloaded{
                        [&](const HalfNormal& h) { return h.scale() * std::abs(rng.normal()); },
                        [&](const HalfStudentT& h) {
                          const double z = rng.normal();
                          return h.scale() * std::abs(z) / std::sqrt(rng.chi_squared(h.df()) / h.df());
                        },
                        [&](const Exponential& e) { return e.scale() * rng.exponential(); },
                        [&](const HalfCauchy& h) {
                          return h.scale() * std::tan(0.5 * std::numbers::pi * rng.uniform());
                        },
                        [&](const LogNormal& l) { return std::exp(l.mu() + l.sigma() * rng.normal()); },
                        [&](const Lomax& l) {
                          return l.scale() * std::expm1(rng.exponential() / l.shape());
                        },
                        [&](const ScaledInvChi& s) { return s.scale() / std::sqrt(rng.chi_squared(s.df())); },
                        [&](const InvGamma& g) { return g.scale() / rng.gamma(g.shape()); },
                        [&](const Normal& n) { return n.mean() + n.sd() * rng.normal(); },
                        [&](const Uniform& u) { return u.lo() + (u.hi() - u.lo()) * rng.uniform(); },
                    },
                    d);
}

inline std::vector<double> sample(const Distribution& d, Rng& rng, std::size_t n) {
  if (n == 0) throw ArgumentError("sample: n must be at least 1");
  std::vector<double> out(n);
  for (auto& x : out) x = draw(d, rng);
  return out;
}

/// Sum of log densities with the normalizing constant hoisted out of the loop.
inline double log_likelihood(const Distribution& d, std::span<const double> xs) {
  using numeric::kInf;
  const double n = static_cast<double>(xs.size());
  const auto [lo, hi] = support(d);
  for (double x : xs) {
    if (std::isnan(x)) return numeric::kNaN;
    if (x < lo || x > hi) return -kInf;
  }
  return std::visit(
      Overloaded{
          [&](const HalfStudentT& h) {
            const double nu = h.df();
            double s = 0.0;
            for (double x : xs) {
              const double t = x / h.scale();
              s += std::log1p(t * t / nu);
            }
            return n * (std::numbers::ln2 + numeric::log_gamma_half_ratio(0.5 * nu) -
                        0.5 * std::log(nu * std::numbers::pi) - std::log(h.scale())) -
                   0.5 * (nu + 1.0) * s;
          },
          [&](const Lomax& l) {
            double s = 0.0;
            for (double x : xs) s += std::log1p(x / l.scale());
            return n * (std::log(l.shape()) - std::log(l.scale())) - (l.shape() + 1.0) * s;
          },
          [&](const auto&) {
            double s = 0.0;
            for (double x : xs) s += log_density(d, x);
            return s;
          },
      },
      d);
}

// ---------------------------------------------------------------------------
// Matching formulas

/// Coefficient of variation of a half-Student-t with nu > 2 degrees of
/// freedom; scale-free, decreasing in nu towards sqrt(pi/2 - 1).
inline double half_t_cv(double nu) {
  if (!(nu > 2.0)) throw DomainError("half_t_cv: degrees of freedom must exceed 2");
  const double log_ratio = numeric::log_gamma_half_ratio(0.5 * nu);  // log G((nu+1)/2)/G(nu/2)
  const double a = std::numbers::pi * (nu - 1.0) * (nu - 1.0) / (4.0 * (nu - 2.0));
  return std::sqrt(a * std::exp(-2.0 * log_ratio) - 1.0);
}

/// Coefficient of variation of the scaled inverse-chi law; independent of scale.
inline double inv_chi_cv(double nu) {
  if (!(nu > 2.0)) throw DomainError("inv_chi_cv: degrees of freedom must exceed 2");
  const double e1 = inv_chi_unit_mean(nu);
  return std::sqrt(1.0 / ((nu - 2.0) * e1 * e1) - 1.0);
}

struct DfSolution {
  double df = 0.0;
  /// df hit the kMaxDf cap; the fitted half-t is effectively a half-normal.
  bool capped = false;
};

namespace detail {
template <class CvFn>
DfSolution solve_df_for_cv(CvFn cv_of, double cv, const char* what) {
  constexpr double lower = 2.0 + 1e-9;
  if (cv <= cv_of(kMaxDf)) return {kMaxDf, true};
  if (cv >= cv_of(lower)) {
    throw InfeasibleError(std::string(what) + ": coefficient of variation " + std::to_string(cv) +
                          " is beyond the attainable range");
  }
  const double nu = numeric::find_root([&](double v) { return cv_of(v) - cv; }, lower, kMaxDf,
                                       {.x_tol = 1e-15, .f_tol = 1e-12, .max_iter = 2000});
  return {nu, false};
}
}  // namespace detail

/// Degrees of freedom of the half-Student-t whose coefficient of variation is cv.
inline DfSolution solve_half_t_nu(double cv) {
  if (!(cv > kHalfNormalCv)) {
    throw InfeasibleError("solve_half_t_nu: cv " + std::to_string(cv) +
                          " is not above sqrt(pi/2 - 1) = 0.7555; fit a half-normal instead");
  }
  return detail::solve_df_for_cv(half_t_cv, cv, "solve_half_t_nu");
}

struct HalfTMatch {
  HalfStudentT dist;
  bool capped = false;
};

/// Moment fit: df from the coefficient of variation, then scale from the mean.
inline HalfTMatch half_t_moment_fit(double mean, double sd) {
  detail::require_positive(mean, "half_t_moment_fit mean");
  detail::require_positive(sd, "half_t_moment_fit sd");
  const auto sol = solve_half_t_nu(sd / mean);
  return {HalfStudentT(sol.df, mean / half_t_unit_mean(sol.df)), sol.capped};
}

/// Half-normal scale mixture approximated by a half-Student-t: the scale's
/// mean and sd are matched by a scaled inverse-chi law, whose df carries over.
inline HalfTMatch scale_mixture_half_t(double mean_s, double sd_s) {
  detail::require_positive(mean_s, "scale_mixture_half_t mean");
  if (!(sd_s >= 0.0 && std::isfinite(sd_s))) throw ArgumentError("scale_mixture_half_t: sd must be >= 0");
  const auto sol = detail::solve_df_for_cv(inv_chi_cv, sd_s / mean_s, "scale_mixture_half_t");
  const double nu = sol.df;
  // expectation of the scaled inverse-chi with df nu and scale sqrt(nu)
  const double e = std::sqrt(nu) * inv_chi_unit_mean(nu);
  return {HalfStudentT(nu, mean_s / e), sol.capped};
}

/// Exponential scale mixture with inverse-gamma scale matched to (mean, sd).
inline Lomax exp_mixture_lomax(double mean_s, double sd_s) {
  detail::require_positive(mean_s, "exp_mixture_lomax mean");
  detail::require_positive(sd_s, "exp_mixture_lomax sd");
  const double inv_cv2 = (mean_s / sd_s) * (mean_s / sd_s);
  return Lomax(2.0 + inv_cv2, mean_s * (1.0 + inv_cv2));
}

inline LogNormal lognormal_from_theta(double theta, double sigma) { return LogNormal::from_theta(theta, sigma); }

}  // namespace hetprior
