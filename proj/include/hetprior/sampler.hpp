#pragma once

// Slice-within-Gibbs sampler for the extended NNHM. Each iteration updates
// every mu_j from its conjugate normal full conditional, every tau_j and each
// hyperparameter by univariate slice sampling, and draws one predictive
// tau* ~ P(theta).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hetprior/data.hpp"
#include "hetprior/dist.hpp"
#include "hetprior/error.hpp"
#include "hetprior/frequentist.hpp"
#include "hetprior/model.hpp"
#include "hetprior/rng.hpp"
#include "hetprior/stats.hpp"

namespace hetprior {

struct McmcConfig {
  int chains = 4;
  int burn_in = 5000;
  /// Draws stored per chain (after thinning).
  int kept = 20000;
  int thin = 1;
  std::uint64_t seed = 1;
  /// Run chains on separate threads; results do not depend on this.
  bool parallel = true;

  void validate() const {
    if (chains < 1 || burn_in < 0 || kept < 1 || thin < 1) {
      throw ConfigError("MCMC settings: chains, kept and thin must be >= 1 and burn-in >= 0");
    }
  }
};

/// Draws of every monitored quantity, stored per parameter and chain.
/// Parameter names: hyperparameters ("scale", "shape"), "mu[j]", "tau[j]"
/// (1-based j), "tau_pred" and "deviance".
struct PosteriorSamples {
  struct Trace {
    std::string name;
    std::vector<std::vector<double>> chains;
    friend bool operator==(const Trace&, const Trace&) = default;
  };

  std::vector<std::string> hyper_names;
  std::size_t n_analyses = 0;
  std::vector<Trace> traces;

  std::size_t n_chains() const { return traces.empty() ? 0 : traces.front().chains.size(); }
  std::size_t n_kept() const {
    return traces.empty() || traces.front().chains.empty() ? 0 : traces.front().chains.front().size();
  }

  const Trace* find(std::string_view name) const {
    for (const auto& t : traces) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
  const Trace& at(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw InputError("samples lack parameter '" + std::string(name) + "'");
  }
  /// All chains of one parameter concatenated.
  std::vector<double> pooled(std::string_view name) const {
    std::vector<double> out;
    for (const auto& c : at(name).chains) out.insert(out.end(), c.begin(), c.end());
    return out;
  }
  bool has_latent() const { return n_analyses > 0 && find("tau[1]") != nullptr; }
  friend bool operator==(const PosteriorSamples&, const PosteriorSamples&) = default;
};

inline std::string mu_name(std::size_t j) { return "mu[" + std::to_string(j + 1) + "]"; }
inline std::string tau_name(std::size_t j) { return "tau[" + std::to_string(j + 1) + "]"; }

/// Univariate slice sampler with stepping out and shrinkage (Neal 2003).
/// Initial width |x0| + 0.1; `logf` returns -inf outside the support, which
/// is additionally clamped to [lower, upper].
template <class LogF>
double slice_sample(double x0, double logf_x0, LogF&& logf, Rng& rng, double lower, double upper,
                    int max_steps = 50) {
  const double level = logf_x0 - rng.exponential();
  const double w = std::abs(x0) + 0.1;
  double left = x0 - w * rng.uniform();
  double right = left + w;
  int j = static_cast<int>(std::floor(max_steps * rng.uniform()));
  int k = max_steps - 1 - j;
  if (left < lower) left = lower;
  if (right > upper) right = upper;
  while (j-- > 0 && left > lower && logf(left) > level) left = std::max(lower, left - w);
  while (k-- > 0 && right < upper && logf(right) > level) right = std::min(upper, right + w);
  for (;;) {
    const double x1 = left + (right - left) * rng.uniform();
    if (logf(x1) > level) return x1;
    if (x1 < x0) {
      left = x1;
    } else {
      right = x1;
    }
    if (right - left <= 1e-14 * (1.0 + std::abs(x0))) return x0;
  }
}

namespace detail {

struct ChainResult {
  std::vector<std::vector<double>> hyper;  // [h][iter]
  std::vector<std::vector<double>> mu;     // [j][iter]
  std::vector<std::vector<double>> tau;    // [j][iter]
  std::vector<double> tau_pred;
  std::vector<double> deviance;
};

inline ChainResult run_chain(const MetaAnalysisCollection& c, const ModelSpec& m, const McmcConfig& cfg,
                             std::uint64_t seed, bool keep_latent) {
  Rng rng(seed);
  const std::size_t n = c.size();
  const auto hyperpriors = m.hyperpriors();
  const std::size_t nh = hyperpriors.size();
  const bool flat_mu = !std::isfinite(m.effect_prior_sd);
  const double prior_prec = flat_mu ? 0.0 : 1.0 / (m.effect_prior_sd * m.effect_prior_sd);

  std::vector<double> theta(nh);
  for (std::size_t h = 0; h < nh; ++h) theta[h] = quantile(hyperpriors[h], 0.5);
  auto cond_dist = [&](std::span<const double> th) -> std::optional<Distribution> {
    if (m.fixed_tau_prior) return *m.fixed_tau_prior;
    for (double v : th) {
      if (!(v > 0.0) || !std::isfinite(v)) return std::nullopt;
    }
    return het_distribution(m.family, th);
  };

  std::vector<double> mu(n), tau(n);
  {
    const auto d0 = cond_dist(theta);
    if (!d0) throw InitializationError("hyperprior median is not a valid parameter");
    for (std::size_t j = 0; j < n; ++j) {
      const SingleMeta sm(c[j]);
      mu[j] = pooled(sm, 0.0).mean;
      tau[j] = sm.k() >= 2 ? std::max(0.01, dl_estimate(sm).tau) : 0.01;
      if (!std::isfinite(log_density(*d0, tau[j]))) tau[j] = quantile(*d0, 0.5);
    }
  }

  auto tau_logf = [&](std::size_t j, const Distribution& d, double t) {
    if (t < 0.0) return -numeric::kInf;
    const double lp = log_density(d, t);
    if (lp == -numeric::kInf) return lp;
    double ll = 0.0;
    for (const auto& s : c[j].studies) {
      const double v = s.std_err * s.std_err + t * t;
      const double r = s.estimate - mu[j];
      ll -= 0.5 * (std::log(v) + r * r / v);
    }
    return ll + lp;
  };
  auto hyper_logf = [&](std::size_t h, double value) {
    const double lh = log_density(hyperpriors[h], value);
    if (lh == -numeric::kInf) return lh;
    std::vector<double> th = theta;
    th[h] = value;
    const auto d = cond_dist(th);
    if (!d) return -numeric::kInf;
    double s = lh;
    for (double t : tau) s += log_density(*d, t);
    return s;
  };

  {
    const auto d0 = *cond_dist(theta);
    double lp = 0.0;
    for (std::size_t j = 0; j < n; ++j) lp += tau_logf(j, d0, tau[j]);
    for (std::size_t h = 0; h < nh; ++h) lp += hyper_logf(h, theta[h]);
    if (!std::isfinite(lp)) throw InitializationError("log-posterior is not finite at the initial state");
  }

  ChainResult out;
  const auto kept = static_cast<std::size_t>(cfg.kept);
  out.hyper.assign(nh, std::vector<double>(kept));
  if (keep_latent) {
    out.mu.assign(n, std::vector<double>(kept));
    out.tau.assign(n, std::vector<double>(kept));
  }
  out.tau_pred.resize(kept);
  out.deviance.resize(kept);

  const long total = static_cast<long>(cfg.burn_in) + static_cast<long>(cfg.kept) * cfg.thin;
  std::size_t slot = 0;
  for (long it = 0; it < total; ++it) {
    // (a) effects: conjugate normal full conditionals
    for (std::size_t j = 0; j < n; ++j) {
      double prec = prior_prec, num = prior_prec * m.effect_prior_mean;
      for (const auto& s : c[j].studies) {
        const double w = 1.0 / (s.std_err * s.std_err + tau[j] * tau[j]);
        prec += w;
        num += w * s.estimate;
      }
      mu[j] = num / prec + rng.normal() / std::sqrt(prec);
    }
    // (b) heterogeneities
    const Distribution d = *cond_dist(theta);
    const auto [lo, hi] = support(d);
    for (std::size_t j = 0; j < n; ++j) {
      auto f = [&](double t) { return tau_logf(j, d, t); };
      tau[j] = slice_sample(tau[j], f(tau[j]), f, rng, std::max(0.0, lo), hi);
    }
    // (c) hyperparameters
    for (std::size_t h = 0; h < nh; ++h) {
      auto f = [&](double v) { return hyper_logf(h, v); };
      const auto [hlo, hhi] = support(hyperpriors[h]);
      theta[h] = slice_sample(theta[h], f(theta[h]), f, rng, hlo, hhi);
    }
    // (d) predictive draw
    const double pred = draw(*cond_dist(theta), rng);

    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      for (std::size_t h = 0; h < nh; ++h) out.hyper[h][slot] = theta[h];
      double dev = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        dev -= 2.0 * analysis_log_likelihood(c[j], mu[j], tau[j]);
        if (keep_latent) {
          out.mu[j][slot] = mu[j];
          out.tau[j][slot] = tau[j];
        }
      }
      out.deviance[slot] = dev;
      out.tau_pred[slot] = pred;
      ++slot;
    }
  }
  return out;
}

}  // namespace detail

struct RunOptions {
  /// Store mu_j / tau_j draws (needed for DIC plug-in and diagnostics).
  bool keep_latent = true;
};

/// Samples the joint posterior of the extended NNHM. Chain c uses the
/// generator seeded by derive_seed(cfg.seed, c); output is bit-identical for
/// identical inputs regardless of threading.
inline PosteriorSamples run_hierarchical(const MetaAnalysisCollection& c, const ModelSpec& m,
                                         const McmcConfig& cfg, RunOptions opt = {}) {
  if (c.size() == 0) throw ArgumentError("run_hierarchical: empty collection");
  m.validate();
  cfg.validate();
  const auto nc = static_cast<std::size_t>(cfg.chains);
  std::vector<detail::ChainResult> results(nc);
  std::vector<std::exception_ptr> errors(nc);
  auto work = [&](std::size_t k) {
    try {
      results[k] = detail::run_chain(c, m, cfg, derive_seed(cfg.seed, k), opt.keep_latent);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (cfg.parallel && nc > 1) {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < nc; ++k) pool.emplace_back(work, k);
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t k = 0; k < nc; ++k) work(k);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorSamples s;
  s.hyper_names = m.hyper_names();
  s.n_analyses = c.size();
  auto add = [&](std::string name, auto&& get) {
    PosteriorSamples::Trace t{std::move(name), {}};
    for (auto& r : results) t.chains.push_back(std::move(get(r)));
    s.traces.push_back(std::move(t));
  };
  for (std::size_t h = 0; h < s.hyper_names.size(); ++h) {
    add(s.hyper_names[h], [h](detail::ChainResult& r) -> std::vector<double>& { return r.hyper[h]; });
  }
  if (opt.keep_latent) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      add(mu_name(j), [j](detail::ChainResult& r) -> std::vector<double>& { return r.mu[j]; });
    }
    for (std::size_t j = 0; j < c.size(); ++j) {
      add(tau_name(j), [j](detail::ChainResult& r) -> std::vector<double>& { return r.tau[j]; });
    }
  }
  add("tau_pred", [](detail::ChainResult& r) -> std::vector<double>& { return r.tau_pred; });
  add("deviance", [](detail::ChainResult& r) -> std::vector<double>& { return r.deviance; });
  return s;
}

// ---------------------------------------------------------------------------
// Convergence diagnostics

struct ParamDiagnostic {
  std::string name;
  std::optional<double> rhat;
  double ess = 0.0;
};

struct Diagnostics {
  std::vector<ParamDiagnostic> params;
  std::vector<std::string> warnings;

  std::optional<double> max_rhat() const {
    std::optional<double> r;
    for (const auto& p : params) {
      if (p.rhat) r = std::max(r.value_or(0.0), *p.rhat);
    }
    return r;
  }
};

/// Split-R-hat and ESS for the hyperparameters, tau_pred and the first
/// `monitor_analyses` (mu_j, tau_j) pairs. Warns on R-hat > 1.01 or ESS < 400.
inline Diagnostics diagnostics(const PosteriorSamples& s, std::size_t monitor_analyses = 5) {
  std::vector<std::string> names = s.hyper_names;
  names.push_back("tau_pred");
  for (std::size_t j = 0; j < std::min(monitor_analyses, s.n_analyses); ++j) {
    if (s.find(mu_name(j))) names.push_back(mu_name(j));
    if (s.find(tau_name(j))) names.push_back(tau_name(j));
  }
  Diagnostics d;
  for (const auto& name : names) {
    const auto& t = s.at(name);
    ParamDiagnostic p{name, split_rhat(t.chains), effective_sample_size(t.chains)};
    if (!p.rhat) {
      d.warnings.push_back(name + ": split R-hat undefined (needs >= 2 chains)");
    } else if (*p.rhat > 1.01) {
      d.warnings.push_back(name + ": split R-hat " + std::to_string(*p.rhat) + " > 1.01");
    }
    if (p.ess < 400.0) d.warnings.push_back(name + ": effective sample size " + std::to_string(p.ess) + " < 400");
    d.params.push_back(std::move(p));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Draws CSV: chain,iter,parameter,value (1-based chain and iteration)

inline void write_samples_csv(const PosteriorSamples& s, std::ostream& os, bool include_latent = true) {
  os << "chain,iter,parameter,value\n";
  std::vector<const PosteriorSamples::Trace*> emit;
  for (const auto& t : s.traces) {
    const bool latent = t.name.starts_with("mu[") || t.name.starts_with("tau[");
    if (include_latent || !latent) emit.push_back(&t);
  }
  for (std::size_t c = 0; c < s.n_chains(); ++c) {
    for (std::size_t i = 0; i < s.n_kept(); ++i) {
      for (const auto* t : emit) {
        os << c + 1 << ',' << i + 1 << ',' << t->name << ',' << detail::format_double(t->chains[c][i]) << '\n';
      }
    }
  }
}

inline PosteriorSamples read_samples_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line) != "chain,iter,parameter,value") {
    throw FormatError("samples file must start with header 'chain,iter,parameter,value'");
  }
  std::map<std::string, std::size_t> index;
  PosteriorSamples s;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line, line_no);
    if (f.size() != 4) throw RecordError(line_no, "expected 4 fields");
    const auto chain = detail::parse_double(f[0]);
    const auto iter = detail::parse_double(f[1]);
    const auto value = detail::parse_double(f[3]);
    if (!chain || !iter || !value || *chain < 1 || *iter < 1) throw RecordError(line_no, "malformed draw");
    const std::string name(detail::trim(f[2]));
    auto [it, inserted] = index.emplace(name, s.traces.size());
    if (inserted) s.traces.push_back({name, {}});
    auto& tr = s.traces[it->second];
    const auto c = static_cast<std::size_t>(*chain) - 1;
    const auto i = static_cast<std::size_t>(*iter) - 1;
    if (tr.chains.size() <= c) tr.chains.resize(c + 1);
    if (tr.chains[c].size() != i) throw RecordError(line_no, "draws must be in iteration order");
    tr.chains[c].push_back(*value);
  }
  if (s.traces.empty()) throw FormatError("samples file has no draws");
  const auto nc = s.traces.front().chains.size();
  const auto nk = s.traces.front().chains.front().size();
  for (const auto& t : s.traces) {
    if (t.chains.size() != nc) throw FormatError("parameter '" + t.name + "' has a different chain count");
    for (const auto& ch : t.chains) {
      if (ch.size() != nk) throw FormatError("parameter '" + t.name + "' has ragged chains");
    }
    if (t.name.starts_with("mu[")) {
      ++s.n_analyses;
    } else if (!t.name.starts_with("tau[") && t.name != "tau_pred" && t.name != "deviance") {
      s.hyper_names.push_back(t.name);
    }
  }
  return s;
}

}  // namespace hetprior
