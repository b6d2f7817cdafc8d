#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hetprior/error.hpp"

namespace hetprior {

struct DrawSummary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
};

/// Type-7 (linear interpolation) empirical quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ArgumentError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double empirical_quantile(std::span<const double> draws, double p) {
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

inline double sample_mean(std::span<const double> x) {
  if (x.empty()) throw ArgumentError("mean of empty sample");
  // shifted by the first value, so constant samples give that value exactly
  const double x0 = x.front();
  double s = 0.0;
  for (double v : x) s += v - x0;
  return x0 + s / static_cast<double>(x.size());
}

/// Sample variance with the n-1 divisor (two-pass).
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw ArgumentError("variance needs at least two values");
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline DrawSummary summarize_samples(std::span<const double> draws) {
  if (draws.empty()) throw ArgumentError("summarize_samples: empty input");
  if (draws.size() < 2) throw ArgumentError("summarize_samples: need at least two draws");
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  DrawSummary out;
  out.mean = sample_mean(draws);
  out.sd = std::sqrt(sample_variance(draws));
  out.median = quantile_sorted(s, 0.5);
  out.q95 = quantile_sorted(s, 0.95);
  out.q99 = quantile_sorted(s, 0.99);
  return out;
}

/// Split-R-hat (each chain halved, middle draw dropped for odd lengths).
/// Undefined for fewer than two chains.
inline std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) return std::nullopt;
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const std::size_t half = n / 2;
  if (half < 2) return std::nullopt;
  std::vector<std::span<const double>> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.data(), half);
    parts.emplace_back(c.data() + (n - half), half);
  }
  const double m = static_cast<double>(parts.size());
  const double len = static_cast<double>(half);
  std::vector<double> means, vars;
  for (auto p : parts) {
    means.push_back(sample_mean(p));
    vars.push_back(sample_variance(p));
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= len / (m - 1.0);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  if (w == 0.0) return b == 0.0 ? std::optional<double>(1.0) : std::nullopt;
  const double var_plus = (len - 1.0) / len * w + b / len;
  return std::sqrt(var_plus / w);
}

/// Multi-chain effective sample size with Geyer's initial monotone sequence
/// estimator applied to the combined autocorrelation.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return 0.0;
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const double m = static_cast<double>(chains.size());
  if (n < 4) return m * static_cast<double>(n);
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    std::span<const double> s(c.data(), n);
    means.push_back(sample_mean(s));
    vars.push_back(sample_variance(s));
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b = chains.size() > 1 ? b * static_cast<double>(n) / (m - 1.0) : 0.0;
  const double nd = static_cast<double>(n);
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  if (var_plus <= 0.0) return m * nd;

  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const auto& x = chains[c];
      double s = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - means[c]) * (x[t + lag] - means[c]);
      acc += s / nd;
    }
    return acc / m;
  };
  auto rho = [&](std::size_t lag) {
    const double w_lag = autocov(lag) * nd / (nd - 1.0);
    return 1.0 - (w - w_lag) / var_plus;
  };

  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(m * nd));
  return m * nd / tau;
}

}  // namespace hetprior
