#pragma once

// Synthetic corpora drawn from the hierarchical model with known truth.

#include <string>
#include <vector>

#include "hetprior/data.hpp"
#include "hetprior/dist.hpp"
#include "hetprior/rng.hpp"

namespace hetprior {

struct SimulationSpec {
  std::size_t n_analyses = 30;
  std::size_t studies_per_analysis = 10;
  double std_err = 0.1;
  Distribution heterogeneity = HalfNormal(0.3);
  /// Effects mu_j ~ N(0, effect_sd^2).
  double effect_sd = 0.5;
};

/// y_ij ~ N(mu_j, std_err^2 + tau_j^2) with tau_j ~ heterogeneity; the draw
/// for (mu_j, tau_j) and the study-level noise all come from `rng`.
inline MetaAnalysisCollection simulate_collection(const SimulationSpec& spec, Rng& rng) {
  std::vector<MetaAnalysis> out;
  for (std::size_t j = 0; j < spec.n_analyses; ++j) {
    MetaAnalysis a{"sim" + std::to_string(j + 1), {}};
    const double mu = spec.effect_sd * rng.normal();
    const double tau = draw(spec.heterogeneity, rng);
    for (std::size_t i = 0; i < spec.studies_per_analysis; ++i) {
      const double theta = mu + tau * rng.normal();
      const double y = theta + spec.std_err * rng.normal();
      a.studies.push_back({a.id, std::to_string(i + 1), y, spec.std_err, static_cast<std::int64_t>(j)});
    }
    out.push_back(std::move(a));
  }
  return MetaAnalysisCollection(std::move(out));
}

}  // namespace hetprior
