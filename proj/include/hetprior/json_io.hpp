#pragma once

// JSON views of the library's result types. Every top-level document carries
// `schema_version`; numbers are written in shortest round-trip form, so equal
// values always produce equal bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hetprior/data.hpp"
#include "hetprior/dic.hpp"
#include "hetprior/dist.hpp"
#include "hetprior/frequentist.hpp"
#include "hetprior/metaanalysis.hpp"
#include "hetprior/sampler.hpp"
#include "hetprior/stats.hpp"
#include "hetprior/summarize.hpp"

namespace hetprior {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline Json document(const std::string& kind) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = kind;
  return j;
}

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json to_json(const Distribution& d) {
  return {{"family", family_name(d)}, {"params", parameters(d)}, {"text", to_string(d)}};
}

inline Distribution distribution_from_json(const Json& j) {
  try {
    return make_distribution(j.at("family").get<std::string>(), j.at("params").get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw FormatError(std::string("distribution JSON: ") + e.what());
  }
}

inline Json to_json(const DrawSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"q95", s.q95}, {"q99", s.q99}};
}

inline Json to_json(const ValidationReport& r) {
  Json j = document("validation");
  j["n_analyses"] = r.n_analyses;
  j["n_studies"] = r.n_studies;
  Json list = Json::array();
  for (const auto& a : r.analyses) list.push_back({{"analysis_id", a.analysis_id}, {"k", a.k}});
  j["analyses"] = list;
  j["warnings"] = r.warnings;
  return j;
}

inline Json to_json(const PriorSpec& p) {
  Json j = to_json(p.distribution);
  j["method"] = to_string(p.method);
  j["statistic"] = p.statistic ? Json(to_string(*p.statistic)) : Json(nullptr);
  j["source"] = p.source;
  const auto r = p.rounded();
  j["rounded"] = {{"decimals", p.rounding}, {"params", parameters(r)}, {"text", to_string(r)}};
  j["conservative"] = p.conservative;
  j["effectively_half_normal"] = p.effectively_half_normal;
  j["log_likelihood"] = optional_json(p.log_likelihood);
  return j;
}

inline Json to_json(const ParamDiagnostic& d) {
  return {{"parameter", d.name}, {"rhat", optional_json(d.rhat)}, {"ess", d.ess}};
}

inline Json to_json(const Diagnostics& d) {
  Json params = Json::array();
  for (const auto& p : d.params) params.push_back(to_json(p));
  return {{"parameters", params}, {"warnings", d.warnings}};
}

/// Posterior summary of a hierarchical run: hyperparameters and tau*.
inline Json posterior_summary_json(const PosteriorSamples& s, HetFamily family, const Diagnostics& diag) {
  Json j = document("posterior-summary");
  j["family"] = to_string(family);
  j["chains"] = s.n_chains();
  j["draws_per_chain"] = s.n_kept();
  Json hyper = Json::object();
  for (const auto& h : s.hyper_names) hyper[h] = to_json(summarize_samples(s.pooled(h)));
  j["hyperparameters"] = hyper;
  auto pred = to_json(summarize_samples(s.pooled("tau_pred")));
  if (family == HetFamily::HalfCauchy) {
    pred["mean"] = nullptr;
    pred["sd"] = nullptr;
  }
  j["tau_pred"] = pred;
  j["diagnostics"] = to_json(diag);
  return j;
}

inline Json to_json(const DicResult& r) {
  return {{"family", r.family},
          {"dic", r.dic},
          {"p_d", r.p_d},
          {"mean_deviance", r.mean_deviance},
          {"plug_in_deviance", r.plug_in_deviance}};
}

inline Json to_json(const ModelComparisonRow& r) {
  Json j;
  j["model"] = to_string(r.family);
  j["dic"] = r.dic ? Json(r.dic->dic) : Json(nullptr);
  j["p_d"] = r.dic ? Json(r.dic->p_d) : Json(nullptr);
  j["mean_deviance"] = r.dic ? Json(r.dic->mean_deviance) : Json(nullptr);
  j["plug_in_deviance"] = r.dic ? Json(r.dic->plug_in_deviance) : Json(nullptr);
  j["pred_mean"] = optional_json(r.pred_mean);
  j["pred_sd"] = optional_json(r.pred_sd);
  j["pred_median"] = r.dic ? Json(r.pred_median) : Json(nullptr);
  j["pred_q95"] = r.dic ? Json(r.pred_q95) : Json(nullptr);
  j["pred_q99"] = r.dic ? Json(r.pred_q99) : Json(nullptr);
  j["error"] = optional_json(r.error);
  return j;
}

inline Json to_json(const ApproximationRow& r) {
  return {{"label", r.label},         {"mean", optional_json(r.mean)}, {"sd", optional_json(r.sd)},
          {"median", r.median},       {"q95", r.q95},                  {"q99", r.q99}};
}

inline Json to_json(const LabeledInterval& i) {
  return {{"label", i.label}, {"estimate", i.estimate}, {"lo", i.lo}, {"hi", i.hi}};
}

inline Json to_json(const GridDensity& g) { return {{"x", g.x}, {"density", g.density}}; }

inline Json to_json(const MetaAnalysisResult& r, bool include_densities = true) {
  Json j;
  j["prior"] = r.prior;
  Json mu = {{"mean", r.mu.mean}, {"median", r.mu.median}, {"sd", r.mu.sd}, {"lo95", r.mu.lo95}, {"hi95", r.mu.hi95}};
  Json tau = {{"median", r.tau.median}, {"lo95", r.tau.lo95}, {"hi95", r.tau.hi95}};
  if (include_densities) {
    mu["density"] = to_json(r.mu.density);
    tau["density"] = to_json(r.tau.density);
  }
  j["mu"] = mu;
  j["tau"] = tau;
  Json comps = Json::array();
  if (r.has_comparators) {
    for (const auto* i : {&r.comparators.normal, &r.comparators.hksj, &r.comparators.mkh}) comps.push_back(to_json(*i));
  }
  j["comparators"] = comps;
  j["tau_dl"] = r.has_comparators ? Json(r.tau_dl) : Json(nullptr);
  return j;
}

inline Json to_json(const TauEstimates& t, TauEstimator method) {
  Json j = document("tau-estimates");
  j["method"] = method == TauEstimator::DL ? "DL" : "PM";
  Json rows = Json::array();
  for (std::size_t i = 0; i < t.estimates.size(); ++i) {
    rows.push_back({{"analysis_id", t.analysis_ids[i]}, {"tau", t.estimates[i]}});
  }
  j["estimates"] = rows;
  j["n"] = t.estimates.size();
  j["fraction_zero"] = t.fraction_zero;
  j["mean"] = t.mean;
  j["median"] = t.median;
  j["warnings"] = t.warnings;
  return j;
}

inline Json to_json(const ModelSpec& m) {
  Json j;
  j["family"] = to_string(m.family);
  if (m.fixed_tau_prior) {
    j["tau_prior"] = to_json(*m.fixed_tau_prior);
  } else {
    j["scale_hyperprior"] = to_json(m.scale_hyperprior);
    if (m.family == HetFamily::LogNormal) j["shape_hyperprior"] = to_json(m.shape_hyperprior);
  }
  j["effect_prior_mean"] = m.effect_prior_mean;
  j["effect_prior_sd"] = std::isfinite(m.effect_prior_sd) ? Json(m.effect_prior_sd) : Json("flat");
  return j;
}

inline Json to_json(const McmcConfig& c) {
  return {{"chains", c.chains}, {"burn_in", c.burn_in}, {"kept", c.kept}, {"thin", c.thin}, {"seed", c.seed}};
}

/// Everything needed to reproduce a CLI run.
struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  struct Input {
    std::string path;
    std::string sha256;
  };
  std::vector<Input> inputs;
  Json config = Json::object();
  /// Absent for deterministic subcommands.
  std::optional<std::uint64_t> seed;
  bool seed_generated = false;
  std::vector<std::string> outputs;
};

inline Json to_json(const RunManifest& m) {
  Json j = document("run-manifest");
  j["tool"] = "hetprior";
  j["tool_version"] = m.tool_version;
  j["subcommand"] = m.subcommand;
  Json in = Json::array();
  for (const auto& i : m.inputs) in.push_back({{"path", i.path}, {"sha256", i.sha256}});
  j["inputs"] = in;
  j["config"] = m.config;
  j["seed"] = optional_json(m.seed);
  j["seed_generated"] = m.seed_generated;
  j["outputs"] = m.outputs;
  return j;
}

}  // namespace hetprior
