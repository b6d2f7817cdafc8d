// hetprior: derive heterogeneity priors from historical meta-analyses and
// apply them to a new one.
//
//   hetprior validate CORPUS.csv
//   hetprior fit CORPUS.csv --family half-normal --seed 1
//   hetprior compare CORPUS.csv --families half-normal,exponential
//   hetprior approx OUT/samples.csv
//   hetprior analyze NEW.csv --prior "half-t(8.2,0.20)"
//   hetprior tau-estimates CORPUS.csv --method DL
//
// Exit status: 0 success, 2 input/configuration errors, 3 numerical failures.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetprior/data.hpp"
#include "hetprior/dic.hpp"
#include "hetprior/frequentist.hpp"
#include "hetprior/json_io.hpp"
#include "hetprior/metaanalysis.hpp"
#include "hetprior/sampler.hpp"
#include "hetprior/summarize.hpp"
#include "hetprior/svg.hpp"

namespace fs = std::filesystem;
using namespace hetprior;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct GlobalOptions {
  std::size_t subset_recent = 0;
  std::optional<std::uint64_t> seed;
  std::size_t chains = 4;
  std::size_t iters = 20000;
  std::size_t burnin = 5000;
  bool json = false;
  bool svg = false;
  std::string out = "hetprior-out";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string num(double v) { return detail::format_double(v); }

std::string fixed(std::optional<double> v, int digits = 3) {
  if (!v) return "undefined";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

void print_table(std::ostream& os, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      // first column left-aligned, numbers right-aligned
      const auto pad = std::string(width[c] - r[c].size(), ' ');
      os << (c == 0 ? r[c] + pad : pad + r[c]) << (c + 1 < r.size() ? "  " : "\n");
    }
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  os << std::string(total - 2, '-') << '\n';
  for (const auto& r : rows) line(r);
}

/// Output directory plus the run manifest that lists everything written.
class Run {
 public:
  Run(const GlobalOptions& g, std::string subcommand) : g_(g) {
    manifest_.tool_version = kToolVersion;
    manifest_.subcommand = std::move(subcommand);
    std::error_code ec;
    fs::create_directories(g_.out, ec);
    if (ec) throw InputError("cannot create output directory '" + g_.out + "': " + ec.message());
  }

  std::string input(const std::string& path) {
    auto bytes = read_file(path);
    manifest_.inputs.push_back({path, sha256_hex(bytes)});
    return bytes;
  }

  /// The --seed value, or a fresh one that is reported and recorded.
  std::uint64_t seed() {
    if (!manifest_.seed) {
      if (g_.seed) {
        manifest_.seed = *g_.seed;
      } else {
        std::random_device rd;
        manifest_.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        manifest_.seed_generated = true;
        std::cerr << "hetprior: generated seed " << *manifest_.seed << '\n';
      }
    }
    return *manifest_.seed;
  }

  McmcConfig mcmc() {
    McmcConfig c;
    c.chains = g_.chains;
    c.burn_in = g_.burnin;
    c.kept = g_.iters;
    c.seed = seed();
    return c;
  }

  Json& config() { return manifest_.config; }

  void write(const std::string& name, const std::string& content) {
    const auto path = fs::path(g_.out) / name;
    std::ofstream os(path, std::ios::binary);
    os << content;
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    manifest_.outputs.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  void finish() {
    manifest_.outputs.push_back("manifest.json");
    const auto path = fs::path(g_.out) / "manifest.json";
    std::ofstream os(path, std::ios::binary);
    os << to_json(manifest_).dump(2) << '\n';
    if (!os) throw InputError("cannot write '" + path.string() + "'");
  }

  const GlobalOptions& options() const { return g_; }

 private:
  const GlobalOptions& g_;
  RunManifest manifest_;
};

MetaAnalysisCollection load_collection(Run& run, const std::string& path) {
  auto c = parse_collection(run.input(path));
  const auto n = run.options().subset_recent;
  run.config()["subset_recent"] = n > 0 ? Json(n) : Json(nullptr);
  return n > 0 ? subset_recent(c, n) : c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = std::string(detail::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

double upper_plot_limit(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  return quantile_sorted(draws, 0.995);
}

// ---------------------------------------------------------------------------

struct ModelOptions {
  std::string family = "half-normal";
  std::string scale_prior = "uniform(0,10)";
  std::string shape_prior = "uniform(0,5)";
  double effect_prior_sd = 100.0;
};

ModelSpec make_model(const ModelOptions& o) {
  ModelSpec m;
  m.family = parse_het_family(o.family);
  m.scale_hyperprior = parse_distribution(o.scale_prior);
  m.shape_hyperprior = parse_distribution(o.shape_prior);
  m.effect_prior_sd = o.effect_prior_sd;
  m.validate();
  return m;
}

void add_model_options(CLI::App* cmd, ModelOptions& o, bool with_family) {
  if (with_family) {
    cmd->add_option("--family", o.family, "half-normal, exponential, half-cauchy or log-normal")
        ->capture_default_str();
  }
  cmd->add_option("--scale-prior", o.scale_prior, "hyperprior of the scale parameter")->capture_default_str();
  cmd->add_option("--shape-prior", o.shape_prior, "hyperprior of the log-normal shape")->capture_default_str();
  cmd->add_option("--effect-prior-sd", o.effect_prior_sd, "sd of the normal prior on each mu_j")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------
// validate

void cmd_validate(Run& run, const std::string& path) {
  const auto c = load_collection(run, path);
  const auto report = validate_collection(c);
  const auto j = to_json(report);
  run.write_json("summary.json", j);
  if (run.options().json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << report.n_analyses << " analyses, " << report.n_studies << " studies\n\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : report.analyses) rows.push_back({a.analysis_id, std::to_string(a.k)});
    print_table(std::cout, {"analysis_id", "k"}, rows);
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------
// fit

void cmd_fit(Run& run, const std::string& path, const ModelOptions& mo, bool latent) {
  const auto c = load_collection(run, path);
  const auto m = make_model(mo);
  const auto cfg = run.mcmc();
  run.config()["model"] = to_json(m);
  run.config()["mcmc"] = to_json(cfg);
  run.config()["latent_draws"] = latent;

  const auto s = run_hierarchical(c, m, cfg);
  const auto diag = diagnostics(s);
  auto j = posterior_summary_json(s, m.family, diag);
  j["n_analyses"] = c.size();
  j["n_studies"] = c.total_studies();
  j["dic"] = to_json(compute_dic(s, c, to_string(m.family)));
  run.write_json("summary.json", j);

  std::ostringstream csv;
  write_samples_csv(s, csv, latent);
  run.write("samples.csv", csv.str());

  const auto pred = s.pooled("tau_pred");
  if (run.options().svg) {
    for (const auto& h : s.hyper_names) {
      const auto draws = s.pooled(h);
      run.write("posterior_" + h + ".svg",
                svg::histogram("posterior of " + h, h, draws, upper_plot_limit(draws), {}));
    }
    std::vector<double> theta;
    for (const auto& h : s.hyper_names) theta.push_back(empirical_quantile(s.pooled(h), 0.5));
    const auto plug = het_distribution(m.family, theta);
    const double xmax = upper_plot_limit(pred);
    run.write("predictive.svg",
              svg::histogram("predictive heterogeneity tau*", "tau", pred, xmax,
                             {svg::density_series(to_string(plug) + " (posterior median)", plug, 0.0, xmax)}));
  }

  if (run.options().json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << to_string(m.family) << " model, " << c.size() << " analyses, " << cfg.chains << " chains x "
              << cfg.kept << " draws\n\n";
    std::vector<std::vector<std::string>> rows;
    auto row = [&](const std::string& name, const Json& r) {
      auto cell = [&](const char* k) { return r[k].is_null() ? std::string("undefined") : fixed(r[k].get<double>()); };
      rows.push_back({name, cell("mean"), cell("sd"), cell("median"), cell("q95"), cell("q99")});
    };
    for (const auto& h : s.hyper_names) row(h, j["hyperparameters"][h]);
    row("tau*", j["tau_pred"]);
    print_table(std::cout, {"parameter", "mean", "sd", "median", "q95", "q99"}, rows);
    std::cout << "\nDIC " << fixed(j["dic"]["dic"].get<double>(), 2) << " (pD "
              << fixed(j["dic"]["p_d"].get<double>(), 2) << "), max R-hat " << fixed(diag.max_rhat()) << '\n';
  }
  for (const auto& w : diag.warnings) std::cerr << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------
// compare

void cmd_compare(Run& run, const std::string& path, const ModelOptions& mo, const std::string& families) {
  const auto c = load_collection(run, path);
  const auto templ = make_model(mo);
  std::vector<HetFamily> fams;
  for (const auto& f : split_list(families)) fams.push_back(parse_het_family(f));
  const auto cfg = run.mcmc();
  Json fam_json = Json::array();
  for (auto f : fams) fam_json.push_back(to_string(f));
  run.config()["families"] = fam_json;
  run.config()["model"] = to_json(templ);
  run.config()["mcmc"] = to_json(cfg);

  const auto rows = compare_models(c, fams, templ, cfg);
  Json j = document("model-comparison");
  j["n_analyses"] = c.size();
  Json list = Json::array();
  for (const auto& r : rows) list.push_back(to_json(r));
  j["models"] = list;
  run.write_json("dic.json", j);

  if (run.options().json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows) {
      if (!r.dic) {
        table.push_back({to_string(r.family), "failed", "", "", "", "", "", ""});
        continue;
      }
      table.push_back({to_string(r.family), fixed(r.dic->dic, 2), fixed(r.dic->p_d, 2), fixed(r.pred_mean),
                       fixed(r.pred_sd), fixed(r.pred_median), fixed(r.pred_q95), fixed(r.pred_q99)});
    }
    print_table(std::cout, {"model", "DIC", "pD", "mean", "sd", "median", "q95", "q99"}, table);
  }
  for (const auto& r : rows) {
    if (r.error) std::cerr << "warning: " << to_string(r.family) << " fit failed: " << *r.error << '\n';
  }
}

// ---------------------------------------------------------------------------
// approx

struct ApproxOptions {
  std::string family;
  std::string methods;
  std::string fit_families = "half-t,lomax,log-normal,half-cauchy";
};

void cmd_approx(Run& run, const std::string& path, const ApproxOptions& o) {
  const auto bytes = run.input(path);
  std::istringstream in(bytes);
  const auto s = read_samples_csv(in);
  const std::string source = "sha256:" + sha256_hex(bytes).substr(0, 16);

  std::string family_text = o.family;
  if (family_text.empty()) {
    const auto sibling = (fs::path(path).parent_path() / "summary.json").string();
    if (!fs::exists(sibling)) {
      throw ConfigError("--family not given and no summary.json next to '" + path + "'");
    }
    try {
      family_text = Json::parse(run.input(sibling)).at("family").get<std::string>();
    } catch (const Json::exception& e) {
      throw FormatError("'" + sibling + "': " + e.what());
    }
  }
  const auto family = parse_het_family(family_text);
  std::string methods = o.methods;
  if (methods.empty()) {
    methods = family == HetFamily::HalfCauchy ? "point-mean,point-median,point-q95,ml"
                                              : "point-mean,point-median,point-q95,mixture,ml";
  }
  run.config()["family"] = to_string(family);
  run.config()["methods"] = split_list(methods);
  run.config()["fit_families"] = split_list(o.fit_families);

  const auto pred = s.pooled("tau_pred");
  std::vector<PriorSpec> specs;
  std::vector<std::string> warnings;
  for (const auto& m : split_list(methods)) {
    if (m.rfind("point-", 0) == 0) {
      specs.push_back(point_estimate_prior(s, family, parse_point_statistic(m.substr(6)), source));
    } else if (m == "mixture") {
      specs.push_back(mixture_match_prior(s, family, source));
    } else if (m == "ml" || m == "moments") {
      for (const auto& f : split_list(o.fit_families)) {
        const auto ff = parse_fit_family(f);
        try {
          specs.push_back(m == "ml" ? fit_predictive_ml(pred, ff, source) : fit_predictive_moments(pred, ff, source));
        } catch (const NumericalError& e) {
          warnings.push_back(m + " fit of " + f + " skipped: " + e.what());
        }
      }
    } else {
      throw ConfigError("unknown method '" + m + "' (point-mean, point-median, point-q95, mixture, ml, moments)");
    }
  }
  if (specs.empty()) throw ConfigError("approx: no prior could be derived");

  const auto table = approximation_table(specs, pred);
  Json j = document("priors");
  j["family"] = to_string(family);
  j["source"] = source;
  Json list = Json::array();
  for (const auto& p : specs) list.push_back(to_json(p));
  j["priors"] = list;
  Json rows = Json::array();
  for (const auto& r : table) rows.push_back(to_json(r));
  j["table"] = rows;
  j["warnings"] = warnings;
  run.write_json("priors.json", j);

  if (run.options().svg) {
    const double xmax = upper_plot_limit(pred);
    std::vector<svg::Series> overlays;
    for (const auto& p : specs) overlays.push_back(svg::density_series(p.text(), p.rounded(), 0.0, xmax));
    run.write("approx.svg", svg::histogram("predictive tau* and derived priors", "tau", pred, xmax, overlays));
  }

  if (run.options().json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::vector<std::vector<std::string>> out;
    const std::size_t offset = table.size() - specs.size();
    for (std::size_t i = 0; i < table.size(); ++i) {
      std::string method = "empirical";
      if (i >= offset) {
        const auto& p = specs[i - offset];
        method = p.statistic ? "point-" + to_string(*p.statistic) : to_string(p.method);
      }
      const auto& r = table[i];
      out.push_back({method, r.label, fixed(r.mean), fixed(r.sd), fixed(r.median), fixed(r.q95), fixed(r.q99)});
    }
    print_table(std::cout, {"method", "distribution", "mean", "sd", "median", "q95", "q99"}, out);
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::vector<std::string> priors;
  std::string mu_prior = "flat";
  std::string analysis;
};

EffectPrior parse_effect_prior(const std::string& text) {
  if (text == "flat") return std::nullopt;
  const auto d = parse_distribution(text);
  if (const auto* n = std::get_if<Normal>(&d)) return *n;
  throw ConfigError("--mu-prior must be 'flat' or normal(mean,sd), got '" + text + "'");
}

void cmd_analyze(Run& run, const std::string& path, const AnalyzeOptions& o) {
  const auto c = load_collection(run, path);
  const MetaAnalysis* a = nullptr;
  if (!o.analysis.empty()) {
    for (const auto& x : c.analyses()) {
      if (x.id == o.analysis) a = &x;
    }
    if (!a) throw InputError("analysis_id '" + o.analysis + "' not found in '" + path + "'");
  } else if (c.size() == 1) {
    a = &c[0];
  } else {
    throw InputError("'" + path + "' holds " + std::to_string(c.size()) + " analyses; choose one with --analysis");
  }
  const SingleMeta sm(*a);
  const auto mu_prior = parse_effect_prior(o.mu_prior);
  std::vector<Distribution> priors;
  for (const auto& p : o.priors) priors.push_back(parse_distribution(p));
  run.config()["analysis_id"] = a->id;
  Json prior_json = Json::array();
  for (const auto& p : priors) prior_json.push_back(to_string(p));
  run.config()["priors"] = prior_json;
  run.config()["mu_prior"] = mu_prior ? Json(to_string(Distribution(*mu_prior))) : Json("flat");

  std::vector<MetaAnalysisResult> results;
  std::vector<TauPosterior> tau_posts;
  for (const auto& p : priors) {
    results.push_back(bayes_ma(sm, p, mu_prior));
    tau_posts.push_back(tau_marginal(sm, p, mu_prior));
  }

  const bool freq = sm.k() >= 2;
  DlEstimate dl;
  double pm = 0.0;
  CiSuite ci;
  if (freq) {
    dl = dl_estimate(sm);
    pm = pm_estimate(sm);
    ci = ci_suite(sm, dl.tau);
  }

  // forest rows: quantity,label,type,estimate,lo,hi,weight
  struct Row {
    std::string quantity, label, type;
    double estimate, lo, hi;
    std::optional<double> weight;
  };
  std::vector<Row> rows;
  const double z = quantile(Normal(0.0, 1.0), 0.975);
  double sw = 0.0;
  for (std::size_t i = 0; i < sm.k(); ++i) sw += 1.0 / (sm.se()[i] * sm.se()[i] + dl.tau * dl.tau);
  for (std::size_t i = 0; i < sm.k(); ++i) {
    const double y = sm.y()[i], se = sm.se()[i];
    const double w = 100.0 / (se * se + dl.tau * dl.tau) / sw;
    rows.push_back({"mu", a->studies[i].study_id, "study", y, y - z * se, y + z * se, w});
  }
  for (const auto& r : results) {
    rows.push_back({"mu", "Bayes " + r.prior, "posterior", r.mu.median, r.mu.lo95, r.mu.hi95, std::nullopt});
  }
  if (freq) {
    for (const auto* i : {&ci.normal, &ci.hksj, &ci.mkh}) {
      rows.push_back({"mu", i->label + " (DL)", "frequentist", i->estimate, i->lo, i->hi, std::nullopt});
    }
  }
  for (std::size_t p = 0; p < priors.size(); ++p) {
    const auto& d = priors[p];
    rows.push_back({"tau", "prior " + to_string(d), "prior", quantile(d, 0.5), quantile(d, 0.025), quantile(d, 0.975),
                    std::nullopt});
    const auto& t = results[p].tau;
    rows.push_back({"tau", "posterior " + to_string(d), "posterior", t.median, t.lo95, t.hi95, std::nullopt});
  }
  if (freq) {
    rows.push_back({"tau", "DL", "frequentist", dl.tau, dl.tau, dl.tau, std::nullopt});
    rows.push_back({"tau", "PM", "frequentist", pm, pm, pm, std::nullopt});
  }

  std::string forest = "quantity,label,type,estimate,lo,hi,weight\n";
  for (const auto& r : rows) {
    forest += r.quantity + ',' + detail::csv_field(r.label) + ',' + r.type + ',' + num(r.estimate) + ',' + num(r.lo) +
              ',' + num(r.hi) + ',' + (r.weight ? num(*r.weight) : "") + '\n';
  }
  run.write("forest.csv", forest);

  std::string tau_csv = "prior,kind,tau,density\n", mu_csv = "prior,mu,density\n";
  for (std::size_t p = 0; p < priors.size(); ++p) {
    const auto label = detail::csv_field(to_string(priors[p]));
    const auto& g = results[p].tau.density;
    for (std::size_t i = 0; i < g.x.size(); ++i) tau_csv += label + ",prior," + num(g.x[i]) + ',' + num(density(priors[p], g.x[i])) + '\n';
    for (std::size_t i = 0; i < g.x.size(); ++i) tau_csv += label + ",posterior," + num(g.x[i]) + ',' + num(g.density[i]) + '\n';
    const auto& mg = results[p].mu.density;
    for (std::size_t i = 0; i < mg.x.size(); ++i) mu_csv += label + ',' + num(mg.x[i]) + ',' + num(mg.density[i]) + '\n';
  }
  run.write("density_tau.csv", tau_csv);
  run.write("density_mu.csv", mu_csv);

  Json j = document("meta-analysis");
  j["analysis_id"] = a->id;
  j["k"] = sm.k();
  j["mu_prior"] = run.config()["mu_prior"];
  Json studies = Json::array();
  for (std::size_t i = 0; i < sm.k(); ++i) {
    studies.push_back({{"study_id", a->studies[i].study_id}, {"estimate", sm.y()[i]}, {"std_err", sm.se()[i]}});
  }
  j["studies"] = studies;
  Json bayes = Json::array();
  for (const auto& r : results) bayes.push_back(to_json(r, false));
  j["bayes"] = bayes;
  if (freq) {
    j["frequentist"] = {{"tau_dl", dl.tau},
                        {"q", dl.q},
                        {"tau_pm", pm},
                        {"intervals", Json::array({to_json(ci.normal), to_json(ci.hksj), to_json(ci.mkh)})}};
  } else {
    j["frequentist"] = nullptr;
  }
  run.write_json("summary.json", j);

  if (run.options().svg) {
    std::vector<svg::ForestRow> mu_rows;
    for (const auto& r : rows) {
      if (r.quantity == "mu") mu_rows.push_back({r.label, r.estimate, r.lo, r.hi, r.type});
    }
    run.write("forest.svg", svg::forest("effect mu, 95% intervals", "mu", mu_rows));
    std::vector<svg::Series> tau_series, mu_series;
    double tmax = 0.0;
    for (std::size_t p = 0; p < priors.size(); ++p) {
      tmax = std::max(tmax, quantile(priors[p], 0.995));
      const auto& g = results[p].tau.density;
      svg::Series prior{"prior " + to_string(priors[p]), g.x, {}};
      for (double x : g.x) prior.y.push_back(density(priors[p], x));
      tau_series.push_back(std::move(prior));
      tau_series.push_back({"posterior " + to_string(priors[p]), g.x, g.density});
      mu_series.push_back({"posterior " + to_string(priors[p]), results[p].mu.density.x, results[p].mu.density.density});
    }
    run.write("density_tau.svg", svg::densities("heterogeneity tau", "tau", 0.0, tmax, tau_series));
    double lo = 0.0, hi = 0.0;
    for (const auto& r : results) {
      const double w = r.mu.hi95 - r.mu.lo95;
      lo = std::min(lo, r.mu.lo95 - 0.5 * w);
      hi = std::max(hi, r.mu.hi95 + 0.5 * w);
    }
    run.write("density_mu.svg", svg::densities("effect mu", "mu", lo, hi, mu_series));
  }

  if (run.options().json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::vector<std::vector<std::string>> table;
    for (const auto& r : rows) {
      table.push_back({r.quantity, r.label, r.type, fixed(r.estimate), fixed(r.lo), fixed(r.hi),
                       r.weight ? fixed(*r.weight, 1) : ""});
    }
    print_table(std::cout, {"quantity", "label", "type", "estimate", "lo", "hi", "weight%"}, table);
  }
  if (!freq) std::cerr << "note: a single study admits no frequentist heterogeneity estimate\n";
}

// ---------------------------------------------------------------------------
// tau-estimates

void cmd_tau_estimates(Run& run, const std::string& path, const std::string& method, const std::string& overlay) {
  const auto c = load_collection(run, path);
  TauEstimator est;
  if (method == "DL" || method == "dl") {
    est = TauEstimator::DL;
  } else if (method == "PM" || method == "pm") {
    est = TauEstimator::PM;
  } else {
    throw ConfigError("--method must be DL or PM, got '" + method + "'");
  }
  run.config()["method"] = est == TauEstimator::DL ? "DL" : "PM";
  run.config()["overlay"] = overlay.empty() ? Json(nullptr) : Json(overlay);

  const auto r = tau_estimate_collection(c, est);
  const auto j = to_json(r, est);
  run.write_json("summary.json", j);
  std::string csv = "analysis_id,tau\n";
  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    csv += detail::csv_field(r.analysis_ids[i]) + ',' + num(r.estimates[i]) + '\n';
  }
  run.write("tau_estimates.csv", csv);

  if (run.options().svg && !r.estimates.empty()) {
    double xmax = *std::max_element(r.estimates.begin(), r.estimates.end());
    std::vector<svg::Series> overlays;
    if (!overlay.empty()) {
      const auto d = parse_distribution(overlay);
      xmax = std::max(xmax, quantile(d, 0.99));
      overlays.push_back(svg::density_series(to_string(d), d, 0.0, xmax * 1.05));
    }
    if (!(xmax > 0.0)) xmax = 1.0;
    run.write("tau_estimates.svg", svg::histogram(std::string(j["method"]) + " heterogeneity estimates", "tau",
                                                  r.estimates, xmax * 1.05, overlays, 30));
  }

  if (run.options().json) {
    std::cout << j.dump(2) << '\n';
  } else {
    print_table(std::cout, {"method", "n", "fraction zero", "mean", "median"},
                {{std::string(j["method"]), std::to_string(r.estimates.size()), fixed(r.fraction_zero),
                  fixed(r.mean), fixed(r.median)}});
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneity priors from historical meta-analyses"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  // global flags are accepted before or after the subcommand
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--subset-recent", g.subset_recent, "use only the N most recent analyses")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "master random seed (generated and recorded when omitted)");
  app.add_option("--chains", g.chains, "MCMC chains")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--iters", g.iters, "kept MCMC iterations per chain")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--burnin", g.burnin, "burn-in iterations per chain")->capture_default_str();
  app.add_flag("--json", g.json, "print JSON instead of text tables");
  app.add_flag("--svg", g.svg, "also write SVG figures");
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  std::string input;
  ModelOptions mo;
  bool latent = false;
  auto* validate = app.add_subcommand("validate", "check an input CSV and list its analyses");
  validate->add_option("input", input, "corpus CSV")->required();

  auto* fit = app.add_subcommand("fit", "fit the hierarchical heterogeneity model by MCMC");
  fit->add_option("input", input, "corpus CSV")->required();
  add_model_options(fit, mo, true);
  fit->add_flag("--latent-draws", latent, "include per-analysis mu/tau draws in samples.csv");

  std::string families = "half-normal,exponential,log-normal,half-cauchy";
  auto* compare = app.add_subcommand("compare", "compare heterogeneity families by DIC");
  compare->add_option("input", input, "corpus CSV")->required();
  compare->add_option("--families", families, "comma-separated families")->capture_default_str();
  add_model_options(compare, mo, false);

  ApproxOptions ao;
  auto* approx = app.add_subcommand("approx", "condense predictive draws into parametric priors");
  approx->add_option("samples", input, "samples.csv written by fit")->required();
  approx->add_option("--family", ao.family, "model family (default: read from summary.json next to the samples)");
  approx->add_option("--methods", ao.methods, "point-mean, point-median, point-q95, mixture, ml, moments");
  approx->add_option("--fit-families", ao.fit_families, "families for ml/moments fits")->capture_default_str();

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Bayesian random-effects meta-analysis with given priors");
  analyze->add_option("input", input, "CSV of the new meta-analysis")->required();
  analyze->add_option("--prior", an.priors, "heterogeneity prior, e.g. half-t(8.2,0.20); repeatable")->required();
  analyze->add_option("--mu-prior", an.mu_prior, "'flat' or normal(mean,sd)")->capture_default_str();
  analyze->add_option("--analysis", an.analysis, "analysis_id to use when the file holds several");

  std::string method = "DL", overlay;
  auto* tau_est = app.add_subcommand("tau-estimates", "per-analysis DL or PM heterogeneity estimates");
  tau_est->add_option("input", input, "corpus CSV")->required();
  tau_est->add_option("--method", method, "DL or PM")->capture_default_str();
  tau_est->add_option("--overlay", overlay, "prior density drawn over the SVG histogram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto* sub = app.get_subcommands().front();
    Run run(g, sub->get_name());
    if (sub == validate) {
      cmd_validate(run, input);
    } else if (sub == fit) {
      cmd_fit(run, input, mo, latent);
    } else if (sub == compare) {
      cmd_compare(run, input, mo, families);
    } else if (sub == approx) {
      cmd_approx(run, input, ao);
    } else if (sub == analyze) {
      cmd_analyze(run, input, an);
    } else {
      cmd_tau_estimates(run, input, method, overlay);
    }
    run.finish();
  } catch (const NumericalError& e) {
    std::cerr << "hetprior: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "hetprior: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
