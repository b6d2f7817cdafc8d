// Acceptance run: one PASS / FAIL / SKIP line per criterion; exits non-zero
// if anything fails.
//
//   acceptance --cli path/to/hetprior --workdir scratch/
//
// Criterion 4 needs the 40-analysis log-OR corpus in the library's CSV
// schema; it is looked up in $HETPRIOR_SEIDE_CSV, then tests/data/seide2018.csv.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetprior/data.hpp"
#include "hetprior/dic.hpp"
#include "hetprior/dist.hpp"
#include "hetprior/frequentist.hpp"
#include "hetprior/metaanalysis.hpp"
#include "hetprior/sampler.hpp"
#include "hetprior/simulate.hpp"
#include "hetprior/summarize.hpp"

namespace fs = std::filesystem;
using namespace hetprior;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

/// Collects failed checks; the outcome passes when none failed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.4f (want %.4f +- %.4f)", what.c_str(), got, want, tol);
    expect(std::abs(got - want) <= tol, buf);
  }
  Outcome outcome(const std::string& pass_detail) const {
    if (failures_.empty()) return {Status::Pass, pass_detail};
    std::string d;
    for (std::size_t i = 0; i < failures_.size(); ++i) d += (i ? "; " : "") + failures_[i];
    return {Status::Fail, d};
  }

 private:
  std::vector<std::string> failures_;
};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// ---------------------------------------------------------------------------

Outcome analytic_tables() {
  struct Row {
    const char* text;
    std::optional<double> mean, sd;
    double median, q95, q99;
  };
  const Row rows[] = {
      {"half-normal(0.22)", 0.18, 0.13, 0.15, 0.43, 0.57},
      {"half-t(8.2,0.20)", 0.18, 0.15, 0.14, 0.46, 0.67},
      {"lomax(9.9,1.5)", 0.17, 0.19, 0.11, 0.53, 0.89},
      {"log-normal(-2.6,1.7)", 0.32, 1.30, 0.07, 1.22, 3.88},
      {"half-cauchy(0.10)", std::nullopt, std::nullopt, 0.10, 1.27, 6.37},
  };
  Checks c;
  for (const auto& r : rows) {
    const auto d = parse_distribution(r.text);
    const auto m = moments(d);
    const std::string t = r.text;
    c.expect(m.mean.has_value() == r.mean.has_value(), t + " mean definedness");
    c.expect(m.sd.has_value() == r.sd.has_value(), t + " sd definedness");
    if (m.mean && r.mean) c.near(round2(*m.mean), *r.mean, 1e-9, t + " mean");
    if (m.sd && r.sd) c.near(round2(*m.sd), *r.sd, 1e-9, t + " sd");
    c.near(round2(quantile(d, 0.5)), r.median, 1e-9, t + " median");
    c.near(round2(quantile(d, 0.95)), r.q95, 1e-9, t + " q95");
    c.near(round2(quantile(d, 0.99)), r.q99, 1e-9, t + " q99");
  }
  return c.outcome("5 published prior rows reproduced at 2 d.p.");
}

Outcome half_t_worked_example() {
  Checks c;
  const auto fit = half_t_moment_fit(0.5, 0.4);
  const auto& ht = fit.dist;
  c.near(ht.df(), 13.6, 0.1, "nu");
  c.near(ht.scale(), 0.59, 0.01, "scale");
  c.near(half_t_unit_mean(13.6), 0.85, 0.005, "E[half-t(13.6,1)]");
  char buf[96];
  std::snprintf(buf, sizeof buf, "nu %.3f, scale %.4f, E %.4f", ht.df(), ht.scale(), half_t_unit_mean(13.6));
  return c.outcome(buf);
}

Outcome inverse_chi_match() {
  Checks c;
  const auto m = scale_mixture_half_t(0.22, 0.064);
  c.near(m.dist.df(), 8.2, 0.2, "nu");
  c.near(m.dist.scale(), 0.20, 0.01, "scale");
  char buf[64];
  std::snprintf(buf, sizeof buf, "nu %.3f, scale %.4f", m.dist.df(), m.dist.scale());
  return c.outcome(buf);
}

std::optional<std::string> find_corpus() {
  if (const char* env = std::getenv("HETPRIOR_SEIDE_CSV"); env && *env) return std::string(env);
  for (const char* p : {"tests/data/seide2018.csv", HETPRIOR_SOURCE_DIR "/tests/data/seide2018.csv"}) {
    if (fs::exists(p)) return std::string(p);
  }
  return std::nullopt;
}

Outcome corpus_reproduction() {
  const auto path = find_corpus();
  if (!path) {
    return {Status::Skip,
            "40-analysis corpus not available (set HETPRIOR_SEIDE_CSV); criteria 5-7 gate acceptance"};
  }
  std::ifstream in(*path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto corpus = parse_collection(ss.str());
  Checks c;
  McmcConfig cfg;
  cfg.seed = 20180;

  ModelSpec hn;
  const auto s = run_hierarchical(corpus, hn, cfg);
  const auto scale = summarize_samples(s.pooled("scale"));
  const auto pred = summarize_samples(s.pooled("tau_pred"));
  c.near(scale.mean, 0.22, 0.02, "s mean");
  c.near(scale.sd, 0.064, 0.01, "s sd");
  c.near(scale.median, 0.21, 0.02, "s median");
  c.near(scale.q95, 0.33, 0.03, "s q95");
  c.near(pred.mean, 0.17, 0.02, "tau* mean");
  c.near(pred.q95, 0.46, 0.04, "tau* q95");
  c.near(pred.q99, 0.66, 0.08, "tau* q99");

  const std::vector<HetFamily> fams = {HetFamily::HalfNormal, HetFamily::Exponential, HetFamily::LogNormal,
                                       HetFamily::HalfCauchy};
  const double published[] = {163.8, 167.7, 178.0, 212.8};
  const auto rows = compare_models(corpus, fams, hn, cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.expect(rows[i].family == fams[i], "DIC rank " + std::to_string(i + 1) + " is " + to_string(rows[i].family));
    if (rows[i].dic) {
      const auto at = std::find(fams.begin(), fams.end(), rows[i].family) - fams.begin();
      c.near(rows[i].dic->dic, published[at], 5.0, "DIC " + to_string(rows[i].family));
    } else {
      c.expect(false, to_string(rows[i].family) + " fit failed");
    }
  }

  const auto dl = tau_estimate_collection(corpus, TauEstimator::DL);
  c.near(dl.mean, 0.21, 0.01, "DL mean");
  c.expect(dl.median == 0.0, "DL median is zero");

  std::vector<DrawSummary> sub;
  for (std::size_t n : {std::size_t{40}, std::size_t{20}, std::size_t{10}, std::size_t{5}}) {
    const auto part = n >= corpus.size() ? corpus : subset_recent(corpus, n);
    sub.push_back(summarize_samples(run_hierarchical(part, hn, cfg).pooled("tau_pred")));
  }
  for (std::size_t i = 1; i < sub.size(); ++i) {
    c.expect(sub[i].mean >= sub[i - 1].mean && sub[i].q95 >= sub[i - 1].q95 && sub[i].q99 >= sub[i - 1].q99,
             "subset monotonicity at step " + std::to_string(i));
  }
  c.near(sub[3].mean, 0.65, 0.25 * 0.65, "5-subset mean");
  c.near(sub[3].q95, 2.14, 0.25 * 2.14, "5-subset q95");
  c.near(sub[3].q99, 4.28, 0.25 * 4.28, "5-subset q99");
  return c.outcome("half-normal summaries, DIC ordering, DL estimates and subset trend reproduced");
}

Outcome sampler_calibration() {
  constexpr int kCorpora = 50;
  constexpr double kTruth = 0.3;
  int covered = 0;
  double worst_rhat = 0.0;
  for (int i = 0; i < kCorpora; ++i) {
    Rng rng(derive_seed(5005, static_cast<std::uint64_t>(i)));
    SimulationSpec spec;  // N = 30, k = 10, sigma = 0.1
    spec.heterogeneity = HalfNormal(kTruth);
    const auto corpus = simulate_collection(spec, rng);
    McmcConfig cfg;
    cfg.burn_in = 2000;
    cfg.kept = 5000;
    cfg.seed = derive_seed(5006, static_cast<std::uint64_t>(i));
    const auto s = run_hierarchical(corpus, ModelSpec{}, cfg);
    const auto scale = s.pooled("scale");
    if (empirical_quantile(scale, 0.05) <= kTruth && kTruth <= empirical_quantile(scale, 0.95)) ++covered;
    worst_rhat = std::max(worst_rhat, diagnostics(s).max_rhat().value_or(std::numeric_limits<double>::infinity()));
  }
  Checks c;
  const double coverage = static_cast<double>(covered) / kCorpora;
  c.expect(coverage >= 0.8 && coverage <= 1.0, "coverage " + std::to_string(coverage) + " outside [0.8, 1]");
  c.expect(worst_rhat <= 1.02, "max split R-hat " + std::to_string(worst_rhat) + " > 1.02");
  char buf[96];
  std::snprintf(buf, sizeof buf, "90%% interval coverage %d/%d, max split R-hat %.4f", covered, kCorpora, worst_rhat);
  return c.outcome(buf);
}

Outcome oracle_equivalence() {
  struct Case {
    std::vector<double> y, se;
    const char* prior;
  };
  const Case cases[] = {
      {{-0.3, -0.3}, {0.4, 0.4}, "half-t(8.2,0.20)"},
      {{0.0, 2.0}, {1.0, 1.0}, "half-normal(0.5)"},
      {{0.1, 0.5, -0.2, 0.3, 0.8}, {0.2, 0.3, 0.25, 0.15, 0.4}, "half-cauchy(0.1)"},
      {{1.2, 0.4, 0.9}, {0.5, 0.3, 0.6}, "lomax(9.9,1.5)"},
      {{-0.5, 0.1, -0.2, -0.9, 0.0, -0.4}, {0.3, 0.2, 0.35, 0.5, 0.25, 0.3}, "log-normal(-2.6,1.7)"},
  };
  Checks c;
  double worst = 0.0;
  for (std::size_t n = 0; n < std::size(cases); ++n) {
    const auto& cs = cases[n];
    const auto prior = parse_distribution(cs.prior);
    const auto grid = bayes_ma(SingleMeta(cs.y, cs.se), prior);

    std::vector<StudyRecord> recs;
    for (std::size_t i = 0; i < cs.y.size(); ++i) recs.push_back({"d", std::to_string(i + 1), cs.y[i], cs.se[i], 0});
    const MetaAnalysisCollection one({MetaAnalysis{"d", recs}});
    ModelSpec m;
    m.fixed_tau_prior = prior;
    m.effect_prior_sd = std::numeric_limits<double>::infinity();
    McmcConfig cfg;
    cfg.burn_in = 2000;
    cfg.kept = 50000;
    cfg.seed = derive_seed(6006, n);
    const auto s = run_hierarchical(one, m, cfg);
    const double mu_mc = empirical_quantile(s.pooled(mu_name(0)), 0.5);
    const double tau_mc = empirical_quantile(s.pooled(tau_name(0)), 0.5);
    c.near(grid.mu.median, mu_mc, 0.01, std::string("mu median, ") + cs.prior);
    c.near(grid.tau.median, tau_mc, 0.01, std::string("tau median, ") + cs.prior);
    worst = std::max({worst, std::abs(grid.mu.median - mu_mc), std::abs(grid.tau.median - tau_mc)});
  }

  double sup = 0.0;
  for (const char* text : {"half-t(8.2,0.20)", "half-normal(0.5)", "lomax(9.9,1.5)"}) {
    const auto prior = parse_distribution(text);
    const auto tp = tau_marginal(SingleMeta({0.3}, {0.2}), prior);
    for (std::size_t i = 0; i < tp.grid.x.size(); ++i) {
      sup = std::max(sup, std::abs(tp.grid.density[i] - density(prior, tp.grid.x[i])));
    }
  }
  c.expect(sup < 1e-3, "k=1 sup-norm error " + std::to_string(sup));
  char buf[112];
  std::snprintf(buf, sizeof buf, "max |grid - MCMC| median gap %.4f on 5 datasets; k=1 sup error %.2e", worst, sup);
  return c.outcome(buf);
}

Outcome frequentist_suite() {
  Checks c;
  const SingleMeta sm({0.0, 2.0}, {1.0, 1.0});
  const auto dl = dl_estimate(sm);
  c.near(dl.tau, 1.0, 1e-9, "DL tau");
  c.near(pm_estimate(sm), 1.0, 1e-6, "PM tau");
  const auto ci = ci_suite(sm, dl.tau);
  c.near(ci.normal.estimate, 1.0, 1e-12, "Normal centre");
  c.near(ci.normal.hi - 1.0, 1.96, 0.005, "Normal half-width");
  c.near(ci.hksj.hi - 1.0, 12.706, 0.001, "HKSJ half-width");
  c.near(ci.mkh.hi - 1.0, 12.706, 0.001, "mKH half-width");
  c.near(1.0 - ci.mkh.lo, 12.706, 0.001, "mKH lower half-width");

  Rng rng(7007);
  int violations = 0;
  for (int n = 0; n < 1000; ++n) {
    const auto k = 2 + static_cast<std::size_t>(rng.uniform() * 9.0);
    std::vector<double> y(k), se(k);
    for (std::size_t i = 0; i < k; ++i) {
      y[i] = rng.normal();
      se[i] = 0.05 + rng.uniform();
    }
    const SingleMeta d(y, se);
    const auto s = ci_suite(d, dl_estimate(d).tau);
    if (s.mkh.width() < s.normal.width()) ++violations;
  }
  c.expect(violations == 0, std::to_string(violations) + " datasets with mKH narrower than Normal");
  return c.outcome("hand dataset reproduced; mKH >= Normal width on 1000 random datasets");
}

// ---------------------------------------------------------------------------

std::string quote(const std::string& s) { return "'" + s + "'"; }

Outcome reproducibility(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {Status::Fail, "no --cli given"};
  const auto root = fs::absolute(work) / "repro";
  fs::remove_all(root);
  fs::create_directories(root / "in");

  Rng rng(8008);
  SimulationSpec spec;
  spec.n_analyses = 12;
  spec.studies_per_analysis = 4;
  spec.std_err = 0.2;
  const auto corpus_path = (root / "in" / "corpus.csv").string();
  std::ofstream(corpus_path, std::ios::binary) << serialize_collection(simulate_collection(spec, rng));
  const auto two_path = (root / "in" / "two.csv").string();
  std::ofstream(two_path, std::ios::binary) << "analysis_id,study_id,estimate,std_err,seq\n"
                                               "new,A,-0.3,0.4,1\nnew,B,-0.25,0.35,2\n";

  const std::string fast = " --seed 42 --chains 2 --iters 1000 --burnin 300";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"validate", "validate " + quote(corpus_path)},
      {"fit", "fit " + quote(corpus_path) + fast},
      {"compare", "compare " + quote(corpus_path) + " --families half-normal,exponential" + fast},
      {"analyze", "analyze " + quote(two_path) + " --prior 'half-t(8.2,0.20)' --prior 'half-normal(0.5)'"},
      {"tau", "tau-estimates " + quote(corpus_path) + " --method PM"},
  };
  auto run = [&](const std::string& args, const fs::path& out) {
    const auto cmd = quote(cli) + " " + args + " --out " + quote(out.string()) + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  Checks c;
  for (const char* side : {"a", "b"}) {
    for (const auto& [name, args] : commands) c.expect(run(args, root / side / name), name + " run " + side + " failed");
  }
  // approx reads the fit output; stage one copy so both runs see the same input path
  fs::create_directories(root / "in" / "fit");
  for (const char* f : {"samples.csv", "summary.json"}) {
    fs::copy_file(root / "a" / "fit" / f, root / "in" / "fit" / f, fs::copy_options::overwrite_existing);
  }
  for (const char* side : {"a", "b"}) {
    c.expect(run("approx " + quote((root / "in" / "fit" / "samples.csv").string()), root / side / "approx"),
             std::string("approx run ") + side + " failed");
  }

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  int compared = 0;
  if (fs::exists(root / "a")) {
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
      const auto ext = e.path().extension();
      if (!e.is_regular_file() || (ext != ".json" && ext != ".csv")) continue;
      const auto twin = root / "b" / fs::relative(e.path(), root / "a");
      c.expect(fs::exists(twin) && slurp(e.path()) == slurp(twin), "differs: " + fs::relative(e.path(), root).string());
      ++compared;
    }
  }
  c.expect(compared >= 15, "only " + std::to_string(compared) + " output files compared");
  return c.outcome(std::to_string(compared) + " JSON/CSV outputs byte-identical across repeated runs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli, workdir = "acceptance_work";
  app.add_option("--cli", cli, "path to the hetprior executable");
  app.add_option("--workdir", workdir, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"analytic summaries of the published priors", analytic_tables},
      {"half-t moment fit worked example", half_t_worked_example},
      {"scale-mixture half-t match", inverse_chi_match},
      {"corpus reproduction", corpus_reproduction},
      {"sampler calibration", sampler_calibration},
      {"grid vs MCMC oracle", oracle_equivalence},
      {"frequentist suite", frequentist_suite},
      {"reproducibility", [&] { return reproducibility(cli, workdir); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", tag, i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (o.status == Status::Fail) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
