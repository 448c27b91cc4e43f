#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "leglab/runner.hpp"

using namespace leglab;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::string precision;
  int pmax = 0;
  int jobs = 1;
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--precision", c.precision, "f64 | big:<bits> | exact | auto");
  sub->add_option("--pmax", c.pmax, "largest degree")->check(CLI::PositiveNumber);
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.pmax > 0) cfg.pmax = c.pmax;
  if (!c.precision.empty()) {
    if (c.precision == "auto") {
      cfg.ctx.reset();
    } else {
      cfg.ctx = PrecisionContext::parse(c.precision);
    }
  }
  return cfg;
}

// Keeps only the analyses a verb asks for.
ExperimentConfig restrict(ExperimentConfig cfg, const std::string& verb) {
  const bool keep_x = verb == "sweep" || verb == "fit";
  if (!keep_x) cfg.xs.clear();
  cfg.coefficients = verb == "coeffs" || verb == "sweep";
  if (verb != "sweep" && verb != "fit") cfg.norms = false;
  if (verb != "gibbs") cfg.gibbs.reset();
  if (verb != "fit") cfg.growth.clear();
  if (verb != "bounds") cfg.bounds.clear();
  if (verb != "fem") cfg.fem.reset();
  if (verb != "fit") cfg.sup.reset();
  std::vector<Expectation> kept;
  for (const auto& e : cfg.expect) {
    const bool fem = e.what.rfind("fem_", 0) == 0;
    const bool gibbs = e.what.rfind("gibbs_", 0) == 0;
    const bool bound = e.what == "bound_max_ratio";
    if ((verb == "fem" && fem) || (verb == "gibbs" && gibbs) || (verb == "bounds" && bound) ||
        (verb == "fit" && !fem && !gibbs && !bound) || (verb == "sweep" && (e.what == "alpha" || e.what == "C"))) {
      kept.push_back(e);
    }
  }
  cfg.expect = kept;
  return cfg;
}

std::string fmt(double v, int prec = 5) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

void print_run(const ExperimentConfig& cfg, const RunResult& r) {
  std::cout << cfg.id << " (" << cfg.family.describe() << ", pmax " << cfg.pmax << ", " << cfg.context().to_string()
            << ") -> " << r.out_dir << ", " << r.outputs.size() << " files\n";
  if (r.results.contains("sweeps")) {
    for (const auto& s : r.results.at("sweeps")) {
      const auto& f = s.at("fit");
      std::cout << "  x=" << std::setw(10) << std::left << s.at("x").get<std::string>() << std::right
                << " alpha=" << fmt(f.at("alpha").get<double>()) << " C=" << fmt(f.at("C").get<double>())
                << " residual=" << fmt(f.at("residual").get<double>(), 3) << (f.at("valid").get<bool>() ? "" : " (invalid)")
                << '\n';
    }
  }
  for (const auto& c : r.checks) {
    std::cout << "  " << (c.pass ? "PASS " : "FAIL ") << c.expect.what;
    if (c.expect.x) std::cout << " x=" << c.expect.x->str();
    std::cout << " measured=" << fmt(c.measured) << " expected=" << fmt(c.expect.value);
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << '\n';
  }
  for (const auto& e : r.errors) std::cout << "  ERROR " << e.task << ": " << e.kind << ": " << e.message << '\n';
}

std::vector<Rational> parse_grid(const std::vector<std::string>& items) {
  std::vector<Rational> out;
  for (const auto& s : items) out.push_back(parse_rational(s));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legendre expansion and p-version FEM convergence laboratory"};
  app.require_subcommand(1);

  Common common;
  std::map<std::string, CLI::App*> verbs;
  for (const char* v : {"coeffs", "sweep", "gibbs", "bounds", "fem"}) {
    verbs[v] = app.add_subcommand(v);
    add_common(verbs[v], common, true);
  }
  verbs["coeffs"]->description("Legendre coefficients of the configured family");
  verbs["sweep"]->description("pointwise error sweeps over p with fits and plot data");
  verbs["gibbs"]->description("Gibbs overshoot location and magnitude");
  verbs["bounds"]->description("theoretical bounds against measured errors");
  verbs["fem"]->description("p-version FEM solve and element error sweeps");

  auto* run = app.add_subcommand("run", "every analysis in a config");
  add_common(run, common, true);

  auto* fit = app.add_subcommand("fit", "rate fits from a config or from a stored sweep CSV");
  add_common(fit, common, false);
  std::string sweep_csv;
  int pmin_w = 0, pmax_w = 0;
  fit->add_option("--sweep", sweep_csv, "sweep CSV written by 'sweep'")->check(CLI::ExistingFile);
  fit->add_option("--window-pmin", pmin_w, "fit window start");
  fit->add_option("--window-pmax", pmax_w, "fit window end");

  auto* conj = app.add_subcommand("conjecture", "conjecture clauses 1-5 and the |x+1|^beta rate laws");
  add_common(conj, common, false);
  std::vector<std::string> betas{"-5/6", "-2/3", "-1/2", "-1/16", "0", "1/2", "1"}, as{"0", "1/2"},
      shift_betas{"-1/2", "1/2", "3/2"};
  std::string suite = "all";
  int shift_pmax = 600;
  conj->add_option("--beta", betas, "beta grid");
  conj->add_option("--a", as, "a grid");
  conj->add_option("--shift-beta", shift_betas, "beta grid of the |x+1|^beta suite");
  conj->add_option("--shift-pmax", shift_pmax, "pmax of the |x+1|^beta suite")->check(CLI::PositiveNumber);
  conj->add_option("--suite", suite, "conjecture | powershift | all")
      ->check(CLI::IsMember({"conjecture", "powershift", "all"}));

  auto* figs = app.add_subcommand("figures", "regenerate the figure data from a directory of configs");
  add_common(figs, common, false);
  std::string config_dir = "configs";
  std::vector<std::string> only;
  figs->add_option("--configs", config_dir, "directory of figure configs")->check(CLI::ExistingDirectory);
  figs->add_option("--only", only, "config ids to run");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : verbs) {
      if (!sub->parsed()) continue;
      auto cfg = restrict(load(common), name);
      auto r = run_experiment(cfg, common.out, common.jobs);
      print_run(cfg, r);
      return r.ok() ? 0 : 1;
    }
    if (run->parsed()) {
      auto cfg = load(common);
      auto r = run_experiment(cfg, common.out, common.jobs);
      print_run(cfg, r);
      return r.ok() ? 0 : 1;
    }
    if (fit->parsed()) {
      if (sweep_csv.empty()) {
        if (common.config.empty()) throw ConfigError("fit needs --config or --sweep");
        auto cfg = restrict(load(common), "fit");
        auto r = run_experiment(cfg, common.out, common.jobs);
        print_run(cfg, r);
        return r.ok() ? 0 : 1;
      }
      const auto sw = read_sweep(sweep_csv);
      std::optional<FitWindow> w;
      if (pmin_w > 0 && pmax_w > 0) w = FitWindow{pmin_w, pmax_w};
      const auto f = fit_rate_nothrow(sw, w);
      std::cout << to_json(f).dump(2) << '\n';
      std::cout << "window_shift_drift " << window_shift_drift(sw, f) << '\n';
      return f.valid ? 0 : 1;
    }
    if (conj->parsed()) {
      SuiteOptions opt;
      opt.jobs = common.jobs;
      std::vector<ConjectureVerdict> all;
      if (suite != "powershift") {
        opt.pmax = common.pmax > 0 ? common.pmax : 2200;
        auto v = conjecture_suite(parse_grid(betas), parse_grid(as), opt);
        all.insert(all.end(), v.begin(), v.end());
      }
      if (suite != "conjecture") {
        opt.pmax = shift_pmax;
        auto v = powershift_suite(parse_grid(shift_betas), opt);
        all.insert(all.end(), v.begin(), v.end());
      }
      const int failed = write_verdicts(all, common.out);
      std::cout << summary_table(all);
      std::cout << all.size() << " verdicts, " << failed << " failed; written to " << common.out << '\n';
      return failed == 0 ? 0 : 1;
    }
    if (figs->parsed()) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(config_dir)) {
        if (e.path().extension() == ".json") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      bool ok = true;
      int ran = 0;
      for (const auto& f : files) {
        Common c = common;
        c.config = f.string();
        auto cfg = load(c);
        if (!only.empty() && std::find(only.begin(), only.end(), cfg.id) == only.end()) continue;
        auto r = run_experiment(cfg, (fs::path(common.out) / cfg.id).string(), common.jobs);
        print_run(cfg, r);
        ok = ok && r.ok();
        ++ran;
      }
      std::cout << ran << " configs run\n";
      return ok ? 0 : 1;
    }
  } catch (const LabError& e) {
    std::cerr << e.kind() << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
