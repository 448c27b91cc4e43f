#include "leglab/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace leglab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Rational rational_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  throw ConfigError(std::string("field '") + key + "' must be a rational string such as \"-1/2\"");
}

Rational rational_value(const json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  throw ConfigError("expected a rational string, got " + v.dump());
}

std::vector<Rational> rational_list(const json& j, const char* key) {
  std::vector<Rational> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) out.push_back(rational_value(v));
  return out;
}

std::vector<int> int_list(const json& j, const char* key) {
  std::vector<int> out;
  for (const auto& v : j.at(key)) out.push_back(v.get<int>());
  return out;
}

// File-name friendly rendering of a rational: "-1/2" -> "-1d2".
std::string tag(const Rational& q) {
  std::string s = q.str();
  std::replace(s.begin(), s.end(), '/', 'd');
  return s;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string kind_of(const std::string& rel) {
  const std::string name = fs::path(rel).filename().string();
  for (const char* k : {"coefficients", "sweep", "plot", "norm", "gibbs", "growth", "bound", "fem", "sup", "results"}) {
    if (name.rfind(k, 0) == 0) return k;
  }
  return "data";
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  try {
    ExperimentConfig c;
    c.source = j;
    c.id = j.at("id").get<std::string>();
    c.family.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("a")) c.family.a = rational_field(j, "a");
    if (j.contains("beta")) c.family.beta = rational_field(j, "beta");
    if (j.contains("spec")) {
      const auto& s = j.at("spec");
      std::vector<SingularTerm> terms;
      for (const auto& t : s.at("terms")) {
        terms.push_back({rational_field(t, "weight"), rational_field(t, "center"), rational_field(t, "exponent")});
      }
      c.family.spec = SingularFunctionSpec(std::move(terms), rational_list(s, "analytic"));
    }
    if (c.family.family == Family::CustomSpec && !c.family.spec) throw ConfigError("CustomSpec needs a 'spec'");
    c.xs = rational_list(j, "x");
    c.pmax = j.value("pmax", 2200);
    if (c.pmax < 1) throw ConfigError("pmax must be positive");
    const std::string prec = j.value("precision", std::string("auto"));
    if (prec != "auto") c.ctx = PrecisionContext::parse(prec);
    if (j.contains("window")) c.window = FitWindow{j.at("window").at("pmin").get<int>(), j.at("window").at("pmax").get<int>()};
    c.coefficients = j.value("coefficients", true);
    c.norms = j.value("norms", false);
    if (j.contains("gibbs")) {
      const auto& g = j.at("gibbs");
      c.gibbs = GibbsSpec{int_list(g, "p"), g.value("near_rate", 1.0)};
    }
    for (const auto& g : j.value("growth", json::array())) {
      GrowthSpec s;
      s.approach = rational_field(g, "approach");
      s.side = g.at("side").get<int>();
      s.xi = rational_list(g, "xi");
      s.alpha = g.at("alpha").get<double>();
      s.pmax_ceiling = g.value("pmax_ceiling", 0);
      c.growth.push_back(std::move(s));
    }
    for (const auto& b : j.value("bounds", json::array())) {
      BoundSpec s;
      s.kind = b.at("kind").get<std::string>();
      if (s.kind != "theorem1" && s.kind != "endpoint" && s.kind != "theorem2") {
        throw ConfigError("unknown bound kind '" + s.kind + "'");
      }
      s.x = rational_field(b, "x");
      s.delta = b.value("delta", 0.1);
      c.bounds.push_back(s);
    }
    if (j.contains("fem")) {
      const auto& f = j.at("fem");
      c.fem = FemSpec{f.value("elements", 1), f.value("degree", 1), rational_list(f, "x"), f.value("export_degree", 8)};
    }
    if (j.contains("sup")) {
      const auto& s = j.at("sup");
      c.sup = SupSpec{int_list(s, "p"), s.value("wa", 0.0), s.value("wb", 0.0), s.value("wg", 0.0),
                      s.value("background", 2000)};
    }
    for (const auto& e : j.value("expect", json::array())) {
      Expectation x;
      x.what = e.at("what").get<std::string>();
      if (e.contains("x")) x.x = rational_field(e, "x");
      x.index = e.value("index", 0);
      x.value = e.at("value").get<double>();
      if (e.contains("tolerance")) x.tolerance = e.at("tolerance").get<double>();
      c.expect.push_back(std::move(x));
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExpectationCheck& c) {
  json j{{"what", c.expect.what},
         {"expected", c.expect.value},
         {"measured", c.measured},
         {"tolerance", c.tolerance},
         {"pass", c.pass}};
  if (c.expect.x) j["x"] = c.expect.x->str();
  if (c.expect.what == "growth_exponent" || c.expect.what == "bound_max_ratio") j["index"] = c.expect.index;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

bool RunResult::ok() const {
  return errors.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(md, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(md, digest, &len);
  EVP_MD_CTX_free(md);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------

namespace {

std::string sweep_name(const Rational& x) { return "x" + tag(x); }

json sweep_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const fs::path& dir) {
  json out = json::array();
  const auto sweeps = family_sweeps(cfg.family, cfg.xs, cfg.pmax, ctx);
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    const auto& sw = sweeps[i];
    const std::string name = sweep_name(cfg.xs[i]);
    write_sweep(sw, (dir / ("sweep_" + name + ".csv")).string());
    const RateFit fit = fit_rate_nothrow(sw, cfg.window);
    write_plot_data(sw, fit, (dir / ("plot_" + name + ".csv")).string());
    json e{{"x", sw.x_label}, {"fit", to_json(fit)}, {"singular_target", sw.singular_target}};
    if (fit.envelope_size > 0) e["window_shift_drift"] = window_shift_drift(sw, fit);
    out.push_back(std::move(e));
  }
  return out;
}

json norm_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const fs::path& dir) {
  const NormSweep ns = family_norm_sweep(cfg.family, cfg.pmax, ctx);
  write_norm_sweep(ns, (dir / "norm.csv").string());
  std::vector<double> p, e;
  for (std::size_t i = ns.pvalues.size() / 2; i < ns.pvalues.size(); ++i) {
    if (ns.norm_error[i] <= 0) continue;
    p.push_back(ns.pvalues[i]);
    e.push_back(ns.norm_error[i]);
  }
  const auto [slope, icpt] = loglog_line(p, e);
  return {{"norm", to_string(ns.norm)},
          {"slope", slope},
          {"constant", std::exp(icpt)},
          {"truncation_fraction", ns.truncation_fraction},
          {"truncation_warning", ns.truncation_warning}};
}

json gibbs_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const fs::path& dir) {
  const auto g = gibbs_probe(cfg.family, cfg.family.a, cfg.gibbs->pvalues, ctx, cfg.gibbs->near_rate);
  std::ofstream out(dir / "gibbs.csv");
  out << "p,location,magnitude\n";
  for (std::size_t i = 0; i < g.pvalues.size(); ++i) {
    out << g.pvalues[i] << ',' << to_decimal(g.location[i]) << ',' << to_decimal(g.magnitude[i]) << '\n';
  }
  json j = to_json(g);
  double change = 0;
  for (std::size_t i = 1; i < g.magnitude.size(); ++i) {
    change = std::max(change, std::abs(g.magnitude[i] - g.magnitude[i - 1]) / g.magnitude[i - 1]);
  }
  j["max_relative_change"] = change;
  return j;
}

json growth_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const GrowthSpec& s, std::size_t index,
                 const fs::path& dir) {
  GrowthOptions opt;
  opt.pmax = cfg.pmax;
  opt.pmax_ceiling = s.pmax_ceiling > 0 ? s.pmax_ceiling : cfg.pmax;
  opt.ctx = ctx;
  const auto g = constant_growth(cfg.family, s.approach, s.side, s.xi, s.alpha, opt);
  std::ofstream out(dir / ("growth_" + std::to_string(index) + ".csv"));
  out << "xi,C,pmax\n";
  for (std::size_t i = 0; i < g.xi_values.size(); ++i) {
    out << to_decimal(g.xi_values[i]) << ',' << to_decimal(g.C_values[i]) << ',' << g.pmax_used[i] << '\n';
  }
  json j = to_json(g);
  j["approach"] = s.approach.str();
  j["side"] = s.side;
  return j;
}

BVFunction bv_for(const FamilyParams& fam) {
  switch (fam.family) {
    case Family::StepDerivative:
      return BVFunction::step(fam.a);
    case Family::AbsShift:
      return BVFunction::abs_shift(fam.a);
    default:
      throw ConfigError("bounds are available for the step and abs-shift families");
  }
}

json bound_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const BoundSpec& s, std::size_t index,
                const fs::path& dir) {
  const auto sw = family_sweeps(cfg.family, {s.x}, cfg.pmax, ctx)[0];
  BoundReport r;
  if (s.kind == "theorem1") {
    r = theorem1_report(bv_for(cfg.family), s.x, sw);
  } else if (s.kind == "endpoint") {
    if (cfg.family.family != Family::StepDerivative) throw ConfigError("endpoint bound needs the step family");
    r = endpoint_report(cfg.family.a, sw);
  } else {
    r = theorem2_report(s.x.convert_to<double>(), sw, sw, s.delta);
  }
  write_bound_report(r, (dir / ("bound_" + std::to_string(index) + "_" + s.kind + ".csv")).string());
  return {{"kind", s.kind}, {"x", s.x.str()}, {"bound", r.bound_name}, {"max_ratio", r.max_ratio},
          {"calibration", r.calibration}};
}

json fem_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const fs::path& dir) {
  const FemSpec& f = *cfg.fem;
  const Rational a = cfg.family.a;
  Mesh1D mesh = Mesh1D::uniform(f.elements, f.degree);
  json sweeps = json::array();
  for (const auto& x : f.xs) {
    const auto sw = fem_error_sweep(mesh, a, x, cfg.pmax, ctx);
    const std::string name = sweep_name(x);
    write_sweep(sw, (dir / ("fem_sweep_" + name + ".csv")).string());
    const RateFit fit = fit_rate_nothrow(sw, cfg.window);
    write_plot_data(sw, fit, (dir / ("fem_plot_" + name + ".csv")).string());
    sweeps.push_back({{"x", x.str()}, {"fit", to_json(fit)}});
  }
  Mesh1D small = mesh;
  const int s = small.singular_element(a);
  if (s >= 0) small.degrees[static_cast<std::size_t>(s)] = std::max(small.degrees[static_cast<std::size_t>(s)], f.export_degree);
  dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    write_fem_solution(assemble_and_solve<T>(small, a), (dir / "fem_coefficients.csv").string(),
                       (dir / "fem_trace.csv").string());
    return 0;
  });
  return {{"elements", f.elements}, {"degree", f.degree}, {"sweeps", sweeps}};
}

json sup_task(const ExperimentConfig& cfg, const PrecisionContext& ctx, const fs::path& dir) {
  const SupSpec& s = *cfg.sup;
  const int pmax = *std::max_element(s.pvalues.begin(), s.pvalues.end());
  const auto grid = resolving_grid(cfg.family.a, pmax, s.background);
  const auto r = weighted_sup_norm(cfg.family, grid, s.pvalues, s.wa, s.wb, s.wg, cfg.family.a, ctx);
  std::ofstream out(dir / "sup.csv");
  out << "p,sup,argmax\n";
  for (std::size_t i = 0; i < r.pvalues.size(); ++i) {
    out << r.pvalues[i] << ',' << to_decimal(r.sup[i]) << ',' << to_decimal(r.argmax[i]) << '\n';
  }
  return {{"slope", r.slope}, {"grid_warning", r.grid_warning}, {"wa", s.wa}, {"wb", s.wb}, {"wg", s.wg}};
}

const json* find_x(const json& list, const Rational& x) {
  for (const auto& e : list) {
    if (e.at("x").get<std::string>() == x.str()) return &e;
  }
  return nullptr;
}

ExpectationCheck check(const Expectation& e, const json& results, const ToleranceProfile& tol, const Rational& beta) {
  ExpectationCheck c;
  c.expect = e;
  auto missing = [&](const std::string& why) {
    c.detail = why;
    c.pass = false;
    return c;
  };
  const bool fem = e.what.rfind("fem_", 0) == 0;
  const std::string what = fem ? e.what.substr(4) : e.what;
  if (what == "alpha" || what == "C") {
    if (!e.x) return missing("expectation needs x");
    const char* key = fem ? "fem" : "sweeps";
    if (!results.contains(key)) return missing("no sweeps");
    const json& list = fem ? results.at("fem").at("sweeps") : results.at("sweeps");
    const json* s = find_x(list, *e.x);
    if (!s) return missing("x not swept");
    const json& fit = s->at("fit");
    if (what == "alpha") {
      c.measured = fit.at("alpha").get<double>();
      c.tolerance = e.tolerance.value_or(tol.rate_for(beta));
    } else {
      c.measured = fit.at("C").get<double>();
      c.tolerance = e.tolerance.value_or(tol.constant * std::abs(e.value));
    }
    c.pass = fit.at("valid").get<bool>() && std::abs(c.measured - e.value) <= c.tolerance;
    if (!fit.at("valid").get<bool>()) c.detail = "fit invalid";
    return c;
  }
  if (what == "growth_exponent") {
    if (!results.contains("growth") || e.index < 0 || static_cast<std::size_t>(e.index) >= results.at("growth").size()) {
      return missing("no such growth study");
    }
    const json& g = results.at("growth").at(static_cast<std::size_t>(e.index));
    c.measured = g.at("exponent").get<double>();
    c.tolerance = e.tolerance.value_or(tol.growth);
    c.pass = g.at("valid").get<bool>() && std::abs(c.measured - e.value) <= c.tolerance;
    return c;
  }
  if (what == "gibbs_D" || what == "gibbs_change") {
    if (!results.contains("gibbs")) return missing("no Gibbs probe");
    const json& g = results.at("gibbs");
    if (what == "gibbs_D") {
      c.measured = g.at("D").get<double>();
      c.tolerance = e.tolerance.value_or(tol.gibbs_D * e.value);
      c.pass = std::abs(c.measured - e.value) <= c.tolerance;
    } else {
      c.measured = g.at("max_relative_change").get<double>();
      c.tolerance = 0;
      c.pass = c.measured < e.value;
      c.detail = "upper limit";
    }
    return c;
  }
  if (what == "norm_slope" || what == "sup_slope") {
    const char* key = what == "norm_slope" ? "norm" : "sup";
    if (!results.contains(key)) return missing(std::string("no ") + key + " study");
    c.measured = results.at(key).at("slope").get<double>();
    c.tolerance = e.tolerance.value_or(tol.norm_slope);
    c.pass = std::abs(c.measured - e.value) <= c.tolerance;
    return c;
  }
  if (what == "bound_max_ratio") {
    if (!results.contains("bounds") || e.index < 0 || static_cast<std::size_t>(e.index) >= results.at("bounds").size()) {
      return missing("no such bound report");
    }
    c.measured = results.at("bounds").at(static_cast<std::size_t>(e.index)).at("max_ratio").get<double>();
    c.tolerance = e.tolerance.value_or(0.0);
    c.pass = c.measured <= e.value + c.tolerance;
    c.detail = "upper limit";
    return c;
  }
  return missing("unknown expectation '" + e.what + "'");
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const PrecisionContext ctx = cfg.context();

  struct Task {
    std::string name;
    std::function<json()> run;
  };
  std::vector<Task> tasks;
  if (cfg.coefficients) {
    tasks.push_back({"coefficients", [&] {
                       write_family_coefficients(cfg.family, cfg.pmax, ctx, (dir / "coefficients.csv").string());
                       return json{{"degree", cfg.pmax}};
                     }});
  }
  if (!cfg.xs.empty()) tasks.push_back({"sweeps", [&] { return sweep_task(cfg, ctx, dir); }});
  if (cfg.norms) tasks.push_back({"norm", [&] { return norm_task(cfg, ctx, dir); }});
  if (cfg.gibbs) tasks.push_back({"gibbs", [&] { return gibbs_task(cfg, ctx, dir); }});
  for (std::size_t i = 0; i < cfg.growth.size(); ++i) {
    tasks.push_back({"growth/" + std::to_string(i), [&, i] { return growth_task(cfg, ctx, cfg.growth[i], i, dir); }});
  }
  for (std::size_t i = 0; i < cfg.bounds.size(); ++i) {
    tasks.push_back({"bounds/" + std::to_string(i), [&, i] { return bound_task(cfg, ctx, cfg.bounds[i], i, dir); }});
  }
  if (cfg.fem) tasks.push_back({"fem", [&] { return fem_task(cfg, ctx, dir); }});
  if (cfg.sup) tasks.push_back({"sup", [&] { return sup_task(cfg, ctx, dir); }});

  std::vector<json> slots(tasks.size());
  std::vector<std::optional<ErrorRecord>> failures(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    try {
      slots[i] = tasks[i].run();
    } catch (const LabError& e) {
      failures[i] = ErrorRecord{tasks[i].name, e.kind(), e.what()};
    } catch (const std::exception& e) {
      failures[i] = ErrorRecord{tasks[i].name, "Error", e.what()};
    }
  });

  RunResult res;
  res.out_dir = out_dir;
  json results = json::object();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (failures[i]) {
      res.errors.push_back(*failures[i]);
      continue;
    }
    const std::string& name = tasks[i].name;
    const auto slash = name.find('/');
    if (slash == std::string::npos) {
      results[name] = slots[i];
    } else {
      results[name.substr(0, slash)].push_back(slots[i]);
    }
  }
  const ToleranceProfile tol;
  for (const auto& e : cfg.expect) res.checks.push_back(check(e, results, tol, cfg.family.beta));
  res.results = results;

  json checks = json::array();
  for (const auto& c : res.checks) checks.push_back(to_json(c));
  write_json({{"id", cfg.id}, {"results", results}, {"checks", checks}}, (dir / "results.json").string());

  // Single writer: the manifest is assembled after every task has finished.
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel != "manifest.json") files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json outputs = json::array();
  for (const auto& rel : files) {
    const std::string full = (dir / rel).string();
    ManifestEntry m{rel, kind_of(rel), sha256_file(full), fs::file_size(full)};
    outputs.push_back({{"path", m.path}, {"kind", m.kind}, {"sha256", m.sha256}, {"bytes", m.bytes}});
    res.outputs.push_back(std::move(m));
  }
  json errors = json::array();
  for (const auto& e : res.errors) errors.push_back({{"task", e.task}, {"kind", e.kind}, {"message", e.message}});
  write_json({{"id", cfg.id},
              {"tool_version", kToolVersion},
              {"precision", ctx.to_string()},
              {"config", cfg.source},
              {"outputs", outputs},
              {"errors", errors},
              {"checks", checks}},
             (dir / "manifest.json").string());
  return res;
}

// ---------------------------------------------------------------------------

std::string to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Pass:
      return "pass";
    case VerdictStatus::Fail:
      return "fail";
    case VerdictStatus::Preasymptotic:
      return "preasymptotic";
  }
  return "?";
}

json to_json(const ConjectureVerdict& v) {
  json j{{"suite", v.suite},
         {"clause", v.clause},
         {"family", v.family},
         {"a", v.a.str()},
         {"beta", v.beta.str()},
         {"point", v.point},
         {"quantity", v.quantity},
         {"measured", v.measured},
         {"conjectured", v.conjectured},
         {"tolerance", v.tolerance},
         {"status", to_string(v.status)}};
  if (v.fit) j["fit"] = to_json(*v.fit);
  if (v.growth) j["growth"] = to_json(*v.growth);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

VerdictStatus judge(double measured, double conjectured, double tolerance, bool valid) {
  if (!valid) return VerdictStatus::Preasymptotic;
  return std::abs(measured - conjectured) <= tolerance ? VerdictStatus::Pass : VerdictStatus::Fail;
}

std::pair<double, bool> bounded_non_cauchy(const std::vector<double>& s) {
  double first_sup = -1, min_osc = std::numeric_limits<double>::infinity();
  bool bounded = true;
  int windows = 0;
  for (std::size_t lo = 16; 2 * lo <= s.size() + 1; lo *= 2) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn, sup = 0;
    for (std::size_t p = lo; p < 2 * lo; ++p) {
      const double v = s[p - 1];
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      sup = std::max(sup, std::abs(v));
    }
    if (first_sup < 0) first_sup = sup;
    if (sup > 1.1 * first_sup) bounded = false;
    min_osc = std::min(min_osc, sup > 0 ? (mx - mn) / sup : 0.0);
    ++windows;
  }
  if (windows < 2) return {0.0, false};
  return {min_osc, bounded && min_osc >= 0.1};
}

namespace {

ConjectureVerdict rate_verdict(const std::string& suite, int clause, const FamilyParams& fam, const Rational& a,
                               const Rational& beta, const ErrorSweep& sw, double conjectured, double tol) {
  ConjectureVerdict v;
  v.suite = suite;
  v.clause = clause;
  v.family = fam.describe();
  v.a = a;
  v.beta = beta;
  v.point = "x=" + sw.x_label;
  v.quantity = "rate";
  const double largest = sw.abs_error.empty() ? 0.0 : *std::max_element(sw.abs_error.begin(), sw.abs_error.end());
  if (!sw.singular_target && largest <= 1e-14) {
    // Symmetry can make the error vanish identically; there is no rate to fit.
    v.quantity = "vanishing_error";
    v.measured = largest;
    v.conjectured = 0;
    v.tolerance = 1e-14;
    v.status = VerdictStatus::Pass;
    v.sweep = sw;
    v.note = "error below 1e-14 for every p";
    return v;
  }
  const RateFit fit = fit_rate_nothrow(sw);
  v.measured = fit.alpha;
  v.conjectured = conjectured;
  v.tolerance = tol;
  v.status = judge(fit.alpha, conjectured, tol, fit.valid);
  v.fit = fit;
  v.sweep = sw;
  if (conjectured < 0) v.note = "divergence, |S_p| grows like p^" + to_decimal(-conjectured);
  return v;
}

// rho in C ~ xi^-rho; the growth fit reports the log-log slope.
ConjectureVerdict growth_verdict(const std::string& suite, int clause, const FamilyParams& fam, const Rational& a,
                                 const Rational& beta, const Rational& approach, int side,
                                 const std::vector<Rational>& xi, double alpha, double conjectured, double tol,
                                 const GrowthOptions& opt) {
  ConjectureVerdict v;
  v.suite = suite;
  v.clause = clause;
  v.family = fam.describe();
  v.a = a;
  v.beta = beta;
  v.point = "xi->" + approach.str() + (side > 0 ? "+" : "-");
  v.quantity = "growth_exponent";
  const auto g = constant_growth(fam, approach, side, xi, alpha, opt);
  v.measured = -g.exponent;
  v.conjectured = conjectured;
  v.tolerance = tol;
  v.status = judge(v.measured, conjectured, tol, g.valid);
  v.growth = g;
  if (!g.dropped_xi.empty()) v.note = std::to_string(g.dropped_xi.size()) + " xi values preasymptotic";
  return v;
}

FamilyParams conjecture_family(const Rational& beta, const Rational& a) {
  FamilyParams f;
  f.a = a;
  f.beta = beta;
  if (beta == 0) {
    f.family = Family::StepDerivative;
  } else if (a == 0) {
    f.family = Family::PowerAbs;
  } else {
    f.family = Family::CustomSpec;
    f.spec = SingularFunctionSpec({{Rational(1), a, beta}});
  }
  return f;
}

std::vector<Rational> xi_below(const std::vector<Rational>& grid, const Rational& limit) {
  std::vector<Rational> out;
  for (const auto& x : grid) {
    if (x < limit) out.push_back(x);
  }
  return out;
}

std::vector<ConjectureVerdict> conjecture_point(const Rational& beta, const Rational& a, const SuiteOptions& opt) {
  if (beta <= -1) throw DomainError("conjecture_suite: beta must exceed -1");
  if (a <= -1 || a >= 1) throw DomainError("conjecture_suite: |a| must be below 1");
  const FamilyParams fam = conjecture_family(beta, a);
  const PrecisionContext ctx = fam.minimal_context(opt.pmax);
  const double b = beta.convert_to<double>();
  const double rtol = opt.tol.rate_for(beta);
  const Rational left = (a - 1) / 2, right = (a + 1) / 2;
  const auto sw = family_sweeps(fam, {left, right, Rational(-1), Rational(1), a}, opt.pmax, ctx);

  std::vector<ConjectureVerdict> out;
  for (int i : {0, 1}) out.push_back(rate_verdict("conjecture", 1, fam, a, beta, sw[static_cast<std::size_t>(i)], b + 1, rtol));

  GrowthOptions g;
  g.pmax = opt.pmax;
  g.pmax_ceiling = opt.pmax;
  g.ctx = ctx;
  const Rational room = (1 - abs(a)) / 2;
  const auto edge_xi = xi_below({Rational(1, 10), Rational(1, 100), Rational(1, 1000), Rational(1, 10000)}, room);
  const auto a_xi = xi_below({Rational(1, 10), Rational(1, 20), Rational(1, 50), Rational(1, 100)}, room);
  out.push_back(growth_verdict("conjecture", 2, fam, a, beta, Rational(-1), 1, edge_xi, b + 1, 0.25, opt.tol.growth, g));
  out.push_back(growth_verdict("conjecture", 2, fam, a, beta, Rational(1), -1, edge_xi, b + 1, 0.25, opt.tol.growth, g));
  out.push_back(growth_verdict("conjecture", 3, fam, a, beta, a, -1, a_xi, b + 1, 1.0, opt.tol.growth, g));
  out.push_back(growth_verdict("conjecture", 3, fam, a, beta, a, 1, a_xi, b + 1, 1.0, opt.tol.growth, g));

  for (int i : {2, 3}) {
    const auto& s = sw[static_cast<std::size_t>(i)];
    out.push_back(rate_verdict("conjecture", 4, fam, a, beta, s, b + 0.5, rtol));
    if (beta == Rational(-1, 2)) {
      ConjectureVerdict v;
      v.suite = "conjecture";
      v.clause = 4;
      v.family = fam.describe();
      v.a = a;
      v.beta = beta;
      v.point = "x=" + s.x_label;
      v.quantity = "bounded_non_cauchy";
      const auto [osc, ok] = bounded_non_cauchy(family_partial_sums(fam, i == 2 ? Rational(-1) : Rational(1), opt.pmax, ctx));
      // Relative oscillation, capped at 1 (sums swinging through zero); 0 when unbounded.
      v.measured = ok || osc < 0.1 ? std::min(osc, 1.0) : 0.0;
      v.conjectured = 1;
      v.tolerance = 0.9;
      v.status = ok ? VerdictStatus::Pass : VerdictStatus::Fail;
      v.note = ok || osc < 0.1 ? "min over dyadic windows of (max - min) / sup of S_p" : "partial sums unbounded";
      out.push_back(std::move(v));
    }
  }
  auto at_a = rate_verdict("conjecture", 5, fam, a, beta, sw[4], beta == 0 ? 1.0 : b, rtol);
  if (beta == 0) at_a.note = "convergence to the mean of the one-sided limits";
  out.push_back(std::move(at_a));
  return out;
}

std::vector<ConjectureVerdict> powershift_point(const Rational& beta, const SuiteOptions& opt) {
  if (beta <= -1) throw DomainError("powershift_suite: beta must exceed -1");
  FamilyParams fam;
  fam.family = Family::PowerShift;
  fam.beta = beta;
  fam.a = -1;
  const PrecisionContext ctx = fam.minimal_context(opt.pmax);
  const double b = beta.convert_to<double>();
  const double rtol = opt.tol.rate_for(beta);
  std::vector<Rational> xs{Rational(-1, 10), Rational(1, 2), Rational(1)};
  if (beta > 0) xs.push_back(Rational(-1));
  const auto sw = family_sweeps(fam, xs, opt.pmax, ctx);
  std::vector<ConjectureVerdict> out;
  const Rational a(-1);
  out.push_back(rate_verdict("powershift", 1, fam, a, beta, sw[0], 2 * b + 1.5, rtol));
  out.push_back(rate_verdict("powershift", 1, fam, a, beta, sw[1], 2 * b + 1.5, rtol));
  out.push_back(rate_verdict("powershift", 4, fam, a, beta, sw[2], 2 * b + 1, rtol));
  if (beta > 0) out.push_back(rate_verdict("powershift", 4, fam, a, beta, sw[3], 2 * b, rtol));
  GrowthOptions g;
  g.pmax = opt.pmax;
  g.pmax_ceiling = opt.pmax;
  g.ctx = ctx;
  const std::vector<Rational> xi{Rational(1, 10), Rational(1, 20), Rational(1, 50), Rational(1, 100)};
  out.push_back(growth_verdict("powershift", 2, fam, a, beta, Rational(-1), 1, xi, 2 * b + 1.5, 0.75, opt.tol.growth, g));
  out.push_back(growth_verdict("powershift", 2, fam, a, beta, Rational(1), -1, xi, 2 * b + 1.5, 0.25, opt.tol.growth, g));
  return out;
}

template <class Point>
std::vector<ConjectureVerdict> run_points(std::size_t n, int jobs, Point&& point) {
  std::vector<std::vector<ConjectureVerdict>> slots(n);
  parallel_for(n, jobs, [&](std::size_t i) { slots[i] = point(i); });
  std::vector<ConjectureVerdict> out;
  for (auto& s : slots) {
    for (auto& v : s) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::vector<ConjectureVerdict> conjecture_suite(const std::vector<Rational>& beta_grid,
                                                const std::vector<Rational>& a_grid, const SuiteOptions& opt) {
  std::vector<std::pair<Rational, Rational>> points;
  for (const auto& b : beta_grid) {
    for (const auto& a : a_grid) points.emplace_back(b, a);
  }
  return run_points(points.size(), opt.jobs, [&](std::size_t i) {
    return conjecture_point(points[i].first, points[i].second, opt);
  });
}

std::vector<ConjectureVerdict> powershift_suite(const std::vector<Rational>& beta_grid, const SuiteOptions& opt) {
  return run_points(beta_grid.size(), opt.jobs, [&](std::size_t i) { return powershift_point(beta_grid[i], opt); });
}

std::string summary_table(const std::vector<ConjectureVerdict>& verdicts) {
  std::ostringstream os;
  os << std::left << std::setw(11) << "suite" << std::setw(7) << "clause" << std::setw(7) << "beta" << std::setw(6)
     << "a" << std::setw(14) << "point" << std::setw(19) << "quantity" << std::setw(11) << "measured" << std::setw(12)
     << "conjectured" << std::setw(7) << "tol" << "status\n";
  for (const auto& v : verdicts) {
    std::ostringstream m, c, t;
    m << std::fixed << std::setprecision(4) << v.measured;
    c << std::fixed << std::setprecision(4) << v.conjectured;
    t << std::setprecision(3) << v.tolerance;
    os << std::setw(11) << v.suite << std::setw(7) << v.clause << std::setw(7) << v.beta.str() << std::setw(6)
       << v.a.str() << std::setw(14) << v.point << std::setw(19) << v.quantity << std::setw(11) << m.str()
       << std::setw(12) << c.str() << std::setw(7) << t.str() << to_string(v.status) << '\n';
  }
  return os.str();
}

int write_verdicts(const std::vector<ConjectureVerdict>& verdicts, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir / "sweeps");
  json all = json::array();
  int failed = 0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& v = verdicts[i];
    json j = to_json(v);
    if (v.sweep) {
      std::ostringstream name;
      name << "sweeps/" << std::setw(3) << std::setfill('0') << i << '_' << v.suite << "_c" << v.clause << "_b"
           << tag(v.beta) << "_a" << tag(v.a) << "_x" << v.sweep->x_label << ".csv";
      std::string rel = name.str();
      std::replace(rel.begin() + 7, rel.end(), '/', 'd');
      write_sweep(*v.sweep, (dir / rel).string());
      j["sweep_csv"] = rel;
    }
    failed += v.status == VerdictStatus::Fail;
    all.push_back(std::move(j));
  }
  write_json(all, (dir / "verdicts.json").string());
  std::ofstream(dir / "summary.txt") << summary_table(verdicts);
  return failed;
}

}  // namespace leglab
