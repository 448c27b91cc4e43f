#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "leglab/bounds.hpp"
#include "leglab/pfem.hpp"
#include "leglab/ratelab.hpp"

namespace leglab {

inline constexpr const char* kToolVersion = "leglab 1.0.0";

/// Tolerances applied when comparing measurements with expected values.
struct ToleranceProfile {
  double rate = 0.05;
  /// Rate tolerance for beta below -3/4, where the preasymptotic range is long.
  double rate_near_minus_one = 0.1;
  double growth = 0.1;
  /// Relative tolerance on constants.
  double constant = 0.25;
  double gibbs_D = 0.05;
  double norm_slope = 0.05;

  double rate_for(const Rational& beta) const { return beta < Rational(-3, 4) ? rate_near_minus_one : rate; }
};

struct GibbsSpec {
  std::vector<int> pvalues;
  double near_rate = 1.0;
};

struct GrowthSpec {
  Rational approach;
  int side = 1;
  std::vector<Rational> xi;
  double alpha = 1.0;
  int pmax_ceiling = 0;  // 0: the experiment pmax
};

struct BoundSpec {
  std::string kind;  // "theorem1", "endpoint" or "theorem2"
  Rational x;
  double delta = 0.1;
};

struct FemSpec {
  int elements = 1;
  int degree = 1;  // degree of the elements that do not contain a
  std::vector<Rational> xs;
  int export_degree = 8;
};

struct SupSpec {
  std::vector<int> pvalues;
  double wa = 0, wb = 0, wg = 0;
  int background = 2000;
};

/// A value the experiment is expected to reproduce. `what` names the
/// quantity: "alpha" or "C" at x, "growth_exponent" of growth[index],
/// "gibbs_D", "gibbs_change", "norm_slope", "sup_slope" or "bound_max_ratio"
/// of bounds[index].
struct Expectation {
  std::string what;
  std::optional<Rational> x;
  int index = 0;
  double value = 0;
  std::optional<double> tolerance;  // absolute; defaults from the profile
};

/// One declarative experiment, read from a JSON file.
struct ExperimentConfig {
  std::string id;
  FamilyParams family;
  std::vector<Rational> xs;
  int pmax = 2200;
  /// Unset: the family's minimal context ("auto").
  std::optional<PrecisionContext> ctx;
  std::optional<FitWindow> window;
  bool coefficients = true;
  bool norms = false;
  std::optional<GibbsSpec> gibbs;
  std::vector<GrowthSpec> growth;
  std::vector<BoundSpec> bounds;
  std::optional<FemSpec> fem;
  std::optional<SupSpec> sup;
  std::vector<Expectation> expect;
  nlohmann::json source;

  PrecisionContext context() const { return ctx ? *ctx : family.minimal_context(pmax); }
};

/// Throws ConfigError on missing or malformed fields.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct ExpectationCheck {
  Expectation expect;
  double measured = 0;
  double tolerance = 0;
  bool pass = false;
  std::string detail;
};

nlohmann::json to_json(const ExpectationCheck& c);

struct ErrorRecord {
  std::string task;
  std::string kind;
  std::string message;
};

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string kind;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunResult {
  std::string out_dir;
  std::vector<ManifestEntry> outputs;
  std::vector<ErrorRecord> errors;
  std::vector<ExpectationCheck> checks;
  nlohmann::json results;

  bool ok() const;
};

/// Hex SHA-256 of a file.
std::string sha256_file(const std::string& path);

/// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Coefficients, sweeps, fits, plot data and the optional analyses, written
/// under out_dir together with manifest.json (every output with its
/// checksum) and results.json. A failing task becomes an error record and the
/// remaining tasks still run. An empty x list gives a coefficients-only run.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs = 1);

enum class VerdictStatus { Pass, Fail, Preasymptotic };
std::string to_string(VerdictStatus s);

struct ConjectureVerdict {
  std::string suite;  // "conjecture" or "powershift"
  int clause = 0;
  std::string family;
  Rational a = 0;
  Rational beta = 0;
  std::string point;     // "x=..." or "xi->..."
  std::string quantity;  // "rate", "growth_exponent" or "bounded_non_cauchy"
  double measured = 0;
  double conjectured = 0;
  double tolerance = 0;
  VerdictStatus status = VerdictStatus::Fail;
  std::optional<RateFit> fit;
  std::optional<ConstantGrowthFit> growth;
  /// The data the verdict derives from; refitting it reproduces `fit`.
  std::optional<ErrorSweep> sweep;
  std::string note;
};

nlohmann::json to_json(const ConjectureVerdict& v);

struct SuiteOptions {
  int pmax = 2200;
  int jobs = 1;
  ToleranceProfile tol;
};

/// Clauses 1-5 for w = |x - a|^beta at every (beta, a). beta = 0 uses the
/// step family, whose jump carries the clause-5 mean.
std::vector<ConjectureVerdict> conjecture_suite(const std::vector<Rational>& beta_grid,
                                                const std::vector<Rational>& a_grid, const SuiteOptions& opt = {});

/// |x+1|^beta: rates 2 beta at -1 (beta > 0), 2 beta + 1 at 1 and
/// 2 beta + 3/2 inside, and the growth of C like xi^-3/4 near -1 and
/// xi^-1/4 near 1.
std::vector<ConjectureVerdict> powershift_suite(const std::vector<Rational>& beta_grid, const SuiteOptions& opt = {});

/// Pass/fail for a rate or exponent measurement: pass iff |measured -
/// conjectured| <= tolerance and the fit is valid, preasymptotic if invalid.
VerdictStatus judge(double measured, double conjectured, double tolerance, bool valid);

/// Bounded non-Cauchy test on signed partial sums: over the dyadic windows
/// [2^j, 2^(j+1)) inside [16, pmax], the sup stays within 10% of the first
/// window's and the oscillation (max - min) stays above 10% of the sup.
/// Returns the smallest relative oscillation and whether both hold.
std::pair<double, bool> bounded_non_cauchy(const std::vector<double>& partial_sums);

/// verdicts.json, one sweep CSV per verdict that carries one, and a plain
/// text table (summary.txt). Returns the number of failed verdicts.
int write_verdicts(const std::vector<ConjectureVerdict>& verdicts, const std::string& out_dir);

std::string summary_table(const std::vector<ConjectureVerdict>& verdicts);

}  // namespace leglab
