// Acceptance criteria AC1-AC16: one PASS/FAIL line each, exit status 1 if any fails.
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "leglab/bounds.hpp"
#include "leglab/coefficients.hpp"
#include "leglab/pfem.hpp"
#include "leglab/ratelab.hpp"
#include "leglab/runner.hpp"

using namespace leglab;

namespace {

constexpr double kRateTol = 0.05;
constexpr double kConstantTol = 0.25;  // relative
constexpr double kDriftTol = 0.05;  // reported as a flag, not part of the criteria
constexpr double kGrowthTol = 0.1;
constexpr double kGibbsD = 2.7777;
constexpr double kGibbsDTol = 0.05;  // relative
constexpr double kGibbsChange = 0.05;
constexpr double kSlopeTol = 0.05;
constexpr double kTheorem1Constant = 32.793;
constexpr double kTheorem1Tol = 0.01;  // relative
constexpr double kEndpointConstant = 0.85738;
constexpr double kEndpointTol = 1e-3;
constexpr double kIdentityTol = 1e-12;
constexpr double kParsevalTol = 1e-8;
// 64 + 1.6 P working bits, of which 1.6 P go to cancellation: 2^-64 remains.
constexpr double kAppendixATol = 1e-20;
constexpr double kFemSeriesTol = 1e-10;
constexpr double kFemExactTol = 1e-12;
constexpr int kDeskPmax = 2200;
constexpr int kLongPmax = 10000;
constexpr int kShiftPmax = 1000;

const Rational kA(1, 2);

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void note(bool ok, const std::string& s) {
    pass = pass && ok;
    lines.push_back((ok ? "ok    " : "FAIL  ") + s);
  }
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

FamilyParams family(Family f, const Rational& a = kA, const Rational& beta = 0) {
  FamilyParams p;
  p.family = f;
  p.a = a;
  p.beta = beta;
  return p;
}

struct Expected {
  std::string x;
  double alpha;
  double C;
};

std::string drift_note(double drift) {
  return ", drift " + fmt(drift, 3) + (drift > kDriftTol ? " (window-shift flag)" : "");
}

// Rate and constant at each point; the window-shift drift is reported.
void check_points(Outcome& out, const FamilyParams& fam, const std::vector<Expected>& pts, int pmax,
                  const PrecisionContext& ctx) {
  std::vector<Rational> xs;
  for (const auto& e : pts) xs.push_back(parse_rational(e.x));
  const auto sweeps = family_sweeps(fam, xs, pmax, ctx);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto f = fit_rate_nothrow(sweeps[i]);
    const double drift = window_shift_drift(sweeps[i], f);
    const bool ok = f.valid && std::abs(f.alpha - pts[i].alpha) <= kRateTol &&
                    std::abs(f.C - pts[i].C) <= kConstantTol * pts[i].C;
    out.note(ok, fam.describe() + " x=" + pts[i].x + " pmax " + std::to_string(pmax) + ": alpha " + fmt(f.alpha, 5) +
                     " (" + fmt(pts[i].alpha) + "), C " + fmt(f.C) + " (" + fmt(pts[i].C) + ")" + drift_note(drift) +
                     (f.valid ? "" : ", fit invalid"));
  }
}

std::vector<Rational> grid(std::initializer_list<const char*> items) {
  std::vector<Rational> g;
  for (const char* s : items) g.push_back(parse_rational(s));
  return g;
}

void check_growth(Outcome& out, const FamilyParams& fam, const Rational& approach, double alpha,
                  const std::vector<Rational>& xi, double expected_exponent, const std::string& name) {
  const auto g = constant_growth(fam, approach, 1, xi, alpha);
  const bool ok = g.valid && std::abs(g.exponent - expected_exponent) <= kGrowthTol;
  out.note(ok, fam.describe() + " " + name + ": C ~ xi^" + fmt(g.exponent, 4) + " (" + fmt(expected_exponent) + ")" +
                   (g.valid ? "" : ", growth fit invalid"));
}

// P_0..P_n at x by the three-term recurrence in long double.
std::vector<long double> legendre_ld(int n, long double x) {
  std::vector<long double> P(static_cast<std::size_t>(n) + 1);
  P[0] = 1;
  if (n > 0) P[1] = x;
  for (int k = 1; k < n; ++k) {
    P[static_cast<std::size_t>(k) + 1] =
        ((2 * k + 1) * x * P[static_cast<std::size_t>(k)] - k * P[static_cast<std::size_t>(k) - 1]) / (k + 1);
  }
  return P;
}

double series_at(const std::vector<double>& c, int p, double x) {
  const auto P = legendre_ld(p, x);
  long double s = 0;
  for (int k = 0; k <= p; ++k) s += c[static_cast<std::size_t>(k)] * P[static_cast<std::size_t>(k)];
  return static_cast<double>(s);
}

Outcome ac1() {
  Outcome out;
  const auto fam = family(Family::StepDerivative);
  check_points(out, fam,
               {{"-1", 0.5, 0.44194},
                {"1", 0.5, 0.75},
                {"1/2", 1, 0.25293},
                {"1/10", 1, 0.84622},
                {"-1+1e-2", 1, 0.889506},
                {"-1+1e-4", 1, 2.733292}},
               kDeskPmax, PrecisionContext::float64());
  check_points(out, fam, {{"-1+1e-6", 1, 7.765878}}, kLongPmax, PrecisionContext::big_float(256));
  return out;
}

Outcome ac2() {
  Outcome out;
  const auto g = gibbs_probe(family(Family::StepDerivative), kA, {1000, 2000}, PrecisionContext::float64());
  out.note(std::abs(g.D - kGibbsD) <= kGibbsDTol * kGibbsD,
           "D = " + fmt(g.D, 5) + " (" + fmt(kGibbsD) + " +- 5%), spread " + fmt(g.D_spread, 3));
  const double change = std::abs(g.magnitude[1] - g.magnitude[0]) / g.magnitude[0];
  out.note(change < kGibbsChange, "overshoot " + fmt(g.magnitude[0], 5) + " at p=1000, " + fmt(g.magnitude[1], 5) +
                                      " at p=2000, change " + fmt(100 * change, 3) + "%");
  return out;
}

// Least-squares slope of log norm against log p over [pmax/2, pmax].
double norm_slope(const NormSweep& ns) {
  std::vector<double> p, e;
  for (std::size_t i = ns.pvalues.size() / 2; i < ns.pvalues.size(); ++i) {
    p.push_back(ns.pvalues[i]);
    e.push_back(ns.norm_error[i]);
  }
  return loglog_line(p, e).first;
}

Outcome ac3() {
  Outcome out;
  const double energy = norm_slope(family_norm_sweep(family(Family::StepDerivative), 100, PrecisionContext::float64()));
  out.note(std::abs(energy + 0.5) <= kSlopeTol, "energy norm slope " + fmt(energy, 4) + " (-0.5), p in [50, 100]");
  const double l2 = norm_slope(family_norm_sweep(family(Family::AbsShift), 100, PrecisionContext::float64()));
  out.note(std::abs(l2 + 1.5) <= kSlopeTol, "abs-shift L2 slope " + fmt(l2, 4) + " (-1.5), p in [50, 100]");
  return out;
}

Outcome ac4() {
  Outcome out;
  const auto fam = family(Family::AbsShift);
  check_points(out, fam, {{"-1", 1.5, 0.42625}, {"-99/100", 2, 0.76483}, {"1/10", 2, 0.73185}}, kDeskPmax,
               PrecisionContext::float64());
  check_points(out, fam, {{"1/2", 1, 0.274738}}, kLongPmax, PrecisionContext::big_float(256));
  return out;
}

Outcome ac5() {
  Outcome out;
  const auto fam = family(Family::ConstrainedPVersion);
  check_points(out, fam, {{"-1+1e-6", 2, 0.0013}, {"-99/100", 2, 0.1245}, {"1/2", 1, 0.27557}}, kDeskPmax,
               PrecisionContext::float64());
  check_growth(out, fam, Rational(-1), 2, grid({"1/10", "1/100", "1/1000", "1/10000"}), 0.25, "x -> -1");
  return out;
}

Outcome ac6() {
  Outcome out;
  const auto near_end = grid({"1/10", "1/100", "1/1000", "1/10000"});
  const auto near_a = grid({"1/10", "1/20", "1/50", "1/100"});
  const auto step = family(Family::StepDerivative);
  check_growth(out, step, Rational(-1), 1, near_end, -0.25, "x -> -1");
  check_growth(out, step, kA, 1, near_a, -1, "x -> a");
  const auto abs = family(Family::AbsShift);
  check_growth(out, abs, Rational(-1), 2, near_end, -0.25, "x -> -1");
  check_growth(out, abs, kA, 2, near_a, -1, "x -> a");
  return out;
}

// Rate verdicts re-judged with the fixed tolerance.
void judge_verdict(Outcome& out, const ConjectureVerdict& v) {
  std::string line = v.family + " " + v.point + " " + v.quantity + ": " + fmt(v.measured, 4) +
                     " (" + fmt(v.conjectured, 4) + ")";
  bool ok = v.status == VerdictStatus::Pass;
  if (v.quantity == "rate" && v.fit && v.sweep) {
    const double drift = window_shift_drift(*v.sweep, *v.fit);
    ok = v.fit->valid && std::abs(v.measured - v.conjectured) <= kRateTol;
    line += drift_note(drift) + (v.fit->valid ? "" : ", fit invalid");
  }
  out.note(ok, line);
}

Outcome ac7() {
  Outcome out;
  SuiteOptions opt;
  opt.pmax = kDeskPmax;
  const auto verdicts = conjecture_suite(grid({"-5/6", "-2/3", "-1/2", "-1/16"}), {Rational(0)}, opt);
  for (const auto& v : verdicts) {
    // Interior (clause 1), endpoints (clause 4) and the singular point (clause 5).
    if (v.clause == 1 || v.clause == 4 || v.clause == 5) judge_verdict(out, v);
  }
  return out;
}

Outcome ac8() {
  Outcome out;
  SuiteOptions opt;
  opt.pmax = kShiftPmax;
  for (const auto& v : powershift_suite(grid({"-1/2", "1/2", "3/2"}), opt)) {
    if (v.quantity == "rate") judge_verdict(out, v);
  }
  return out;
}

Outcome ac9() {
  Outcome out;
  // The estimate is c/p for large p at x = 1/10, so p * bound is the constant.
  const double c = theorem1_bound(BVFunction::step(kA), Rational(1, 10), kDeskPmax) * kDeskPmax;
  out.note(std::abs(c - kTheorem1Constant) <= kTheorem1Tol * kTheorem1Constant,
           "Theorem 1 constant at x=1/10: " + fmt(c, 6) + " (" + fmt(kTheorem1Constant) + " +- 1%)");
  const double e = endpoint_bound_constant(kA);
  out.note(std::abs(e - kEndpointConstant) <= kEndpointTol,
           "closed endpoint constant: " + fmt(e, 7) + " (" + fmt(kEndpointConstant) + " +- 1e-3)");
  return out;
}

Outcome ac10_11(bool endpoints) {
  Outcome out;
  const auto s = step_derivative_coeffs<double>(kA, kDeskPmax);
  const auto P = legendre_ld(kDeskPmax + 1, 0.5L);
  double worst = 0;
  if (!endpoints) {
    const auto sw = error_sweep(s, Target::step(kA), kA, kDeskPmax);
    for (int p = 1; p <= kDeskPmax; ++p) {
      const auto up = static_cast<std::size_t>(p);
      const long double id = std::abs(0.5L * P[up + 1] * P[up]);
      worst = std::max(worst, static_cast<double>(std::abs(sw.abs_error[up - 1] - id) / id));
    }
    out.note(worst <= kIdentityTol, "error at x=a against P_{p+1}(a) P_p(a)/2, p <= 2200: worst relative " +
                                        fmt(worst, 3));
    return out;
  }
  for (int side : {-1, 1}) {
    const auto sw = error_sweep(s, Target::step(kA), Rational(side), kDeskPmax);
    worst = 0;
    for (int p = 1; p <= kDeskPmax; ++p) {
      const auto up = static_cast<std::size_t>(p);
      const long double id = 0.5L * std::abs(P[up] + side * P[up + 1]);
      worst = std::max(worst, static_cast<double>(std::abs(sw.abs_error[up - 1] - id) / id));
    }
    out.note(worst <= kIdentityTol, "error at x=" + std::to_string(side) +
                                        " against |P_p(a) +- P_{p+1}(a)|/2, p <= 2200: worst relative " + fmt(worst, 3));
  }
  return out;
}

Outcome ac12() {
  Outcome out;
  double worst = 0;
  int violations = 0;
  for (int i = -999; i <= 999; ++i) {
    const double x = i / 1000.0;
    const auto P = legendre_ld(kDeskPmax, x);
    for (int k = 1; k <= kDeskPmax; ++k) {
      const double r = static_cast<double>(std::abs(P[static_cast<std::size_t>(k)])) / bernstein_bound(k, x);
      worst = std::max(worst, r);
      violations += r > 1;
    }
  }
  out.note(violations == 0, "|P_k(x)| / bound over k <= 2200, x = -0.999:0.001:0.999: max " + fmt(worst, 6) + ", " +
                                std::to_string(violations) + " violations");
  return out;
}

Outcome ac13() {
  Outcome out;
  using boost::math::quadrature::gauss_kronrod;
  const double a = 0.5;
  struct Case {
    std::string name;
    LegendreSeries<double> s;
    std::optional<double> norm_sq;
    std::function<double(double)> f;
  };
  const auto step = step_derivative_coeffs<double>(kA, kDeskPmax);
  const auto abs = abs_shift_coeffs<double>(kA, kDeskPmax);
  const std::vector<Case> cases{
      {"step", step, Target::step(kA).norm_sq(), [&](double x) { return (a - 1) / 2 + (x > a ? 1.0 : 0.0); }},
      {"abs-shift", abs, Target::abs_shift(kA).norm_sq(),
       [&](double x) { return (std::abs(x - a) + a * x - 1) / 2; }}};
  for (const auto& cs : cases) {
    const auto ns = norm_sweep(cs.s, cs.norm_sq, 60, Norm::L2);
    for (int p : {5, 20, 50}) {
      auto sq = [&](double x) {
        const double e = cs.f(x) - series_at(cs.s.coeffs, p, x);
        return e * e;
      };
      const double quad = gauss_kronrod<double, 61>::integrate(sq, -1.0, a, 15, 1e-14) +
                          gauss_kronrod<double, 61>::integrate(sq, a, 1.0, 15, 1e-14);
      const double tail = std::pow(ns.norm_error[static_cast<std::size_t>(p - 1)], 2);
      const double rel = std::abs(tail - quad) / quad;
      out.note(rel <= kParsevalTol, cs.name + " p=" + std::to_string(p) + ": tail " + fmt(tail, 10) + ", quadrature " +
                                        fmt(quad, 10) + ", relative " + fmt(rel, 3));
    }
  }
  return out;
}

// Monomial coefficients of P_0..P_n, exactly.
std::vector<std::vector<Rational>> legendre_monomials(int n) {
  std::vector<std::vector<Rational>> P(static_cast<std::size_t>(n) + 1);
  P[0] = {Rational(1)};
  if (n > 0) P[1] = {Rational(0), Rational(1)};
  for (int k = 1; k < n; ++k) {
    std::vector<Rational> next(static_cast<std::size_t>(k) + 2, Rational(0));
    const auto& pk = P[static_cast<std::size_t>(k)];
    const auto& pm = P[static_cast<std::size_t>(k) - 1];
    for (std::size_t m = 0; m < pk.size(); ++m) next[m + 1] += Rational(2 * k + 1, k + 1) * pk[m];
    for (std::size_t m = 0; m < pm.size(); ++m) next[m] -= Rational(k, k + 1) * pm[m];
    P[static_cast<std::size_t>(k) + 1] = next;
  }
  return P;
}

Outcome ac14() {
  Outcome out;
  constexpr int K = 50;
  const auto mono = legendre_monomials(K);
  for (const Rational beta : {Rational(-1, 2), Rational(1, 2), Rational(3, 2)}) {
    LegendreSeries<BigFloat> got;
    {
      PrecisionScope working(appendix_a_required_bits(K));
      got = power_shift_coeffs_appendixA(beta, K);
    }
    PrecisionScope scope(1024);
    const BigFloat b = from_rational<BigFloat>(beta);
    // int_{-1}^{1} (1+x)^beta x^m dx = sum_j binom(m,j) (-1)^(m-j) 2^(beta+j+1)/(beta+j+1).
    std::vector<BigFloat> I(K + 1);
    for (int m = 0; m <= K; ++m) {
      BigFloat sum = 0;
      mp::mpz_int binom = 1;
      for (int j = 0; j <= m; ++j) {
        if (j > 0) binom = binom * (m - j + 1) / j;
        const BigFloat t = BigFloat(binom) * mp::pow(BigFloat(2), b + j + 1) / (b + j + 1);
        sum += (m - j) % 2 == 0 ? t : BigFloat(-t);
      }
      I[static_cast<std::size_t>(m)] = sum;
    }
    double worst = 0;
    for (int k = 0; k <= K; ++k) {
      BigFloat ref = 0;
      const auto& pk = mono[static_cast<std::size_t>(k)];
      for (std::size_t m = 0; m < pk.size(); ++m) ref += from_rational<BigFloat>(pk[m]) * I[m];
      ref *= BigFloat(2 * k + 1) / 2;
      const BigFloat diff = mp::abs(BigFloat(got.coeffs[static_cast<std::size_t>(k)]) - ref) / mp::abs(ref);
      worst = std::max(worst, to_double(diff));
    }
    out.note(worst <= kAppendixATol, "beta=" + beta.str() + ", k <= 50, " + std::to_string(appendix_a_required_bits(K)) +
                                         " bits: worst relative " + fmt(worst, 3));
  }
  return out;
}

double fem_oracle(const Rational& a, double x) {
  const double ad = a.convert_to<double>();
  return (1 - ad * x - std::abs(x - ad)) / 2;
}

Outcome ac15() {
  Outcome out;
  double worst = 0;
  for (int p = 2; p <= 100; ++p) {
    const auto d = fem_legendre_coeffs(assemble_and_solve<double>(Mesh1D::uniform(1, p), kA));
    const auto b = constrained_pversion_coeffs<double>(kA, p - 1);
    double diff = 0, scale = 0;
    for (std::size_t j = 0; j < d.size() && j < b.coeffs.size(); ++j) {
      diff = std::max(diff, std::abs(d[j] + b.coeffs[j]));
      scale = std::max(scale, std::abs(b.coeffs[j]));
    }
    if (d.size() != b.coeffs.size()) diff = INFINITY;
    worst = std::max(worst, diff / scale);
  }
  out.note(worst <= kFemSeriesTol, "single element against the constrained series, p <= 100: worst relative " +
                                       fmt(worst, 3));
  const Rational a(3, 10);
  const auto sol = assemble_and_solve<double>(Mesh1D::uniform(4, 6), a);
  const int e = sol.mesh.singular_element(a);
  double off = 0;
  for (int i = 0; i <= 400; ++i) {
    const Rational x = Rational(i, 200) - 1;
    if (sol.mesh.element_of(x) == e && x > sol.mesh.nodes[static_cast<std::size_t>(e)] &&
        x < sol.mesh.nodes[static_cast<std::size_t>(e) + 1]) {
      continue;
    }
    off = std::max(off, std::abs(sol.value(x) - fem_oracle(a, x.convert_to<double>())));
  }
  out.note(off <= kFemExactTol, "4 elements of degree 6, a=3/10: worst error off the loaded element " + fmt(off, 3));
  return out;
}

Outcome ac16() {
  Outcome out;
  const auto step = BVFunction::step(kA);
  const auto xs = grid({"-99/100", "-9/10", "-1/2", "-1/10", "1/10", "3/10", "1/2", "7/10", "9/10", "99/100"});
  const auto sweeps = family_sweeps(family(Family::StepDerivative), xs, kDeskPmax, PrecisionContext::float64());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto r = theorem1_report(step, xs[i], sweeps[i]);
    out.note(r.max_ratio <= 1.0, "x=" + xs[i].str() + ": max measured/bound over p in [2, 2200] " + fmt(r.max_ratio, 4));
  }
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "step family rates and constants", ac1},
      {"AC2", "Gibbs overshoot location and magnitude", ac2},
      {"AC3", "energy and L2 norm slopes", ac3},
      {"AC4", "abs-shift rates and constants", ac4},
      {"AC5", "constrained p-version rates, constants and boundary growth", ac5},
      {"AC6", "constant growth near -1 and a", ac6},
      {"AC7", "|x|^beta rate laws", ac7},
      {"AC8", "|x+1|^beta rate laws", ac8},
      {"AC9", "Theorem 1 and closed endpoint constants", ac9},
      {"AC10", "error identity at x = a", [] { return ac10_11(false); }},
      {"AC11", "endpoint telescoping identity", [] { return ac10_11(true); }},
      {"AC12", "Bernstein bound", ac12},
      {"AC13", "Parseval tail against quadrature", ac13},
      {"AC14", "Appendix-A coefficients against binomial moments", ac14},
      {"AC15", "p-FEM against the constrained series and the exact solution", ac15},
      {"AC16", "Theorem 1 never exceeded", ac16},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.note(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << std::left << std::setw(5) << c.id << (o.pass ? " PASS  " : " FAIL  ") << c.title << " (" << fmt(secs, 3)
              << " s)\n";
    for (const auto& l : o.lines) std::cout << "        " << l << '\n';
    std::cout.flush();
    failed += !o.pass;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
