#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "leglab/ratelab.hpp"

using namespace leglab;

namespace {

ErrorSweep synthetic(int pmax, auto f) {
  ErrorSweep sw;
  sw.x_label = "synthetic";
  for (int p = 1; p <= pmax; ++p) {
    sw.pvalues.push_back(p);
    sw.abs_error.push_back(f(p));
  }
  return sw;
}

FamilyParams family(Family f) {
  FamilyParams fam;
  fam.family = f;
  fam.a = Rational(1, 2);
  return fam;
}

ErrorSweep sweep(Family f, const Rational& x, int pmax = 2200) {
  return family_sweeps(family(f), {x}, pmax, PrecisionContext::float64())[0];
}

void check_dominance(const ErrorSweep& sw, const RateFit& fit) {
  for (std::size_t i = 0; i < sw.pvalues.size(); ++i) {
    const int p = sw.pvalues[i];
    if (p < fit.window.pmin || p > fit.window.pmax) continue;
    CHECK(sw.abs_error[i] <= fit.C * std::pow(p, -fit.alpha) * (1 + 1e-6));
  }
}

}  // namespace

TEST_CASE("exact power laws are recovered") {
  auto unit = synthetic(400, [](int p) { return 1.0 / p; });
  auto f = fit_rate(unit);
  CHECK(std::abs(f.alpha - 1) < 1e-10);
  CHECK(std::abs(f.C - 1) < 1e-10);
  CHECK(f.window.pmin == 200);
  CHECK(f.window.pmax == 400);
  auto low = fit_lower_bound(unit);
  CHECK(std::abs(low.alpha - f.alpha) < 1e-10);
  CHECK(std::abs(low.C - f.C) < 1e-10);

  auto other = synthetic(1000, [](int p) { return 3.0 * std::pow(p, -1.7); });
  auto g = fit_rate(other, FitWindow{100, 900});
  CHECK(std::abs(g.alpha - 1.7) < 1e-10);
  CHECK(std::abs(g.C - 3) / 3 < 1e-10);
  CHECK(fit_pinned(other, 1.7).C == doctest::Approx(3).epsilon(1e-10));
}

TEST_CASE("oscillating envelopes") {
  // Upper envelope 2 p^-1 touched every seventh p, lower envelope p^-1.
  auto osc = synthetic(700, [](int p) { return (p % 7 == 0 ? 2.0 : 1.0 + 0.5 * (p % 3 == 0)) / p; });
  auto up = fit_rate(osc);
  CHECK(std::abs(up.alpha - 1) < 1e-10);
  CHECK(std::abs(up.C - 2) < 1e-10);
  check_dominance(osc, up);
  auto low = fit_lower_bound(osc);
  CHECK(std::abs(low.alpha - 1) < 1e-10);
  CHECK(std::abs(low.C - 1) < 1e-10);
}

TEST_CASE("unreliable and invalid input") {
  CHECK_THROWS_AS(fit_rate(synthetic(50, [](int p) { return 1.0 / p; })), DomainError);
  auto ok = synthetic(400, [](int p) { return 1.0 / p; });
  CHECK_THROWS_AS(fit_rate(ok, FitWindow{300, 500}), DomainError);
  // Only four samples reach the envelope in the window.
  auto sparse = synthetic(400, [](int p) { return p % 50 == 0 ? 1.0 : 1e-3; });
  CHECK_THROWS_AS(fit_rate(sparse), FitUnreliable);
  try {
    fit_rate(sparse);
  } catch (const FitUnreliable& e) {
    CHECK(e.fit().envelope_size < kMinEnvelope);
    CHECK_FALSE(e.fit().valid);
  }
  // Rate 1 below p = 300 and 2.5 above: the hull bends at the kink.
  auto bent = synthetic(400, [](int p) { return p < 300 ? std::pow(300.0 / p, 1) : std::pow(300.0 / p, 2.5); });
  auto b = fit_rate_nothrow(bent);
  CHECK(b.residual > kMaxResidual);
  CHECK_FALSE(b.valid);
  // Bending the other way the hull is a single chord; the window shift sees it.
  auto convex = synthetic(400, [](int p) { return p < 300 ? std::pow(300.0 / p, 3) : std::pow(300.0 / p, 0.5); });
  CHECK(window_shift_drift(convex, fit_rate_nothrow(convex)) > 0.05);
}

TEST_CASE("step family rates and constants") {
  struct Case {
    Rational x;
    double alpha, C;
  };
  const Case cases[] = {{Rational(-1), 0.5, 0.44194}, {Rational(1), 0.5, 0.75}, {Rational(1, 2), 1, 0.25293},
                        {Rational(1, 10), 1, 0.84622}, {Rational(-99, 100), 1, 0.889506}};
  for (const auto& c : cases) {
    CAPTURE(c.x.str());
    auto sw = sweep(Family::StepDerivative, c.x);
    auto f = fit_rate(sw);
    CHECK(std::abs(f.alpha - c.alpha) <= 0.05);
    CHECK(std::abs(f.C - c.C) <= 0.25 * c.C);
    CHECK(window_shift_drift(sw, f) <= 0.05);
    check_dominance(sw, f);
  }
}

TEST_CASE("abs-shift and constrained families") {
  auto f = fit_rate(sweep(Family::AbsShift, Rational(1, 10)));
  CHECK(std::abs(f.alpha - 2) <= 0.05);
  CHECK(std::abs(f.C - 0.73185) <= 0.25 * 0.73185);
  auto g = fit_rate(sweep(Family::AbsShift, Rational(-1)));
  CHECK(std::abs(g.alpha - 1.5) <= 0.05);
  auto h = fit_rate(sweep(Family::ConstrainedPVersion, Rational(-99, 100)));
  CHECK(std::abs(h.alpha - 2) <= 0.05);
  CHECK(std::abs(h.C - 0.1245) <= 0.25 * 0.1245);
}

TEST_CASE("lower envelope") {
  for (const Rational& x : {Rational(-1), Rational(1)}) {
    auto low = fit_lower_bound(sweep(Family::StepDerivative, x));
    CHECK(std::abs(low.alpha - 0.5) <= 0.05);
    CHECK(low.C > 0.1);
  }
  CHECK_THROWS_AS(fit_lower_bound(sweep(Family::StepDerivative, Rational(1, 10))), FitUnreliable);
}

TEST_CASE("constant growth near the boundary and near a") {
  const std::vector<Rational> xi_edge{Rational(1, 10), Rational(1, 100), Rational(1, 1000), Rational(1, 10000)};
  const std::vector<Rational> xi_a{Rational(1, 10), Rational(1, 20), Rational(1, 50), Rational(1, 100)};
  GrowthOptions opt;
  opt.pmax_ceiling = 2200;
  auto step = family(Family::StepDerivative);
  auto edge = constant_growth(step, Rational(-1), 1, xi_edge, 1.0, opt);
  CHECK(edge.valid);
  CHECK(edge.dropped_xi.empty());
  CHECK(std::abs(edge.exponent + 0.25) <= 0.1);
  auto at_a = constant_growth(step, Rational(1, 2), 1, xi_a, 1.0, opt);
  CHECK(std::abs(at_a.exponent + 1) <= 0.1);
  auto constrained = constant_growth(family(Family::ConstrainedPVersion), Rational(-1), 1, xi_edge, 2.0, opt);
  CHECK(std::abs(constrained.exponent - 0.25) <= 0.1);
  CHECK_THROWS_AS(constant_growth(step, Rational(-1), 1, {Rational(1, 10000000)}, 1.0, opt), DomainError);
  CHECK_THROWS_AS(constant_growth(step, Rational(-1), 0, xi_edge, 1.0, opt), DomainError);
}

TEST_CASE("Gibbs overshoot") {
  auto g = gibbs_probe(family(Family::StepDerivative), Rational(1, 2), {500, 1000, 2000}, PrecisionContext::float64());
  CHECK(std::abs(g.D - 2.7777) <= 0.05 * 2.7777);
  CHECK(std::abs(g.magnitude[2] - g.magnitude[1]) < 0.05 * g.magnitude[1]);
  CHECK(std::abs(g.magnitude[1] - g.magnitude[0]) < 0.05 * g.magnitude[0]);
  CHECK(g.magnitude[2] > 0.08);
  // Near a the envelope falls like 1/xi at fixed p.
  CHECK(std::abs(g.near_exponent + 1) <= 0.1);
  auto h = gibbs_probe(family(Family::AbsShift), Rational(1, 2), {1000, 2000}, PrecisionContext::float64(), 2.0);
  CHECK(std::abs(h.near_exponent + 1) <= 0.15);
  CHECK(h.near_constant > 0);
}

TEST_CASE("weighted sup norm") {
  const Rational a(1, 2);
  const std::vector<int> ps{100, 200, 400, 800};
  const auto grid = resolving_grid(a, 800, 1000);
  auto step = family(Family::StepDerivative);
  auto w = weighted_sup_norm(step, grid, ps, 0.5, 0.5, 1.0, a, PrecisionContext::float64());
  CHECK(std::abs(w.slope + 1) <= 0.1);
  auto plain = weighted_sup_norm(step, grid, ps, 0, 0, 0, a, PrecisionContext::float64());
  CHECK(std::abs(plain.slope) < 0.1);
  const auto e = family_errors_on_grid(step, grid, 200, PrecisionContext::float64());
  CHECK(plain.sup[1] == *std::max_element(e.begin(), e.end()));
}

TEST_CASE("plot data and json") {
  auto sw = sweep(Family::StepDerivative, Rational(-1), 400);
  auto f = fit_rate(sw);
  const auto path = std::filesystem::temp_directory_path() / "leglab_plot.csv";
  write_plot_data(sw, f, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("log10_p") != std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 400);
  auto j = to_json(f);
  CHECK(j["alpha"].get<double>() == f.alpha);
  CHECK(j["window"][0].get<int>() == 200);
}
