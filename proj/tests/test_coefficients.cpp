#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "leglab/coefficients.hpp"
#include "leglab/quadrature.hpp"

using namespace leglab;

namespace {

double rel_diff(double got, double ref) {
  return std::abs(got - ref) / std::max(std::abs(ref), 1e-300);
}

// (k + 1/2) times two-piece Gauss integration of the step (a-1)/2 + H(x-a).
template <class T>
T step_oracle(const T& a, int k, const QuadratureRule<T>& rule) {
  const T left = rule.integrate([&](const T& x) { return (a - T(1)) / T(2) * legendre_eval(k, x); }, T(-1), a);
  const T right = rule.integrate([&](const T& x) { return (a + T(1)) / T(2) * legendre_eval(k, x); }, a, T(1));
  return T(2 * k + 1) / T(2) * (left + right);
}

// int_0^1 x^beta P_n(x) dx after x = u^(1/(beta+1)); smooth for beta = -1/2.
template <class T>
T half_moment_oracle(const T& beta, int n, const QuadratureRule<T>& rule) {
  using std::pow;
  const T e = T(1) / (beta + T(1));
  return rule.integrate([&](const T& u) { return legendre_eval(n, T(pow(u, e))); }, T(0), T(1)) * e;
}

// I_k = sum_j binom(k,j) (-1)^(k-j) 2^(beta+j+1)/(beta+j+1).
BigFloat binomial_moment(const BigFloat& beta, int k) {
  BigFloat sum = 0;
  mp::mpz_int binom = 1;
  for (int j = 0; j <= k; ++j) {
    if (j > 0) binom = binom * (k - j + 1) / j;
    BigFloat t = BigFloat(binom) * mp::pow(BigFloat(2), beta + j + 1) / (beta + j + 1);
    if ((k - j) % 2 == 0) {
      sum += t;
    } else {
      sum -= t;
    }
  }
  return sum;
}

}  // namespace

TEST_CASE("step derivative coefficients") {
  auto s = step_derivative_coeffs<double>(Rational(1, 2), 60);
  CHECK(s.coeffs[0] == 0.0);
  CHECK(s.coeffs[1] == doctest::Approx(0.5625).epsilon(1e-15));
  auto z = step_derivative_coeffs<double>(Rational(0), 10);
  CHECK(z.coeffs[2] == 0.0);
  const auto rule = gauss_rule<double>(80);
  for (const Rational a : {Rational(1, 2), Rational(0), Rational(-3, 10), Rational(9, 10)}) {
    auto t = step_derivative_coeffs<double>(a, 50);
    for (int k = 1; k <= 50; ++k) {
      // The (2k+1)/2 normalisation amplifies O(eps) integration error.
      const double err = std::abs(t.coeffs[static_cast<std::size_t>(k)] - step_oracle(a.convert_to<double>(), k, rule));
      CHECK(err < 1e-15 * (2 * k + 1));
    }
  }
  {
    // Relative agreement, with both sides carried at 256 bits so that
    // coefficients near a sign change are resolved.
    PrecisionScope scope(256);
    const auto big_rule = gauss_rule<BigFloat>(80);
    for (const Rational a : {Rational(1, 2), Rational(-3, 10), Rational(9, 10)}) {
      auto t = step_derivative_coeffs<BigFloat>(a, 50);
      for (int k = 1; k <= 50; ++k) {
        const BigFloat ref = step_oracle(from_rational<BigFloat>(a), k, big_rule);
        const BigFloat& got = t.coeffs[static_cast<std::size_t>(k)];
        CHECK(to_double(BigFloat(mp::abs(got - ref) / mp::abs(ref))) < 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(step_derivative_coeffs<double>(Rational(1), 5), DomainError);
  CHECK_THROWS_AS(step_derivative_coeffs<double>(Rational(0), 0), DomainError);
  auto ex = step_derivative_coeffs<Rational>(Rational(1, 2), 4);
  CHECK(ex.coeffs[1] == Rational(9, 16));
}

TEST_CASE("abs shift coefficients") {
  auto c = abs_shift_coeffs<double>(Rational(1, 2), 2200);
  CHECK(c.coeffs[0] == doctest::Approx(-0.1875).epsilon(1e-15));
  // u(-1) = 0 boundary value approached by the partial sum.
  CompensatedSum<double> sum;
  for (int k = 0; k <= 2200; ++k) sum.add(c.coeffs[static_cast<std::size_t>(k)] * (k % 2 ? -1.0 : 1.0));
  CHECK(std::abs(sum.value()) <= 1e-3);
  // |x| + linear: even part is |x|/2 - 1/2, odd coefficients come only from P_1.
  auto z = abs_shift_coeffs<Rational>(Rational(0), 12);
  for (int k = 3; k <= 12; k += 2) CHECK(z.coeffs[static_cast<std::size_t>(k)] == 0);
  // Against quadrature of u = (|x-a| + a x - 1)/2.
  auto rule = gauss_rule<double>(80);
  for (int k = 0; k <= 50; ++k) {
    auto u = [&](double x) { return 0.5 * (std::abs(x - 0.5) + 0.5 * x - 1) * legendre_eval(k, x); };
    const double ref = (k + 0.5) * (rule.integrate(u, -1.0, 0.5) + rule.integrate(u, 0.5, 1.0));
    CHECK(std::abs(c.coeffs[static_cast<std::size_t>(k)] - ref) <= 1e-12 * std::max(1e-3, std::abs(ref)));
  }
}

TEST_CASE("constrained p-version coefficients") {
  for (int P : {1, 2, 3, 10, 57, 200}) {
    auto b = constrained_pversion_coeffs<double>(Rational(1, 2), P);
    REQUIRE(b.coeffs.size() == static_cast<std::size_t>(P) + 2);
    CHECK(b.coeffs[0] == doctest::Approx(-0.1875).epsilon(1e-15));
    CompensatedSum<double> plus, minus;
    for (std::size_t k = 0; k < b.coeffs.size(); ++k) {
      plus.add(b.coeffs[k]);
      minus.add(k % 2 ? -b.coeffs[k] : b.coeffs[k]);
    }
    CHECK(std::abs(plus.value()) < 1e-14);
    CHECK(std::abs(minus.value()) < 1e-14);
  }
  for (int P : {1, 2, 5, 9}) {
    auto b = constrained_pversion_coeffs<Rational>(Rational(1, 3), P);
    Rational plus = 0, minus = 0;
    for (std::size_t k = 0; k < b.coeffs.size(); ++k) {
      plus += b.coeffs[k];
      minus += k % 2 ? -b.coeffs[k] : b.coeffs[k];
    }
    CHECK(plus == 0);
    CHECK(minus == 0);
    auto a = step_derivative_coeffs<Rational>(Rational(1, 3), P + 1).coeffs;
    if (P >= 2) CHECK(b.coeffs[1] == -a[2] / 5);
  }
}

TEST_CASE("power abs closed form") {
  auto c0 = power_abs_coeffs<Rational>(Rational(0), 8);
  CHECK(c0.coeffs[0] == 1);
  for (std::size_t k = 1; k < c0.coeffs.size(); ++k) CHECK(c0.coeffs[k] == 0);
  auto c2 = power_abs_coeffs<Rational>(Rational(2), 8);
  CHECK(c2.coeffs[0] == Rational(1, 3));
  CHECK(c2.coeffs[2] == Rational(2, 3));
  for (std::size_t k = 3; k < c2.coeffs.size(); ++k) CHECK(c2.coeffs[k] == 0);
  CHECK_THROWS_AS(power_abs_coeffs<double>(Rational(-1, 2), 10), PrecisionError);
  CHECK_THROWS_AS(power_abs_coeffs<double>(Rational(-1), 10), DomainError);

  PrecisionScope scope(256);
  const auto rule = gauss_rule<BigFloat>(40);
  for (const Rational beta : {Rational(-1, 2)}) {
    auto c = power_abs_coeffs<BigFloat>(beta, 41);
    for (int j = 0; j <= 20; ++j) {
      const BigFloat ref = BigFloat(4 * j + 1) * half_moment_oracle(from_rational<BigFloat>(beta), 2 * j, rule);
      const BigFloat got = c.coeffs[static_cast<std::size_t>(2 * j)];
      CHECK(to_double(BigFloat(mp::abs(got - ref) / mp::abs(ref))) < 1e-10);
      CHECK(c.coeffs[static_cast<std::size_t>(2 * j + 1)] == 0);
    }
  }
  // The closed form checked against the graded-panel quadrature as well.
  for (const Rational beta : {Rational(-1, 16), Rational(1, 2), Rational(3, 2)}) {
    auto c = power_abs_coeffs<double>(beta, 50);
    auto q = quadrature_abs_coeffs<double>(Rational(0), beta, 50);
    for (std::size_t k = 0; k <= 50; k += 2) CHECK(rel_diff(q.coeffs[k], c.coeffs[k]) < 1e-10);
  }
}

TEST_CASE("graded quadrature to high degree") {
  for (const Rational beta : {Rational(-1, 16), Rational(1, 2)}) {
    auto c = power_abs_coeffs<double>(beta, 2200);
    auto q = quadrature_abs_coeffs<double>(Rational(0), beta, 2200);
    double worst = 0;
    // Moments carry O(eps) absolute error, amplified by the (2k+1)/2 factor.
    for (std::size_t k = 0; k <= 2200; k += 2) {
      worst = std::max(worst, std::abs(q.coeffs[k] - c.coeffs[k]) / (1e-15 * (2.0 * k + 1)));
    }
    CHECK(worst < 1);
  }
  // beta = 1 away from the origin against the abs-shift relation.
  auto u = abs_shift_coeffs<double>(Rational(1, 2), 2200);
  auto q = quadrature_abs_coeffs<double>(Rational(1, 2), Rational(1), 2200);
  double worst = 0;
  for (std::size_t k = 2; k <= 2200; ++k) {
    worst = std::max(worst, std::abs(q.coeffs[k] - 2 * u.coeffs[k]) / (1e-15 * (2.0 * k + 1)));
  }
  CHECK(worst < 1);
}

TEST_CASE("Appendix A moments and coefficients") {
  {
    PrecisionScope scope(appendix_a_required_bits(4));
    auto c0 = power_shift_coeffs_appendixA(Rational(0), 4);
    CHECK(std::abs(to_double(c0.coeffs[0]) - 1) < 1e-18);
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(to_double(c0.coeffs[static_cast<std::size_t>(k)])) < 1e-18);
    auto I = power_shift_moments(Rational(0), 1);
    CHECK(std::abs(to_double(I[0]) - 2) < 1e-18);
    CHECK(std::abs(to_double(I[1])) < 1e-18);
    auto c1 = power_shift_coeffs_appendixA(Rational(1), 4);
    CHECK(std::abs(to_double(c1.coeffs[0]) - 1) < 1e-18);
    CHECK(std::abs(to_double(c1.coeffs[1]) - 1) < 1e-18);
    for (int k = 2; k <= 4; ++k) CHECK(std::abs(to_double(c1.coeffs[static_cast<std::size_t>(k)])) < 1e-18);
  }
  {
    PrecisionScope small(64);
    CHECK_THROWS_AS(power_shift_coeffs_appendixA(Rational(1, 2), 200), PrecisionError);
  }
  CHECK_THROWS_AS(power_shift_series<double>(Rational(1, 2), 10), PrecisionError);

  for (const Rational beta : {Rational(-1, 2), Rational(1, 2), Rational(3, 2)}) {
    const int P = 50;
    const unsigned W = appendix_a_required_bits(P);
    std::vector<BigFloat> I, c;
    {
      PrecisionScope scope(W);
      I = power_shift_moments(beta, P);
      c = power_shift_coeffs_appendixA(beta, P).coeffs;
    }
    // Oracles at a precision far above W so their own cancellation is moot.
    PrecisionScope oracle(4 * W);
    const BigFloat b = from_rational<BigFloat>(beta);
    const double moment_tol = std::ldexp(1.0, -static_cast<int>(W) + 8);
    // The moment route keeps the 64 guard bits of the precision rule.
    const double coeff_tol = std::ldexp(1.0, -60);
    BigFloat r = mp::pow(BigFloat(2), b) / (b + 1);
    for (int k = 0; k <= P; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      const BigFloat ref = binomial_moment(b, k);
      CHECK(to_double(BigFloat(mp::abs(I[uk] - ref) / mp::abs(ref))) < moment_tol);
      // Closed-form ratio c_k/c_{k-1} = (2k+1)/(2k-1) (beta+1-k)/(beta+1+k).
      if (k > 0) r = r * BigFloat(2 * k + 1) / (2 * k - 1) * (b + 1 - k) / (b + 1 + k);
      CHECK(to_double(BigFloat(mp::abs(c[uk] - r) / mp::abs(r))) < coeff_tol);
    }
  }
}

TEST_CASE("spec combinations") {
  SingularFunctionSpec abs_half({{Rational(1), Rational(1, 2), Rational(1)}});
  auto s = spec_coeffs<double>(abs_half, 40);
  auto u = abs_shift_coeffs<double>(Rational(1, 2), 40);
  for (std::size_t k = 2; k <= 40; ++k) CHECK(s.coeffs[k] == doctest::Approx(2 * u.coeffs[k]).epsilon(1e-14));
  CHECK(s.coeffs[0] == doctest::Approx(2 * u.coeffs[0] + 1));
  CHECK(s.coeffs[1] == doctest::Approx(2 * u.coeffs[1] - 0.5));

  SingularFunctionSpec square({}, {Rational(0), Rational(0), Rational(1)});
  auto q = spec_coeffs<Rational>(square, 4);
  CHECK(q.coeffs[0] == Rational(1, 3));
  CHECK(q.coeffs[1] == 0);
  CHECK(q.coeffs[2] == Rational(2, 3));
  CHECK(q.coeffs[3] == 0);

  SingularFunctionSpec t1({{Rational(2), Rational(-1, 3), Rational(1, 2)}});
  SingularFunctionSpec t2({{Rational(-1, 2), Rational(1, 4), Rational(3, 2)}}, {Rational(1), Rational(-1)});
  SingularFunctionSpec both({{Rational(2), Rational(-1, 3), Rational(1, 2)}, {Rational(-1, 2), Rational(1, 4), Rational(3, 2)}},
                            {Rational(1), Rational(-1)});
  auto a = spec_coeffs<double>(t1, 60), b = spec_coeffs<double>(t2, 60), ab = spec_coeffs<double>(both, 60);
  for (std::size_t k = 0; k <= 60; ++k) CHECK(std::abs(ab.coeffs[k] - a.coeffs[k] - b.coeffs[k]) < 1e-14);

  // Merging duplicates.
  SingularFunctionSpec dup({{Rational(1), Rational(0), Rational(1, 2)}, {Rational(2), Rational(0), Rational(1, 2)}});
  REQUIRE(dup.terms().size() == 1);
  CHECK(dup.terms()[0].weight == 3);
  CHECK_THROWS_AS(SingularFunctionSpec({{Rational(1), Rational(1), Rational(1)}}), DomainError);
  CHECK_THROWS_AS(SingularFunctionSpec({{Rational(1), Rational(0), Rational(-1)}}), DomainError);
}

TEST_CASE("parity and Parseval") {
  for (const Rational beta : {Rational(-5, 6), Rational(-1, 2), Rational(1, 3)}) {
    auto c = power_abs_coeffs<Rational>(beta, 30);
    for (std::size_t k = 1; k <= 30; k += 2) CHECK(c.coeffs[k] == 0);
  }
  // Sum c_k^2 2/(2k+1) increases towards int f^2.
  struct Case {
    LegendreSeries<double> s;
    double norm_sq;
  };
  const double a = 0.5;
  std::vector<Case> cases;
  cases.push_back({step_derivative_coeffs<double>(Rational(1, 2), 2200), (a + 1) * (1 - a) * (1 - a) / 4 + (1 - a) * (1 + a) * (1 + a) / 4});
  cases.push_back({power_abs_coeffs<double>(Rational(-1, 4), 2200), 2.0 / (1 - 0.5)});
  for (const auto& cs : cases) {
    double acc = 0, prev = -1;
    bool monotone = true;
    for (std::size_t k = 0; k < cs.s.coeffs.size(); ++k) {
      acc += cs.s.coeffs[k] * cs.s.coeffs[k] * 2.0 / (2.0 * k + 1);
      if (acc < prev) monotone = false;
      prev = acc;
    }
    CHECK(monotone);
    CHECK(acc <= cs.norm_sq * (1 + 1e-14));
    CHECK(acc > 0.99 * cs.norm_sq);
  }
}
