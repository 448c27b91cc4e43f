#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leglab/legendre.hpp"
#include "leglab/precision.hpp"

namespace leglab {

enum class Generator {
  StepDerivative,
  AbsShift,
  ConstrainedPVersion,
  PowerAbs,
  PowerShiftAppendixA,
  QuadratureOracle,
  SpecCombination,
};

std::string to_string(Generator g);

struct SingularTerm {
  Rational weight;
  Rational center;
  Rational exponent;
};

/// u(x) = sum_i c_i |x - a_i|^{beta_i} + v(x), with v a polynomial given by its
/// monomial coefficients (lowest degree first).
class SingularFunctionSpec {
 public:
  SingularFunctionSpec() = default;
  /// Validates |a_i| < 1 and beta_i > -1. Terms sharing a center and exponent
  /// are merged; distinct exponents at one center are rejected.
  SingularFunctionSpec(std::vector<SingularTerm> terms, std::vector<Rational> analytic_part = {});

  const std::vector<SingularTerm>& terms() const noexcept { return terms_; }
  const std::vector<Rational>& analytic_part() const noexcept { return analytic_; }

  /// f(x) in double. Returns +inf at a center with negative exponent.
  double value(double x) const;
  /// Exact value when every exponent is a non-negative integer.
  std::optional<Rational> exact_value(const Rational& x) const;
  /// True when f is unbounded at x.
  bool singular_at(const Rational& x) const;
  std::string describe() const;

 private:
  std::vector<SingularTerm> terms_;
  std::vector<Rational> analytic_;
};

/// Parameters a generator was called with.
struct SeriesParams {
  std::optional<Rational> a;
  std::optional<Rational> beta;
  std::optional<SingularFunctionSpec> spec;
  std::string describe() const;
};

template <LabScalar T>
struct LegendreSeries {
  std::vector<T> coeffs;
  Generator generator = Generator::StepDerivative;
  PrecisionContext ctx = PrecisionContext::float64();
  SeriesParams params;

  int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
  const T& operator[](std::size_t k) const { return coeffs[k]; }
};

template <LabScalar T>
PrecisionContext context_for() {
  if constexpr (std::is_same_v<T, double>) {
    return PrecisionContext::float64();
  } else if constexpr (std::is_same_v<T, BigFloat>) {
    return PrecisionContext::big_float(std::max(64u, current_working_bits()));
  } else {
    return PrecisionContext::exact_rational();
  }
}

namespace detail {

inline void check_open_interval(const Rational& a, const char* op) {
  if (a <= -1 || a >= 1) throw DomainError(std::string(op) + ": requires |a| < 1");
}

inline void check_exponent(const Rational& beta, const char* op) {
  if (beta <= -1) throw DomainError(std::string(op) + ": requires beta > -1");
}

inline void check_degree(int P, const char* op) {
  if (P < 1) throw DomainError(std::string(op) + ": requires P >= 1");
}

}  // namespace detail

/// a_k of the step u'(x) = (a-1)/2 + H(x-a): a_0 = 0 and
/// a_k = (P_{k-1}(a) - P_{k+1}(a)) / 2.
template <LabScalar T>
LegendreSeries<T> step_derivative_coeffs(const Rational& a, int P) {
  detail::check_open_interval(a, "step_derivative_coeffs");
  detail::check_degree(P, "step_derivative_coeffs");
  const auto pk = legendre_eval_range(P + 1, from_rational<T>(a));
  LegendreSeries<T> s;
  s.coeffs.assign(static_cast<std::size_t>(P) + 1, T(0));
  for (int k = 1; k <= P; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    s.coeffs[uk] = (pk[uk - 1] - pk[uk + 1]) / T(2);
  }
  s.generator = Generator::StepDerivative;
  s.ctx = context_for<T>();
  s.params.a = a;
  return s;
}

/// Coefficients of u(x) = (|x - a| + a x - 1)/2, the antiderivative of the step
/// vanishing at +-1: c_0 = -a_1/3, c_k = a_{k-1}/(2k-1) - a_{k+1}/(2k+3).
template <LabScalar T>
LegendreSeries<T> abs_shift_coeffs(const Rational& a, int P) {
  detail::check_degree(P, "abs_shift_coeffs");
  const auto step = step_derivative_coeffs<T>(a, P + 1);
  const auto& ak = step.coeffs;
  LegendreSeries<T> s;
  s.coeffs.resize(static_cast<std::size_t>(P) + 1);
  s.coeffs[0] = -ak[1] / T(3);
  for (int k = 1; k <= P; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    s.coeffs[uk] = ak[uk - 1] / T(2 * k - 1) - ak[uk + 1] / T(2 * k + 3);
  }
  s.generator = Generator::AbsShift;
  s.ctx = context_for<T>();
  s.params.a = a;
  return s;
}

/// b_0..b_{P+1} of the degree-(P+1) constrained approximation
/// u_P = sum_{k=1}^P a_k (P_{k+1} - P_{k-1})/(2k+1), which vanishes at +-1.
/// b_j = c_j for j < P, b_P = a_{P-1}/(2P-1), b_{P+1} = a_P/(2P+1).
template <LabScalar T>
LegendreSeries<T> constrained_pversion_coeffs(const Rational& a, int P) {
  detail::check_degree(P, "constrained_pversion_coeffs");
  const auto step = step_derivative_coeffs<T>(a, P + 1);
  const auto& ak = step.coeffs;
  LegendreSeries<T> s;
  s.coeffs.assign(static_cast<std::size_t>(P) + 2, T(0));
  s.coeffs[0] = -ak[1] / T(3);
  for (int j = 1; j <= P + 1; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    T v = ak[uj - 1] / T(2 * j - 1);
    if (j + 1 <= P) v -= ak[uj + 1] / T(2 * j + 3);
    s.coeffs[uj] = v;
  }
  s.generator = Generator::ConstrainedPVersion;
  s.ctx = context_for<T>();
  s.params.a = a;
  return s;
}

/// Coefficients of |x|^beta. Even coefficients come from the Gamma-ratio
/// product J_j = int_0^1 x^beta P_{2j} = J_{j-1} (beta - 2j + 2)/(beta + 2j + 1),
/// J_0 = 1/(beta+1), c_{2j} = (4j+1) J_j. Odd coefficients are exactly zero.
template <LabScalar T>
LegendreSeries<T> power_abs_coeffs(const Rational& beta, int P) {
  detail::check_exponent(beta, "power_abs_coeffs");
  detail::check_degree(P, "power_abs_coeffs");
  if constexpr (std::is_same_v<T, double>) {
    if (beta <= Rational(-1, 2)) {
      throw PrecisionError("power_abs_coeffs: beta <= -1/2 needs BigFloat or exact arithmetic");
    }
  }
  if constexpr (!is_exact_v<T>) {
    if (P * unit_roundoff<T>() > 0.5) {
      throw PrecisionError("power_abs_coeffs: Gamma-ratio product loses all digits at P = " +
                           std::to_string(P));
    }
  }
  const T b = from_rational<T>(beta);
  LegendreSeries<T> s;
  s.coeffs.assign(static_cast<std::size_t>(P) + 1, T(0));
  T J = T(1) / (b + T(1));
  for (int j = 0; 2 * j <= P; ++j) {
    if (j > 0) J = J * (b - T(2 * j - 2)) / (b + T(2 * j + 1));
    s.coeffs[static_cast<std::size_t>(2 * j)] = T(4 * j + 1) * J;
  }
  s.generator = Generator::PowerAbs;
  s.ctx = context_for<T>();
  s.params.beta = beta;
  return s;
}

/// Working bits the moment route needs for P coefficients.
unsigned appendix_a_required_bits(int P);

/// Coefficients of |x+1|^beta on [-1,1] from the monomial moments
/// I_m = 2F1(m+1, -beta; m+2; -1)/(m+1) + (-1)^m B(m+1, beta+1)
/// combined with the integer monomial coefficients of 2^k P_k. Needs
/// BigFloat with at least appendix_a_required_bits(P); c_P is recomputed at
/// twice the precision and a relative disagreement above 1e-20 throws.
LegendreSeries<BigFloat> power_shift_coeffs_appendixA(const Rational& beta, int P);

/// Precision-generic entry point: Float64 and exact contexts are rejected
/// with PrecisionError since the route needs > 53 bits and irrational moments.
template <LabScalar T>
LegendreSeries<T> power_shift_series(const Rational& beta, int P) {
  if constexpr (std::is_same_v<T, BigFloat>) {
    return power_shift_coeffs_appendixA(beta, P);
  } else {
    detail::check_exponent(beta, "power_shift_coeffs_appendixA");
    throw PrecisionError("power_shift_coeffs_appendixA: needs BigFloat with at least " +
                         std::to_string(appendix_a_required_bits(P)) + " bits");
  }
}

/// Moments I_0..I_M = int_{-1}^{1} x^m |x+1|^beta dx at the working precision.
std::vector<BigFloat> power_shift_moments(const Rational& beta, int M);

/// int_{-1}^{1} |x - a|^beta P_k(x) dx for k = 0..K, by splitting at a,
/// subtracting P_k(a) and integrating the remainder on geometrically graded
/// Gauss-Legendre panels.
template <LabScalar T>
std::vector<T> singular_abs_moments(const Rational& a, const Rational& beta, int K);

/// Legendre coefficients of |x - a|^beta via singular_abs_moments.
template <LabScalar T>
LegendreSeries<T> quadrature_abs_coeffs(const Rational& a, const Rational& beta, int P);

/// Legendre coefficients of a monomial-basis polynomial (exact in Rational).
template <LabScalar T>
std::vector<T> polynomial_legendre_coeffs(const std::vector<Rational>& monomial, int P);

/// Linear combination of per-term series plus the analytic part.
template <LabScalar T>
LegendreSeries<T> spec_coeffs(const SingularFunctionSpec& spec, int P);

/// CSV (k, coeff) with full-precision decimals and a JSON sidecar
/// (`<path>.json`) recording generator, params and precision.
template <LabScalar T>
void write_series(const LegendreSeries<T>& s, const std::string& csv_path);

}  // namespace leglab
