#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leglab/coefficients.hpp"

namespace leglab {

/// The exact function a series approximates, evaluated at rational points in
/// any scalar type. Jumps are valued at the mean of the one-sided limits.
class Target {
 public:
  enum class Kind { Step, AbsShift, Spec, PowerShift };

  /// u'(x) = (a-1)/2 + H(x-a).
  static Target step(const Rational& a);
  /// u(x) = (|x-a| + a x - 1)/2.
  static Target abs_shift(const Rational& a);
  static Target spec(SingularFunctionSpec s);
  /// |x+1|^beta.
  static Target power_shift(const Rational& beta);

  Kind kind() const noexcept { return kind_; }
  std::string describe() const;
  /// True where the function is unbounded; sweeps then record |S_p(x)|.
  bool singular_at(const Rational& x) const;
  std::optional<Rational> exact_value(const Rational& x) const;
  double value_f64(const Rational& x) const;
  /// Value at the current BigFloat working precision.
  BigFloat value_big(const Rational& x) const;
  /// int_{-1}^{1} f^2 when available in closed form.
  std::optional<double> norm_sq() const;

  template <LabScalar T>
  T value(const Rational& x) const {
    if constexpr (std::is_same_v<T, double>) {
      return value_f64(x);
    } else if constexpr (std::is_same_v<T, BigFloat>) {
      return value_big(x);
    } else {
      auto v = exact_value(x);
      if (!v) throw PrecisionError("target " + describe() + " has no exact value at " + x.str());
      return *v;
    }
  }

 private:
  Kind kind_ = Kind::Step;
  Rational a_ = 0;
  Rational beta_ = 0;
  std::optional<SingularFunctionSpec> spec_;
};

struct ErrorSweep {
  double x = 0;
  std::string x_label;
  std::vector<int> pvalues;
  std::vector<double> abs_error;
  std::string target;
  std::string series_id;
  /// abs_error holds |S_p(x)| because f(x) is infinite.
  bool singular_target = false;
};

/// sum_{k<=p} c_k P_k(x) in one recurrence pass.
template <LabScalar T>
T partial_sum(const LegendreSeries<T>& s, int p, const T& x) {
  if (p < 0 || p > s.degree()) {
    throw IndexError("partial_sum: p = " + std::to_string(p) + " outside 0.." + std::to_string(s.degree()));
  }
  detail::check_unit_interval(x, "partial_sum");
  LegendreStepper<T> st(x);
  CompensatedSum<T> acc;
  for (int k = 0; k <= p; ++k) {
    if (k > 0) st.advance();
    acc.add(s.coeffs[static_cast<std::size_t>(k)] * st.value());
  }
  return acc.value();
}

namespace detail {

// Shared incremental loop: term(k, stepper) returns the k-th increment of the
// approximation; the stepper sits at degree k + lookahead.
template <LabScalar T, class Term>
ErrorSweep sweep_terms(const Target& target, const Rational& x, int pmax, int lookahead, Term&& term) {
  ErrorSweep sw;
  sw.x = x.convert_to<double>();
  sw.x_label = x.str();
  sw.target = target.describe();
  sw.singular_target = target.singular_at(x);
  const T xt = from_rational<T>(x);
  check_unit_interval(xt, "error_sweep");
  T exact(0);
  if (!sw.singular_target) exact = target.value<T>(x);
  std::vector<T> window;  // P_0..P_{k+lookahead}
  LegendreStepper<T> st(xt);
  window.push_back(st.value());
  for (int i = 0; i < lookahead; ++i) {
    st.advance();
    window.push_back(st.value());
  }
  CompensatedSum<T> acc;
  sw.pvalues.reserve(static_cast<std::size_t>(pmax));
  sw.abs_error.reserve(static_cast<std::size_t>(pmax));
  for (int k = 0; k <= pmax; ++k) {
    if (k > 0) {
      st.advance();
      window.push_back(st.value());
    }
    acc.add(term(k, window));
    if (k == 0) continue;
    sw.pvalues.push_back(k);
    const T e = sw.singular_target ? acc.value() : acc.residual_from(exact);
    sw.abs_error.push_back(std::abs(to_double(e)));
  }
  return sw;
}

}  // namespace detail

/// |f(x) - S_p(x)| for p = 1..pmax, accumulated incrementally.
template <LabScalar T>
ErrorSweep error_sweep(const LegendreSeries<T>& s, const Target& target, const Rational& x, int pmax) {
  if (pmax < 1 || pmax > s.degree()) {
    throw IndexError("error_sweep: pmax = " + std::to_string(pmax) + " outside 1.." + std::to_string(s.degree()));
  }
  auto sw = detail::sweep_terms<T>(target, x, pmax, 0, [&](int k, const std::vector<T>& P) {
    return s.coeffs[static_cast<std::size_t>(k)] * P[static_cast<std::size_t>(k)];
  });
  sw.series_id = to_string(s.generator) + "(" + s.params.describe() + ")@" + s.ctx.to_string();
  return sw;
}

/// Error of the constrained approximations u_p = sum_{k=1}^p a_k (P_{k+1} -
/// P_{k-1})/(2k+1) against u, for p = 1..pmax, built from the step
/// coefficients a_k (which need degree >= pmax).
template <LabScalar T>
ErrorSweep constrained_error_sweep(const LegendreSeries<T>& step, const Target& target, const Rational& x, int pmax) {
  if (step.generator != Generator::StepDerivative) {
    throw ConfigError("constrained_error_sweep: needs step-derivative coefficients");
  }
  if (pmax < 1 || pmax > step.degree()) {
    throw IndexError("constrained_error_sweep: pmax outside coefficient range");
  }
  auto sw = detail::sweep_terms<T>(target, x, pmax, 1, [&](int k, const std::vector<T>& P) {
    if (k == 0) return T(0);
    const auto uk = static_cast<std::size_t>(k);
    return step.coeffs[uk] * (P[uk + 1] - P[uk - 1]) / T(2 * k + 1);
  });
  sw.series_id = "ConstrainedPVersion(" + step.params.describe() + ")@" + step.ctx.to_string();
  return sw;
}

/// |f(x_i) - S_p(x_i)| over a grid at a single p.
template <LabScalar T>
std::vector<double> errors_on_grid(const LegendreSeries<T>& s, const Target& target, const std::vector<Rational>& xs, int p) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    const T xt = from_rational<T>(x);
    LegendreStepper<T> st(xt);
    CompensatedSum<T> acc;
    for (int k = 0; k <= p; ++k) {
      if (k > 0) st.advance();
      acc.add(s.coeffs[static_cast<std::size_t>(k)] * st.value());
    }
    if (target.singular_at(x)) {
      out.push_back(std::abs(to_double(acc.value())));
    } else {
      out.push_back(std::abs(to_double(acc.residual_from(target.value<T>(x)))));
    }
  }
  return out;
}

enum class Norm { L2, Energy };
std::string to_string(Norm n);

struct NormSweep {
  std::vector<int> pvalues;
  std::vector<double> norm_error;
  Norm norm = Norm::L2;
  /// Share of the reported value at pmax contributed by the part of the tail
  /// beyond the last stored coefficient.
  double truncation_fraction = 0;
  bool truncation_warning = false;
};

/// ||f - S_p|| via Parseval: sqrt(sum_{k>p} c_k^2 2/(2k+1)), accumulated
/// backwards. When exact_norm_sq is given, the part of the tail beyond the
/// stored coefficients is int f^2 - sum_{k<=P} c_k^2 2/(2k+1). For Norm::Energy
/// the series must be the derivative expansion.
template <LabScalar T>
NormSweep norm_sweep(const LegendreSeries<T>& s, std::optional<double> exact_norm_sq, int pmax, Norm norm) {
  const int P = s.degree();
  if (pmax < 1 || pmax > P) throw IndexError("norm_sweep: pmax outside coefficient range");
  std::vector<T> weighted(static_cast<std::size_t>(P) + 1);
  for (int k = 0; k <= P; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    weighted[uk] = s.coeffs[uk] * s.coeffs[uk] * T(2) / T(2 * k + 1);
  }
  double beyond = 0;
  if (exact_norm_sq) {
    CompensatedSum<T> all;
    for (const auto& w : weighted) all.add(w);
    beyond = std::max(0.0, to_double(all.residual_from(T(*exact_norm_sq))));
  }
  NormSweep ns;
  ns.norm = norm;
  ns.pvalues.resize(static_cast<std::size_t>(pmax));
  ns.norm_error.resize(static_cast<std::size_t>(pmax));
  CompensatedSum<T> tail;
  for (int k = P; k > pmax; --k) tail.add(weighted[static_cast<std::size_t>(k)]);
  for (int p = pmax; p >= 1; --p) {
    const double v = to_double(tail.value()) + beyond;
    ns.pvalues[static_cast<std::size_t>(p - 1)] = p;
    ns.norm_error[static_cast<std::size_t>(p - 1)] = std::sqrt(std::max(0.0, v));
    if (p == pmax) {
      ns.truncation_fraction = v > 0 ? beyond / v : 0.0;
      ns.truncation_warning = ns.truncation_fraction > 0.01;
    }
    tail.add(weighted[static_cast<std::size_t>(p)]);
  }
  return ns;
}

/// CSV (p, abs_error) plus a JSON envelope (`<path>.json`).
void write_sweep(const ErrorSweep& sw, const std::string& csv_path);
void write_norm_sweep(const NormSweep& ns, const std::string& csv_path);
/// Reads a sweep written by write_sweep (the sidecar is optional).
ErrorSweep read_sweep(const std::string& csv_path);

enum class Family { StepDerivative, AbsShift, ConstrainedPVersion, PowerAbs, PowerShift, CustomSpec };
std::string to_string(Family f);
Family parse_family(const std::string& name);

struct FamilyParams {
  Family family = Family::StepDerivative;
  Rational a = Rational(1, 2);
  Rational beta = 0;
  std::optional<SingularFunctionSpec> spec;

  Target target() const;
  std::string describe() const;
  /// Whether evaluation at x = +-1 and the full coefficient range make sense
  /// in Float64 (PowerShift and PowerAbs with beta <= -1/2 do not).
  PrecisionContext minimal_context(int pmax) const;
};

/// Coefficients up to degree pmax (step coefficients for the constrained
/// family) and one error sweep per x, all at the context precision.
std::vector<ErrorSweep> family_sweeps(const FamilyParams& fam, const std::vector<Rational>& xs, int pmax,
                                      const PrecisionContext& ctx);

/// Signed partial sums S_p(x), p = 1..pmax (not available for the
/// constrained family).
std::vector<double> family_partial_sums(const FamilyParams& fam, const Rational& x, int pmax,
                                        const PrecisionContext& ctx);

/// Coefficient CSV of the family at degree P (b_0..b_{P+1} for the
/// constrained family).
void write_family_coefficients(const FamilyParams& fam, int P, const PrecisionContext& ctx, const std::string& csv_path);

/// Parseval sweep with the exact norm closing the tail: the energy norm for
/// the step family (its series is u'), L2 otherwise.
NormSweep family_norm_sweep(const FamilyParams& fam, int pmax, const PrecisionContext& ctx);

/// Errors at a single p over a grid of x.
std::vector<double> family_errors_on_grid(const FamilyParams& fam, const std::vector<Rational>& xs, int p,
                                          const PrecisionContext& ctx);

}  // namespace leglab
