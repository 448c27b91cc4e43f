#include "leglab/coefficients.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "leglab/quadrature.hpp"

namespace leglab {

std::string to_string(Generator g) {
  switch (g) {
    case Generator::StepDerivative:
      return "StepDerivative";
    case Generator::AbsShift:
      return "AbsShift";
    case Generator::ConstrainedPVersion:
      return "ConstrainedPVersion";
    case Generator::PowerAbs:
      return "PowerAbs";
    case Generator::PowerShiftAppendixA:
      return "PowerShiftAppendixA";
    case Generator::QuadratureOracle:
      return "QuadratureOracle";
    case Generator::SpecCombination:
      break;
  }
  return "SpecCombination";
}

// ---------------------------------------------------------------------------
// SingularFunctionSpec

namespace {

bool is_integer(const Rational& q) { return mp::denominator(q) == 1; }

Rational rational_pow(const Rational& base, long n) {
  Rational r = 1;
  for (long i = 0; i < n; ++i) r *= base;
  return r;
}

}  // namespace

SingularFunctionSpec::SingularFunctionSpec(std::vector<SingularTerm> terms, std::vector<Rational> analytic_part)
    : analytic_(std::move(analytic_part)) {
  for (auto& t : terms) {
    detail::check_open_interval(t.center, "SingularFunctionSpec");
    detail::check_exponent(t.exponent, "SingularFunctionSpec");
    auto same = std::find_if(terms_.begin(), terms_.end(), [&](const SingularTerm& u) { return u.center == t.center; });
    if (same == terms_.end()) {
      terms_.push_back(t);
    } else if (same->exponent == t.exponent) {
      same->weight += t.weight;
    } else {
      throw DomainError("SingularFunctionSpec: two exponents at center " + t.center.str());
    }
  }
  std::erase_if(terms_, [](const SingularTerm& t) { return t.weight == 0; });
  while (!analytic_.empty() && analytic_.back() == 0) analytic_.pop_back();
}

double SingularFunctionSpec::value(double x) const {
  double v = 0;
  for (const auto& t : terms_) {
    const double d = std::abs(x - t.center.convert_to<double>());
    const double b = t.exponent.convert_to<double>();
    if (t.exponent == 0) {
      v += t.weight.convert_to<double>();
    } else if (d == 0) {
      if (b < 0) return std::numeric_limits<double>::infinity();
    } else {
      v += t.weight.convert_to<double>() * std::pow(d, b);
    }
  }
  double poly = 0;
  for (auto it = analytic_.rbegin(); it != analytic_.rend(); ++it) poly = poly * x + it->convert_to<double>();
  return v + poly;
}

std::optional<Rational> SingularFunctionSpec::exact_value(const Rational& x) const {
  Rational v = 0;
  for (const auto& t : terms_) {
    if (!is_integer(t.exponent) || t.exponent < 0) return std::nullopt;
    v += t.weight * rational_pow(mp::abs(x - t.center), static_cast<long>(mp::numerator(t.exponent)));
  }
  Rational poly = 0;
  for (auto it = analytic_.rbegin(); it != analytic_.rend(); ++it) poly = poly * x + *it;
  return v + poly;
}

bool SingularFunctionSpec::singular_at(const Rational& x) const {
  return std::any_of(terms_.begin(), terms_.end(), [&](const SingularTerm& t) { return t.center == x && t.exponent < 0; });
}

std::string SingularFunctionSpec::describe() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms_) {
    if (!first) os << " + ";
    os << t.weight.str() << "*|x-(" << t.center.str() << ")|^(" << t.exponent.str() << ")";
    first = false;
  }
  for (std::size_t i = 0; i < analytic_.size(); ++i) {
    if (analytic_[i] == 0) continue;
    if (!first) os << " + ";
    os << analytic_[i].str() << "*x^" << i;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

std::string SeriesParams::describe() const {
  std::ostringstream os;
  if (a) os << "a=" << a->str() << ' ';
  if (beta) os << "beta=" << beta->str() << ' ';
  if (spec) os << "f=" << spec->describe();
  std::string s = os.str();
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

// ---------------------------------------------------------------------------
// |x+1|^beta via monomial moments

unsigned appendix_a_required_bits(int P) {
  return 64u + static_cast<unsigned>(std::ceil(1.6 * P));
}

std::vector<BigFloat> power_shift_moments(const Rational& beta, int M) {
  detail::check_exponent(beta, "power_shift_moments");
  const BigFloat b = from_rational<BigFloat>(beta);
  const BigFloat two_pow_beta = mp::pow(BigFloat(2), b);
  const BigFloat tol = mp::ldexp(BigFloat(1), -static_cast<int>(current_working_bits()) - 8);
  std::vector<BigFloat> I;
  I.reserve(static_cast<std::size_t>(M) + 1);
  BigFloat B = BigFloat(1) / (b + 1);  // B(m+1, beta+1)
  for (int m = 0; m <= M; ++m) {
    if (m > 0) B = B * m / (b + (m + 1));
    // 2F1(m+1, -beta; m+2; -1) = 2^beta 2F1(-beta, 1; m+2; 1/2) (Pfaff), summed
    // directly: the transformed series converges like 2^-n.
    BigFloat term = 1;
    BigFloat sum = 1;
    for (int n = 0;; ++n) {
      term = term * (BigFloat(n) - b) / (2 * (m + 2 + n));
      if (term == 0) break;
      sum += term;
      if (mp::abs(term) < tol * mp::abs(sum)) break;
    }
    BigFloat v = two_pow_beta * sum / (m + 1);
    if (m % 2 == 0) {
      v += B;
    } else {
      v -= B;
    }
    I.push_back(round_to_working(v));
  }
  return I;
}

namespace {

constexpr unsigned kAppendixAGuardBits = 24;

BigFloat appendix_a_coefficient(int k, const std::vector<BigFloat>& I) {
  const auto s = legendre_scaled_monomials(k);
  CompensatedSum<BigFloat> acc;
  for (int m = k % 2; m <= k; m += 2) {
    acc.add(BigFloat(s[static_cast<std::size_t>(m)]) * I[static_cast<std::size_t>(m)]);
  }
  return mp::ldexp(acc.value(), -k - 1) * (2 * k + 1);
}

}  // namespace

LegendreSeries<BigFloat> power_shift_coeffs_appendixA(const Rational& beta, int P) {
  detail::check_exponent(beta, "power_shift_coeffs_appendixA");
  detail::check_degree(P, "power_shift_coeffs_appendixA");
  const unsigned bits = current_working_bits();
  const unsigned need = appendix_a_required_bits(P);
  if (bits < need) {
    throw PrecisionError("power_shift_coeffs_appendixA: P = " + std::to_string(P) + " needs " +
                         std::to_string(need) + " bits, context has " + std::to_string(bits));
  }
  // The 64 bits left over by the precision rule sit right at the 1e-20 check
  // threshold, so the route itself runs with a few guard bits on top.
  const unsigned internal = bits + kAppendixAGuardBits;
  LegendreSeries<BigFloat> s;
  {
    PrecisionScope guarded(internal);
    const auto I = power_shift_moments(beta, P);
    s.coeffs.reserve(static_cast<std::size_t>(P) + 1);
    for (int k = 0; k <= P; ++k) s.coeffs.push_back(appendix_a_coefficient(k, I));
  }
  for (auto& c : s.coeffs) c = round_to_working(c);
  BigFloat check;
  {
    PrecisionScope doubled(2 * internal);
    const auto I2 = power_shift_moments(beta, P);
    check = appendix_a_coefficient(P, I2);
  }
  const BigFloat& cP = s.coeffs.back();
  // Coefficients that vanish to half the working precision (finite expansions
  // for integer beta) are compared in absolute terms against the largest one.
  BigFloat largest = 0;
  for (const auto& c : s.coeffs) {
    if (mp::abs(c) > largest) largest = mp::abs(c);
  }
  BigFloat scale = mp::abs(check);
  if (scale < mp::ldexp(largest, -static_cast<int>(bits / 2))) scale = largest;
  const double rel = scale == 0 ? 0.0 : to_double(BigFloat(mp::abs(check - cP) / scale));
  if (rel > 1e-20) {
    throw PrecisionError("power_shift_coeffs_appendixA: c_P changes by " + to_decimal(rel) +
                         " (relative) at doubled precision");
  }
  s.generator = Generator::PowerShiftAppendixA;
  s.ctx = PrecisionContext::big_float(bits);
  s.params.beta = beta;
  return s;
}

// ---------------------------------------------------------------------------
// Singular quadrature

template <LabScalar T>
std::vector<T> singular_abs_moments(const Rational& a, const Rational& beta, int K) {
  detail::check_open_interval(a, "singular_abs_moments");
  detail::check_exponent(beta, "singular_abs_moments");
  if (K < 0) throw DomainError("singular_abs_moments: negative degree");
  if constexpr (is_exact_v<T>) {
    throw PrecisionError("singular_abs_moments: quadrature needs Float64 or BigFloat");
  } else {
    using std::pow;
    using std::sqrt;
    const double eps = unit_roundoff<T>();
    const T at = from_rational<T>(a);
    const T b = from_rational<T>(beta);
    const double bd = beta.convert_to<double>();
    const auto pa = legendre_eval_range(K, at);
    const auto nk = static_cast<std::size_t>(K) + 1;
    std::vector<CompensatedSum<T>> acc(nk);

    // Panel ratio 0.15 keeps the endpoint singularity of t^beta at relative
    // distance ~0.35 of the half-width, so n_sing points resolve it.
    const double ratio = 0.15;
    const int n_sing = static_cast<int>(std::ceil(-std::log(eps) / 1.6)) + 6;
    // Below delta the remainder is bounded by K^2 delta^(beta+2) <= eps.
    const double delta = std::pow(eps / std::pow(K + 1.0, 2), 1.0 / (bd + 2.0));
    std::map<int, QuadratureRule<T>> rules;
    auto rule_for = [&](int n) -> const QuadratureRule<T>& {
      auto it = rules.find(n);
      if (it == rules.end()) it = rules.emplace(n, gauss_rule<T>(n)).first;
      return it->second;
    };

    std::vector<T> panel(nk);
    for (int side : {-1, 1}) {
      const T L = side > 0 ? T(1) - at : T(1) + at;
      const T head = pow(L, b + T(1)) / (b + T(1));
      for (std::size_t k = 0; k < nk; ++k) acc[k].add(pa[k] * head);

      T hi = L;
      const double Ld = to_double(L);
      while (to_double(hi) > delta * Ld) {
        const T lo = hi * T(ratio);
        const double xa = std::abs(to_double(at) + side * to_double(lo));
        const double xb = std::abs(to_double(at) + side * to_double(hi));
        const double s = std::sqrt(std::max(1e-300, 1.0 - std::pow(std::max(xa, xb), 2)));
        const double width = to_double(T(hi - lo));
        const int n_poly = static_cast<int>(std::min<double>(K / 2 + 1, std::ceil(K * width / s)));
        const auto& rule = rule_for(n_poly + n_sing);
        std::fill(panel.begin(), panel.end(), T(0));
        const T half = (hi - lo) / 2;
        const T mid = (hi + lo) / 2;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          const T t = mid + half * rule.nodes[i];
          const T w = rule.weights[i] * half * pow(t, b);
          LegendreStepper<T> st(at + T(side) * t);
          for (std::size_t k = 0; k < nk; ++k) {
            panel[k] += w * (st.value() - pa[k]);
            st.advance();
          }
        }
        for (std::size_t k = 0; k < nk; ++k) acc[k].add(panel[k]);
        hi = lo;
      }
    }
    std::vector<T> out(nk);
    for (std::size_t k = 0; k < nk; ++k) out[k] = acc[k].value();
    return out;
  }
}

template <LabScalar T>
LegendreSeries<T> quadrature_abs_coeffs(const Rational& a, const Rational& beta, int P) {
  detail::check_degree(P, "quadrature_abs_coeffs");
  auto m = singular_abs_moments<T>(a, beta, P);
  LegendreSeries<T> s;
  s.coeffs.resize(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) s.coeffs[k] = m[k] * T(2 * k + 1) / T(2);
  s.generator = Generator::QuadratureOracle;
  s.ctx = context_for<T>();
  s.params.a = a;
  s.params.beta = beta;
  return s;
}

// ---------------------------------------------------------------------------
// Polynomials and combinations

template <LabScalar T>
std::vector<T> polynomial_legendre_coeffs(const std::vector<Rational>& monomial, int P) {
  if (P < 0) throw DomainError("polynomial_legendre_coeffs: negative degree");
  std::vector<Rational> total(std::max<std::size_t>(monomial.size(), 1), Rational(0));
  std::vector<Rational> xn{Rational(1)};  // Legendre coefficients of x^n
  for (std::size_t n = 0; n < monomial.size(); ++n) {
    if (n > 0) {
      // x P_k = ((k+1) P_{k+1} + k P_{k-1}) / (2k+1)
      std::vector<Rational> next(xn.size() + 1, Rational(0));
      for (std::size_t k = 0; k < xn.size(); ++k) {
        if (xn[k] == 0) continue;
        const Rational d(2 * static_cast<long>(k) + 1);
        next[k + 1] += xn[k] * Rational(static_cast<long>(k) + 1) / d;
        if (k > 0) next[k - 1] += xn[k] * Rational(static_cast<long>(k)) / d;
      }
      xn = std::move(next);
    }
    if (monomial[n] == 0) continue;
    for (std::size_t k = 0; k < xn.size(); ++k) total[k] += monomial[n] * xn[k];
  }
  std::vector<T> out(static_cast<std::size_t>(P) + 1, T(0));
  for (std::size_t k = 0; k < out.size() && k < total.size(); ++k) out[k] = from_rational<T>(total[k]);
  return out;
}

namespace {

// Monomial coefficients of weight * (x - a)^n.
std::vector<Rational> shifted_power(const Rational& weight, const Rational& a, long n) {
  std::vector<Rational> c(static_cast<std::size_t>(n) + 1);
  Rational binom = 1;
  for (long j = 0; j <= n; ++j) {
    if (j > 0) binom = binom * (n - j + 1) / j;
    c[static_cast<std::size_t>(j)] = weight * binom * rational_pow(-a, n - j);
  }
  return c;
}

}  // namespace

template <LabScalar T>
LegendreSeries<T> spec_coeffs(const SingularFunctionSpec& spec, int P) {
  detail::check_degree(P, "spec_coeffs");
  const auto n = static_cast<std::size_t>(P) + 1;
  std::vector<T> total(n, T(0));
  auto add_scaled = [&](const std::vector<T>& c, const Rational& w) {
    const T wt = from_rational<T>(w);
    for (std::size_t k = 0; k < n && k < c.size(); ++k) total[k] += wt * c[k];
  };
  std::vector<Rational> poly = spec.analytic_part();
  auto add_poly = [&](const std::vector<Rational>& c) {
    if (poly.size() < c.size()) poly.resize(c.size(), Rational(0));
    for (std::size_t i = 0; i < c.size(); ++i) poly[i] += c[i];
  };
  for (const auto& t : spec.terms()) {
    const Rational& beta = t.exponent;
    if (beta == 0) {
      add_poly({t.weight});
    } else if (is_integer(beta) && beta > 0 && mp::numerator(beta) % 2 == 0) {
      add_poly(shifted_power(t.weight, t.center, static_cast<long>(mp::numerator(beta))));
    } else if (beta == 1) {
      // |x - a| = 2u(x) - a x + 1 with u the abs-shift solution.
      add_scaled(abs_shift_coeffs<T>(t.center, P).coeffs, 2 * t.weight);
      add_poly({t.weight, -t.weight * t.center});
    } else if (t.center == 0) {
      add_scaled(power_abs_coeffs<T>(beta, P).coeffs, t.weight);
    } else {
      add_scaled(quadrature_abs_coeffs<T>(t.center, beta, P).coeffs, t.weight);
    }
  }
  const auto pc = polynomial_legendre_coeffs<T>(poly, P);
  for (std::size_t k = 0; k < n; ++k) total[k] += pc[k];
  LegendreSeries<T> s;
  s.coeffs = std::move(total);
  s.generator = Generator::SpecCombination;
  s.ctx = context_for<T>();
  s.params.spec = spec;
  return s;
}

template <LabScalar T>
void write_series(const LegendreSeries<T>& s, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "k,coeff\n";
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) out << k << ',' << to_decimal(s.coeffs[k]) << '\n';
  nlohmann::json j;
  j["generator"] = to_string(s.generator);
  j["precision"] = s.ctx.to_string();
  j["degree"] = s.degree();
  j["params"] = s.params.describe();
  if (s.params.a) j["a"] = s.params.a->str();
  if (s.params.beta) j["beta"] = s.params.beta->str();
  std::ofstream side(csv_path + ".json");
  side << j.dump(2) << '\n';
}

#define LEGLAB_INSTANTIATE(T)                                                                         \
  template std::vector<T> polynomial_legendre_coeffs<T>(const std::vector<Rational>&, int);         \
  template LegendreSeries<T> spec_coeffs<T>(const SingularFunctionSpec&, int);                        \
  template std::vector<T> singular_abs_moments<T>(const Rational&, const Rational&, int);            \
  template LegendreSeries<T> quadrature_abs_coeffs<T>(const Rational&, const Rational&, int);       \
  template void write_series<T>(const LegendreSeries<T>&, const std::string&);

LEGLAB_INSTANTIATE(double)
LEGLAB_INSTANTIATE(BigFloat)
LEGLAB_INSTANTIATE(Rational)

#undef LEGLAB_INSTANTIATE

}  // namespace leglab
