#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <concepts>
#include <limits>
#include <mutex>
#include <string>
#include <string_view>
#include <type_traits>

#include "leglab/errors.hpp"

namespace leglab {

namespace mp = boost::multiprecision;

/// Variable-precision binary floating point. The working precision of new
/// temporaries is governed by the innermost PrecisionScope.
using BigFloat = mp::number<mp::mpfr_float_backend<0>, mp::et_off>;
using Rational = mp::number<mp::gmp_rational, mp::et_off>;

enum class PrecisionMode { Float64, BigFloat, ExactRational };

/// Arithmetic configuration threaded through every numeric operation.
/// Immutable once constructed.
class PrecisionContext {
 public:
  static constexpr unsigned kDefaultBits = 256;

  static PrecisionContext float64() { return PrecisionContext(PrecisionMode::Float64, 53); }
  static PrecisionContext big_float(unsigned bits = kDefaultBits);
  static PrecisionContext exact_rational() { return PrecisionContext(PrecisionMode::ExactRational, 0); }

  /// Accepts "f64", "big:<bits>" (or "big" for the default) and "exact".
  static PrecisionContext parse(std::string_view text);

  PrecisionMode mode() const noexcept { return mode_; }
  /// Significand bits; 53 for Float64 and 0 for ExactRational.
  unsigned bits() const noexcept { return bits_; }
  /// Unit roundoff of the context; zero in exact mode.
  double epsilon() const noexcept;
  std::string to_string() const;

  bool operator==(const PrecisionContext&) const = default;

 private:
  PrecisionContext(PrecisionMode mode, unsigned bits) : mode_(mode), bits_(bits) {}
  PrecisionMode mode_;
  unsigned bits_;
};

/// Sets the BigFloat working precision for the lifetime of the scope.
///
/// The MPFR default precision of the multiprecision backend is process-wide, so
/// scopes serialize on a recursive mutex: nested scopes on one thread are fine,
/// BigFloat work on different threads is run one scope at a time.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  std::unique_lock<std::recursive_mutex> lock_;
  unsigned saved_digits10_;
};

/// Bits carried by BigFloat temporaries created right now.
unsigned current_working_bits();

/// Parses exact rationals: "3", "-1/2", "0.125", "1e-6", and sums/differences
/// of such terms ("-1+1e-6", "1/2+1/100").
Rational parse_rational(std::string_view text);

template <class T>
concept LabScalar = std::same_as<T, double> || std::same_as<T, BigFloat> || std::same_as<T, Rational>;

template <class T>
inline constexpr bool is_exact_v = std::is_same_v<T, Rational>;

template <LabScalar T>
T from_rational(const Rational& q) {
  if constexpr (std::is_same_v<T, Rational>) {
    return q;
  } else if constexpr (std::is_same_v<T, double>) {
    return q.convert_to<double>();
  } else {
    BigFloat num(mp::numerator(q));
    BigFloat den(mp::denominator(q));
    return num / den;
  }
}

template <LabScalar T>
double to_double(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return v.template convert_to<double>();
  }
}

/// Converts between scalar types at the current working precision.
template <LabScalar To, LabScalar From>
To scalar_cast(const From& v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (std::is_same_v<From, Rational>) {
    return from_rational<To>(v);
  } else if constexpr (std::is_same_v<To, double>) {
    return to_double(v);
  } else if constexpr (std::is_same_v<To, BigFloat>) {
    if constexpr (std::is_same_v<From, double>) {
      return BigFloat(v);
    } else {
      BigFloat r(0);
      mpfr_set(r.backend().data(), v.backend().data(), MPFR_RNDN);
      return r;
    }
  } else {
    static_assert(!std::is_same_v<To, Rational>, "inexact values cannot become rationals");
  }
}

/// Rounds a BigFloat to the current working precision (assignment in the
/// backend keeps the source precision, so this is explicit).
BigFloat round_to_working(const BigFloat& v);

/// Unit roundoff for the scalar type at the current working precision.
template <LabScalar T>
double unit_roundoff() {
  if constexpr (std::is_same_v<T, double>) {
    return std::numeric_limits<double>::epsilon();
  } else if constexpr (std::is_same_v<T, BigFloat>) {
    return std::ldexp(1.0, 1 - static_cast<int>(current_working_bits()));
  } else {
    return 0.0;
  }
}

/// Full-precision decimal rendering; rationals render as "p/q".
std::string to_decimal(double v);
std::string to_decimal(const BigFloat& v);
std::string to_decimal(const Rational& v);

template <LabScalar T>
T abs_value(const T& v) {
  using std::abs;
  return abs(v);
}

/// Neumaier compensated summation. For exact rationals it degenerates to a
/// plain sum.
template <LabScalar T>
class CompensatedSum {
 public:
  CompensatedSum() : sum_(0), comp_(0) {}
  void add(const T& term) {
    if constexpr (is_exact_v<T>) {
      sum_ += term;
    } else {
      using std::abs;
      T t = sum_ + term;
      if (abs(sum_) >= abs(term)) {
        comp_ += (sum_ - t) + term;
      } else {
        comp_ += (term - t) + sum_;
      }
      sum_ = t;
    }
  }
  T value() const { return sum_ + comp_; }
  /// exact - sum, subtracting the running sum before the compensation so that
  /// small differences of O(1) quantities keep their relative accuracy.
  T residual_from(const T& exact) const { return (exact - sum_) - comp_; }

 private:
  T sum_;
  T comp_;
};

/// Runs `f(std::type_identity<T>{})` with T chosen by the context mode, inside a
/// PrecisionScope when the context is BigFloat.
template <class F>
decltype(auto) dispatch(const PrecisionContext& ctx, F&& f) {
  switch (ctx.mode()) {
    case PrecisionMode::Float64:
      return f(std::type_identity<double>{});
    case PrecisionMode::BigFloat: {
      PrecisionScope scope(ctx.bits());
      return f(std::type_identity<BigFloat>{});
    }
    case PrecisionMode::ExactRational:
      break;
  }
  return f(std::type_identity<Rational>{});
}

}  // namespace leglab
