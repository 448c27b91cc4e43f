#include "leglab/precision.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace leglab {

namespace {

std::recursive_mutex& precision_mutex() {
  static std::recursive_mutex m;
  return m;
}

unsigned bits_to_digits10(unsigned bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120));
}

// Parses one unsigned literal (digits, optional fraction, optional exponent)
// starting at `pos`; advances `pos`.
Rational parse_decimal(std::string_view s, std::size_t& pos) {
  const std::size_t start = pos;
  mp::mpz_int mantissa = 0;
  long exponent = 0;
  bool any_digit = false;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    mantissa = mantissa * 10 + (s[pos] - '0');
    any_digit = true;
    ++pos;
  }
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      mantissa = mantissa * 10 + (s[pos] - '0');
      --exponent;
      any_digit = true;
      ++pos;
    }
  }
  if (!any_digit) {
    throw ConfigError("malformed number near '" + std::string(s.substr(start)) + "'");
  }
  if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
    ++pos;
    int sign = 1;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      sign = s[pos] == '-' ? -1 : 1;
      ++pos;
    }
    long e = 0;
    bool exp_digit = false;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      e = e * 10 + (s[pos] - '0');
      exp_digit = true;
      ++pos;
    }
    if (!exp_digit) throw ConfigError("malformed exponent in '" + std::string(s) + "'");
    exponent += sign * e;
  }
  Rational q(mantissa);
  if (exponent > 0) {
    q *= Rational(mp::pow(mp::mpz_int(10), static_cast<unsigned>(exponent)));
  } else if (exponent < 0) {
    q /= Rational(mp::pow(mp::mpz_int(10), static_cast<unsigned>(-exponent)));
  }
  return q;
}

}  // namespace

PrecisionContext PrecisionContext::big_float(unsigned bits) {
  if (bits < 64) {
    throw PrecisionError("BigFloat precision must be at least 64 bits, got " + std::to_string(bits));
  }
  return PrecisionContext(PrecisionMode::BigFloat, bits);
}

PrecisionContext PrecisionContext::parse(std::string_view text) {
  if (text == "f64" || text == "float64" || text == "double") return float64();
  if (text == "exact" || text == "rational") return exact_rational();
  if (text == "big") return big_float();
  if (text.starts_with("big:")) {
    const std::string digits(text.substr(4));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("bad precision '" + std::string(text) + "'");
    }
    return big_float(static_cast<unsigned>(std::stoul(digits)));
  }
  throw ConfigError("unknown precision '" + std::string(text) + "' (expected f64, big:<bits> or exact)");
}

double PrecisionContext::epsilon() const noexcept {
  switch (mode_) {
    case PrecisionMode::Float64:
      return std::numeric_limits<double>::epsilon();
    case PrecisionMode::BigFloat:
      return std::ldexp(1.0, 1 - static_cast<int>(bits_));
    case PrecisionMode::ExactRational:
      break;
  }
  return 0.0;
}

std::string PrecisionContext::to_string() const {
  switch (mode_) {
    case PrecisionMode::Float64:
      return "f64";
    case PrecisionMode::BigFloat:
      return "big:" + std::to_string(bits_);
    case PrecisionMode::ExactRational:
      break;
  }
  return "exact";
}

PrecisionScope::PrecisionScope(unsigned bits)
    : lock_(precision_mutex()), saved_digits10_(BigFloat::default_precision()) {
  BigFloat::default_precision(bits_to_digits10(bits));
}

PrecisionScope::~PrecisionScope() { BigFloat::default_precision(saved_digits10_); }

unsigned current_working_bits() {
  BigFloat probe;
  return static_cast<unsigned>(mpfr_get_prec(probe.backend().data()));
}

BigFloat round_to_working(const BigFloat& v) {
  BigFloat r(0);
  mpfr_set(r.backend().data(), v.backend().data(), MPFR_RNDN);
  return r;
}

Rational parse_rational(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.empty()) throw ConfigError("empty number");
  Rational total = 0;
  std::size_t pos = 0;
  bool first = true;
  while (pos < s.size()) {
    int sign = 1;
    if (s[pos] == '+' || s[pos] == '-') {
      sign = s[pos] == '-' ? -1 : 1;
      ++pos;
    } else if (!first) {
      throw ConfigError("malformed number '" + s + "'");
    }
    Rational term = parse_decimal(s, pos);
    if (pos < s.size() && s[pos] == '/') {
      ++pos;
      Rational den = parse_decimal(s, pos);
      if (den == 0) throw ConfigError("zero denominator in '" + s + "'");
      term /= den;
    }
    total += sign * term;
    first = false;
  }
  return total;
}

std::string to_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_decimal(const BigFloat& v) {
  const auto bits = static_cast<unsigned>(mpfr_get_prec(v.backend().data()));
  const auto digits = static_cast<std::streamsize>(bits_to_digits10(bits) + 2);
  return v.str(digits, std::ios_base::scientific);
}

std::string to_decimal(const Rational& v) { return v.str(); }

}  // namespace leglab
