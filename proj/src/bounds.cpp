#include "leglab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace leglab {

namespace {

BVFunction::Piece trimmed(BVFunction::Piece c) {
  while (!c.empty() && c.back() == 0) c.pop_back();
  return c;
}

void check_x(const Rational& x, const char* where) {
  if (x <= -1 || x >= 1) throw DomainError(std::string(where) + ": x = " + x.str() + " outside (-1, 1)");
}

}  // namespace

BVFunction::BVFunction(std::vector<Rational> breakpoints, std::vector<Piece> pieces,
                       std::vector<std::optional<Rational>> point_values)
    : breaks_(std::move(breakpoints)), pieces_(std::move(pieces)) {
  if (pieces_.size() != breaks_.size() + 1) throw DomainError("BVFunction: need one more piece than breakpoints");
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    if (breaks_[i] <= -1 || breaks_[i] >= 1) throw DomainError("BVFunction: breakpoint outside (-1, 1)");
    if (i > 0 && breaks_[i] <= breaks_[i - 1]) throw DomainError("BVFunction: breakpoints not increasing");
  }
  if (!point_values.empty() && point_values.size() != breaks_.size()) {
    throw DomainError("BVFunction: one point value per breakpoint");
  }
  for (auto& p : pieces_) p = trimmed(std::move(p));
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    if (!point_values.empty() && point_values[i]) {
      point_.push_back(*point_values[i]);
    } else {
      point_.push_back((eval(pieces_[i], breaks_[i]) + eval(pieces_[i + 1], breaks_[i])) / 2);
    }
  }
}

BVFunction BVFunction::step(const Rational& a) {
  return BVFunction({a}, {{(a - 1) / 2}, {(a + 1) / 2}});
}

BVFunction BVFunction::abs_shift(const Rational& a) {
  // Left of a: (a - x + a x - 1)/2; right of a: (x - a + a x - 1)/2.
  return BVFunction({a}, {{(a - 1) / 2, (a - 1) / 2}, {(-a - 1) / 2, (a + 1) / 2}});
}

Rational BVFunction::eval(const Piece& c, const Rational& x) {
  Rational v = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::size_t BVFunction::piece_index(const Rational& x) const {
  return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
}

Rational BVFunction::value(const Rational& x) const {
  auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
  if (it != breaks_.end() && *it == x) return point_[static_cast<std::size_t>(it - breaks_.begin())];
  return eval(pieces_[piece_index(x)], x);
}

Rational BVFunction::left_limit(const Rational& x) const {
  const auto i = static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
  return eval(pieces_[i], x);
}

Rational BVFunction::right_limit(const Rational& x) const { return eval(pieces_[piece_index(x)], x); }

std::vector<Jump> BVFunction::jumps() const {
  std::vector<Jump> out;
  for (const auto& b : breaks_) {
    const Rational l = left_limit(b), r = right_limit(b);
    if (l != r) out.push_back({b, l, r});
  }
  return out;
}

BVFunction BVFunction::centred_at(const Rational& x) const {
  check_x(x, "BVFunction::centred_at");
  const Rational below = left_limit(x), above = right_limit(x);
  std::vector<Rational> nb = breaks_;
  if (!std::binary_search(nb.begin(), nb.end(), x)) nb.insert(std::upper_bound(nb.begin(), nb.end(), x), x);
  std::vector<Piece> np;
  for (std::size_t i = 0; i <= nb.size(); ++i) {
    const Rational lo = i == 0 ? Rational(-1) : nb[i - 1];
    const Rational hi = i == nb.size() ? Rational(1) : nb[i];
    Piece c = pieces_[piece_index((lo + hi) / 2)];
    if (c.empty()) c.push_back(0);
    c[0] -= hi <= x ? below : above;
    np.push_back(std::move(c));
  }
  std::vector<std::optional<Rational>> pv;
  for (const auto& b : nb) {
    if (b == x) {
      pv.push_back(Rational(0));
    } else {
      pv.push_back(value(b) - (b < x ? below : above));
    }
  }
  return BVFunction(std::move(nb), std::move(np), std::move(pv));
}

Rational BVFunction::variation(const Rational& lo, const Rational& hi) const {
  if (lo < -1 || hi > 1 || lo > hi) throw DomainError("variation: need -1 <= lo <= hi <= 1");
  if (lo == hi) return 0;
  std::vector<Rational> seq{value(lo)};
  Rational start = lo;
  auto next = std::upper_bound(breaks_.begin(), breaks_.end(), lo);
  for (;;) {
    const bool last = next == breaks_.end() || *next >= hi;
    const Rational end = last ? hi : *next;
    const Piece& c = pieces_[piece_index(start)];
    if (c.size() > 3) {
      throw UnsupportedPiece("variation: piece of degree " + std::to_string(c.size() - 1) +
                             " has no closed-form monotone split here");
    }
    seq.push_back(eval(c, start));
    if (c.size() == 3) {
      const Rational vertex = -c[1] / (2 * c[2]);
      if (vertex > start && vertex < end) seq.push_back(eval(c, vertex));
    }
    seq.push_back(eval(c, end));
    if (last) {
      seq.push_back(value(hi));
      break;
    }
    seq.push_back(value(end));
    start = end;
    ++next;
  }
  Rational v = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) v += mp::abs(seq[i] - seq[i - 1]);
  return v;
}

Rational total_variation(const BVFunction& f, const Rational& lo, const Rational& hi) { return f.variation(lo, hi); }

std::vector<Rational> theorem1_window_variations(const BVFunction& f, const Rational& x, int kmax) {
  check_x(x, "theorem1_window_variations");
  const BVFunction g = f.centred_at(x);
  std::vector<Rational> v;
  v.reserve(static_cast<std::size_t>(std::max(kmax, 0)));
  for (int k = 1; k <= kmax; ++k) v.push_back(g.variation(x - (1 + x) / k, x + (1 - x) / k));
  return v;
}

std::vector<double> theorem1_bounds(const BVFunction& f, const Rational& x, int pmax) {
  check_x(x, "theorem1_bound");
  if (pmax < 2) throw DomainError("theorem1_bound: p must be at least 2");
  const auto v = theorem1_window_variations(f, x, pmax);
  const double s = (1 - x * x).convert_to<double>();
  const double jump = mp::abs(f.right_limit(x) - f.left_limit(x)).convert_to<double>();
  std::vector<double> out(static_cast<std::size_t>(pmax), std::nan(""));
  Rational sum = 0;
  for (int p = 1; p <= pmax; ++p) {
    sum += v[static_cast<std::size_t>(p - 1)];
    if (p < 2) continue;
    out[static_cast<std::size_t>(p - 1)] =
        28.0 / p * std::pow(s, -1.5) * sum.convert_to<double>() + jump / (std::numbers::pi * p * s);
  }
  return out;
}

double theorem1_bound(const BVFunction& f, const Rational& x, int p) { return theorem1_bounds(f, x, p).back(); }

double theorem2_bound(double x, int p, double C_cal, double delta) {
  if (!(delta > 0 && delta < 0.25)) throw DomainError("theorem2_bound: delta must lie in (0, 1/4)");
  if (!(std::abs(x) > 2 * delta && std::abs(x) <= 1)) throw DomainError("theorem2_bound: need 2 delta < |x| <= 1");
  if (p < 1) throw DomainError("theorem2_bound: p must be positive");
  return C_cal / (p * std::sqrt(std::sqrt(1 - x * x) + 1.0 / p));
}

double theorem2_calibrate(const ErrorSweep& sw, int p_cal, double delta) {
  double c = 0;
  for (std::size_t i = 0; i < sw.pvalues.size(); ++i) {
    const int p = sw.pvalues[i];
    if (2 * p < p_cal || p > p_cal) continue;
    c = std::max(c, sw.abs_error[i] / theorem2_bound(sw.x, p, 1.0, delta));
  }
  if (c == 0) throw DomainError("theorem2_calibrate: sweep does not cover p = " + std::to_string(p_cal));
  return c;
}

EndpointBound endpoint_identity_bound(const Rational& a, int p) {
  if (p < 1) throw DomainError("endpoint_identity_bound: p must be positive");
  const double ad = a.convert_to<double>();
  const auto P = legendre_eval_range(p + 1, ad);
  return {0.5 * (std::abs(P[static_cast<std::size_t>(p)]) + std::abs(P[static_cast<std::size_t>(p) + 1])),
          endpoint_bound_constant(a) / std::sqrt(static_cast<double>(p))};
}

double endpoint_bound_constant(const Rational& a) {
  check_x(a, "endpoint_bound_constant");
  return std::pow((1 - a * a).convert_to<double>(), -0.25) * std::sqrt(2 / std::numbers::pi);
}

Theorem3Prediction theorem3_bound(double gamma, int p) {
  if (!(gamma > 0.5)) throw DomainError("theorem3_bound: needs gamma > 1/2");
  if (p < 1) throw DomainError("theorem3_bound: p must be positive");
  return {gamma, gamma - 0.5, std::pow(p, -(gamma - 0.5))};
}

namespace {

void finish(BoundReport& r) {
  r.ratio.resize(r.bound.size());
  for (std::size_t i = 0; i < r.bound.size(); ++i) {
    r.ratio[i] = r.measured[i] / r.bound[i];
    r.max_ratio = std::max(r.max_ratio, r.ratio[i]);
  }
}

}  // namespace

BoundReport theorem1_report(const BVFunction& f, const Rational& x, const ErrorSweep& measured) {
  if (measured.pvalues.empty()) throw DomainError("theorem1_report: empty sweep");
  const int pmax = measured.pvalues.back();
  const auto b = theorem1_bounds(f, x, pmax);
  BoundReport r;
  r.x = x.str();
  r.bound_name = "theorem1";
  for (std::size_t i = 0; i < measured.pvalues.size(); ++i) {
    const int p = measured.pvalues[i];
    if (p < 2) continue;
    r.pvalues.push_back(p);
    r.bound.push_back(b[static_cast<std::size_t>(p - 1)]);
    r.measured.push_back(measured.abs_error[i]);
  }
  finish(r);
  return r;
}

BoundReport endpoint_report(const Rational& a, const ErrorSweep& measured) {
  if (measured.pvalues.empty()) throw DomainError("endpoint_report: empty sweep");
  const auto P = legendre_eval_range(measured.pvalues.back() + 1, a.convert_to<double>());
  BoundReport r;
  r.x = measured.x_label;
  r.bound_name = "endpoint_identity";
  for (std::size_t i = 0; i < measured.pvalues.size(); ++i) {
    const auto p = static_cast<std::size_t>(measured.pvalues[i]);
    r.pvalues.push_back(measured.pvalues[i]);
    r.bound.push_back(0.5 * (std::abs(P[p]) + std::abs(P[p + 1])));
    r.measured.push_back(measured.abs_error[i]);
  }
  finish(r);
  return r;
}

BoundReport theorem2_report(double x, const ErrorSweep& measured, const ErrorSweep& calibration, double delta) {
  const double C = theorem2_calibrate(calibration, 100, delta);
  BoundReport r;
  r.x = measured.x_label;
  r.bound_name = "theorem2";
  r.calibration = "C = " + to_decimal(C) + " fitted at p = 100 on x = " + calibration.x_label;
  for (std::size_t i = 0; i < measured.pvalues.size(); ++i) {
    r.pvalues.push_back(measured.pvalues[i]);
    r.bound.push_back(theorem2_bound(x, measured.pvalues[i], C, delta));
    r.measured.push_back(measured.abs_error[i]);
  }
  finish(r);
  return r;
}

void write_bound_report(const BoundReport& r, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write " + csv_path);
  out << "p,measured,bound,ratio\n";
  for (std::size_t i = 0; i < r.pvalues.size(); ++i) {
    out << r.pvalues[i] << ',' << to_decimal(r.measured[i]) << ',' << to_decimal(r.bound[i]) << ','
        << to_decimal(r.ratio[i]) << '\n';
  }
}

}  // namespace leglab
