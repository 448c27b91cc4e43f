#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leglab/series.hpp"

namespace leglab {

struct Jump {
  Rational at;
  Rational left;
  Rational right;
};

/// Piecewise polynomial on [-1, 1] with finitely many breakpoints strictly
/// inside. Pieces are ascending coefficient lists; the value at a breakpoint
/// defaults to the mean of the one-sided limits.
class BVFunction {
 public:
  using Piece = std::vector<Rational>;

  /// breakpoints.size() + 1 pieces; breakpoints strictly increasing in (-1, 1).
  BVFunction(std::vector<Rational> breakpoints, std::vector<Piece> pieces,
             std::vector<std::optional<Rational>> point_values = {});

  /// (a-1)/2 + H(x-a).
  static BVFunction step(const Rational& a);
  /// (|x-a| + a x - 1)/2.
  static BVFunction abs_shift(const Rational& a);

  const std::vector<Rational>& breakpoints() const noexcept { return breaks_; }
  Rational value(const Rational& x) const;
  Rational left_limit(const Rational& x) const;
  Rational right_limit(const Rational& x) const;
  std::vector<Jump> jumps() const;

  /// g_x(t) = f(t) - f(x-0) for t < x, 0 at x, f(t) - f(x+0) for t > x.
  BVFunction centred_at(const Rational& x) const;

  /// Exact variation on [lo, hi]; the point value at lo and hi counts, limits
  /// from outside do not.
  Rational variation(const Rational& lo, const Rational& hi) const;

 private:
  std::size_t piece_index(const Rational& x) const;  // piece containing x (right piece at a breakpoint)
  static Rational eval(const Piece& c, const Rational& x);

  std::vector<Rational> breaks_;
  std::vector<Piece> pieces_;
  std::vector<Rational> point_;  // value at each breakpoint
};

/// Throws UnsupportedPiece for pieces of degree > 2 meeting [lo, hi].
Rational total_variation(const BVFunction& f, const Rational& lo, const Rational& hi);

/// The right side of the Theorem 1 estimate for |S_p(f, x) - mean of limits|:
/// 28/p (1-x^2)^-3/2 sum_{k<=p} V(g_x, [x-(1+x)/k, x+(1-x)/k])
///   + (pi p)^-1 (1-x^2)^-1 |f(x+0) - f(x-0)|.
/// DomainError for |x| >= 1 or p < 2.
double theorem1_bound(const BVFunction& f, const Rational& x, int p);
/// The same for p = 1..pmax (entry p-1; p = 1 is NaN), sharing the window sum.
std::vector<double> theorem1_bounds(const BVFunction& f, const Rational& x, int pmax);
/// Variation of g_x over the k-th window, k = 1..kmax.
std::vector<Rational> theorem1_window_variations(const BVFunction& f, const Rational& x, int kmax);

/// C / (p ((1-x^2)^(1/2) + 1/p)^(1/2)) for the a = 0 step; DomainError
/// unless 2 delta < |x| <= 1 and 0 < delta < 1/4.
double theorem2_bound(double x, int p, double C_cal, double delta = 0.1);

/// C_cal = sup over p in [p_cal/2, p_cal] of measured(p) / theorem2_bound(x, p, 1),
/// for a sweep of the a = 0 step family (x = 1 by convention).
double theorem2_calibrate(const ErrorSweep& sw, int p_cal = 100, double delta = 0.1);

struct EndpointBound {
  double identity = 0;  // (|P_p(a)| + |P_{p+1}(a)|)/2
  double closed = 0;    // (1-a^2)^-1/4 (2/(pi p))^1/2
};

EndpointBound endpoint_identity_bound(const Rational& a, int p);
/// (1-a^2)^-1/4 (2/pi)^1/2, the constant of the closed endpoint bound.
double endpoint_bound_constant(const Rational& a);

struct Theorem3Prediction {
  double gamma = 0;
  double rate = 0;   // gamma - 1/2
  double shape = 0;  // p^-rate
};

/// DomainError for gamma <= 1/2.
Theorem3Prediction theorem3_bound(double gamma, int p);

struct BoundReport {
  std::string x;
  std::string bound_name;
  std::vector<int> pvalues;
  std::vector<double> bound;
  std::vector<double> measured;
  std::vector<double> ratio;  // measured / bound
  double max_ratio = 0;
  /// Calibration note when the bound carries a fitted constant.
  std::string calibration;
};

/// Measured errors from the sweep against theorem1_bound on p = 2..pmax.
BoundReport theorem1_report(const BVFunction& f, const Rational& x, const ErrorSweep& measured);
/// Measured |error(+-1)| against the endpoint identity bound, p = 1..pmax.
BoundReport endpoint_report(const Rational& a, const ErrorSweep& measured);
/// Theorem 2 with C calibrated once on `calibration` (a = 0 step at x = 1).
BoundReport theorem2_report(double x, const ErrorSweep& measured, const ErrorSweep& calibration, double delta = 0.1);

/// CSV (p, measured, bound, ratio).
void write_bound_report(const BoundReport& r, const std::string& csv_path);

}  // namespace leglab
