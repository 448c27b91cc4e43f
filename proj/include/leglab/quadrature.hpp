#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "leglab/precision.hpp"

namespace leglab {

template <LabScalar T>
struct QuadratureRule {
  std::vector<T> nodes;
  std::vector<T> weights;
  int order = 0;

  template <class F>
  T integrate(F&& f) const {
    CompensatedSum<T> s;
    for (std::size_t i = 0; i < nodes.size(); ++i) s.add(weights[i] * f(nodes[i]));
    return s.value();
  }

  /// Same rule mapped affinely onto [lo, hi].
  template <class F>
  T integrate(F&& f, const T& lo, const T& hi) const {
    const T half = (hi - lo) / 2;
    const T mid = (hi + lo) / 2;
    CompensatedSum<T> s;
    for (std::size_t i = 0; i < nodes.size(); ++i) s.add(weights[i] * f(mid + half * nodes[i]));
    return half * s.value();
  }
};

namespace detail {

// P_n(x) and P_n'(x) for |x| < 1.
template <class T>
void legendre_with_derivative(int n, const T& x, T& p, T& dp) {
  T p0(1);
  T p1(x);
  for (int k = 1; k < n; ++k) {
    T p2 = (T(2 * k + 1) * x * p1 - T(k) * p0) / T(k + 1);
    p0 = std::move(p1);
    p1 = std::move(p2);
  }
  p = n == 0 ? T(1) : p1;
  dp = n == 0 ? T(0) : T(n) * (x * p1 - p0) / (x * x - T(1));
}

}  // namespace detail

/// Gauss-Legendre rule with `order` points. Nodes start from Chebyshev-type
/// guesses and are polished by Newton's method at the working precision of T;
/// BigFloat nodes are seeded from the converged double nodes.
template <LabScalar T>
QuadratureRule<T> gauss_rule(int order) {
  if (order < 1) throw DomainError("gauss_rule: order must be >= 1");
  if constexpr (is_exact_v<T>) {
    throw PrecisionError("gauss_rule: Gauss nodes are irrational; use Float64 or BigFloat");
  } else {
    QuadratureRule<T> rule;
    rule.order = order;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double xd = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
      double pd = 0, dpd = 0;
      for (int it = 0; it < 100; ++it) {
        detail::legendre_with_derivative(order, xd, pd, dpd);
        const double dx = pd / dpd;
        xd -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      T x(xd);
      T p, dp;
      if constexpr (std::is_same_v<T, double>) {
        detail::legendre_with_derivative(order, x, p, dp);
      } else {
        const T tol = T(unit_roundoff<T>());
        for (int it = 0; it < 64; ++it) {
          detail::legendre_with_derivative(order, x, p, dp);
          const T dx = p / dp;
          x -= dx;
          if (abs_value(dx) <= tol) break;
        }
        detail::legendre_with_derivative(order, x, p, dp);
      }
      const T w = T(2) / ((T(1) - x * x) * dp * dp);
      const auto lo = static_cast<std::size_t>(i);
      const auto hi = static_cast<std::size_t>(order - 1 - i);
      // Ascending order: the largest node goes last.
      rule.nodes[hi] = x;
      rule.nodes[lo] = -x;
      rule.weights[hi] = w;
      rule.weights[lo] = w;
    }
    if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = T(0);
    return rule;
  }
}

}  // namespace leglab
