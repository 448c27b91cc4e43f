#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "leglab/precision.hpp"

namespace leglab {

namespace detail {
template <LabScalar T>
void check_unit_interval(const T& x, const char* op) {
  if (x > T(1) || x < T(-1)) {
    throw DomainError(std::string(op) + ": |x| > 1");
  }
}
}  // namespace detail

/// Walks P_0(x), P_1(x), ... with the three-term recurrence
/// (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}.
template <LabScalar T>
class LegendreStepper {
 public:
  explicit LegendreStepper(const T& x) : x_(x), prev_(0), cur_(1) {}

  int degree() const noexcept { return n_; }
  const T& value() const noexcept { return cur_; }
  const T& previous() const noexcept { return prev_; }

  void advance() {
    T next;
    if (n_ == 0) {
      next = x_;
    } else {
      next = (T(2 * n_ + 1) * x_ * cur_ - T(n_) * prev_) / T(n_ + 1);
    }
    prev_ = std::move(cur_);
    cur_ = std::move(next);
    ++n_;
  }

 private:
  T x_;
  T prev_;
  T cur_;
  int n_ = 0;
};

/// P_k(x) in the precision of T.
template <LabScalar T>
T legendre_eval(int k, const T& x) {
  if (k < 0) throw DomainError("legendre_eval: negative degree");
  detail::check_unit_interval(x, "legendre_eval");
  LegendreStepper<T> s(x);
  for (int i = 0; i < k; ++i) s.advance();
  return s.value();
}

/// P_0(x) .. P_kmax(x) from a single recurrence pass; element k is bit-identical
/// to legendre_eval(k, x).
template <LabScalar T>
std::vector<T> legendre_eval_range(int kmax, const T& x) {
  if (kmax < 0) throw DomainError("legendre_eval_range: negative degree");
  detail::check_unit_interval(x, "legendre_eval_range");
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(kmax) + 1);
  LegendreStepper<T> s(x);
  out.push_back(s.value());
  for (int i = 0; i < kmax; ++i) {
    s.advance();
    out.push_back(s.value());
  }
  return out;
}

/// Bernstein-type envelope (1 - x^2)^{-1/4} sqrt(2 / (pi k)) for |P_k(x)|.
double bernstein_bound(int k, double x);

/// Integer coefficients s_m of 2^n P_n(x) = sum_m s_m x^m (odd/even parity of n
/// only; other entries are zero).
std::vector<mp::mpz_int> legendre_scaled_monomials(int n);

}  // namespace leglab
