#include "leglab/legendre.hpp"

namespace leglab {

double bernstein_bound(int k, double x) {
  if (k < 1) throw DomainError("bernstein_bound: degree must be positive");
  if (!(std::abs(x) < 1.0)) throw DomainError("bernstein_bound: requires |x| < 1");
  return std::pow(1.0 - x * x, -0.25) * std::sqrt(2.0 / (std::numbers::pi * k));
}

std::vector<mp::mpz_int> legendre_scaled_monomials(int n) {
  if (n < 0) throw DomainError("legendre_scaled_monomials: negative degree");
  std::vector<mp::mpz_int> s(static_cast<std::size_t>(n) + 1, 0);
  // term_j = (-1)^j C(n, j) C(2n - 2j, n) multiplies x^{n - 2j}.
  mp::mpz_int term = 1;
  for (int i = 0; i < n; ++i) term = term * (2 * n - i) / (i + 1);  // C(2n, n)
  for (int j = 0; 2 * j <= n; ++j) {
    s[static_cast<std::size_t>(n - 2 * j)] = term;
    if (2 * j + 2 > n) break;
    const mp::mpz_int num = mp::mpz_int(n - j) * (n - 2 * j) * (n - 2 * j - 1);
    const mp::mpz_int den = mp::mpz_int(j + 1) * (2 * n - 2 * j) * (2 * n - 2 * j - 1);
    term = term * num / den;
    term = -term;
  }
  return s;
}

}  // namespace leglab
