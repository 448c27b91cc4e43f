#pragma once

#include <string>
#include <vector>

#include "leglab/series.hpp"

namespace leglab {

/// Nodes -1 = x_0 < ... < x_n = 1 and a polynomial degree per element.
struct Mesh1D {
  std::vector<Rational> nodes;
  std::vector<int> degrees;

  /// x_i = i h - 1, h = 2/n, every element of degree p.
  static Mesh1D uniform(int n, int p);
  /// Throws MeshInvalid.
  void validate() const;
  int elements() const { return static_cast<int>(nodes.size()) - 1; }
  Rational h(int e) const { return nodes[static_cast<std::size_t>(e) + 1] - nodes[static_cast<std::size_t>(e)]; }
  /// Element whose closure contains x (the left one at an interior node).
  int element_of(const Rational& x) const;
  /// Element containing a in its interior, or -1 when a is a node.
  int singular_element(const Rational& a) const;
};

/// Exact solution of -u'' = delta_a, u(+-1) = 0: the negative of the
/// abs-shift function (|x-a| + a x - 1)/2.
Rational fem_exact_solution(const Rational& a, const Rational& x);

/// u_p in the hierarchic basis: hats at the nodes plus, on element e, the
/// internal modes phi_k(xi) = (P_k(xi) - P_{k-2}(xi))/(2k-1), k = 2..p_e,
/// where xi in [-1, 1] is the local coordinate.
template <LabScalar T>
struct FemSolution {
  Mesh1D mesh;
  Rational a;
  std::vector<T> nodal;                  // u_p(x_i); the end values are 0
  std::vector<std::vector<T>> internal;  // internal[e][k-2]

  T value(const Rational& x) const;
  /// One-sided derivative from the element to the right of x (left at x = 1).
  T derivative(const Rational& x) const;
};

/// Galerkin solve of B(u, v) = int u'v' = v(a). The stiffness is diagonal in
/// the internal modes and decoupled from the hats, so the nodal part is a
/// tridiagonal solve and each internal coefficient is a single division.
/// Throws MeshInvalid or DomainError (a outside (-1, 1)).
template <LabScalar T>
FemSolution<T> assemble_and_solve(const Mesh1D& mesh, const Rational& a);

/// Legendre coefficients (degree p) of a single-element solution on [-1, 1].
template <LabScalar T>
std::vector<T> fem_legendre_coeffs(const FemSolution<T>& sol);

/// |u(x) - u_p(x)| for degree 1..pmax on the element containing a, the other
/// elements held at their degrees. The hierarchic coefficients do not depend
/// on p, so one solve at pmax serves every p.
template <LabScalar T>
ErrorSweep element_error_series(const FemSolution<T>& sol, const Rational& x, int pmax);

/// Dispatches on the context: solve at pmax on `mesh` and sweep at x.
ErrorSweep fem_error_sweep(const Mesh1D& mesh, const Rational& a, const Rational& x, int pmax,
                           const PrecisionContext& ctx);

/// Per-element coefficient CSV (element, mode, coeff) and a sampled trace
/// (x, u_p) with `samples` points per element.
template <LabScalar T>
void write_fem_solution(const FemSolution<T>& sol, const std::string& coeff_csv, const std::string& trace_csv,
                        int samples = 50);

}  // namespace leglab
