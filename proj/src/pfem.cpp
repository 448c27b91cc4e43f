#include "leglab/pfem.hpp"

#include <algorithm>
#include <fstream>

namespace leglab {

Mesh1D Mesh1D::uniform(int n, int p) {
  if (n < 1) throw MeshInvalid("uniform mesh needs at least one element");
  Mesh1D m;
  for (int i = 0; i <= n; ++i) m.nodes.push_back(Rational(2 * i, n) - 1);
  m.degrees.assign(static_cast<std::size_t>(n), p);
  m.validate();
  return m;
}

void Mesh1D::validate() const {
  if (nodes.size() < 2) throw MeshInvalid("mesh needs at least two nodes");
  if (nodes.front() != -1 || nodes.back() != 1) throw MeshInvalid("mesh must span [-1, 1]");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i] <= nodes[i - 1]) throw MeshInvalid("mesh nodes not strictly increasing at index " + std::to_string(i));
  }
  if (degrees.size() + 1 != nodes.size()) throw MeshInvalid("one degree per element required");
  for (int d : degrees) {
    if (d < 1) throw MeshInvalid("element degree below 1");
  }
}

int Mesh1D::element_of(const Rational& x) const {
  if (x < -1 || x > 1) throw DomainError("element_of: x outside [-1, 1]");
  const auto it = std::lower_bound(nodes.begin() + 1, nodes.end(), x);
  return static_cast<int>(it - nodes.begin()) - 1;
}

int Mesh1D::singular_element(const Rational& a) const {
  if (std::binary_search(nodes.begin(), nodes.end(), a)) return -1;
  return element_of(a);
}

Rational fem_exact_solution(const Rational& a, const Rational& x) {
  return x <= a ? (1 - a) * (1 + x) / 2 : (1 + a) * (1 - x) / 2;
}

namespace {

Rational local_coordinate(const Mesh1D& m, int e, const Rational& x) {
  const auto ue = static_cast<std::size_t>(e);
  return (2 * x - m.nodes[ue] - m.nodes[ue + 1]) / m.h(e);
}

// Adds c_k phi_k(xi) (derivative: c_k P_{k-1}(xi)) for k = 2..degree.
template <LabScalar T>
T internal_part(const std::vector<T>& c, const T& xi, bool derivative) {
  CompensatedSum<T> acc;
  LegendreStepper<T> st(xi);
  st.advance();  // P_1
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int k = static_cast<int>(i) + 2;
    const T pkm1 = st.value();
    const T pkm2 = st.previous();
    st.advance();
    if (derivative) {
      acc.add(c[i] * pkm1);
    } else {
      acc.add(c[i] * (st.value() - pkm2) / T(2 * k - 1));
    }
  }
  return acc.value();
}

}  // namespace

template <LabScalar T>
T FemSolution<T>::value(const Rational& x) const {
  const int e = mesh.element_of(x);
  const auto ue = static_cast<std::size_t>(e);
  const T xi = from_rational<T>(local_coordinate(mesh, e, x));
  const T lin = (nodal[ue] * (T(1) - xi) + nodal[ue + 1] * (T(1) + xi)) / T(2);
  return lin + internal_part(internal[ue], xi, false);
}

template <LabScalar T>
T FemSolution<T>::derivative(const Rational& x) const {
  int e = mesh.element_of(x);
  if (x != 1 && mesh.nodes[static_cast<std::size_t>(e) + 1] == x) ++e;
  const auto ue = static_cast<std::size_t>(e);
  const T xi = from_rational<T>(local_coordinate(mesh, e, x));
  const T d = (nodal[ue + 1] - nodal[ue]) / T(2) + internal_part(internal[ue], xi, true);
  return d * T(2) / from_rational<T>(mesh.h(e));
}

template <LabScalar T>
FemSolution<T> assemble_and_solve(const Mesh1D& mesh, const Rational& a) {
  mesh.validate();
  if (a <= -1 || a >= 1) throw DomainError("assemble_and_solve: a = " + a.str() + " outside (-1, 1)");
  const int n = mesh.elements();
  FemSolution<T> sol;
  sol.mesh = mesh;
  sol.a = a;
  sol.nodal.assign(static_cast<std::size_t>(n) + 1, T(0));
  sol.internal.resize(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) sol.internal[static_cast<std::size_t>(e)].assign(static_cast<std::size_t>(mesh.degrees[static_cast<std::size_t>(e)] - 1), T(0));

  // Load: basis values at a.
  std::vector<T> load(static_cast<std::size_t>(n) + 1, T(0));
  const int s = mesh.singular_element(a);
  if (s < 0) {
    load[static_cast<std::size_t>(std::lower_bound(mesh.nodes.begin(), mesh.nodes.end(), a) - mesh.nodes.begin())] = T(1);
  } else {
    const auto us = static_cast<std::size_t>(s);
    const Rational xi = local_coordinate(mesh, s, a);
    load[us] = from_rational<T>((1 - xi) / 2);
    load[us + 1] = from_rational<T>((1 + xi) / 2);
  }

  // Hats: tridiagonal stiffness on the interior nodes 1..n-1 (Thomas).
  const int m = n - 1;
  if (m > 0) {
    std::vector<T> diag(static_cast<std::size_t>(m)), upper(static_cast<std::size_t>(m)), rhs(static_cast<std::size_t>(m));
    for (int i = 1; i <= n - 1; ++i) {
      const auto r = static_cast<std::size_t>(i - 1);
      diag[r] = from_rational<T>(1 / mesh.h(i - 1) + 1 / mesh.h(i));
      upper[r] = from_rational<T>(-1 / mesh.h(i));
      rhs[r] = load[static_cast<std::size_t>(i)];
    }
    for (std::size_t r = 1; r < diag.size(); ++r) {
      const T w = upper[r - 1] / diag[r - 1];
      diag[r] -= w * upper[r - 1];
      rhs[r] -= w * rhs[r - 1];
    }
    for (std::size_t r = diag.size(); r-- > 0;) {
      T v = rhs[r];
      if (r + 1 < diag.size()) v -= upper[r] * sol.nodal[r + 2];
      sol.nodal[r + 1] = v / diag[r];
    }
  }

  // Internal modes: B(phi_k, phi_k) = (2/h) 2/(2k-1), so c_k = phi_k(xi_a) h (2k-1)/4.
  if (s >= 0) {
    const auto us = static_cast<std::size_t>(s);
    const T xi = from_rational<T>(local_coordinate(mesh, s, a));
    const T h = from_rational<T>(mesh.h(s));
    LegendreStepper<T> st(xi);
    st.advance();
    for (std::size_t i = 0; i < sol.internal[us].size(); ++i) {
      const int k = static_cast<int>(i) + 2;
      const T pkm2 = st.previous();
      st.advance();
      const T phi = (st.value() - pkm2) / T(2 * k - 1);
      sol.internal[us][i] = phi * h * T(2 * k - 1) / T(4);
    }
  }
  return sol;
}

template <LabScalar T>
std::vector<T> fem_legendre_coeffs(const FemSolution<T>& sol) {
  if (sol.mesh.elements() != 1) throw DomainError("fem_legendre_coeffs: needs a single-element mesh");
  const auto& c = sol.internal[0];
  std::vector<T> d(c.size() + 2, T(0));
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int k = static_cast<int>(i) + 2;
    const T t = c[i] / T(2 * k - 1);
    d[static_cast<std::size_t>(k)] += t;
    d[static_cast<std::size_t>(k) - 2] -= t;
  }
  return d;
}

template <LabScalar T>
ErrorSweep element_error_series(const FemSolution<T>& sol, const Rational& x, int pmax) {
  if (pmax < 1) throw IndexError("element_error_series: pmax must be positive");
  const Mesh1D& mesh = sol.mesh;
  const int s = mesh.singular_element(sol.a);
  const int ex = mesh.element_of(x);
  if (s >= 0 && mesh.degrees[static_cast<std::size_t>(s)] < pmax) {
    throw IndexError("element_error_series: singular element solved to degree " +
                     std::to_string(mesh.degrees[static_cast<std::size_t>(s)]) + " < " + std::to_string(pmax));
  }
  ErrorSweep sw;
  sw.x = x.convert_to<double>();
  sw.x_label = x.str();
  sw.target = "u with -u''=delta_a, u(+-1)=0, a=" + sol.a.str();
  sw.series_id = "pfem1d(elements=" + std::to_string(mesh.elements()) + ")@" + context_for<T>().to_string();
  const T exact = from_rational<T>(fem_exact_solution(sol.a, x));
  const auto ue = static_cast<std::size_t>(ex);
  const T xi = from_rational<T>(local_coordinate(mesh, ex, x));
  CompensatedSum<T> acc;
  acc.add((sol.nodal[ue] * (T(1) - xi) + sol.nodal[ue + 1] * (T(1) + xi)) / T(2));
  const bool varies = ex == s;
  if (!varies) acc.add(internal_part(sol.internal[ue], xi, false));
  LegendreStepper<T> st(xi);
  st.advance();
  for (int p = 1; p <= pmax; ++p) {
    if (varies && p >= 2) {
      const T pkm2 = st.previous();
      st.advance();
      acc.add(sol.internal[ue][static_cast<std::size_t>(p - 2)] * (st.value() - pkm2) / T(2 * p - 1));
    }
    sw.pvalues.push_back(p);
    sw.abs_error.push_back(std::abs(to_double(acc.residual_from(exact))));
  }
  return sw;
}

ErrorSweep fem_error_sweep(const Mesh1D& mesh, const Rational& a, const Rational& x, int pmax,
                           const PrecisionContext& ctx) {
  Mesh1D m = mesh;
  m.validate();
  const int s = m.singular_element(a);
  if (s >= 0) m.degrees[static_cast<std::size_t>(s)] = std::max(m.degrees[static_cast<std::size_t>(s)], pmax);
  return dispatch(ctx, [&]<class T>(std::type_identity<T>) {
    return element_error_series(assemble_and_solve<T>(m, a), x, pmax);
  });
}

template <LabScalar T>
void write_fem_solution(const FemSolution<T>& sol, const std::string& coeff_csv, const std::string& trace_csv,
                        int samples) {
  std::ofstream c(coeff_csv);
  if (!c) throw ConfigError("cannot write " + coeff_csv);
  c << "element,mode,coeff\n";
  for (int e = 0; e < sol.mesh.elements(); ++e) {
    const auto ue = static_cast<std::size_t>(e);
    c << e << ",0," << to_decimal(sol.nodal[ue]) << '\n';
    c << e << ",1," << to_decimal(sol.nodal[ue + 1]) << '\n';
    for (std::size_t i = 0; i < sol.internal[ue].size(); ++i) c << e << ',' << i + 2 << ',' << to_decimal(sol.internal[ue][i]) << '\n';
  }
  std::ofstream t(trace_csv);
  if (!t) throw ConfigError("cannot write " + trace_csv);
  t << "x,u_p\n";
  for (int e = 0; e < sol.mesh.elements(); ++e) {
    const auto ue = static_cast<std::size_t>(e);
    for (int j = e == 0 ? 0 : 1; j <= samples; ++j) {
      const Rational x = sol.mesh.nodes[ue] + sol.mesh.h(e) * j / samples;
      t << to_decimal(x.convert_to<double>()) << ',' << to_decimal(sol.value(x)) << '\n';
    }
  }
}

#define LEGLAB_INSTANTIATE(T)                                                                     \
  template struct FemSolution<T>;                                                                 \
  template FemSolution<T> assemble_and_solve<T>(const Mesh1D&, const Rational&);                  \
  template std::vector<T> fem_legendre_coeffs<T>(const FemSolution<T>&);                          \
  template ErrorSweep element_error_series<T>(const FemSolution<T>&, const Rational&, int);       \
  template void write_fem_solution<T>(const FemSolution<T>&, const std::string&, const std::string&, int);

LEGLAB_INSTANTIATE(double)
LEGLAB_INSTANTIATE(BigFloat)
LEGLAB_INSTANTIATE(Rational)

}  // namespace leglab
