#pragma once

#include <memory>
#include <unordered_map>

#include "fslab/groupoid.hpp"
#include "fslab/numerics.hpp"

namespace fslab {

inline long long pair_key(int g, int h) { return (static_cast<long long>(g) << 32) | static_cast<unsigned>(h); }

// Bundle of matrix algebras over the unit space: fibre at unit x is
// Mat_{dim(x)}. Dimensions are stored per arrow (meaningful at units) and
// must be constant along orbits.
struct CStarBundle {
  std::vector<int> dim;  // indexed by arrow, valid at units
  int at(int unit_arrow) const { return dim[unit_arrow]; }
};

// Twisted groupoid action on a matrix bundle: alpha_g = Ad V_g with V_g a
// unitary of size dim(r(g)) (gauge-fixed V_x = 1 at units), and cocycle
// unitaries u(g,h) of size dim(r(g)) for composable pairs.
struct Action {
  std::shared_ptr<const FiniteGroupoid> G;
  CStarBundle A;
  std::vector<CMatrix> V;                       // per arrow
  std::unordered_map<long long, CMatrix> u;     // per composable pair

  int fibre_dim(int g) const { return A.at(G->rng[g]); }
  const CMatrix& cocycle(int g, int h) const;
  CMatrix alpha(int g, const CMatrix& a) const { return V[g] * a * V[g].adjoint(); }
  CMatrix alpha_inv(int g, const CMatrix& a) const { return V[g].adjoint() * a * V[g]; }
};

// V = 1, u = 1 everywhere
Action trivial_action(std::shared_ptr<const FiniteGroupoid> g, const std::vector<int>& dims_per_unit);

Report validate_action(const Action& act, double tol = 1e-9);

// Section of the associated Fell bundle: one matrix of size dim(r(g)) per arrow.
using Section = std::vector<CMatrix>;

Section zero_section(const Action& act);
Section unit_section(const Action& act);                  // identity at units, zero elsewhere
Section delta_section(const Action& act, int g, const CMatrix& a);

// Fell bundle structure: A_g carries A_{r(g)}, with
//   a *_{g,h} b = a alpha_g(b) u(g,h)          (value in A_{gh})
//   a^*_g      = u(g^{-1},g)^* alpha_{g^{-1}}(a^*)   (value in A_{g^{-1}})
CMatrix fell_mul(const Action& act, const CMatrix& a, int g, const CMatrix& b, int h);
CMatrix fell_star(const Action& act, const CMatrix& a, int g);

Section convolve(const Action& act, const Section& a, const Section& b);
Section star(const Action& act, const Section& a);
Section expectation(const Action& act, const Section& a);  // restriction to units

double section_sup_norm(const Section& a);

}  // namespace fslab
