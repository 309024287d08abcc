#pragma once

#include <memory>

#include "fslab/crossed.hpp"

namespace fslab {

// Equivariant correspondence between two twisted actions over the same
// groupoid. The fibre at a unit x is E_x = Mat_{d_x x nB_x} with inner
// product <xi,zeta> = xi^* zeta and right multiplication by B_x. The left
// action of A_x is phi_x(a) = W_x (a (x) 1_{k_x}) W_x^* with d_x = k_x nA_x,
// and arrows act by L_g(xi) = P_g xi V^beta_g^* with P_g unitary, P_x = 1.
struct Correspondence {
  std::shared_ptr<const Action> src;  // (alpha, u_alpha)
  std::shared_ptr<const Action> tgt;  // (beta, u_beta)
  std::vector<int> d, k;              // per arrow, valid at units
  std::vector<CMatrix> W;             // per arrow, valid at units
  std::vector<CMatrix> P;             // per arrow

  int d_at(int x) const { return d[x]; }
  int k_at(int x) const { return k[x]; }
  int na(int x) const { return src->A.at(x); }
  int nb(int x) const { return tgt->A.at(x); }

  CMatrix phi(int x, const CMatrix& a) const;
  CMatrix L(int g, const CMatrix& xi) const;
  CMatrix L_inverse(int g, const CMatrix& xi) const;
};

Correspondence identity_correspondence(std::shared_ptr<const Action> act);

Report validate_correspondence(const Correspondence& c, double tol = 1e-9);

// Concrete realization of a module spanned by abstract vectors with a given
// Mat_m-valued Gram matrix: vectors become rho x m matrices reproducing it.
// gram is the (T*m) x (T*m) scalar matrix of all inner product entries.
struct GramRealization {
  int rho = 0;
  std::vector<CMatrix> vectors;
};
GramRealization module_from_gram(const CMatrix& gram, int m, double rank_tol = 1e-9);

// Recover (k, W) with phi(a) = W (a (x) 1_k) W^* from the values of a unital
// *-homomorphism Mat_nA -> Mat_d on matrix units (phi_units[p*nA+q] = phi(E_pq)).
std::pair<int, CMatrix> normalize_left_action(const std::vector<CMatrix>& phi_units, int na,
                                              double tol = 1e-8);

// Interior tensor product over the middle action. emb[x] maps
// vec(xi) (x) vec(zeta) to the vectorised concrete element xi (x) zeta.
struct TensorData {
  Correspondence c;
  std::vector<CMatrix> emb;  // per arrow, valid at units
};
TensorData tensor(const Correspondence& e, const Correspondence& f, double tol = 1e-8);
CMatrix tensor_vector(const TensorData& t, int x, const CMatrix& xi, const CMatrix& zeta);

Correspondence direct_sum(const Correspondence& a, const Correspondence& b);
Correspondence amplify(const Correspondence& e, int n);

// Regularization: fibre at x becomes the stack of |G_x| copies of E_x
// (ascending arrow order), arrows act by translation through L.
Correspondence regularize(const Correspondence& e);

// Sections of E over units (entries at unit arrows) and over all arrows
// (xi[g] lives in E_{s(g)}); both are stored per arrow.
using ESection = std::vector<CMatrix>;

// stack an arrow-indexed section into unit fibres of regularize(e)
ESection stack_section(const Correspondence& e, const ESection& xi);

// pi^E_x: the representation of the source section algebra on the stacked
// fibre l2(s*E)_x; block (g,h) = phi_x(alpha_g^{-1}(a(g h^{-1}) u_alpha(g h^{-1}, h))).
CMatrix pi_e_block(const Correspondence& e, int x, const Section& a);

// Absorption of a regular factor: unitaries Gamma_x with
// Gamma_{r(g)} P^{lhs}_g = P^{reg}_g Gamma_{s(g)}.
struct Absorption {
  TensorData lhs;
  Correspondence rhs;
  std::vector<CMatrix> gamma;  // per arrow, valid at units
};
Absorption absorb_regular_right(const Correspondence& e, double tol = 1e-8);  // E (x) B^G = E^G
Absorption absorb_regular_left(const Correspondence& e, double tol = 1e-8);   // A^G (x) E = E^G

// Fell absorption: W_x : C_0(E) (x)_{pi^B} l2(s*B)_x -> l2(s*E)_x.
// Domain labels at unit x: (t in G_x, e over d_{r(t)} nB_{r(t)}, c over nB_x^2).
struct FellAbsorption {
  std::shared_ptr<const Correspondence> e;
  std::vector<int> rho;                          // per unit index
  std::vector<std::vector<CMatrix>> span;        // per unit index: concrete label vectors
  std::vector<CMatrix> w;                        // per unit index: the unitaries
};
FellAbsorption fell_absorption(std::shared_ptr<const Correspondence> e, double tol = 1e-8);

// concrete domain vector of xi (x) b at unit x (xi a unit section, b stacked)
CMatrix fell_domain_vector(const FellAbsorption& fa, int x, const ESection& xi, const CMatrix& b);

// residual of W^* pi^E(a delta_f) W (xi (x) b) = a L_f(xi) (x) pi^B(delta_f) b
double fell_conjugation_residual(const FellAbsorption& fa, int f, const CMatrix& a,
                                 const ESection& xi, int x, const CMatrix& b);

// Representation of the section algebra on a Hilbert space, stored through
// images of the concrete-algebra basis.
struct Rep {
  std::shared_ptr<const ConcreteAlgebra> alg;
  std::vector<CMatrix> image;  // per basis element

  int dim() const { return image.empty() ? 0 : static_cast<int>(image.front().rows); }
  CMatrix apply_section(const Section& a) const;
  CMatrix apply_delta(int g, const CMatrix& a) const;
};
Rep regular_rep(std::shared_ptr<const ConcreteAlgebra> alg);
// random direct sum of Wedderburn blocks with multiplicities 1..2, conjugated
Rep random_rep(std::shared_ptr<const ConcreteAlgebra> alg, std::uint64_t seed);
Report validate_rep(const Rep& r, double tol = 1e-8);

// Hilbert space induced from psi through a correspondence: C_0(E) (x)_psi H.
// Labels: (y unit, e over d_y nB_y, h over dim H).
struct Induced {
  std::shared_ptr<const Correspondence> e;
  Rep psi;
  int rho = 0;
  CMatrix span;       // rho x T, concrete label vectors as columns
  CMatrix span_pinv;  // T x rho

  int label_base(int unit_index) const;  // first label of a unit block
  // operator sending xi (x) eta to (phi(a) L_v xi) (x) psi(delta_v) eta
  CMatrix generator(int v, const CMatrix& a) const;
  CMatrix apply_algebra(const Section& a) const;  // sum of generators
  // concrete vector of a simple tensor (unit section xi, vector eta)
  CMatrix vector_of(const ESection& xi, const CMatrix& eta) const;
};
Induced induce(std::shared_ptr<const Correspondence> e, Rep psi, double tol = 1e-8);

// Fell absorption II data over the regularization of e0: the unitary w
// satisfies w ind(c) = (pi^E (x) 1) (c) w on C_0(l2(s*E)) (x)_psi H.
struct AbsorptionII {
  std::shared_ptr<const Correspondence> base;  // e0
  std::shared_ptr<const Correspondence> reg;   // regularize(e0)
  Induced ind;
  CMatrix w;

  CMatrix pi_tensor(int v, const CMatrix& a) const;       // (pi^E (x) 1)(a delta_v)
  CMatrix pi_tensor_section(const Section& a) const;
};
AbsorptionII fell_absorption_ii(std::shared_ptr<const Correspondence> e0, Rep psi,
                                double tol = 1e-8);

}  // namespace fslab
