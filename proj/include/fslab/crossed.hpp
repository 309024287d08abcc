#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "fslab/action.hpp"

namespace fslab {

// Block-diagonal operator, one block per unit (aligned with G->units).
using Ambient = std::vector<CMatrix>;

Ambient ambient_zero(const std::vector<int>& block_sizes);
Ambient ambient_mul(const Ambient& x, const Ambient& y);
Ambient ambient_add(const Ambient& x, const Ambient& y);
Ambient ambient_adjoint(const Ambient& x);
cd ambient_trace(const Ambient& x);
double ambient_max_abs(const Ambient& x);
std::vector<cd> ambient_vec(const Ambient& x);

// Regular representation block at unit x: rows/columns indexed by G_x
// (ascending), blocks of size n_x; entry (g,h) = V_g^* a(gh^{-1}) u(gh^{-1},h) V_g.
CMatrix regular_block(const Action& act, int x, const Section& a);
double reduced_norm(const Action& act, const Section& a);

// The same representation on vectorised fibres, plus the lambda picture and
// the unitary W conjugating one into the other.
CMatrix pi_block_vec(const Action& act, int x, const Section& a);
CMatrix lambda_block_vec(const Action& act, int x, const Section& a);
CMatrix w_block_vec(const Action& act, int x);

// Concrete model of the crossed product: span of pi(b delta_g) over all
// arrows g and matrix units b of A_{r(g)}, inside block-diagonal matrices.
struct ConcreteAlgebra {
  std::shared_ptr<const Action> act;
  std::vector<int> blockN;  // per unit
  struct BasisElem {
    int g, p, q;
  };
  std::vector<BasisElem> basis;
  std::vector<Ambient> basis_blocks;
  CMatrix basis_mat;   // ambient-vec columns
  CMatrix basis_pinv;  // pseudo-inverse for membership

  int dim() const { return static_cast<int>(basis.size()); }
  Ambient lift(const std::vector<cd>& coeff) const;
  Ambient unit() const;
  // least-squares coefficients of an ambient element; residual relative to 1+|y|
  std::vector<cd> membership(const Ambient& y, double* residual) const;
};

ConcreteAlgebra crossed_algebra(std::shared_ptr<const Action> act);

Ambient pi_of_section(const ConcreteAlgebra& alg, const Section& a);
Section section_of_pi(const ConcreteAlgebra& alg, const Ambient& y);

// Wedderburn decomposition of the concrete algebra.
struct WedderburnBlock {
  int m = 0;           // matrix size
  int multiplicity = 0;
  Ambient projection;  // minimal central projection
  std::vector<std::vector<Ambient>> e;  // matrix units e[i][j]
  CMatrix compress(const Ambient& d) const;  // coordinates in Mat_m
  Ambient lift(const CMatrix& mat) const;
};

struct Wedderburn {
  std::vector<WedderburnBlock> blocks;
};

Wedderburn wedderburn(const ConcreteAlgebra& alg, std::uint64_t seed = 0, double tol = 1e-8);

// Linear map between concrete algebras, stored in basis coordinates.
struct AlgebraMap {
  std::shared_ptr<const ConcreteAlgebra> src, dst;
  CMatrix coeff;  // dim(dst) x dim(src)

  Ambient apply(const Ambient& y, double* residual = nullptr) const;
};

// Build the coordinate matrix of an ambient-level map; the residual output is
// the worst membership defect of an image (large = map leaves the algebra).
AlgebraMap algebra_map(std::shared_ptr<const ConcreteAlgebra> src,
                       std::shared_ptr<const ConcreteAlgebra> dst,
                       const std::function<Ambient(const Ambient&)>& f, double* max_residual);

// Choi matrix of each compressed component Mat_{m_k} -> Mat_{m'_l} of phi,
// indexed [source block][dest block].
std::vector<std::vector<CMatrix>> choi_blocks(const AlgebraMap& phi, const Wedderburn& wsrc,
                                              const Wedderburn& wdst);

// Complete positivity through block Choi matrices in Wedderburn coordinates.
bool is_cp_on_algebra(const AlgebraMap& phi, const Wedderburn& wsrc, const Wedderburn& wdst,
                      double tol = 1e-9);
bool is_cp_on_algebra(const AlgebraMap& phi, std::uint64_t seed = 0, double tol = 1e-9);

}  // namespace fslab
