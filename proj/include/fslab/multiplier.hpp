#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "fslab/correspondence.hpp"

namespace fslab {

// Multiplier between two twisted actions over the same groupoid: a field of
// linear maps T_g : A_{r(g)} -> B_{r(g)}, stored as (nB^2) x (nA^2) matrices
// acting on column-stacked fibre elements. (m_T a)(g) = T_g(a(g)).
struct Multiplier {
  std::shared_ptr<const Action> src;  // (alpha, u_alpha)
  std::shared_ptr<const Action> dst;  // (beta, u_beta)
  std::vector<CMatrix> T;             // per arrow

  CMatrix apply(int g, const CMatrix& a) const;
};

Multiplier zero_multiplier(std::shared_ptr<const Action> src, std::shared_ptr<const Action> dst);
Multiplier identity_multiplier(std::shared_ptr<const Action> act);

Report validate_multiplier(const Multiplier& m);

// arrows g with T_g nonzero (max-abs above tol)
std::vector<int> support(const Multiplier& m, double tol = 0.0);

Section apply_multiplier(const Multiplier& m, const Section& a);

// T^dagger_g(a) = (T_{g^{-1}}(a^star))^star, stars taken in the Fell bundles
Multiplier dagger(const Multiplier& m);

// fibrewise composition s_g . t_g (s after t; middle actions must coincide)
Multiplier compose(const Multiplier& s, const Multiplier& t);

// Presentation of a multiplier by a correspondence and two unit sections
// (entries at unit arrows, xi[x] in Mat_{d_x x nB_x}).
struct FSPresentation {
  std::shared_ptr<const Correspondence> e;
  ESection xi, zeta;
};

Report validate_presentation(const FSPresentation& p, double tol = 1e-9);

// T_g(a) = xi(r(g))^* phi_{r(g)}(a) P_g zeta(s(g)) V^beta_g^*
Multiplier fs_coefficient(const FSPresentation& p);

// Fourier coefficient of arrow-indexed sections (xi[t] in E_{s(t)}):
// T_g(a) = sum_{t in G_{r(g)}} xi[t]^* phi_{r(g)}(a) P_g zeta[t g] V^beta_g^*.
// Internally asserted to agree with the FS coefficient of the regularized
// presentation with stacked sections; disagreement throws std::logic_error.
Multiplier fourier_coefficient(std::shared_ptr<const Correspondence> e, const ESection& xi,
                               const ESection& zeta);

// T_g(a) = sum_{h in G^{r(g)}} xi(h)^* a alpha_g(zeta(g^{-1}h))
Multiplier exel_multiplier(std::shared_ptr<const Action> act, const Section& xi,
                           const Section& zeta);

// scalar multiplier T_g = phi(g) id on A_{r(g)}
Multiplier herz_schur(std::shared_ptr<const Action> act, const std::vector<cd>& phi);

// per unit x: PSD-ness of [phi(g_i g_j^{-1})] over g_i, g_j in G_x
bool is_positive_type(const FiniteGroupoid& g, const std::vector<cd>& phi, double tol = 1e-9);

// kernel block for g, h with r(g) = r(h) and k = g^{-1}h:
// c |-> beta_g(T_k(alpha_g^{-1}(c u_alpha(g,k)^*))) u_beta(g,k), as an
// (nB^2) x (nA^2) matrix on vectorized coordinates
CMatrix pd_kernel_block(const Multiplier& m, int g, int h);

// true iff for every unit x the block matrix [Choi(k_x(g,h))]_{g,h in G^x}
// is PSD within tol
bool is_positive_definite(const Multiplier& m, double tol = 1e-9);

// Dilation of a positive-definite multiplier to a presentation with xi = zeta;
// fibre ranks are recorded in the correspondence dimensions. Throws
// std::invalid_argument if m is not positive-definite and std::runtime_error
// if the reconstructed arrow unitaries fail the unitarity check after a retry
// with a tightened rank tolerance.
FSPresentation dilate(const Multiplier& m, double tol = 1e-9);

enum class FsMode { positive_definite, general };

// positive-definite mode: max over units of op_norm(T_x(1)) (throws on
// non-PD input); general mode: midpoint of the dec_norm bracket
double fs_norm(const Multiplier& m, FsMode mode = FsMode::positive_definite, double tol = 1e-9);

struct DecResult {
  double lo = 0.0, hi = 0.0;  // bracket: lo infeasible (or 0), hi feasible
  bool converged = true;      // false when a feasibility run was inconclusive
  double residual = 0.0;      // last feasibility residual
  double value() const { return 0.5 * (lo + hi); }
};

// Decomposable norm: inf of max(|Phi_1(1)|, |Phi_2(1)|) over completely
// positive completions [[Phi_1, m_T],[m_T^dagger, Phi_2]], computed by
// bisection with a Dykstra PSD/affine feasibility subproblem on Choi blocks
// in Wedderburn coordinates.
DecResult dec_norm(const Multiplier& m, double tol_bisect = 1e-4, double tol_feas = 1e-7,
                   int max_iter = 4000, std::uint64_t seed = 0);

// matrix of m_T in the pi-bases of the two crossed algebras
AlgebraMap as_algebra_map(const Multiplier& m, std::shared_ptr<const ConcreteAlgebra> src_alg,
                          std::shared_ptr<const ConcreteAlgebra> dst_alg);

// multiplier recovered from a linear map between the crossed algebras:
// T_g(a) = Phi(pi(a delta_g)) read back at the fibre over g. Throws
// std::invalid_argument when the image leaves the target algebra.
Multiplier haagerup(const AlgebraMap& phi);

// T_k = fs_coefficient with section zeta + i^k xi in both slots, so that
// T = 1/4 sum_k i^k T_k reproduces fs_coefficient(p)
std::array<Multiplier, 4> polarize(const FSPresentation& p);

}  // namespace fslab
