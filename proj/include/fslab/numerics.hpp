#pragma once

#include <complex>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

namespace fslab {

using cd = std::complex<double>;

// Dense complex matrix, row-major.
struct CMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<cd> a;

  CMatrix() = default;
  CMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

  static CMatrix identity(std::size_t n);
  static CMatrix zero(std::size_t r, std::size_t c) { return CMatrix(r, c); }

  cd& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const cd& operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  bool same_shape(const CMatrix& o) const { return rows == o.rows && cols == o.cols; }
  bool is_square() const { return rows == cols; }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix conj() const;
  cd trace() const;
  double fro_norm() const;
  double max_abs() const;

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cd s);
};

CMatrix operator+(CMatrix l, const CMatrix& r);
CMatrix operator-(CMatrix l, const CMatrix& r);
CMatrix operator*(const CMatrix& l, const CMatrix& r);
CMatrix operator*(cd s, CMatrix m);

bool approx_equal(const CMatrix& x, const CMatrix& y, double tol);

// Column-stacking vectorisation; vec(AXB) = kron(B^T, A) vec(X).
std::vector<cd> vec(const CMatrix& m);
CMatrix unvec(const std::vector<cd>& v, std::size_t rows, std::size_t cols);
CMatrix kron(const CMatrix& x, const CMatrix& y);
CMatrix direct_sum(const std::vector<CMatrix>& blocks);
CMatrix get_block(const CMatrix& m, std::size_t i0, std::size_t j0, std::size_t r, std::size_t c);
void set_block(CMatrix& m, std::size_t i0, std::size_t j0, const CMatrix& b);

// as operators on vectorised matrices
CMatrix left_mult_op(const CMatrix& a, std::size_t cols);   // X -> aX on r x cols
CMatrix right_mult_op(const CMatrix& b, std::size_t rows);  // X -> Xb on rows x r
CMatrix conj_op(const CMatrix& v, const CMatrix& w);        // X -> vXw*

struct EigResult {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // unitary, columns are eigenvectors
};

// Cyclic Jacobi for Hermitian matrices. Deterministic; throws on
// non-Hermitian input. Reconstruction error stays below 1e-10 * (1 + |M|).
EigResult hermitian_eig(const CMatrix& m);

bool is_hermitian(const CMatrix& m, double tol = 1e-10);
bool is_psd(const CMatrix& m, double tol = 1e-9);
bool is_unitary(const CMatrix& m, double tol = 1e-9);
bool is_scalar(const CMatrix& m, double tol = 1e-9);

// operator norm (largest singular value), relative accuracy ~1e-10
double op_norm(const CMatrix& m);

// Rank-revealing factorisation M = R* R of a PSD matrix; R has rank(M) rows.
// Eigenvalues below rank_tol * (1 + lambda_max) are treated as zero; a
// genuinely negative spectrum raises std::invalid_argument.
CMatrix psd_factor(const CMatrix& m, double rank_tol = 1e-9);

// nearest PSD matrix (Hermitian part, negative eigenvalues clipped)
CMatrix project_psd(const CMatrix& m);

// Choi matrix of the map vec-matrix L : Mat_n -> Mat_m (L is m^2 x n^2).
CMatrix choi_of_map(const CMatrix& l, std::size_t n, std::size_t m);
CMatrix map_of_choi(const CMatrix& c, std::size_t n, std::size_t m);

// least squares: X minimising |AX - B|_F via spectral pseudo-inverse of A*A
CMatrix lstsq(const CMatrix& a, const CMatrix& b, double rtol = 1e-12);
CMatrix pinv(const CMatrix& a, double rtol = 1e-12);

// seeded random matrices (complex standard normal entries)
CMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c);
CMatrix random_hermitian(std::mt19937_64& rng, std::size_t n);
CMatrix random_unitary(std::mt19937_64& rng, std::size_t n);

}  // namespace fslab
