#include "fslab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fslab {

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix m(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(j, i) = std::conj((*this)(i, j));
  return m;
}

CMatrix CMatrix::transpose() const {
  CMatrix m(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(j, i) = (*this)(i, j);
  return m;
}

CMatrix CMatrix::conj() const {
  CMatrix m(rows, cols);
  for (std::size_t i = 0; i < a.size(); ++i) m.a[i] = std::conj(a[i]);
  return m;
}

cd CMatrix::trace() const {
  cd t = 0.0;
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::fro_norm() const {
  double s = 0.0;
  for (const cd& z : a) s += std::norm(z);
  return std::sqrt(s);
}

double CMatrix::max_abs() const {
  double s = 0.0;
  for (const cd& z : a) s = std::max(s, std::abs(z));
  return s;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (!same_shape(o)) throw std::invalid_argument("matrix shape mismatch in +");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (!same_shape(o)) throw std::invalid_argument("matrix shape mismatch in -");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cd s) {
  for (cd& z : a) z *= s;
  return *this;
}

CMatrix operator+(CMatrix l, const CMatrix& r) { return l += r; }
CMatrix operator-(CMatrix l, const CMatrix& r) { return l -= r; }

CMatrix operator*(const CMatrix& l, const CMatrix& r) {
  if (l.cols != r.rows) throw std::invalid_argument("matrix shape mismatch in *");
  CMatrix m(l.rows, r.cols);
  for (std::size_t i = 0; i < l.rows; ++i)
    for (std::size_t k = 0; k < l.cols; ++k) {
      const cd v = l(i, k);
      if (v == cd{}) continue;
      for (std::size_t j = 0; j < r.cols; ++j) m(i, j) += v * r(k, j);
    }
  return m;
}

CMatrix operator*(cd s, CMatrix m) { return m *= s; }

bool approx_equal(const CMatrix& x, const CMatrix& y, double tol) {
  if (!x.same_shape(y)) return false;
  CMatrix d = x;
  d -= y;
  return d.max_abs() <= tol;
}

std::vector<cd> vec(const CMatrix& m) {
  std::vector<cd> v(m.rows * m.cols);
  for (std::size_t j = 0; j < m.cols; ++j)
    for (std::size_t i = 0; i < m.rows; ++i) v[j * m.rows + i] = m(i, j);
  return v;
}

CMatrix unvec(const std::vector<cd>& v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("unvec size mismatch");
  CMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[j * rows + i];
  return m;
}

CMatrix kron(const CMatrix& x, const CMatrix& y) {
  CMatrix m(x.rows * y.rows, x.cols * y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      const cd v = x(i, j);
      if (v == cd{}) continue;
      for (std::size_t k = 0; k < y.rows; ++k)
        for (std::size_t l = 0; l < y.cols; ++l)
          m(i * y.rows + k, j * y.cols + l) = v * y(k, l);
    }
  return m;
}

CMatrix direct_sum(const std::vector<CMatrix>& blocks) {
  std::size_t r = 0, c = 0;
  for (const CMatrix& b : blocks) r += b.rows, c += b.cols;
  CMatrix m(r, c);
  std::size_t i0 = 0, j0 = 0;
  for (const CMatrix& b : blocks) {
    set_block(m, i0, j0, b);
    i0 += b.rows;
    j0 += b.cols;
  }
  return m;
}

CMatrix get_block(const CMatrix& m, std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) {
  CMatrix b(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) b(i, j) = m(i0 + i, j0 + j);
  return b;
}

void set_block(CMatrix& m, std::size_t i0, std::size_t j0, const CMatrix& b) {
  for (std::size_t i = 0; i < b.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) m(i0 + i, j0 + j) = b(i, j);
}

CMatrix left_mult_op(const CMatrix& a, std::size_t cols) {
  return kron(CMatrix::identity(cols), a);
}

CMatrix right_mult_op(const CMatrix& b, std::size_t rows) {
  return kron(b.transpose(), CMatrix::identity(rows));
}

CMatrix conj_op(const CMatrix& v, const CMatrix& w) {
  return kron(w.conj(), v);  // X -> v X w*, since (w*)^T = conj(w)
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (!m.is_square()) return false;
  const double scale = 1.0 + m.max_abs();
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = i; j < m.cols; ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol * scale) return false;
  return true;
}

EigResult hermitian_eig(const CMatrix& m0) {
  if (!m0.is_square()) throw std::invalid_argument("hermitian_eig: matrix not square");
  if (!is_hermitian(m0, 1e-9)) throw std::invalid_argument("hermitian_eig: matrix not Hermitian");
  const std::size_t n = m0.rows;
  // work on the Hermitian average to kill rounding asymmetry
  CMatrix A(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(i, j) = 0.5 * (m0(i, j) + std::conj(m0(j, i)));
  CMatrix U = CMatrix::identity(n);

  if (n > 1) {
    const double scale = 1.0 + A.fro_norm();
    for (int sweep = 0; sweep < 100; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * std::norm(A(p, q));
      if (std::sqrt(off) <= 1e-14 * scale) break;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
          const cd apq = A(p, q);
          const double absb = std::abs(apq);
          if (absb <= 1e-300) continue;
          const cd phase = apq / absb;  // e^{i phi}
          const double alpha = A(p, p).real(), gamma = A(q, q).real();
          const double theta = (gamma - alpha) / (2.0 * absb);
          double t;
          if (theta >= 0)
            t = 1.0 / (theta + std::sqrt(1.0 + theta * theta));
          else
            t = -1.0 / (-theta + std::sqrt(1.0 + theta * theta));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = t * c;
          // A <- J^* A J with J = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on (p,q)
          for (std::size_t k = 0; k < n; ++k) {
            const cd rp = A(p, k), rq = A(q, k);
            A(p, k) = c * rp - s * phase * rq;
            A(q, k) = s * std::conj(phase) * rp + c * rq;
          }
          for (std::size_t k = 0; k < n; ++k) {
            const cd cp = A(k, p), cq = A(k, q);
            A(k, p) = c * cp - s * std::conj(phase) * cq;
            A(k, q) = s * phase * cp + c * cq;
            const cd up = U(k, p), uq = U(k, q);
            U(k, p) = c * up - s * std::conj(phase) * uq;
            U(k, q) = s * phase * up + c * uq;
          }
        }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return A(i, i).real() < A(j, j).real(); });
  EigResult res;
  res.values.resize(n);
  res.vectors = CMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    res.values[j] = A(order[j], order[j]).real();
    for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = U(i, order[j]);
  }
  return res;
}

bool is_psd(const CMatrix& m, double tol) {
  if (!m.is_square()) return false;
  const double scale = 1.0 + m.max_abs();
  if (!is_hermitian(m, tol)) return false;
  EigResult e = hermitian_eig(m);
  return e.values.empty() || e.values.front() >= -tol * scale;
}

bool is_unitary(const CMatrix& m, double tol) {
  if (!m.is_square()) return false;
  CMatrix d = m.adjoint() * m;
  d -= CMatrix::identity(m.rows);
  return d.max_abs() <= tol;
}

bool is_scalar(const CMatrix& m, double tol) {
  if (!m.is_square() || m.rows == 0) return false;
  const cd mean = m.trace() / static_cast<double>(m.rows);
  CMatrix d = m;
  d -= mean * CMatrix::identity(m.rows);
  return d.max_abs() <= tol * (1.0 + m.max_abs());
}

double op_norm(const CMatrix& m) {
  if (m.rows == 0 || m.cols == 0) return 0.0;
  const CMatrix g = (m.rows <= m.cols) ? m * m.adjoint() : m.adjoint() * m;
  EigResult e = hermitian_eig(g);
  const double top = e.values.empty() ? 0.0 : e.values.back();
  return top <= 0.0 ? 0.0 : std::sqrt(top);
}

CMatrix psd_factor(const CMatrix& m, double rank_tol) {
  if (!m.is_square()) throw std::invalid_argument("psd_factor: matrix not square");
  EigResult e = hermitian_eig(m);
  const double lmax = e.values.empty() ? 0.0 : std::max(0.0, e.values.back());
  const double cut = rank_tol * (1.0 + lmax);
  if (!e.values.empty() && e.values.front() < -std::max(cut, 1e-8 * (1.0 + lmax)))
    throw std::invalid_argument("psd_factor: matrix has negative eigenvalues");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < e.values.size(); ++i)
    if (e.values[i] > cut) keep.push_back(i);
  CMatrix r(keep.size(), m.cols);
  for (std::size_t t = 0; t < keep.size(); ++t) {
    const double s = std::sqrt(e.values[keep[t]]);
    for (std::size_t j = 0; j < m.cols; ++j)
      r(t, j) = s * std::conj(e.vectors(j, keep[t]));  // row t of diag(sqrt l) U*
  }
  return r;
}

CMatrix project_psd(const CMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("project_psd: matrix not square");
  const std::size_t n = m.rows;
  CMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  EigResult e = hermitian_eig(h);
  CMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (e.values[k] <= 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) += e.values[k] * e.vectors(i, k) * std::conj(e.vectors(j, k));
  }
  return out;
}

CMatrix choi_of_map(const CMatrix& l, std::size_t n, std::size_t m) {
  if (l.rows != m * m || l.cols != n * n)
    throw std::invalid_argument("choi_of_map: map matrix has wrong shape");
  CMatrix c(n * m, n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // image of E_ij; vec(E_ij) is the (j*n+i)-th standard basis vector
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t q = 0; q < m; ++q)
          c(i * m + k, j * m + q) = l(q * m + k, j * n + i);
    }
  return c;
}

CMatrix map_of_choi(const CMatrix& c, std::size_t n, std::size_t m) {
  if (c.rows != n * m || c.cols != n * m)
    throw std::invalid_argument("map_of_choi: Choi matrix has wrong shape");
  CMatrix l(m * m, n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t q = 0; q < m; ++q)
          l(q * m + k, j * n + i) = c(i * m + k, j * m + q);
  return l;
}

CMatrix pinv(const CMatrix& a, double rtol) {
  // a^+ = V S^+ V^* a^*  with a^*a = V S V^*
  const CMatrix g = a.adjoint() * a;
  EigResult e = hermitian_eig(g);
  const double lmax = e.values.empty() ? 0.0 : std::max(0.0, e.values.back());
  CMatrix vsv(a.cols, a.cols);
  for (std::size_t k = 0; k < e.values.size(); ++k) {
    if (e.values[k] <= rtol * (1.0 + lmax)) continue;
    const double inv = 1.0 / e.values[k];
    for (std::size_t i = 0; i < a.cols; ++i)
      for (std::size_t j = 0; j < a.cols; ++j)
        vsv(i, j) += inv * e.vectors(i, k) * std::conj(e.vectors(j, k));
  }
  return vsv * a.adjoint();
}

CMatrix lstsq(const CMatrix& a, const CMatrix& b, double rtol) {
  if (a.rows != b.rows) throw std::invalid_argument("lstsq: row mismatch");
  return pinv(a, rtol) * b;
}

CMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> dist(0.0, 1.0);
  CMatrix m(r, c);
  for (cd& z : m.a) {
    const double re = dist(rng), im = dist(rng);
    z = cd(re, im);
  }
  return m;
}

CMatrix random_hermitian(std::mt19937_64& rng, std::size_t n) {
  CMatrix m = random_matrix(rng, n, n);
  CMatrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  return h;
}

CMatrix random_unitary(std::mt19937_64& rng, std::size_t n) {
  // exp-free route: eigenvectors of a random Hermitian matrix form a Haar-ish unitary
  return hermitian_eig(random_hermitian(rng, n)).vectors;
}

}  // namespace fslab
