#include "fslab/correspondence.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fslab {
namespace {

CMatrix munit(std::size_t r, std::size_t c, std::size_t rows, std::size_t cols) {
  CMatrix m(rows, cols);
  m(r, c) = 1.0;
  return m;
}

// matrix unit from a column-stacking vec index
CMatrix unit_from_vec(int idx, std::size_t rows, std::size_t cols) {
  return munit(idx % rows, idx / rows, rows, cols);
}

CMatrix hconcat(const std::vector<CMatrix>& blocks) {
  if (blocks.empty()) return CMatrix();
  std::size_t cols = 0;
  for (const auto& b : blocks) cols += b.cols;
  CMatrix out(blocks.front().rows, cols);
  std::size_t at = 0;
  for (const auto& b : blocks) {
    set_block(out, 0, at, b);
    at += b.cols;
  }
  return out;
}

CMatrix col_of(const CMatrix& m, std::size_t j) { return get_block(m, 0, j, m.rows, 1); }

int unit_pos(const FiniteGroupoid& g, int x) {
  auto it = std::lower_bound(g.units.begin(), g.units.end(), x);
  if (it == g.units.end() || *it != x) throw std::invalid_argument("not a unit arrow");
  return static_cast<int>(it - g.units.begin());
}

int pos_in(const std::vector<int>& fibre, int g) {
  auto it = std::lower_bound(fibre.begin(), fibre.end(), g);
  if (it == fibre.end() || *it != g) throw std::invalid_argument("arrow not in fibre");
  return static_cast<int>(it - fibre.begin());
}

// permutation taking a (x) 1_{L k} to 1_L (x) a (x) 1_k
CMatrix kron_swap(int na, int k, int L) {
  CMatrix p(static_cast<std::size_t>(na) * k * L, static_cast<std::size_t>(na) * k * L);
  for (int a = 0; a < na; ++a)
    for (int l = 0; l < L; ++l)
      for (int j = 0; j < k; ++j)
        p(static_cast<std::size_t>(l) * na * k + a * k + j,
          static_cast<std::size_t>(a) * L * k + l * k + j) = 1.0;
  return p;
}

bool same_groupoid(const FiniteGroupoid& a, const FiniteGroupoid& b) {
  return a.n_arrows == b.n_arrows && a.units == b.units && a.src == b.src && a.rng == b.rng &&
         a.inv == b.inv && a.comp == b.comp;
}

CMatrix solve_onto(const CMatrix& span, const CMatrix& images) { return images * pinv(span); }

}  // namespace

CMatrix Correspondence::phi(int x, const CMatrix& a) const {
  return W[x] * kron(a, CMatrix::identity(k[x])) * W[x].adjoint();
}

CMatrix Correspondence::L(int g, const CMatrix& xi) const {
  return P[g] * xi * tgt->V[g].adjoint();
}

CMatrix Correspondence::L_inverse(int g, const CMatrix& xi) const {
  const int gi = src->G->inv[g];
  const int x = src->G->src[g];
  return phi(x, src->cocycle(gi, g).adjoint()) * (P[gi] * xi * tgt->V[gi].adjoint()) *
         tgt->cocycle(gi, g);
}

Correspondence identity_correspondence(std::shared_ptr<const Action> act) {
  Correspondence c;
  c.src = act;
  c.tgt = act;
  const int n = act->G->n_arrows;
  c.d = act->A.dim;
  c.k.assign(n, 1);
  c.W.resize(n);
  c.P.resize(n);
  for (int x : act->G->units) c.W[x] = CMatrix::identity(act->A.at(x));
  for (int g = 0; g < n; ++g) c.P[g] = act->V[g];
  return c;
}

Report validate_correspondence(const Correspondence& c, double tol) {
  Report rep;
  if (!c.src || !c.tgt) {
    rep.add("missing source or target action");
    return rep;
  }
  const FiniteGroupoid& G = *c.src->G;
  if (c.tgt->G != c.src->G && !same_groupoid(G, *c.tgt->G)) {
    rep.add("source and target actions live over different groupoids");
    return rep;
  }
  const std::size_t n = static_cast<std::size_t>(G.n_arrows);
  if (c.d.size() != n || c.k.size() != n || c.W.size() != n || c.P.size() != n) {
    rep.add("field sizes do not match the arrow count");
    return rep;
  }
  for (int x : G.units) {
    const int na = c.na(x), d = c.d[x], k = c.k[x];
    if (d <= 0 || k <= 0 || d != k * na)
      rep.add("fibre dimension at unit " + std::to_string(x) + " is not a multiple of the source fibre");
    if (c.W[x].rows != static_cast<std::size_t>(d) || !is_unitary(c.W[x], tol))
      rep.add("frame at unit " + std::to_string(x) + " is not unitary");
  }
  if (!rep.ok()) return rep;
  for (int g = 0; g < G.n_arrows; ++g) {
    if (c.d[G.rng[g]] != c.d[G.src[g]]) {
      rep.add("module dimension is not constant along the orbit of arrow " + std::to_string(g));
      return rep;
    }
    const std::size_t d = static_cast<std::size_t>(c.d[G.rng[g]]);
    if (c.P[g].rows != d || c.P[g].cols != d || !is_unitary(c.P[g], tol)) {
      rep.add("arrow unitary " + std::to_string(g) + " has wrong shape or is not unitary");
      continue;
    }
    if (G.is_unit(g) && !approx_equal(c.P[g], CMatrix::identity(d), 0.0))
      rep.add("arrow unitary at unit " + std::to_string(g) + " is not exactly the identity");
  }
  if (!rep.ok()) return rep;
  for (int g = 0; g < G.n_arrows; ++g) {
    const int xs = G.src[g], xr = G.rng[g], na = c.na(xs);
    double worst = 0.0;
    for (int p = 0; p < na; ++p)
      for (int q = 0; q < na; ++q) {
        const CMatrix e = munit(p, q, na, na);
        const CMatrix lhs = c.P[g] * c.phi(xs, e);
        const CMatrix rhs = c.phi(xr, c.src->alpha(g, e)) * c.P[g];
        worst = std::max(worst, (lhs - rhs).max_abs());
      }
    if (worst > tol)
      rep.add("left action is not equivariant at arrow " + std::to_string(g) + " (residual " +
              std::to_string(worst) + ")");
  }
  for (auto [g, h] : G.composable_pairs()) {
    const int gh = G.compose(g, h), xr = G.rng[g];
    const CMatrix lhs = kron((c.tgt->V[g] * c.tgt->V[h]).conj(), c.P[g] * c.P[h]);
    const CMatrix rhs = kron((c.tgt->cocycle(g, h) * c.tgt->V[gh]).conj(),
                             c.phi(xr, c.src->cocycle(g, h)) * c.P[gh]);
    if ((lhs - rhs).max_abs() > tol)
      rep.add("cocycle identity fails at the pair (" + std::to_string(g) + "," + std::to_string(h) + ")");
  }
  return rep;
}

GramRealization module_from_gram(const CMatrix& gram, int m, double rank_tol) {
  if (!gram.is_square() || m <= 0 || gram.rows % m != 0)
    throw std::invalid_argument("gram matrix shape does not match the coefficient size");
  CMatrix h = gram;
  const CMatrix ga = gram.adjoint();
  h += ga;
  h *= 0.5;
  const CMatrix r = psd_factor(h, rank_tol);
  GramRealization out;
  out.rho = static_cast<int>(r.rows);
  const std::size_t t = gram.rows / m;
  out.vectors.reserve(t);
  for (std::size_t i = 0; i < t; ++i)
    out.vectors.push_back(get_block(r, 0, i * m, r.rows, m));
  return out;
}

std::pair<int, CMatrix> normalize_left_action(const std::vector<CMatrix>& phi_units, int na,
                                              double tol) {
  if (phi_units.size() != static_cast<std::size_t>(na) * na)
    throw std::invalid_argument("expected one value per matrix unit");
  const std::size_t d = phi_units[0].rows;
  if (na <= 0 || d % na != 0)
    throw std::runtime_error("left action dimension is not a multiple of the fibre size");
  const int k = static_cast<int>(d) / na;
  CMatrix s(d, d);
  for (int p = 0; p < na; ++p) s += phi_units[static_cast<std::size_t>(p) * na + p];
  if (!approx_equal(s, CMatrix::identity(d), std::max(tol, 1e-8)))
    throw std::runtime_error("left action is not unital");
  CMatrix q = phi_units[0];
  q += q.adjoint();
  q *= 0.5;
  const EigResult eig = hermitian_eig(q);
  std::vector<CMatrix> w;
  for (std::size_t j = 0; j < d; ++j)
    if (eig.values[j] > 0.5) w.push_back(col_of(eig.vectors, j));
  if (static_cast<int>(w.size()) != k)
    throw std::runtime_error("left action corner has unexpected rank");
  CMatrix frame(d, d);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < k; ++j)
      set_block(frame, 0, static_cast<std::size_t>(i) * k + j,
                phi_units[static_cast<std::size_t>(i) * na] * w[j]);
  if (!is_unitary(frame, std::max(tol, 1e-8)))
    throw std::runtime_error("normalised frame is not unitary");
  const CMatrix ik = CMatrix::identity(k);
  for (int p = 0; p < na; ++p)
    for (int q2 = 0; q2 < na; ++q2) {
      const CMatrix got = frame * kron(munit(p, q2, na, na), ik) * frame.adjoint();
      if ((got - phi_units[static_cast<std::size_t>(p) * na + q2]).max_abs() > std::max(tol, 1e-8) * 10)
        throw std::runtime_error("left action is not an amplified matrix representation");
    }
  return {k, frame};
}

TensorData tensor(const Correspondence& e, const Correspondence& f, double tol) {
  if (e.tgt != f.src) throw std::invalid_argument("tensor factors do not share the middle action");
  const FiniteGroupoid& G = *e.src->G;
  TensorData td;
  td.c.src = e.src;
  td.c.tgt = f.tgt;
  const int n = G.n_arrows;
  td.c.d.assign(n, 0);
  td.c.k.assign(n, 0);
  td.c.W.resize(n);
  td.c.P.resize(n);
  td.emb.resize(n);

  std::vector<CMatrix> span_pinv(n);
  for (int x : G.units) {
    const int na = e.na(x), nb = e.nb(x), nc = f.nb(x);
    const int de = e.d[x], df = f.d[x];
    const int me = de * nb, mf = df * nc;
    const int t = me * mf;
    std::vector<CMatrix> phif(static_cast<std::size_t>(nb) * nb);
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b)
        phif[static_cast<std::size_t>(a) * nb + b] = f.phi(x, munit(a, b, nb, nb));
    CMatrix gram(static_cast<std::size_t>(t) * nc, static_cast<std::size_t>(t) * nc);
    for (int i = 0; i < me; ++i)
      for (int j = 0; j < mf; ++j)
        for (int i2 = 0; i2 < me; ++i2)
          for (int j2 = 0; j2 < mf; ++j2) {
            if (i % de != i2 % de) continue;
            const CMatrix& m = phif[static_cast<std::size_t>(i / de) * nb + i2 / de];
            const cd val = m(j % df, j2 % df);
            gram((static_cast<std::size_t>(i) * mf + j) * nc + j / df,
                 (static_cast<std::size_t>(i2) * mf + j2) * nc + j2 / df) = val;
          }
    const GramRealization gr = module_from_gram(gram, nc);
    const int rho = gr.rho;
    CMatrix emb(static_cast<std::size_t>(rho) * nc, t);
    std::vector<CMatrix> cols(t);
    for (int idx = 0; idx < t; ++idx) {
      const auto v = vec(gr.vectors[idx]);
      for (std::size_t r = 0; r < v.size(); ++r) emb(r, idx) = v[r];
      cols[idx] = gr.vectors[idx];
    }
    td.emb[x] = emb;
    const CMatrix span = hconcat(cols);
    span_pinv[x] = pinv(span);
    std::vector<CMatrix> phi_units(static_cast<std::size_t>(na) * na);
    for (int p = 0; p < na; ++p)
      for (int q = 0; q < na; ++q) {
        std::vector<CMatrix> imgs(t);
        for (int i = 0; i < me; ++i) {
          const CMatrix xi = e.phi(x, munit(p, q, na, na)) * unit_from_vec(i, de, nb);
          for (int j = 0; j < mf; ++j)
            imgs[static_cast<std::size_t>(i) * mf + j] =
                tensor_vector(td, x, xi, unit_from_vec(j, df, nc));
        }
        phi_units[static_cast<std::size_t>(p) * na + q] = hconcat(imgs) * span_pinv[x];
      }
    auto [kk, frame] = normalize_left_action(phi_units, na, tol);
    td.c.d[x] = rho;
    td.c.k[x] = kk;
    td.c.W[x] = frame;
  }
  for (int g = 0; g < n; ++g) {
    const int xs = G.src[g], xr = G.rng[g];
    const int rho = td.c.d[xr];
    if (G.is_unit(g)) {
      td.c.P[g] = CMatrix::identity(rho);
      continue;
    }
    const int nb = e.nb(xs), nc = f.nb(xs);
    const int de = e.d[xs], df = f.d[xs];
    const int me = de * nb, mf = df * nc;
    const CMatrix vg = f.tgt->V[g].adjoint();
    std::vector<CMatrix> dom(static_cast<std::size_t>(me) * mf), img(dom.size());
    for (int i = 0; i < me; ++i) {
      const CMatrix ei = unit_from_vec(i, de, nb);
      const CMatrix lei = e.L(g, ei);
      for (int j = 0; j < mf; ++j) {
        const CMatrix fj = unit_from_vec(j, df, nc);
        dom[static_cast<std::size_t>(i) * mf + j] = tensor_vector(td, xs, ei, fj) * vg;
        img[static_cast<std::size_t>(i) * mf + j] = tensor_vector(td, xr, lei, f.L(g, fj));
      }
    }
    td.c.P[g] = solve_onto(hconcat(dom), hconcat(img));
    if (!is_unitary(td.c.P[g], std::max(tol, 1e-8)))
      throw std::runtime_error("tensor arrow action is not unitary");
  }
  return td;
}

CMatrix tensor_vector(const TensorData& t, int x, const CMatrix& xi, const CMatrix& zeta) {
  const auto vx = vec(xi), vz = vec(zeta);
  CMatrix col(vx.size() * vz.size(), 1);
  for (std::size_t i = 0; i < vx.size(); ++i)
    for (std::size_t j = 0; j < vz.size(); ++j) col(i * vz.size() + j, 0) = vx[i] * vz[j];
  const CMatrix& emb = t.emb[x];
  CMatrix out(emb.rows, 1);
  for (std::size_t r = 0; r < emb.rows; ++r) {
    cd s = 0.0;
    for (std::size_t c2 = 0; c2 < emb.cols; ++c2) s += emb(r, c2) * col(c2, 0);
    out(r, 0) = s;
  }
  std::vector<cd> v(out.a.begin(), out.a.end());
  return unvec(v, emb.rows / zeta.cols, zeta.cols);
}

Correspondence direct_sum(const Correspondence& a, const Correspondence& b) {
  if (a.src != b.src || a.tgt != b.tgt)
    throw std::invalid_argument("direct sum needs matching actions");
  const FiniteGroupoid& G = *a.src->G;
  Correspondence c;
  c.src = a.src;
  c.tgt = a.tgt;
  const int n = G.n_arrows;
  c.d.assign(n, 0);
  c.k.assign(n, 0);
  c.W.resize(n);
  c.P.resize(n);
  for (int x : G.units) {
    const int na = a.na(x);
    std::vector<CMatrix> phi_units(static_cast<std::size_t>(na) * na);
    for (int p = 0; p < na; ++p)
      for (int q = 0; q < na; ++q) {
        const CMatrix e = munit(p, q, na, na);
        phi_units[static_cast<std::size_t>(p) * na + q] =
            direct_sum(std::vector<CMatrix>{a.phi(x, e), b.phi(x, e)});
      }
    auto [kk, frame] = normalize_left_action(phi_units, na);
    c.d[x] = a.d[x] + b.d[x];
    c.k[x] = kk;
    c.W[x] = frame;
  }
  for (int g = 0; g < n; ++g)
    c.P[g] = direct_sum(std::vector<CMatrix>{a.P[g], b.P[g]});
  return c;
}

Correspondence amplify(const Correspondence& e, int n) {
  if (n <= 0) throw std::invalid_argument("amplification needs a positive count");
  const FiniteGroupoid& G = *e.src->G;
  Correspondence c;
  c.src = e.src;
  c.tgt = e.tgt;
  const int na_arrows = G.n_arrows;
  c.d.assign(na_arrows, 0);
  c.k.assign(na_arrows, 0);
  c.W.resize(na_arrows);
  c.P.resize(na_arrows);
  const CMatrix in = CMatrix::identity(n);
  for (int x : G.units) {
    c.d[x] = n * e.d[x];
    c.k[x] = n * e.k[x];
    c.W[x] = kron(in, e.W[x]) * kron_swap(e.na(x), e.k[x], n);
  }
  for (int g = 0; g < na_arrows; ++g) c.P[g] = kron(in, e.P[g]);
  return c;
}

Correspondence regularize(const Correspondence& e) {
  const FiniteGroupoid& G = *e.src->G;
  Correspondence c;
  c.src = e.src;
  c.tgt = e.tgt;
  const int n = G.n_arrows;
  c.d.assign(n, 0);
  c.k.assign(n, 0);
  c.W.resize(n);
  c.P.resize(n);
  for (int x : G.units) {
    const int l = static_cast<int>(G.fibre_s(x).size());
    c.d[x] = l * e.d[x];
    c.k[x] = l * e.k[x];
    c.W[x] = kron(CMatrix::identity(l), e.W[x]) * kron_swap(e.na(x), e.k[x], l);
  }
  for (int g = 0; g < n; ++g) {
    const auto rows = G.fibre_s(G.rng[g]);
    const auto cols = G.fibre_s(G.src[g]);
    const std::size_t d = static_cast<std::size_t>(e.d[G.rng[g]]);
    CMatrix p(rows.size() * d, cols.size() * d);
    for (std::size_t tp = 0; tp < rows.size(); ++tp) {
      const int h = G.compose(rows[tp], g);
      set_block(p, tp * d, static_cast<std::size_t>(pos_in(cols, h)) * d, e.P[g]);
    }
    c.P[g] = p;
  }
  return c;
}

ESection stack_section(const Correspondence& e, const ESection& xi) {
  const FiniteGroupoid& G = *e.src->G;
  ESection out(G.n_arrows);
  for (int x : G.units) {
    const auto fib = G.fibre_s(x);
    const std::size_t d = static_cast<std::size_t>(e.d[x]);
    const std::size_t nb = static_cast<std::size_t>(e.nb(x));
    CMatrix m(fib.size() * d, nb);
    for (std::size_t tp = 0; tp < fib.size(); ++tp)
      if (xi[fib[tp]].rows == d && xi[fib[tp]].cols == nb) set_block(m, tp * d, 0, xi[fib[tp]]);
    out[x] = m;
  }
  return out;
}

CMatrix pi_e_block(const Correspondence& e, int x, const Section& a) {
  const FiniteGroupoid& G = *e.src->G;
  const auto fib = G.fibre_s(x);
  const std::size_t d = static_cast<std::size_t>(e.d[x]);
  CMatrix out(fib.size() * d, fib.size() * d);
  for (std::size_t gp = 0; gp < fib.size(); ++gp)
    for (std::size_t hp = 0; hp < fib.size(); ++hp) {
      const int g = fib[gp], h = fib[hp];
      const int k = G.compose(g, G.inv[h]);
      const CMatrix y = a[k] * e.src->cocycle(k, h);
      set_block(out, gp * d, hp * d, e.phi(x, e.src->alpha_inv(g, y)));
    }
  return out;
}

namespace {

Absorption absorb_common(const Correspondence& e, const Correspondence& factor, bool right,
                         double tol) {
  Absorption out;
  out.lhs = right ? tensor(e, factor, tol) : tensor(factor, e, tol);
  out.rhs = regularize(e);
  const FiniteGroupoid& G = *e.src->G;
  out.gamma.resize(G.n_arrows);
  for (int x : G.units) {
    const auto fib = G.fibre_s(x);
    const std::size_t l = fib.size();
    const int na = e.na(x), nb = e.nb(x), de = e.d[x];
    const int m1 = right ? de * nb : static_cast<int>(l) * na * na;
    const int m2 = right ? static_cast<int>(l) * nb * nb : de * nb;
    std::vector<CMatrix> dom(static_cast<std::size_t>(m1) * m2), img(dom.size());
    for (int i = 0; i < m1; ++i)
      for (int j = 0; j < m2; ++j) {
        CMatrix stacked(l * de, nb);
        if (right) {
          const CMatrix ei = unit_from_vec(i, de, nb);
          const CMatrix bj = unit_from_vec(j, static_cast<int>(l) * nb, nb);
          for (std::size_t tp = 0; tp < l; ++tp)
            set_block(stacked, tp * de, 0, ei * get_block(bj, tp * nb, 0, nb, nb));
          dom[static_cast<std::size_t>(i) * m2 + j] =
              tensor_vector(out.lhs, x, ei, bj);
        } else {
          const CMatrix ai = unit_from_vec(i, static_cast<int>(l) * na, na);
          const CMatrix ej = unit_from_vec(j, de, nb);
          for (std::size_t tp = 0; tp < l; ++tp)
            set_block(stacked, tp * de, 0, e.phi(x, get_block(ai, tp * na, 0, na, na)) * ej);
          dom[static_cast<std::size_t>(i) * m2 + j] = tensor_vector(out.lhs, x, ai, ej);
        }
        img[static_cast<std::size_t>(i) * m2 + j] = stacked;
      }
    out.gamma[x] = solve_onto(hconcat(dom), hconcat(img));
    if (!is_unitary(out.gamma[x], std::max(tol, 1e-8)))
      throw std::runtime_error("absorption unitary failed at unit " + std::to_string(x));
  }
  return out;
}

}  // namespace

Absorption absorb_regular_right(const Correspondence& e, double tol) {
  return absorb_common(e, regularize(identity_correspondence(e.tgt)), true, tol);
}

Absorption absorb_regular_left(const Correspondence& e, double tol) {
  return absorb_common(e, regularize(identity_correspondence(e.src)), false, tol);
}

FellAbsorption fell_absorption(std::shared_ptr<const Correspondence> e_, double tol) {
  const Correspondence& e = *e_;
  const FiniteGroupoid& G = *e.src->G;
  FellAbsorption fa;
  fa.e = e_;
  fa.rho.resize(G.units.size());
  fa.span.resize(G.units.size());
  fa.w.resize(G.units.size());
  for (std::size_t ui = 0; ui < G.units.size(); ++ui) {
    const int x = G.units[ui];
    const auto fib = G.fibre_s(x);
    const std::size_t l = fib.size();
    const int nb = e.nb(x), d = e.d[x];
    const int me = d * nb, mc = nb * nb;
    const int t = static_cast<int>(l) * me * mc;
    std::vector<std::vector<CMatrix>> binv(l);
    for (std::size_t tp = 0; tp < l; ++tp) {
      binv[tp].resize(static_cast<std::size_t>(nb) * nb);
      for (int a = 0; a < nb; ++a)
        for (int b = 0; b < nb; ++b)
          binv[tp][static_cast<std::size_t>(a) * nb + b] =
              e.tgt->alpha_inv(fib[tp], munit(a, b, nb, nb));
    }
    CMatrix gram(static_cast<std::size_t>(t) * nb, static_cast<std::size_t>(t) * nb);
    for (std::size_t tp = 0; tp < l; ++tp)
      for (int ei = 0; ei < me; ++ei)
        for (int ci = 0; ci < mc; ++ci)
          for (int ej = 0; ej < me; ++ej)
            for (int cj = 0; cj < mc; ++cj) {
              if (ei % d != ej % d) continue;
              const CMatrix& xm = binv[tp][static_cast<std::size_t>(ei / d) * nb + ej / d];
              const std::size_t l1 = (tp * me + ei) * mc + ci;
              const std::size_t l2 = (tp * me + ej) * mc + cj;
              gram(l1 * nb + ci / nb, l2 * nb + cj / nb) = xm(ci % nb, cj % nb);
            }
    const GramRealization gr = module_from_gram(gram, nb);
    fa.rho[ui] = gr.rho;
    fa.span[ui] = gr.vectors;
    std::vector<CMatrix> img(t);
    for (std::size_t tp = 0; tp < l; ++tp)
      for (int ei = 0; ei < me; ++ei)
        for (int ci = 0; ci < mc; ++ci) {
          CMatrix stacked(l * d, static_cast<std::size_t>(nb));
          const CMatrix value =
              e.L_inverse(fib[tp], unit_from_vec(ei, d, nb)) * unit_from_vec(ci, nb, nb);
          set_block(stacked, tp * d, 0, value);
          img[(tp * me + ei) * mc + ci] = stacked;
        }
    fa.w[ui] = solve_onto(hconcat(gr.vectors), hconcat(img));
    if (!is_unitary(fa.w[ui], std::max(tol, 1e-8)))
      throw std::runtime_error("fell absorption unitary failed at unit " + std::to_string(x));
  }
  return fa;
}

CMatrix fell_domain_vector(const FellAbsorption& fa, int x, const ESection& xi, const CMatrix& b) {
  const Correspondence& e = *fa.e;
  const FiniteGroupoid& G = *e.src->G;
  const std::size_t ui = static_cast<std::size_t>(unit_pos(G, x));
  const auto fib = G.fibre_s(x);
  const int nb = e.nb(x), d = e.d[x];
  const int me = d * nb, mc = nb * nb;
  CMatrix out(fa.rho[ui], static_cast<std::size_t>(nb));
  for (std::size_t tp = 0; tp < fib.size(); ++tp) {
    const int rt = G.rng[fib[tp]];
    if (xi[rt].rows == 0) continue;
    const CMatrix bslot = get_block(b, tp * nb, 0, nb, nb);
    for (int ei = 0; ei < me; ++ei) {
      const cd ce = xi[rt](ei % d, ei / d);
      if (ce == cd(0.0)) continue;
      for (int ci = 0; ci < mc; ++ci) {
        const cd cc = bslot(ci % nb, ci / nb);
        if (cc == cd(0.0)) continue;
        CMatrix term = fa.span[ui][(tp * me + ei) * mc + ci];
        term *= ce * cc;
        out += term;
      }
    }
  }
  return out;
}

double fell_conjugation_residual(const FellAbsorption& fa, int f, const CMatrix& a,
                                 const ESection& xi, int x, const CMatrix& b) {
  const Correspondence& e = *fa.e;
  const FiniteGroupoid& G = *e.src->G;
  const std::size_t ui = static_cast<std::size_t>(unit_pos(G, x));
  const CMatrix dom = fell_domain_vector(fa, x, xi, b);
  const CMatrix upstairs = pi_e_block(e, x, delta_section(*e.src, f, a)) * (fa.w[ui] * dom);
  const CMatrix lhs = fa.w[ui].adjoint() * upstairs;

  ESection xi2(G.n_arrows);
  const int rf = G.rng[f], sf = G.src[f];
  const std::size_t d = static_cast<std::size_t>(e.d[rf]);
  const std::size_t nb = static_cast<std::size_t>(e.nb(rf));
  if (xi[sf].rows != 0)
    xi2[rf] = e.phi(rf, a) * e.L(f, xi[sf]);
  else
    xi2[rf] = CMatrix(d, nb);
  const CMatrix pb =
      regular_block(*e.tgt, x, delta_section(*e.tgt, f, CMatrix::identity(e.nb(rf)))) * b;
  const CMatrix rhs = fell_domain_vector(fa, x, xi2, pb);
  return (lhs - rhs).max_abs();
}

CMatrix Rep::apply_section(const Section& a) const {
  CMatrix out(dim(), dim());
  for (std::size_t i = 0; i < alg->basis.size(); ++i) {
    const auto& be = alg->basis[i];
    const cd c = a[be.g](be.p, be.q);
    if (c == cd(0.0)) continue;
    CMatrix term = image[i];
    term *= c;
    out += term;
  }
  return out;
}

CMatrix Rep::apply_delta(int g, const CMatrix& a) const {
  return apply_section(delta_section(*alg->act, g, a));
}

Rep regular_rep(std::shared_ptr<const ConcreteAlgebra> alg) {
  Rep r;
  r.alg = alg;
  r.image.reserve(alg->basis_blocks.size());
  for (const auto& amb : alg->basis_blocks) r.image.push_back(direct_sum(amb));
  return r;
}

Rep random_rep(std::shared_ptr<const ConcreteAlgebra> alg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Wedderburn wd = wedderburn(*alg, seed);
  std::vector<int> mult(wd.blocks.size());
  std::size_t n = 0;
  for (std::size_t k = 0; k < wd.blocks.size(); ++k) {
    mult[k] = 1 + static_cast<int>(rng() % 2);
    n += static_cast<std::size_t>(wd.blocks[k].m) * mult[k];
  }
  const CMatrix uconj = random_unitary(rng, n);
  Rep r;
  r.alg = alg;
  r.image.reserve(alg->basis_blocks.size());
  for (const auto& amb : alg->basis_blocks) {
    std::vector<CMatrix> parts;
    parts.reserve(wd.blocks.size());
    for (std::size_t k = 0; k < wd.blocks.size(); ++k)
      parts.push_back(kron(wd.blocks[k].compress(amb), CMatrix::identity(mult[k])));
    r.image.push_back(uconj * direct_sum(parts) * uconj.adjoint());
  }
  return r;
}

Report validate_rep(const Rep& r, double tol) {
  Report rep;
  if (!r.alg || r.image.size() != r.alg->basis.size()) {
    rep.add("representation has no algebra or wrong image count");
    return rep;
  }
  const Action& act = *r.alg->act;
  const std::size_t n = r.dim();
  if ((r.apply_section(unit_section(act)) - CMatrix::identity(n)).max_abs() > tol)
    rep.add("representation is not unital");
  std::mt19937_64 rng(99);
  for (int round = 0; round < 4; ++round) {
    Section a(act.G->n_arrows), b(act.G->n_arrows);
    for (int g = 0; g < act.G->n_arrows; ++g) {
      a[g] = random_matrix(rng, act.fibre_dim(g), act.fibre_dim(g));
      b[g] = random_matrix(rng, act.fibre_dim(g), act.fibre_dim(g));
    }
    const CMatrix xa = r.apply_section(a), xb = r.apply_section(b);
    const double scale = 1.0 + xa.max_abs() * xb.max_abs();
    if ((r.apply_section(convolve(act, a, b)) - xa * xb).max_abs() > tol * scale)
      rep.add("representation is not multiplicative");
    if ((r.apply_section(star(act, a)) - xa.adjoint()).max_abs() > tol * (1.0 + xa.max_abs()))
      rep.add("representation does not respect the involution");
    if (!rep.ok()) break;
  }
  return rep;
}

int Induced::label_base(int unit_index) const {
  const FiniteGroupoid& G = *e->src->G;
  int base = 0;
  for (int i = 0; i < unit_index; ++i) {
    const int x = G.units[i];
    base += e->d[x] * e->nb(x) * psi.dim();
  }
  return base;
}

CMatrix Induced::vector_of(const ESection& xi, const CMatrix& eta) const {
  const FiniteGroupoid& G = *e->src->G;
  CMatrix out(rho, 1);
  int base = 0;
  const int nh = psi.dim();
  for (int x : G.units) {
    const int d = e->d[x], nb = e->nb(x);
    if (xi[x].rows != 0) {
      for (int ei = 0; ei < d * nb; ++ei) {
        const cd ce = xi[x](ei % d, ei / d);
        if (ce == cd(0.0)) continue;
        for (int h = 0; h < nh; ++h) {
          const cd ch = eta(h, 0);
          if (ch == cd(0.0)) continue;
          const std::size_t lab = static_cast<std::size_t>(base + ei * nh + h);
          for (std::size_t r = 0; r < static_cast<std::size_t>(rho); ++r)
            out(r, 0) += ce * ch * span(r, lab);
        }
      }
    }
    base += d * nb * nh;
  }
  return out;
}

CMatrix Induced::generator(int v, const CMatrix& a) const {
  const FiniteGroupoid& G = *e->src->G;
  const int xs = G.src[v], xr = G.rng[v];
  const int nh = psi.dim();
  CMatrix img(rho, span.cols);
  const CMatrix psv = psi.apply_delta(v, CMatrix::identity(e->nb(xr)));
  const CMatrix phia = e->phi(xr, a);
  int base = 0;
  for (int x : G.units) {
    const int d = e->d[x], nb = e->nb(x);
    if (x == xs) {
      for (int ei = 0; ei < d * nb; ++ei) {
        ESection xi2(G.n_arrows);
        xi2[xr] = phia * e->L(v, unit_from_vec(ei, d, nb));
        for (int h = 0; h < nh; ++h) {
          const CMatrix colv = vector_of(xi2, col_of(psv, h));
          for (std::size_t r = 0; r < static_cast<std::size_t>(rho); ++r)
            img(r, static_cast<std::size_t>(base + ei * nh + h)) = colv(r, 0);
        }
      }
    }
    base += d * nb * nh;
  }
  return img * span_pinv;
}

CMatrix Induced::apply_algebra(const Section& a) const {
  CMatrix out(rho, rho);
  for (int g = 0; g < e->src->G->n_arrows; ++g) out += generator(g, a[g]);
  return out;
}

Induced induce(std::shared_ptr<const Correspondence> e_, Rep psi, double tol) {
  const Correspondence& e = *e_;
  const FiniteGroupoid& G = *e.src->G;
  if (psi.alg->act != e.tgt)
    throw std::invalid_argument("representation does not act on the target algebra");
  Induced ind;
  ind.e = e_;
  const int nh = psi.dim();
  int t = 0;
  for (int x : G.units) t += e.d[x] * e.nb(x) * nh;
  CMatrix gram(t, t);
  int base = 0;
  for (int x : G.units) {
    const int d = e.d[x], nb = e.nb(x);
    std::vector<CMatrix> ps(static_cast<std::size_t>(nb) * nb);
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b)
        ps[static_cast<std::size_t>(a) * nb + b] = psi.apply_delta(x, munit(a, b, nb, nb));
    for (int ei = 0; ei < d * nb; ++ei)
      for (int ej = 0; ej < d * nb; ++ej) {
        if (ei % d != ej % d) continue;
        const CMatrix& m = ps[static_cast<std::size_t>(ei / d) * nb + ej / d];
        for (int h = 0; h < nh; ++h)
          for (int h2 = 0; h2 < nh; ++h2)
            gram(static_cast<std::size_t>(base + ei * nh + h),
                 static_cast<std::size_t>(base + ej * nh + h2)) = m(h, h2);
      }
    base += d * nb * nh;
  }
  const GramRealization gr = module_from_gram(gram, 1, std::min(tol, 1e-9));
  ind.rho = gr.rho;
  ind.span = hconcat(gr.vectors);
  ind.span_pinv = pinv(ind.span);
  ind.psi = std::move(psi);
  return ind;
}

CMatrix AbsorptionII::pi_tensor(int v, const CMatrix& a) const {
  const Correspondence& e0 = *base;
  const FiniteGroupoid& G = *e0.src->G;
  const int nh = ind.psi.dim();
  CMatrix img(ind.rho, ind.span.cols);
  int off = 0;
  for (int x : G.units) {
    const auto fib = G.fibre_s(x);
    const int d = e0.d[x], nb = e0.nb(x);
    const int ld = static_cast<int>(fib.size()) * d;
    for (std::size_t tp = 0; tp < fib.size(); ++tp) {
      const int tarr = fib[tp];
      if (!G.composable(v, tarr)) continue;
      const int vt = G.compose(v, tarr);
      const CMatrix coeff =
          e0.phi(x, e0.src->alpha_inv(vt, a * e0.src->cocycle(v, tarr)));
      const std::size_t vt_pos = static_cast<std::size_t>(pos_in(fib, vt));
      for (int re = 0; re < d; ++re)
        for (int ce = 0; ce < nb; ++ce) {
          CMatrix stacked(static_cast<std::size_t>(ld), static_cast<std::size_t>(nb));
          set_block(stacked, vt_pos * d, 0, coeff * munit(re, ce, d, nb));
          ESection sec(G.n_arrows);
          sec[x] = stacked;
          const int eidx = ce * ld + static_cast<int>(tp) * d + re;
          for (int h = 0; h < nh; ++h) {
            CMatrix eta(nh, 1);
            eta(h, 0) = 1.0;
            const CMatrix colv = ind.vector_of(sec, eta);
            for (std::size_t r = 0; r < static_cast<std::size_t>(ind.rho); ++r)
              img(r, static_cast<std::size_t>(off + eidx * nh + h)) = colv(r, 0);
          }
        }
    }
    off += ld * nb * nh;
  }
  return img * ind.span_pinv;
}

CMatrix AbsorptionII::pi_tensor_section(const Section& a) const {
  CMatrix out(ind.rho, ind.rho);
  for (int g = 0; g < base->src->G->n_arrows; ++g) out += pi_tensor(g, a[g]);
  return out;
}

AbsorptionII fell_absorption_ii(std::shared_ptr<const Correspondence> e0, Rep psi, double tol) {
  AbsorptionII out;
  out.base = e0;
  out.reg = std::make_shared<const Correspondence>(regularize(*e0));
  out.ind = induce(out.reg, std::move(psi), tol);
  const Correspondence& e = *e0;
  const FiniteGroupoid& G = *e.src->G;
  const int nh = out.ind.psi.dim();
  CMatrix img(out.ind.rho, out.ind.span.cols);
  int off = 0;
  for (int x : G.units) {
    const auto fib = G.fibre_s(x);
    const int d = e.d[x], nb = e.nb(x);
    const int ld = static_cast<int>(fib.size()) * d;
    for (std::size_t tp = 0; tp < fib.size(); ++tp) {
      const int tarr = fib[tp];
      const int ti = G.inv[tarr];
      const int rt = G.rng[tarr];
      const auto fib_r = G.fibre_s(rt);
      const std::size_t ti_pos = static_cast<std::size_t>(pos_in(fib_r, ti));
      const int nbr = e.nb(rt);
      const CMatrix vstar = out.ind.psi.apply_delta(ti, CMatrix::identity(e.nb(G.rng[ti]))).adjoint();
      for (int re = 0; re < d; ++re)
        for (int ce = 0; ce < nb; ++ce) {
          const CMatrix value = e.L_inverse(ti, munit(re, ce, d, nb));
          CMatrix stacked(fib_r.size() * static_cast<std::size_t>(d), static_cast<std::size_t>(nbr));
          set_block(stacked, ti_pos * d, 0, value);
          ESection sec(G.n_arrows);
          sec[rt] = stacked;
          const int eidx = ce * ld + static_cast<int>(tp) * d + re;
          for (int h = 0; h < nh; ++h) {
            const CMatrix colv = out.ind.vector_of(sec, col_of(vstar, h));
            for (std::size_t r = 0; r < static_cast<std::size_t>(out.ind.rho); ++r)
              img(r, static_cast<std::size_t>(off + eidx * nh + h)) = colv(r, 0);
          }
        }
    }
    off += ld * nb * nh;
  }
  out.w = img * out.ind.span_pinv;
  if (!is_unitary(out.w, std::max(tol, 1e-8)))
    throw std::runtime_error("absorption unitary is not unitary");
  return out;
}

}  // namespace fslab
