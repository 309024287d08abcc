#include "fslab/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fslab {

namespace {

CMatrix basis_unit(int n, int j) {
  CMatrix a(n, n);
  a(j % n, j / n) = 1.0;
  return a;
}

CMatrix apply_vec_op(const CMatrix& op, const CMatrix& a, std::size_t rows, std::size_t cols) {
  const auto v = vec(a);
  if (op.cols != v.size()) throw std::invalid_argument("vec operator: shape mismatch");
  std::vector<cd> w(op.rows);
  for (std::size_t r = 0; r < op.rows; ++r) {
    cd s = 0.0;
    for (std::size_t c = 0; c < op.cols; ++c) s += op(r, c) * v[c];
    w[r] = s;
  }
  return unvec(w, rows, cols);
}

void require_actions(const Multiplier& m) {
  if (!m.src || !m.dst) throw std::invalid_argument("multiplier: missing action");
  if (m.src->G.get() != m.dst->G.get())
    throw std::invalid_argument("multiplier: actions live over different groupoids");
}

}  // namespace

CMatrix Multiplier::apply(int g, const CMatrix& a) const {
  const int na = src->fibre_dim(g), nb = dst->fibre_dim(g);
  if (a.rows != static_cast<std::size_t>(na) || a.cols != static_cast<std::size_t>(na))
    throw std::invalid_argument("multiplier apply: fibre shape mismatch");
  return apply_vec_op(T[g], a, nb, nb);
}

Multiplier zero_multiplier(std::shared_ptr<const Action> src, std::shared_ptr<const Action> dst) {
  Multiplier m{std::move(src), std::move(dst), {}};
  require_actions(m);
  const int n = m.src->G->n_arrows;
  m.T.reserve(n);
  for (int g = 0; g < n; ++g) {
    const int na = m.src->fibre_dim(g), nb = m.dst->fibre_dim(g);
    m.T.push_back(CMatrix::zero(static_cast<std::size_t>(nb) * nb, static_cast<std::size_t>(na) * na));
  }
  return m;
}

Multiplier identity_multiplier(std::shared_ptr<const Action> act) {
  Multiplier m{act, act, {}};
  require_actions(m);
  const int n = m.src->G->n_arrows;
  m.T.reserve(n);
  for (int g = 0; g < n; ++g) {
    const int na = m.src->fibre_dim(g);
    m.T.push_back(CMatrix::identity(static_cast<std::size_t>(na) * na));
  }
  return m;
}

Report validate_multiplier(const Multiplier& m) {
  Report rep;
  if (!m.src || !m.dst) {
    rep.add("missing source or target action");
    return rep;
  }
  if (m.src->G.get() != m.dst->G.get()) rep.add("source and target groupoids differ");
  const int n = m.src->G->n_arrows;
  if (static_cast<int>(m.T.size()) != n) {
    rep.add("T has " + std::to_string(m.T.size()) + " entries, expected " + std::to_string(n));
    return rep;
  }
  for (int g = 0; g < n; ++g) {
    const std::size_t na = m.src->fibre_dim(g), nb = m.dst->fibre_dim(g);
    if (m.T[g].rows != nb * nb || m.T[g].cols != na * na)
      rep.add("T[" + std::to_string(g) + "] has wrong shape");
  }
  return rep;
}

std::vector<int> support(const Multiplier& m, double tol) {
  std::vector<int> out;
  for (int g = 0; g < static_cast<int>(m.T.size()); ++g)
    if (m.T[g].max_abs() > tol) out.push_back(g);
  return out;
}

Section apply_multiplier(const Multiplier& m, const Section& a) {
  Section out(a.size());
  for (int g = 0; g < static_cast<int>(a.size()); ++g) out[g] = m.apply(g, a[g]);
  return out;
}

Multiplier dagger(const Multiplier& m) {
  require_actions(m);
  const FiniteGroupoid& G = *m.src->G;
  Multiplier d{m.src, m.dst, std::vector<CMatrix>(G.n_arrows)};
  for (int g = 0; g < G.n_arrows; ++g) {
    const int gi = G.inverse(g);
    const int na = m.src->fibre_dim(g), nb = m.dst->fibre_dim(g);
    const int nbi = m.dst->fibre_dim(gi);
    CMatrix t(static_cast<std::size_t>(nb) * nb, static_cast<std::size_t>(na) * na);
    for (int j = 0; j < na * na; ++j) {
      const CMatrix as = fell_star(*m.src, basis_unit(na, j), g);
      const CMatrix b = apply_vec_op(m.T[gi], as, nbi, nbi);
      const CMatrix bs = fell_star(*m.dst, b, gi);
      const auto v = vec(bs);
      for (std::size_t r = 0; r < v.size(); ++r) t(r, j) = v[r];
    }
    d.T[g] = std::move(t);
  }
  return d;
}

Multiplier compose(const Multiplier& s, const Multiplier& t) {
  require_actions(s);
  require_actions(t);
  if (s.src.get() != t.dst.get()) throw std::invalid_argument("compose: middle actions differ");
  Multiplier out{t.src, s.dst, std::vector<CMatrix>(s.T.size())};
  for (std::size_t g = 0; g < s.T.size(); ++g) out.T[g] = s.T[g] * t.T[g];
  return out;
}

Report validate_presentation(const FSPresentation& p, double tol) {
  Report rep;
  if (!p.e) {
    rep.add("missing correspondence");
    return rep;
  }
  rep = validate_correspondence(*p.e, tol);
  const FiniteGroupoid& G = *p.e->src->G;
  if (static_cast<int>(p.xi.size()) != G.n_arrows || static_cast<int>(p.zeta.size()) != G.n_arrows)
    rep.add("sections are not indexed by arrows");
  else
    for (int x : G.units) {
      const std::size_t d = p.e->d_at(x), nb = p.e->nb(x);
      if (p.xi[x].rows != d || p.xi[x].cols != nb)
        rep.add("xi has wrong shape at unit " + std::to_string(x));
      if (p.zeta[x].rows != d || p.zeta[x].cols != nb)
        rep.add("zeta has wrong shape at unit " + std::to_string(x));
    }
  return rep;
}

Multiplier fs_coefficient(const FSPresentation& p) {
  const Correspondence& e = *p.e;
  const FiniteGroupoid& G = *e.src->G;
  Multiplier m{e.src, e.tgt, std::vector<CMatrix>(G.n_arrows)};
  for (int g = 0; g < G.n_arrows; ++g) {
    const int x = G.rng[g], y = G.src[g];
    const int na = e.na(x), nb = e.nb(x);
    const CMatrix xa = p.xi[x].adjoint();
    const CMatrix rest = e.P[g] * p.zeta[y] * e.tgt->V[g].adjoint();
    CMatrix t(static_cast<std::size_t>(nb) * nb, static_cast<std::size_t>(na) * na);
    for (int j = 0; j < na * na; ++j) {
      const CMatrix val = xa * e.phi(x, basis_unit(na, j)) * rest;
      const auto v = vec(val);
      for (std::size_t r = 0; r < v.size(); ++r) t(r, j) = v[r];
    }
    m.T[g] = std::move(t);
  }
  return m;
}

Multiplier fourier_coefficient(std::shared_ptr<const Correspondence> e, const ESection& xi,
                               const ESection& zeta) {
  const Correspondence& c = *e;
  const FiniteGroupoid& G = *c.src->G;
  Multiplier m{c.src, c.tgt, std::vector<CMatrix>(G.n_arrows)};
  for (int g = 0; g < G.n_arrows; ++g) {
    const int x = G.rng[g];
    const int na = c.na(x), nb = c.nb(x);
    const CMatrix vb = c.tgt->V[g].adjoint();
    CMatrix t(static_cast<std::size_t>(nb) * nb, static_cast<std::size_t>(na) * na);
    for (int j = 0; j < na * na; ++j) {
      CMatrix val(nb, nb);
      const CMatrix pa = c.phi(x, basis_unit(na, j));
      for (int tt : G.fibre_s(x)) {
        const int tg = G.compose(tt, g);
        val += xi[tt].adjoint() * pa * c.P[g] * zeta[tg] * vb;
      }
      const auto v = vec(val);
      for (std::size_t r = 0; r < v.size(); ++r) t(r, j) = v[r];
    }
    m.T[g] = std::move(t);
  }

  FSPresentation reg;
  reg.e = std::make_shared<Correspondence>(regularize(c));
  reg.xi = stack_section(c, xi);
  reg.zeta = stack_section(c, zeta);
  const Multiplier check = fs_coefficient(reg);
  for (int g = 0; g < G.n_arrows; ++g) {
    const double scale = 1.0 + m.T[g].max_abs();
    if ((m.T[g] - check.T[g]).max_abs() > 1e-10 * scale)
      throw std::logic_error("fourier_coefficient: regularized presentation disagrees");
  }
  return m;
}

Multiplier exel_multiplier(std::shared_ptr<const Action> act, const Section& xi,
                           const Section& zeta) {
  const FiniteGroupoid& G = *act->G;
  Multiplier m{act, act, std::vector<CMatrix>(G.n_arrows)};
  for (int g = 0; g < G.n_arrows; ++g) {
    const int x = G.rng[g], gi = G.inverse(g);
    const int na = act->A.at(x);
    CMatrix t(static_cast<std::size_t>(na) * na, static_cast<std::size_t>(na) * na);
    for (int j = 0; j < na * na; ++j) {
      const CMatrix a = basis_unit(na, j);
      CMatrix val(na, na);
      for (int h : G.fibre_r(x)) val += xi[h].adjoint() * a * act->alpha(g, zeta[G.compose(gi, h)]);
      const auto v = vec(val);
      for (std::size_t r = 0; r < v.size(); ++r) t(r, j) = v[r];
    }
    m.T[g] = std::move(t);
  }
  return m;
}

Multiplier herz_schur(std::shared_ptr<const Action> act, const std::vector<cd>& phi) {
  const FiniteGroupoid& G = *act->G;
  if (static_cast<int>(phi.size()) != G.n_arrows)
    throw std::invalid_argument("herz_schur: phi is not indexed by arrows");
  Multiplier m{act, act, std::vector<CMatrix>(G.n_arrows)};
  for (int g = 0; g < G.n_arrows; ++g) {
    const int na = act->fibre_dim(g);
    m.T[g] = phi[g] * CMatrix::identity(static_cast<std::size_t>(na) * na);
  }
  return m;
}

bool is_positive_type(const FiniteGroupoid& g, const std::vector<cd>& phi, double tol) {
  if (static_cast<int>(phi.size()) != g.n_arrows)
    throw std::invalid_argument("is_positive_type: phi is not indexed by arrows");
  for (int x : g.units) {
    const auto fs = g.fibre_s(x);
    CMatrix k(fs.size(), fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
      for (std::size_t j = 0; j < fs.size(); ++j)
        k(i, j) = phi[g.compose(fs[i], g.inverse(fs[j]))];
    if (!is_psd(k, tol)) return false;
  }
  return true;
}

CMatrix pd_kernel_block(const Multiplier& m, int g, int h) {
  const FiniteGroupoid& G = *m.src->G;
  if (G.rng[g] != G.rng[h]) throw std::invalid_argument("pd_kernel_block: ranges differ");
  const int k = G.compose(G.inverse(g), h);
  const int na = m.src->fibre_dim(g), nb = m.dst->fibre_dim(g);
  const CMatrix& ua = m.src->cocycle(g, k);
  const CMatrix& ub = m.dst->cocycle(g, k);
  const CMatrix& va = m.src->V[g];
  const CMatrix& vb = m.dst->V[g];
  return kron(ub.transpose(), CMatrix::identity(nb)) * kron(vb.conj(), vb) * m.T[k] *
         kron(va.transpose(), va.adjoint()) * kron(ua.conj(), CMatrix::identity(na));
}

bool is_positive_definite(const Multiplier& m, double tol) {
  require_actions(m);
  const FiniteGroupoid& G = *m.src->G;
  for (int x : G.units) {
    const auto fr = G.fibre_r(x);
    const std::size_t blk = static_cast<std::size_t>(m.src->A.at(x)) * m.dst->A.at(x);
    CMatrix big(fr.size() * blk, fr.size() * blk);
    for (std::size_t i = 0; i < fr.size(); ++i)
      for (std::size_t j = 0; j < fr.size(); ++j) {
        const CMatrix c =
            choi_of_map(pd_kernel_block(m, fr[i], fr[j]), m.src->A.at(x), m.dst->A.at(x));
        set_block(big, i * blk, j * blk, c);
      }
    if (!is_psd(big, tol)) return false;
  }
  return true;
}

namespace {

struct DilationRetry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

FSPresentation dilate_attempt(const Multiplier& m, double tol, double rank_tol) {
  const FiniteGroupoid& G = *m.src->G;
  const double unit_tol = std::max(1e-7, 100.0 * tol);

  auto corr = std::make_shared<Correspondence>();
  Correspondence& e = *corr;
  e.src = m.src;
  e.tgt = m.dst;
  e.d.assign(G.n_arrows, 0);
  e.k.assign(G.n_arrows, 0);
  e.W.assign(G.n_arrows, CMatrix());
  e.P.assign(G.n_arrows, CMatrix());
  ESection xi(G.n_arrows);

  std::vector<CMatrix> factor(G.n_arrows);               // R_x at units
  std::vector<CMatrix> factor_pinv(G.n_arrows);          // pinv(R_x)
  std::vector<std::vector<CMatrix>> xicols(G.n_arrows);  // per unit, per position in G^x

  for (int x : G.units) {
    const auto fr = G.fibre_r(x);
    const int na = m.src->A.at(x), nb = m.dst->A.at(x);
    const int nsq = na * na;
    const auto lab = [&](std::size_t ti, int p, int q) {
      return (ti * nsq + p) * nb + q;
    };
    const std::size_t nlab = fr.size() * nsq * nb;
    CMatrix gram(nlab, nlab);
    for (std::size_t i = 0; i < fr.size(); ++i)
      for (std::size_t j = 0; j < fr.size(); ++j) {
        const CMatrix km = pd_kernel_block(m, fr[i], fr[j]);
        for (int p = 0; p < nsq; ++p)
          for (int pp = 0; pp < nsq; ++pp) {
            if (p % na != pp % na) continue;
            const int col = (pp / na) * na + (p / na);  // vec(E_{p/na, pp/na})
            for (int q = 0; q < nb; ++q)
              for (int qq = 0; qq < nb; ++qq)
                gram(lab(i, p, q), lab(j, pp, qq)) = km(qq * nb + q, col);
          }
      }
    gram = 0.5 * (gram + gram.adjoint());
    const CMatrix R = psd_factor(gram, rank_tol);
    const int rho = static_cast<int>(R.rows);
    if (rho == 0 || rho % na != 0) throw DilationRetry("degenerate localized fibre");

    // section at x: column q of xi(x) is the vector of (x, sum_a E_aa, q)
    std::size_t tx = 0;
    while (fr[tx] != x) ++tx;
    CMatrix xx(rho, nb);
    for (int q = 0; q < nb; ++q)
      for (int a = 0; a < na; ++a)
        for (int r = 0; r < rho; ++r) xx(r, q) += R(r, lab(tx, a + a * na, q));
    xi[x] = std::move(xx);

    // stacked module vectors of L_t(xi) per t in G^x
    std::vector<CMatrix> cols(fr.size());
    for (std::size_t ti = 0; ti < fr.size(); ++ti) {
      CMatrix mc(rho, nb);
      for (int q = 0; q < nb; ++q)
        for (int a = 0; a < na; ++a)
          for (int r = 0; r < rho; ++r) mc(r, q) += R(r, lab(ti, a + a * na, q));
      cols[ti] = std::move(mc);
    }
    xicols[x] = std::move(cols);

    // left action on the localized space, read off the spanning columns
    const CMatrix rp = pinv(R);
    std::vector<CMatrix> phi_units(nsq);
    for (int r = 0; r < na; ++r)
      for (int s = 0; s < na; ++s) {
        CMatrix im(rho, nlab);
        for (std::size_t ti = 0; ti < fr.size(); ++ti)
          for (int p = 0; p < nsq; ++p) {
            if (p % na != s) continue;
            const int pim = r + (p / na) * na;
            for (int q = 0; q < nb; ++q) {
              const std::size_t cdst = lab(ti, p, q), csrc = lab(ti, pim, q);
              for (int rr = 0; rr < rho; ++rr) im(rr, cdst) = R(rr, csrc);
            }
          }
        phi_units[r * na + s] = im * rp;
      }
    std::pair<int, CMatrix> nf;
    try {
      nf = normalize_left_action(phi_units, na, std::max(1e-8, 10.0 * tol));
    } catch (const std::exception& ex) {
      throw DilationRetry(std::string("left action: ") + ex.what());
    }
    e.d[x] = rho;
    e.k[x] = nf.first;
    e.W[x] = nf.second;
    e.P[x] = CMatrix::identity(rho);
    factor[x] = R;
    factor_pinv[x] = rp;
  }

  for (int g = 0; g < G.n_arrows; ++g) {
    if (G.is_unit(g)) continue;
    const int x = G.rng[g], y = G.src[g];
    const auto fry = G.fibre_r(y);
    const auto frx = G.fibre_r(x);
    const int na = m.src->A.at(y), nb = m.dst->A.at(y);
    const int nsq = na * na;
    const int rho_x = e.d[x], rho_y = e.d[y];
    if (rho_x != rho_y) throw DilationRetry("localized ranks differ along an orbit");
    CMatrix images(rho_x, fry.size() * nsq * nb);
    for (std::size_t i = 0; i < fry.size(); ++i) {
      const int h = fry[i];
      const int gh = G.compose(g, h);
      std::size_t ti = 0;
      while (frx[ti] != gh) ++ti;
      const CMatrix b = m.dst->cocycle(g, h).adjoint() * m.dst->V[g];
      for (int p = 0; p < nsq; ++p) {
        const CMatrix a = m.src->alpha(g, basis_unit(na, p)) * m.src->cocycle(g, h);
        const CMatrix blockq = e.phi(x, a) * xicols[x][ti] * b;
        set_block(images, 0, (i * nsq + p) * nb, blockq);
      }
    }
    CMatrix p = images * factor_pinv[y];
    if (!is_unitary(p, unit_tol)) throw DilationRetry("reconstructed arrow map not unitary");
    e.P[g] = std::move(p);
  }

  FSPresentation out;
  out.e = corr;
  out.xi = xi;
  out.zeta = std::move(xi);
  return out;
}

}  // namespace

FSPresentation dilate(const Multiplier& m, double tol) {
  require_actions(m);
  if (!is_positive_definite(m, tol))
    throw std::invalid_argument("dilate: multiplier is not positive-definite");
  try {
    return dilate_attempt(m, tol, 1e-9);
  } catch (const DilationRetry&) {
    try {
      return dilate_attempt(m, tol, 1e-11);
    } catch (const DilationRetry& ex) {
      throw std::runtime_error(std::string("dilate: ") + ex.what());
    }
  }
}

double fs_norm(const Multiplier& m, FsMode mode, double tol) {
  require_actions(m);
  if (mode == FsMode::general) return dec_norm(m).value();
  if (!is_positive_definite(m, tol))
    throw std::invalid_argument("fs_norm: multiplier is not positive-definite");
  double best = 0.0;
  for (int x : m.src->G->units)
    best = std::max(best, op_norm(m.apply(x, CMatrix::identity(m.src->A.at(x)))));
  return best;
}

namespace {

// partial trace over the first tensor leg of size mk
CMatrix trace_first(const CMatrix& x, int mk, int ml) {
  CMatrix out(ml, ml);
  for (int i = 0; i < mk; ++i)
    for (int q = 0; q < ml; ++q)
      for (int qq = 0; qq < ml; ++qq)
        out(q, qq) += x(static_cast<std::size_t>(i) * ml + q, static_cast<std::size_t>(i) * ml + qq);
  return out;
}

}  // namespace

DecResult dec_norm(const Multiplier& m, double tol_bisect, double tol_feas, int max_iter,
                   std::uint64_t seed) {
  require_actions(m);
  auto src_alg = std::make_shared<ConcreteAlgebra>(crossed_algebra(m.src));
  auto dst_alg = std::make_shared<ConcreteAlgebra>(crossed_algebra(m.dst));
  const AlgebraMap phi = as_algebra_map(m, src_alg, dst_alg);
  const Wedderburn ws = wedderburn(*src_alg, seed);
  const Wedderburn wd = wedderburn(*dst_alg, seed + 1);
  const auto F = choi_blocks(phi, ws, wd);
  const int nk = static_cast<int>(ws.blocks.size()), nl = static_cast<int>(wd.blocks.size());

  double hi = 0.0, fscale = 0.0;
  for (int l = 0; l < nl; ++l) {
    double s = 0.0;
    for (int k = 0; k < nk; ++k) s += ws.blocks[k].m * op_norm(F[k][l]);
    hi = std::max(hi, s);
  }
  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < nl; ++l) fscale += F[k][l].fro_norm() * F[k][l].fro_norm();
  fscale = std::sqrt(fscale);
  if (hi <= tol_bisect) return {0.0, hi, true, 0.0};

  // variables: per (k,l) the 2x2-block completion matrix, plus two slacks per l
  std::vector<CMatrix> mv(nk * nl);
  std::vector<CMatrix> sv(2 * nl);
  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < nl; ++l) {
      const std::size_t b = static_cast<std::size_t>(ws.blocks[k].m) * wd.blocks[l].m;
      CMatrix mm(2 * b, 2 * b);
      set_block(mm, 0, b, F[k][l]);
      set_block(mm, b, 0, F[k][l].adjoint());
      const double c = op_norm(F[k][l]);
      for (std::size_t r = 0; r < b; ++r) {
        mm(r, r) = c;
        mm(b + r, b + r) = c;
      }
      mv[k * nl + l] = std::move(mm);
    }
  for (int i = 0; i < 2; ++i)
    for (int l = 0; l < nl; ++l) sv[i * nl + l] = CMatrix::zero(wd.blocks[l].m, wd.blocks[l].m);

  double mk_sum = 0.0;
  for (int k = 0; k < nk; ++k) mk_sum += ws.blocks[k].m;
  const double corr = 1.0 / (1.0 + mk_sum);

  const auto project_affine = [&](std::vector<CMatrix>& mmv, std::vector<CMatrix>& ssv, double t) {
    for (int k = 0; k < nk; ++k)
      for (int l = 0; l < nl; ++l) {
        const std::size_t b = static_cast<std::size_t>(ws.blocks[k].m) * wd.blocks[l].m;
        set_block(mmv[k * nl + l], 0, b, F[k][l]);
        set_block(mmv[k * nl + l], b, 0, F[k][l].adjoint());
      }
    for (int i = 0; i < 2; ++i)
      for (int l = 0; l < nl; ++l) {
        const int ml = wd.blocks[l].m;
        CMatrix r = ssv[i * nl + l] - t * CMatrix::identity(ml);
        for (int k = 0; k < nk; ++k) {
          const int mk = ws.blocks[k].m;
          const std::size_t b = static_cast<std::size_t>(mk) * ml;
          const std::size_t off = (i == 0) ? 0 : b;
          r += trace_first(get_block(mmv[k * nl + l], off, off, b, b), mk, ml);
        }
        const CMatrix kr = (-corr) * r;
        for (int k = 0; k < nk; ++k) {
          const int mk = ws.blocks[k].m;
          const std::size_t b = static_cast<std::size_t>(mk) * ml;
          CMatrix& mm = mmv[k * nl + l];
          const std::size_t off = (i == 0) ? 0 : b;
          CMatrix x = get_block(mm, off, off, b, b);
          x += kron(CMatrix::identity(mk), kr);
          set_block(mm, off, off, x);
        }
        ssv[i * nl + l] += kr;
      }
  };

  // feasibility of the affine/PSD intersection at level t: 1 yes, 0 no, -1 unclear
  double last_res = 0.0;
  const auto feasible = [&](double t) {
    std::vector<CMatrix> pm(mv.size()), ps(sv.size());
    for (std::size_t i = 0; i < mv.size(); ++i) pm[i] = CMatrix::zero(mv[i].rows, mv[i].cols);
    for (std::size_t i = 0; i < sv.size(); ++i) ps[i] = CMatrix::zero(sv[i].rows, sv[i].cols);
    const double scale = 1.0 + fscale + std::abs(t);
    double res = 0.0, res_half = 0.0;
    const int half = std::max(1, max_iter / 2);
    for (int it = 0; it < max_iter; ++it) {
      std::vector<CMatrix> ym(mv.size()), ys(sv.size());
      for (std::size_t i = 0; i < mv.size(); ++i) {
        ym[i] = project_psd(mv[i] + pm[i]);
        pm[i] = mv[i] + pm[i] - ym[i];
      }
      for (std::size_t i = 0; i < sv.size(); ++i) {
        ys[i] = project_psd(sv[i] + ps[i]);
        ps[i] = sv[i] + ps[i] - ys[i];
      }
      mv = ym;
      sv = ys;
      project_affine(mv, sv, t);
      double d2 = 0.0;
      for (std::size_t i = 0; i < mv.size(); ++i) {
        const double d = (mv[i] - ym[i]).fro_norm();
        d2 += d * d;
      }
      for (std::size_t i = 0; i < sv.size(); ++i) {
        const double d = (sv[i] - ys[i]).fro_norm();
        d2 += d * d;
      }
      res = std::sqrt(d2) / scale;
      if (res < tol_feas) {
        last_res = res;
        return 1;
      }
      if (it == half) res_half = res;
    }
    last_res = res;
    return res > 0.9 * res_half ? 0 : -1;
  };

  double lo = 0.0;
  bool conv = true;
  while (hi - lo > tol_bisect) {
    const double t = 0.5 * (lo + hi);
    const int r = feasible(t);
    if (r == 1)
      hi = t;
    else if (r == 0)
      lo = t;
    else {
      conv = false;
      break;
    }
  }
  return {lo, hi, conv, last_res};
}

AlgebraMap as_algebra_map(const Multiplier& m, std::shared_ptr<const ConcreteAlgebra> src_alg,
                          std::shared_ptr<const ConcreteAlgebra> dst_alg) {
  require_actions(m);
  if (src_alg->act.get() != m.src.get() || dst_alg->act.get() != m.dst.get())
    throw std::invalid_argument("as_algebra_map: algebras do not match the multiplier");
  const FiniteGroupoid& G = *m.src->G;
  std::vector<int> soff(G.n_arrows + 1, 0), doff(G.n_arrows + 1, 0);
  for (int g = 0; g < G.n_arrows; ++g) {
    const int na = m.src->fibre_dim(g), nb = m.dst->fibre_dim(g);
    soff[g + 1] = soff[g] + na * na;
    doff[g + 1] = doff[g] + nb * nb;
  }
  AlgebraMap phi;
  phi.src = std::move(src_alg);
  phi.dst = std::move(dst_alg);
  phi.coeff = CMatrix(phi.dst->dim(), phi.src->dim());
  for (int g = 0; g < G.n_arrows; ++g) {
    const int na = m.src->fibre_dim(g), nb = m.dst->fibre_dim(g);
    for (int p = 0; p < na; ++p)
      for (int q = 0; q < na; ++q)
        for (int pp = 0; pp < nb; ++pp)
          for (int qq = 0; qq < nb; ++qq)
            phi.coeff(doff[g] + pp * nb + qq, soff[g] + p * na + q) =
                m.T[g](qq * nb + pp, q * na + p);
  }
  return phi;
}

Multiplier haagerup(const AlgebraMap& phi) {
  if (!phi.src || !phi.dst) throw std::invalid_argument("haagerup: incomplete map");
  auto src_act = phi.src->act;
  auto dst_act = phi.dst->act;
  if (src_act->G.get() != dst_act->G.get())
    throw std::invalid_argument("haagerup: groupoids differ");
  const FiniteGroupoid& G = *src_act->G;
  Multiplier m{src_act, dst_act, std::vector<CMatrix>(G.n_arrows)};
  double worst = 0.0;
  for (int g = 0; g < G.n_arrows; ++g) {
    const int na = src_act->fibre_dim(g), nb = dst_act->fibre_dim(g);
    CMatrix t(static_cast<std::size_t>(nb) * nb, static_cast<std::size_t>(na) * na);
    for (int j = 0; j < na * na; ++j) {
      const Section s = delta_section(*src_act, g, basis_unit(na, j));
      double res = 0.0;
      const Ambient img = phi.apply(pi_of_section(*phi.src, s), &res);
      worst = std::max(worst, res);
      const Section out = section_of_pi(*phi.dst, img);
      const auto v = vec(out[g]);
      for (std::size_t r = 0; r < v.size(); ++r) t(r, j) = v[r];
    }
    m.T[g] = std::move(t);
  }
  if (worst > 1e-8) throw std::invalid_argument("haagerup: image leaves the target algebra");
  return m;
}

std::array<Multiplier, 4> polarize(const FSPresentation& p) {
  const FiniteGroupoid& G = *p.e->src->G;
  const cd ipow[4] = {cd(1, 0), cd(0, 1), cd(-1, 0), cd(0, -1)};
  std::array<Multiplier, 4> out;
  for (int k = 0; k < 4; ++k) {
    FSPresentation q;
    q.e = p.e;
    q.xi.resize(G.n_arrows);
    for (int x : G.units) q.xi[x] = p.zeta[x] + ipow[k] * p.xi[x];
    q.zeta = q.xi;
    out[k] = fs_coefficient(q);
  }
  return out;
}

}  // namespace fslab
