#include "fslab/crossed.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fslab {

Ambient ambient_zero(const std::vector<int>& block_sizes) {
  Ambient a;
  a.reserve(block_sizes.size());
  for (int n : block_sizes) a.push_back(CMatrix::zero(n, n));
  return a;
}

Ambient ambient_mul(const Ambient& x, const Ambient& y) {
  Ambient out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return out;
}

Ambient ambient_add(const Ambient& x, const Ambient& y) {
  Ambient out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return out;
}

Ambient ambient_adjoint(const Ambient& x) {
  Ambient out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].adjoint();
  return out;
}

cd ambient_trace(const Ambient& x) {
  cd t = 0.0;
  for (const CMatrix& b : x) t += b.trace();
  return t;
}

double ambient_max_abs(const Ambient& x) {
  double m = 0.0;
  for (const CMatrix& b : x) m = std::max(m, b.max_abs());
  return m;
}

std::vector<cd> ambient_vec(const Ambient& x) {
  std::vector<cd> v;
  for (const CMatrix& b : x) {
    const auto bv = vec(b);
    v.insert(v.end(), bv.begin(), bv.end());
  }
  return v;
}

CMatrix regular_block(const Action& act, int x, const Section& a) {
  const FiniteGroupoid& G = *act.G;
  const auto gx = G.fibre_s(x);
  const int n = act.A.at(x);
  CMatrix m(gx.size() * n, gx.size() * n);
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gx.size(); ++j) {
      const int g = gx[i], h = gx[j];
      const int k = G.compose(g, G.inv[h]);  // g h^{-1}
      const CMatrix blk = act.V[g].adjoint() * a[k] * act.cocycle(k, h) * act.V[g];
      set_block(m, i * n, j * n, blk);
    }
  return m;
}

double reduced_norm(const Action& act, const Section& a) {
  double m = 0.0;
  for (int x : act.G->units) m = std::max(m, op_norm(regular_block(act, x, a)));
  return m;
}

CMatrix pi_block_vec(const Action& act, int x, const Section& a) {
  const FiniteGroupoid& G = *act.G;
  const auto gx = G.fibre_s(x);
  const int n = act.A.at(x);
  const int d = n * n;
  CMatrix m(gx.size() * d, gx.size() * d);
  const CMatrix id = CMatrix::identity(n);
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gx.size(); ++j) {
      const int g = gx[i], h = gx[j];
      const int k = G.compose(g, G.inv[h]);
      const CMatrix blk = act.V[g].adjoint() * a[k] * act.cocycle(k, h) * act.V[g];
      set_block(m, i * d, j * d, kron(id, blk));
    }
  return m;
}

CMatrix lambda_block_vec(const Action& act, int x, const Section& a) {
  const FiniteGroupoid& G = *act.G;
  const auto gx = G.fibre_s(x);
  const int n = act.A.at(x);
  const int d = n * n;
  CMatrix m(gx.size() * d, gx.size() * d);
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gx.size(); ++j) {
      const int g = gx[i], h = gx[j];
      const int k = G.compose(g, G.inv[h]);
      // xi(h) -> a(k) V_k xi(h) V_k^* u(k,h)
      const CMatrix blk = kron((act.V[k].adjoint() * act.cocycle(k, h)).transpose(), a[k] * act.V[k]);
      set_block(m, i * d, j * d, blk);
    }
  return m;
}

CMatrix w_block_vec(const Action& act, int x) {
  const FiniteGroupoid& G = *act.G;
  const auto gx = G.fibre_s(x);
  const int n = act.A.at(x);
  const int d = n * n;
  CMatrix m(gx.size() * d, gx.size() * d);
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const int g = gx[i];
    set_block(m, i * d, i * d, kron(act.V[g].conj(), act.V[g]));
  }
  return m;
}

Ambient ConcreteAlgebra::lift(const std::vector<cd>& coeff) const {
  if (static_cast<int>(coeff.size()) != dim())
    throw std::invalid_argument("lift: coefficient count mismatch");
  Ambient y = ambient_zero(blockN);
  for (int i = 0; i < dim(); ++i) {
    if (coeff[i] == cd{}) continue;
    for (std::size_t b = 0; b < y.size(); ++b) {
      CMatrix t = basis_blocks[i][b];
      t *= coeff[i];
      y[b] += t;
    }
  }
  return y;
}

Ambient ConcreteAlgebra::unit() const { return pi_of_section(*this, unit_section(*act)); }

std::vector<cd> ConcreteAlgebra::membership(const Ambient& y, double* residual) const {
  const auto yv = ambient_vec(y);
  CMatrix rhs(yv.size(), 1);
  for (std::size_t i = 0; i < yv.size(); ++i) rhs(i, 0) = yv[i];
  const CMatrix c = basis_pinv * rhs;
  if (residual) {
    CMatrix err = basis_mat * c - rhs;
    *residual = err.fro_norm() / (1.0 + rhs.fro_norm());
  }
  std::vector<cd> out(c.rows);
  for (std::size_t i = 0; i < c.rows; ++i) out[i] = c(i, 0);
  return out;
}

ConcreteAlgebra crossed_algebra(std::shared_ptr<const Action> act) {
  ConcreteAlgebra alg;
  alg.act = act;
  const FiniteGroupoid& G = *act->G;
  for (int x : G.units) alg.blockN.push_back(act->A.at(x) * static_cast<int>(G.fibre_s(x).size()));
  for (int g = 0; g < G.n_arrows; ++g) {
    const int n = act->fibre_dim(g);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) alg.basis.push_back({g, p, q});
  }
  alg.basis_blocks.reserve(alg.basis.size());
  std::size_t ambdim = 0;
  for (int n : alg.blockN) ambdim += static_cast<std::size_t>(n) * n;
  alg.basis_mat = CMatrix(ambdim, alg.basis.size());
  for (std::size_t i = 0; i < alg.basis.size(); ++i) {
    const auto& be = alg.basis[i];
    CMatrix b(act->fibre_dim(be.g), act->fibre_dim(be.g));
    b(be.p, be.q) = 1.0;
    Ambient amb;
    amb.reserve(G.units.size());
    const Section s = delta_section(*act, be.g, b);
    for (std::size_t ux = 0; ux < G.units.size(); ++ux)
      amb.push_back(regular_block(*act, G.units[ux], s));
    const auto av = ambient_vec(amb);
    for (std::size_t r = 0; r < av.size(); ++r) alg.basis_mat(r, i) = av[r];
    alg.basis_blocks.push_back(std::move(amb));
  }
  alg.basis_pinv = pinv(alg.basis_mat);
  return alg;
}

Ambient pi_of_section(const ConcreteAlgebra& alg, const Section& a) {
  Ambient amb;
  const FiniteGroupoid& G = *alg.act->G;
  amb.reserve(G.units.size());
  for (int x : G.units) amb.push_back(regular_block(*alg.act, x, a));
  return amb;
}

Section section_of_pi(const ConcreteAlgebra& alg, const Ambient& y) {
  // block column at the source unit recovers V_g^* a(g) V_g
  const Action& act = *alg.act;
  const FiniteGroupoid& G = *act.G;
  Section s = zero_section(act);
  for (int g = 0; g < G.n_arrows; ++g) {
    const int x = G.src[g];
    const auto ux = std::lower_bound(G.units.begin(), G.units.end(), x) - G.units.begin();
    const auto gx = G.fibre_s(x);
    const int n = act.A.at(x);
    const auto row = std::lower_bound(gx.begin(), gx.end(), g) - gx.begin();
    const auto col = std::lower_bound(gx.begin(), gx.end(), x) - gx.begin();
    const CMatrix blk = get_block(y[ux], row * n, col * n, n, n);
    s[g] = act.V[g] * blk * act.V[g].adjoint();
  }
  return s;
}

CMatrix WedderburnBlock::compress(const Ambient& d) const {
  CMatrix out(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const cd t = ambient_trace(ambient_mul(e[0][i], ambient_mul(d, e[j][0])));
      out(i, j) = t / static_cast<double>(multiplicity);
    }
  return out;
}

Ambient WedderburnBlock::lift(const CMatrix& mat) const {
  Ambient out = ambient_zero({});
  out.assign(projection.size(), CMatrix());
  for (std::size_t b = 0; b < projection.size(); ++b)
    out[b] = CMatrix::zero(projection[b].rows, projection[b].cols);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (mat(i, j) == cd{}) continue;
      for (std::size_t b = 0; b < out.size(); ++b) {
        CMatrix t = e[i][j][b];
        t *= mat(i, j);
        out[b] += t;
      }
    }
  return out;
}

namespace {

// eigenvalue clustering with a relative gap threshold
std::vector<std::vector<std::size_t>> cluster_values(const std::vector<double>& v, double gap) {
  std::vector<std::vector<std::size_t>> cl;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == 0 || v[i] - v[i - 1] > gap) cl.emplace_back();
    cl.back().push_back(i);
  }
  return cl;
}

struct AmbientEig {
  std::vector<double> values;           // ascending over all blocks
  std::vector<std::pair<int, int>> at;  // (block, column)
  std::vector<EigResult> per_block;
};

AmbientEig ambient_eig(const Ambient& y) {
  AmbientEig out;
  out.per_block.reserve(y.size());
  for (const CMatrix& b : y) out.per_block.push_back(hermitian_eig(b));
  std::vector<std::pair<double, std::pair<int, int>>> all;
  for (std::size_t b = 0; b < y.size(); ++b)
    for (std::size_t j = 0; j < out.per_block[b].values.size(); ++j)
      all.push_back({out.per_block[b].values[j], {static_cast<int>(b), static_cast<int>(j)}});
  std::sort(all.begin(), all.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  for (const auto& [val, loc] : all) {
    out.values.push_back(val);
    out.at.push_back(loc);
  }
  return out;
}

Ambient spectral_projection(const AmbientEig& eig, const std::vector<std::size_t>& idx,
                            const std::vector<int>& sizes) {
  Ambient p = ambient_zero(sizes);
  for (std::size_t t : idx) {
    const auto [b, col] = eig.at[t];
    const CMatrix& u = eig.per_block[b].vectors;
    for (std::size_t i = 0; i < u.rows; ++i)
      for (std::size_t j = 0; j < u.rows; ++j)
        p[b](i, j) += u(i, col) * std::conj(u(j, col));
  }
  return p;
}

Ambient random_algebra_element(const ConcreteAlgebra& alg, std::mt19937_64& rng, bool hermitian) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<cd> c(alg.dim());
  for (cd& z : c) z = cd(dist(rng), dist(rng));
  Ambient y = alg.lift(c);
  if (hermitian) {
    Ambient ya = ambient_adjoint(y);
    for (std::size_t b = 0; b < y.size(); ++b) y[b] = 0.5 * (y[b] + ya[b]);
  }
  return y;
}

}  // namespace

Wedderburn wedderburn(const ConcreteAlgebra& alg, std::uint64_t seed, double tol) {
  const int d = alg.dim();
  std::size_t ambdim = 0;
  for (int n : alg.blockN) ambdim += static_cast<std::size_t>(n) * n;

  // centre = kernel of the stacked commutator map
  CMatrix k(ambdim * d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      Ambient comm = ambient_mul(alg.basis_blocks[j], alg.basis_blocks[i]);
      const Ambient ba = ambient_mul(alg.basis_blocks[i], alg.basis_blocks[j]);
      for (std::size_t b = 0; b < comm.size(); ++b) comm[b] -= ba[b];
      const auto cv = ambient_vec(comm);
      for (std::size_t r = 0; r < cv.size(); ++r) k(static_cast<std::size_t>(i) * ambdim + r, j) = cv[r];
    }
  }
  const EigResult ke = hermitian_eig(k.adjoint() * k);
  const double kmax = ke.values.empty() ? 0.0 : std::max(0.0, ke.values.back());
  std::vector<std::vector<cd>> centre;
  for (int t = 0; t < d; ++t) {
    if (ke.values[t] > 1e-10 * (1.0 + kmax)) continue;
    std::vector<cd> c(d);
    for (int i = 0; i < d; ++i) c[i] = ke.vectors(i, t);
    centre.push_back(std::move(c));
  }
  const int n_blocks = static_cast<int>(centre.size());
  if (n_blocks == 0) throw std::runtime_error("wedderburn: empty centre");

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> dist(0.0, 1.0);

  // minimal central projections from a generic Hermitian central element
  std::vector<Ambient> projections;
  for (int attempt = 0; attempt < 10 && projections.empty(); ++attempt) {
    std::vector<cd> c(d);
    for (const auto& z : centre) {
      const cd w(dist(rng), dist(rng));
      for (int i = 0; i < d; ++i) c[i] += w * z[i];
    }
    Ambient z = alg.lift(c);
    Ambient za = ambient_adjoint(z);
    for (std::size_t b = 0; b < z.size(); ++b) z[b] = 0.5 * (z[b] + za[b]);
    const AmbientEig eig = ambient_eig(z);
    const double spread =
        eig.values.empty() ? 0.0 : eig.values.back() - eig.values.front();
    const auto clusters = cluster_values(eig.values, std::max(1e-6 * (1.0 + spread), 1e-9));
    if (static_cast<int>(clusters.size()) != n_blocks) continue;
    std::vector<Ambient> ps;
    bool ok = true;
    for (const auto& cl : clusters) {
      Ambient p = spectral_projection(eig, cl, alg.blockN);
      double res = 0.0;
      alg.membership(p, &res);
      if (res > tol) {
        ok = false;
        break;
      }
      ps.push_back(std::move(p));
    }
    if (ok) projections = std::move(ps);
  }
  if (projections.empty())
    throw std::runtime_error("wedderburn: could not separate central projections");

  Wedderburn w;
  for (const Ambient& p : projections) {
    WedderburnBlock blk;
    blk.projection = p;

    // compressed block dimension from the rank of {p b p}
    CMatrix gram(d, d);
    std::vector<Ambient> pbp(d);
    for (int i = 0; i < d; ++i) pbp[i] = ambient_mul(p, ambient_mul(alg.basis_blocks[i], p));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        gram(i, j) = ambient_trace(ambient_mul(ambient_adjoint(pbp[i]), pbp[j]));
    const EigResult ge = hermitian_eig(gram);
    const double gmax = ge.values.empty() ? 0.0 : std::max(0.0, ge.values.back());
    int rank = 0;
    for (double v : ge.values)
      if (v > 1e-8 * (1.0 + gmax)) ++rank;
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rank))));
    if (m * m != rank) throw std::runtime_error("wedderburn: block dimension is not a square");
    blk.m = m;

    const double ptr = ambient_trace(p).real();
    const int prank = static_cast<int>(std::lround(ptr));
    if (prank % m != 0) throw std::runtime_error("wedderburn: non-integer multiplicity");
    blk.multiplicity = prank / m;

    // orthonormal basis of the range of p
    std::vector<std::pair<int, int>> range_cols;
    std::vector<EigResult> peig;
    peig.reserve(p.size());
    for (const CMatrix& pb : p) peig.push_back(hermitian_eig(pb));
    for (std::size_t b = 0; b < p.size(); ++b)
      for (std::size_t j = 0; j < peig[b].values.size(); ++j)
        if (peig[b].values[j] > 0.5) range_cols.push_back({static_cast<int>(b), static_cast<int>(j)});
    if (static_cast<int>(range_cols.size()) != prank)
      throw std::runtime_error("wedderburn: projection rank mismatch");

    auto compress_to_range = [&](const Ambient& y) {
      CMatrix out(prank, prank);
      for (int i = 0; i < prank; ++i)
        for (int j = 0; j < prank; ++j) {
          const auto [bi, ci] = range_cols[i];
          const auto [bj, cj] = range_cols[j];
          if (bi != bj) continue;
          cd s = 0.0;
          for (std::size_t r = 0; r < y[bi].rows; ++r)
            for (std::size_t t = 0; t < y[bi].cols; ++t)
              s += std::conj(peig[bi].vectors(r, ci)) * y[bi](r, t) * peig[bj].vectors(t, cj);
          out(i, j) = s;
        }
      return out;
    };
    auto expand_from_range = [&](const CMatrix& y) {
      Ambient out = ambient_zero(alg.blockN);
      for (int i = 0; i < prank; ++i)
        for (int j = 0; j < prank; ++j) {
          if (y(i, j) == cd{}) continue;
          const auto [bi, ci] = range_cols[i];
          const auto [bj, cj] = range_cols[j];
          if (bi != bj) continue;
          for (std::size_t r = 0; r < out[bi].rows; ++r)
            for (std::size_t t = 0; t < out[bi].cols; ++t)
              out[bi](r, t) += y(i, j) * peig[bi].vectors(r, ci) * std::conj(peig[bj].vectors(t, cj));
        }
      return out;
    };

    // minimal projections inside the block from a generic Hermitian element
    std::vector<Ambient> q;
    for (int attempt = 0; attempt < 10 && q.empty(); ++attempt) {
      Ambient y = random_algebra_element(alg, rng, true);
      y = ambient_mul(p, ambient_mul(y, p));
      const CMatrix yr = compress_to_range(y);
      const EigResult ye = hermitian_eig(yr);
      const double spread = ye.values.empty() ? 0.0 : ye.values.back() - ye.values.front();
      const auto clusters = cluster_values(ye.values, std::max(1e-6 * (1.0 + spread), 1e-9));
      if (static_cast<int>(clusters.size()) != m) continue;
      std::vector<Ambient> qs;
      bool ok = true;
      for (const auto& cl : clusters) {
        if (static_cast<int>(cl.size()) != blk.multiplicity) {
          ok = false;
          break;
        }
        CMatrix pr(prank, prank);
        for (std::size_t t : cl)
          for (int i = 0; i < prank; ++i)
            for (int j = 0; j < prank; ++j)
              pr(i, j) += ye.vectors(i, t) * std::conj(ye.vectors(j, t));
        qs.push_back(expand_from_range(pr));
      }
      if (ok) q = std::move(qs);
    }
    if (q.empty()) throw std::runtime_error("wedderburn: could not split a block into minimal projections");

    // matrix units via polar-normalised cross terms  e_{1j} = q_1 y q_j / sqrt(c_j)
    blk.e.assign(m, std::vector<Ambient>(m));
    std::vector<Ambient> e1(m);
    e1[0] = q[0];
    for (int j = 1; j < m; ++j) {
      bool found = false;
      for (int attempt = 0; attempt < 10 && !found; ++attempt) {
        Ambient y = random_algebra_element(alg, rng, false);
        Ambient wj = ambient_mul(q[0], ambient_mul(y, q[j]));
        const double c =
            ambient_trace(ambient_mul(ambient_adjoint(wj), wj)).real() / blk.multiplicity;
        if (c < 1e-10) continue;
        const double s = 1.0 / std::sqrt(c);
        for (CMatrix& b : wj) b *= s;
        e1[j] = std::move(wj);
        found = true;
      }
      if (!found) throw std::runtime_error("wedderburn: vanishing cross term");
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        blk.e[i][j] = ambient_mul(ambient_adjoint(e1[i]), e1[j]);
    w.blocks.push_back(std::move(blk));
  }

  // sanity: total dimension, orthogonality, unit decomposition
  int total = 0;
  for (const auto& blk : w.blocks) total += blk.m * blk.m;
  if (total != d) throw std::runtime_error("wedderburn: block dimensions do not add up");
  Ambient sum = ambient_zero(alg.blockN);
  for (const auto& blk : w.blocks) sum = ambient_add(sum, blk.projection);
  Ambient one = alg.unit();
  for (std::size_t b = 0; b < sum.size(); ++b) sum[b] -= one[b];
  if (ambient_max_abs(sum) > 1e-7)
    throw std::runtime_error("wedderburn: projections do not sum to the unit");
  return w;
}

Ambient AlgebraMap::apply(const Ambient& y, double* residual) const {
  const auto c = src->membership(y, residual);
  CMatrix cv(c.size(), 1);
  for (std::size_t i = 0; i < c.size(); ++i) cv(i, 0) = c[i];
  const CMatrix out = coeff * cv;
  std::vector<cd> oc(out.rows);
  for (std::size_t i = 0; i < out.rows; ++i) oc[i] = out(i, 0);
  return dst->lift(oc);
}

AlgebraMap algebra_map(std::shared_ptr<const ConcreteAlgebra> src,
                       std::shared_ptr<const ConcreteAlgebra> dst,
                       const std::function<Ambient(const Ambient&)>& f, double* max_residual) {
  AlgebraMap phi;
  phi.src = src;
  phi.dst = dst;
  phi.coeff = CMatrix(dst->dim(), src->dim());
  double worst = 0.0;
  for (int i = 0; i < src->dim(); ++i) {
    double res = 0.0;
    const auto c = dst->membership(f(src->basis_blocks[i]), &res);
    worst = std::max(worst, res);
    for (int r = 0; r < dst->dim(); ++r) phi.coeff(r, i) = c[r];
  }
  if (max_residual) *max_residual = worst;
  return phi;
}

std::vector<std::vector<CMatrix>> choi_blocks(const AlgebraMap& phi, const Wedderburn& wsrc,
                                              const Wedderburn& wdst) {
  std::vector<std::vector<CMatrix>> out;
  for (const auto& sb : wsrc.blocks) {
    std::vector<CMatrix> row;
    for (const auto& db : wdst.blocks) {
      CMatrix comp(db.m * db.m, sb.m * sb.m);
      for (int i = 0; i < sb.m; ++i)
        for (int j = 0; j < sb.m; ++j) {
          CMatrix eij(sb.m, sb.m);
          eij(i, j) = 1.0;
          const Ambient img = phi.apply(sb.lift(eij));
          const Ambient pimgp =
              ambient_mul(db.projection, ambient_mul(img, db.projection));
          const CMatrix mm = db.compress(pimgp);
          const auto mv = vec(mm);
          for (std::size_t r = 0; r < mv.size(); ++r)
            comp(r, static_cast<std::size_t>(j) * sb.m + i) = mv[r];
        }
      row.push_back(choi_of_map(comp, sb.m, db.m));
    }
    out.push_back(std::move(row));
  }
  return out;
}

bool is_cp_on_algebra(const AlgebraMap& phi, const Wedderburn& wsrc, const Wedderburn& wdst,
                      double tol) {
  std::vector<CMatrix> chois;
  for (auto& row : choi_blocks(phi, wsrc, wdst))
    for (auto& c : row) chois.push_back(std::move(c));
  return is_psd(direct_sum(chois), tol);
}

bool is_cp_on_algebra(const AlgebraMap& phi, std::uint64_t seed, double tol) {
  const Wedderburn ws = wedderburn(*phi.src, seed);
  const Wedderburn wd = wedderburn(*phi.dst, seed + 1);
  return is_cp_on_algebra(phi, ws, wd, tol);
}

}  // namespace fslab
