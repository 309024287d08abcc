#include "fslab/action.hpp"

#include <stdexcept>

namespace fslab {

const CMatrix& Action::cocycle(int g, int h) const {
  auto it = u.find(pair_key(g, h));
  if (it == u.end())
    throw std::domain_error("cocycle: no entry for pair (" + std::to_string(g) + "," +
                            std::to_string(h) + ")");
  return it->second;
}

Action trivial_action(std::shared_ptr<const FiniteGroupoid> g, const std::vector<int>& dims_per_unit) {
  if (dims_per_unit.size() != g->units.size())
    throw std::invalid_argument("trivial_action: one dimension per unit required");
  Action act;
  act.G = g;
  act.A.dim.assign(g->n_arrows, 0);
  for (std::size_t i = 0; i < g->units.size(); ++i) act.A.dim[g->units[i]] = dims_per_unit[i];
  act.V.resize(g->n_arrows);
  for (int a = 0; a < g->n_arrows; ++a) act.V[a] = CMatrix::identity(act.fibre_dim(a));
  for (const auto& [x, y] : g->composable_pairs())
    act.u[pair_key(x, y)] = CMatrix::identity(act.A.at(g->rng[x]));
  return act;
}

Report validate_action(const Action& act, double tol) {
  Report rep;
  const FiniteGroupoid& G = *act.G;
  if (static_cast<int>(act.A.dim.size()) != G.n_arrows) {
    rep.add("dims: wrong length");
    return rep;
  }
  const auto orb = G.orbit_of_arrow();
  std::unordered_map<int, int> orbit_dim;
  for (int x : G.units) {
    if (act.A.dim[x] <= 0) rep.add("dims: unit " + std::to_string(x) + " has non-positive dimension");
    auto [it, fresh] = orbit_dim.try_emplace(orb[x], act.A.dim[x]);
    if (!fresh && it->second != act.A.dim[x])
      rep.add("dims: unit " + std::to_string(x) + " breaks orbit-constancy");
  }
  if (static_cast<int>(act.V.size()) != G.n_arrows) {
    rep.add("V: wrong length");
    return rep;
  }
  if (!rep.ok()) return rep;

  for (int g = 0; g < G.n_arrows; ++g) {
    const std::size_t n = act.fibre_dim(g);
    if (act.V[g].rows != n || act.V[g].cols != n) {
      rep.add("V[" + std::to_string(g) + "]: wrong shape");
      continue;
    }
    if (!is_unitary(act.V[g], tol)) rep.add("V[" + std::to_string(g) + "]: not unitary");
    if (G.is_unit(g) && !approx_equal(act.V[g], CMatrix::identity(n), 0.0))
      rep.add("V[" + std::to_string(g) + "]: unit arrow must carry the exact identity");
  }

  const auto pairs = G.composable_pairs();
  for (const auto& [g, h] : pairs) {
    auto it = act.u.find(pair_key(g, h));
    if (it == act.u.end()) {
      rep.add("u: missing entry (" + std::to_string(g) + "," + std::to_string(h) + ")");
      continue;
    }
    const std::size_t n = act.fibre_dim(g);
    if (it->second.rows != n || it->second.cols != n)
      rep.add("u(" + std::to_string(g) + "," + std::to_string(h) + "): wrong shape");
    else if (!is_unitary(it->second, tol))
      rep.add("u(" + std::to_string(g) + "," + std::to_string(h) + "): not unitary");
  }
  for (const auto& [key, mat] : act.u) {
    (void)mat;
    const int g = static_cast<int>(key >> 32), h = static_cast<int>(key & 0xffffffff);
    if (!G.composable(g, h))
      rep.add("u(" + std::to_string(g) + "," + std::to_string(h) + "): pair not composable");
  }
  if (!rep.ok()) return rep;

  // (a) normalisation at units
  for (int x : G.units) {
    const std::size_t n = act.A.at(x);
    if (!approx_equal(act.cocycle(x, x), CMatrix::identity(n), tol))
      rep.add("axiom (a): u(x,x) != 1 at unit " + std::to_string(x));
  }

  // (b) Ad u(g,h) . alpha_{gh} = alpha_g alpha_h, checked on matrix units and
  // through scalarity of V_{gh}^* u(g,h)^* V_g V_h
  for (const auto& [g, h] : pairs) {
    const int gh = G.compose(g, h);
    const CMatrix& ugh = act.cocycle(g, h);
    const std::size_t ns = act.fibre_dim(h);
    bool bad = false;
    for (std::size_t p = 0; p < ns && !bad; ++p)
      for (std::size_t q = 0; q < ns && !bad; ++q) {
        CMatrix e(ns, ns);
        e(p, q) = 1.0;
        const CMatrix lhs = ugh * act.alpha(gh, e) * ugh.adjoint();
        const CMatrix rhs = act.alpha(g, act.alpha(h, e));
        if (!approx_equal(lhs, rhs, tol)) bad = true;
      }
    if (bad)
      rep.add("axiom (b): Ad u(g,h) . alpha_gh != alpha_g alpha_h at (" + std::to_string(g) + "," +
              std::to_string(h) + ")");
    const CMatrix s = act.V[gh].adjoint() * ugh.adjoint() * act.V[g] * act.V[h];
    if (!is_scalar(s, tol))
      rep.add("axiom (b): V_gh^* u(g,h)^* V_g V_h not scalar at (" + std::to_string(g) + "," +
              std::to_string(h) + ")");
  }

  // (c) cocycle identity over composable triples
  for (const auto& [f, g, h] : G.composable_triples()) {
    const int gh = G.compose(g, h);
    const int fg = G.compose(f, g);
    const CMatrix lhs = act.alpha(f, act.cocycle(g, h)) * act.cocycle(f, gh);
    const CMatrix rhs = act.cocycle(f, g) * act.cocycle(fg, h);
    if (!approx_equal(lhs, rhs, tol))
      rep.add("axiom (c): cocycle identity fails at (" + std::to_string(f) + "," +
              std::to_string(g) + "," + std::to_string(h) + ")");
  }

  // (d) consequences: u(g, s(g)) = u(r(g), g) = 1 and alpha_g(u(g^{-1},g)) = u(g,g^{-1})
  for (int g = 0; g < G.n_arrows; ++g) {
    const std::size_t n = act.fibre_dim(g);
    if (!approx_equal(act.cocycle(g, G.src[g]), CMatrix::identity(n), tol))
      rep.add("derived: u(g,s(g)) != 1 at arrow " + std::to_string(g));
    if (!approx_equal(act.cocycle(G.rng[g], g), CMatrix::identity(n), tol))
      rep.add("derived: u(r(g),g) != 1 at arrow " + std::to_string(g));
    const int gi = G.inv[g];
    if (!approx_equal(act.alpha(g, act.cocycle(gi, g)), act.cocycle(g, gi), tol))
      rep.add("derived: alpha_g(u(g^{-1},g)) != u(g,g^{-1}) at arrow " + std::to_string(g));
  }
  return rep;
}

Section zero_section(const Action& act) {
  Section s(act.G->n_arrows);
  for (int g = 0; g < act.G->n_arrows; ++g)
    s[g] = CMatrix::zero(act.fibre_dim(g), act.fibre_dim(g));
  return s;
}

Section unit_section(const Action& act) {
  Section s = zero_section(act);
  for (int x : act.G->units) s[x] = CMatrix::identity(act.A.at(x));
  return s;
}

Section delta_section(const Action& act, int g, const CMatrix& a) {
  Section s = zero_section(act);
  const std::size_t n = act.fibre_dim(g);
  if (a.rows != n || a.cols != n) throw std::invalid_argument("delta_section: wrong fibre size");
  s[g] = a;
  return s;
}

CMatrix fell_mul(const Action& act, const CMatrix& a, int g, const CMatrix& b, int h) {
  if (!act.G->composable(g, h)) throw std::domain_error("fell_mul: pair not composable");
  return a * act.alpha(g, b) * act.cocycle(g, h);
}

CMatrix fell_star(const Action& act, const CMatrix& a, int g) {
  const int gi = act.G->inv[g];
  return act.cocycle(gi, g).adjoint() * act.alpha(gi, a.adjoint());
}

Section convolve(const Action& act, const Section& a, const Section& b) {
  const FiniteGroupoid& G = *act.G;
  Section out = zero_section(act);
  for (int g = 0; g < G.n_arrows; ++g) {
    for (int h : G.fibre_s(G.src[g])) {
      const int k = G.compose(g, G.inv[h]);  // g h^{-1}
      out[g] += fell_mul(act, a[k], k, b[h], h);
    }
  }
  return out;
}

Section star(const Action& act, const Section& a) {
  Section out = zero_section(act);
  for (int g = 0; g < act.G->n_arrows; ++g) {
    const int gi = act.G->inv[g];
    out[g] = fell_star(act, a[gi], gi);
  }
  return out;
}

Section expectation(const Action& act, const Section& a) {
  Section out = zero_section(act);
  for (int x : act.G->units) out[x] = a[x];
  return out;
}

double section_sup_norm(const Section& a) {
  double m = 0.0;
  for (const CMatrix& v : a) m = std::max(m, op_norm(v));
  return m;
}

}  // namespace fslab
