#pragma once

#include <memory>
#include <random>

#include "fslab/action.hpp"

namespace fslab::testing {

inline FiniteGroupoid disjoint_union(const FiniteGroupoid& a, const FiniteGroupoid& b) {
  FiniteGroupoid g;
  const int na = a.n_arrows, nb = b.n_arrows;
  g.n_arrows = na + nb;
  for (int x : a.units) g.units.push_back(x);
  for (int x : b.units) g.units.push_back(x + na);
  g.src = a.src;
  g.rng = a.rng;
  g.inv = a.inv;
  for (int i = 0; i < nb; ++i) {
    g.src.push_back(b.src[i] + na);
    g.rng.push_back(b.rng[i] + na);
    g.inv.push_back(b.inv[i] + na);
  }
  g.comp.assign(static_cast<std::size_t>(g.n_arrows) * g.n_arrows, -1);
  for (int x = 0; x < na; ++x)
    for (int y = 0; y < na; ++y)
      g.comp[static_cast<std::size_t>(x) * g.n_arrows + y] = a.comp[static_cast<std::size_t>(x) * na + y];
  for (int x = 0; x < nb; ++x)
    for (int y = 0; y < nb; ++y) {
      const int c = b.comp[static_cast<std::size_t>(x) * nb + y];
      g.comp[static_cast<std::size_t>(x + na) * g.n_arrows + (y + na)] = c < 0 ? -1 : c + na;
    }
  g.reindex();
  return g;
}

inline std::vector<std::vector<int>> z2_table() { return {{0, 1}, {1, 0}}; }

inline std::vector<std::vector<int>> klein4_table() {
  return {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
}

inline Action z2_trivial() {
  auto g = std::make_shared<FiniteGroupoid>(build_group(z2_table()));
  return trivial_action(g, {1});
}

// the nontrivial 2-cocycle on Z2: u(s,s) = -1
inline Action z2_twisted() {
  Action act = z2_trivial();
  act.u[pair_key(1, 1)] = cd(-1) * CMatrix::identity(1);
  return act;
}

// bicharacter twist on the Klein four group (elements e, a, b, ab):
// u(a^i b^j, a^k b^l) = (-1)^{jk}; delta_a, delta_b anticommute
inline Action klein4_twisted() {
  auto g = std::make_shared<FiniteGroupoid>(build_group(klein4_table()));
  Action act = trivial_action(g, {1});
  auto jpart = [](int e) { return e >= 2 ? 1 : 0; };  // exponent of b
  auto kpart = [](int e) { return e & 1; };           // exponent of a
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y)
      if (jpart(x) * kpart(y) == 1) act.u[pair_key(x, y)] = cd(-1) * CMatrix::identity(1);
  return act;
}

inline Action pair3_trivial(int n = 1) {
  auto g = std::make_shared<FiniteGroupoid>(build_pair_groupoid(3));
  return trivial_action(g, {n, n, n});
}

inline Action z2_two_points() {
  auto g = std::make_shared<FiniteGroupoid>(build_action_groupoid(z2_table(), {{0, 1}, {1, 0}}));
  return trivial_action(g, {1, 1});
}

// Z2 turning Mat_2 by Ad diag(1,-1), sitting next to a scalar pair groupoid
inline Action two_orbit_mixed() {
  FiniteGroupoid z2 = build_group(z2_table());
  FiniteGroupoid p2 = build_pair_groupoid(2);
  auto g = std::make_shared<FiniteGroupoid>(disjoint_union(z2, p2));
  Action act = trivial_action(g, {2, 1, 1});
  CMatrix vs = CMatrix::identity(2);
  vs(1, 1) = -1;
  act.V[1] = vs;
  return act;
}

inline std::vector<Action> all_fixtures() {
  return {z2_trivial(), z2_twisted(), klein4_twisted(), pair3_trivial(), z2_two_points(),
          two_orbit_mixed()};
}

inline Section random_section(const Action& act, std::mt19937_64& rng) {
  Section s;
  s.reserve(act.G->n_arrows);
  for (int g = 0; g < act.G->n_arrows; ++g) {
    const std::size_t n = act.fibre_dim(g);
    s.push_back(random_matrix(rng, n, n));
  }
  return s;
}

}  // namespace fslab::testing
