#include "fslab/groupoid.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace fslab {

namespace {
std::string arrow(int g) { return std::to_string(g); }
}  // namespace

void FiniteGroupoid::reindex() {
  unit_flag.assign(n_arrows, 0);
  for (int u : units)
    if (valid_arrow(u)) unit_flag[u] = 1;
}

int FiniteGroupoid::compose(int g, int h) const {
  if (!composable(g, h))
    throw std::domain_error("compose: arrows " + arrow(g) + "," + arrow(h) + " not composable");
  return comp[static_cast<std::size_t>(g) * n_arrows + h];
}

int FiniteGroupoid::inverse(int g) const {
  if (!valid_arrow(g)) throw std::domain_error("inverse: arrow " + arrow(g) + " out of range");
  return inv[g];
}

std::vector<int> FiniteGroupoid::fibre_s(int x) const {
  std::vector<int> f;
  for (int g = 0; g < n_arrows; ++g)
    if (src[g] == x) f.push_back(g);
  return f;
}

std::vector<int> FiniteGroupoid::fibre_r(int x) const {
  std::vector<int> f;
  for (int g = 0; g < n_arrows; ++g)
    if (rng[g] == x) f.push_back(g);
  return f;
}

std::vector<std::pair<int, int>> FiniteGroupoid::composable_pairs() const {
  std::vector<std::pair<int, int>> ps;
  for (int g = 0; g < n_arrows; ++g)
    for (int h = 0; h < n_arrows; ++h)
      if (composable(g, h)) ps.emplace_back(g, h);
  return ps;
}

std::vector<std::array<int, 3>> FiniteGroupoid::composable_triples() const {
  std::vector<std::array<int, 3>> ts;
  for (int f = 0; f < n_arrows; ++f)
    for (int g = 0; g < n_arrows; ++g) {
      if (!composable(f, g)) continue;
      for (int h = 0; h < n_arrows; ++h)
        if (composable(g, h)) ts.push_back({f, g, h});
    }
  return ts;
}

std::vector<int> FiniteGroupoid::orbit_of_arrow() const {
  std::vector<int> parent(n_arrows);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (int g = 0; g < n_arrows; ++g) {
    int a = find(src[g]), b = find(rng[g]);
    if (a != b) parent[a] = b;
  }
  std::vector<int> orb(n_arrows);
  for (int g = 0; g < n_arrows; ++g) orb[g] = find(src[g]);
  return orb;
}

Report validate(const FiniteGroupoid& g) {
  Report rep;
  const int n = g.n_arrows;
  if (n < 0) {
    rep.add("arrows: negative count");
    return rep;
  }
  auto sized = [&](const std::vector<int>& v, const char* name) {
    if (static_cast<int>(v.size()) != n) {
      rep.add(std::string(name) + ": expected " + std::to_string(n) + " entries, got " +
              std::to_string(v.size()));
      return false;
    }
    return true;
  };
  if (!sized(g.src, "src") || !sized(g.rng, "rng") || !sized(g.inv, "inv")) return rep;
  if (static_cast<int>(g.comp.size()) != n * n) {
    rep.add("comp: table has wrong size");
    return rep;
  }
  if (static_cast<int>(g.unit_flag.size()) != n) {
    rep.add("units: index not built (call reindex)");
    return rep;
  }

  for (int u : g.units) {
    if (!g.valid_arrow(u)) {
      rep.add("units: entry " + arrow(u) + " out of range");
      continue;
    }
    if (g.src[u] != u || g.rng[u] != u)
      rep.add("units: arrow " + arrow(u) + " has src/rng not equal to itself");
  }
  for (int a = 0; a < n; ++a) {
    if (!g.valid_arrow(g.src[a]) || !g.is_unit(g.src[a]))
      rep.add("src[" + arrow(a) + "]: value " + arrow(g.src[a]) + " is not a unit arrow");
    if (!g.valid_arrow(g.rng[a]) || !g.is_unit(g.rng[a]))
      rep.add("rng[" + arrow(a) + "]: value " + arrow(g.rng[a]) + " is not a unit arrow");
    if (!g.valid_arrow(g.inv[a])) rep.add("inv[" + arrow(a) + "]: value out of range");
  }
  if (!rep.ok()) return rep;

  // composition table: defined exactly where src(g) = rng(h)
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int ab = g.comp[static_cast<std::size_t>(a) * n + b];
      const bool should = (g.src[a] == g.rng[b]);
      if (should && ab < 0)
        rep.add("comp: missing entry for composable pair (" + arrow(a) + "," + arrow(b) + ")");
      if (!should && ab >= 0)
        rep.add("comp: entry (" + arrow(a) + "," + arrow(b) + ") defined but src(" + arrow(a) +
                ") != rng(" + arrow(b) + ")");
      if (ab >= 0 && !g.valid_arrow(ab))
        rep.add("comp: entry (" + arrow(a) + "," + arrow(b) + ") out of range");
    }
  if (!rep.ok()) return rep;

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (!g.composable(a, b)) continue;
      const int ab = g.compose(a, b);
      if (g.src[ab] != g.src[b] || g.rng[ab] != g.rng[a])
        rep.add("comp: product of (" + arrow(a) + "," + arrow(b) + ") has wrong src/rng");
    }

  for (int a = 0; a < n; ++a) {
    if (g.composable(a, g.src[a]) && g.compose(a, g.src[a]) != a)
      rep.add("identity: " + arrow(a) + " * src(" + arrow(a) + ") != " + arrow(a));
    if (g.composable(g.rng[a], a) && g.compose(g.rng[a], a) != a)
      rep.add("identity: rng(" + arrow(a) + ") * " + arrow(a) + " != " + arrow(a));
    const int ia = g.inv[a];
    if (g.inv[ia] != a) rep.add("inv: not involutive at arrow " + arrow(a));
    if (g.src[ia] != g.rng[a] || g.rng[ia] != g.src[a])
      rep.add("inv: arrow " + arrow(a) + " has inverse with wrong src/rng");
    if (g.composable(a, ia) && g.compose(a, ia) != g.rng[a])
      rep.add("inv: " + arrow(a) + " * inv != rng unit");
    if (g.composable(ia, a) && g.compose(ia, a) != g.src[a])
      rep.add("inv: inv * " + arrow(a) + " != src unit");
  }

  for (const auto& [f, a] : g.composable_pairs()) {
    for (int b = 0; b < n; ++b) {
      if (!g.composable(a, b)) continue;
      const int fa = g.compose(f, a), ab = g.compose(a, b);
      if (!g.composable(fa, b) || !g.composable(f, ab)) {
        rep.add("assoc: products of (" + arrow(f) + "," + arrow(a) + "," + arrow(b) +
                ") leave the composable range");
        continue;
      }
      if (g.compose(fa, b) != g.compose(f, ab)) {
        rep.add("assoc: fails at triple (" + arrow(f) + "," + arrow(a) + "," + arrow(b) + ")");
      }
    }
  }
  return rep;
}

namespace {

FiniteGroupoid finish(FiniteGroupoid g) {
  g.reindex();
  return g;
}

}  // namespace

FiniteGroupoid build_group(const std::vector<std::vector<int>>& table) {
  const int k = static_cast<int>(table.size());
  if (k == 0) throw std::invalid_argument("build_group: empty table");
  for (const auto& row : table)
    if (static_cast<int>(row.size()) != k)
      throw std::invalid_argument("build_group: table is not square");
  for (int i = 0; i < k; ++i) {
    if (table[0][i] != i || table[i][0] != i)
      throw std::invalid_argument("build_group: element 0 is not an identity");
    std::vector<char> seen_r(k, 0), seen_c(k, 0);
    for (int j = 0; j < k; ++j) {
      int r = table[i][j], c = table[j][i];
      if (r < 0 || r >= k || c < 0 || c >= k)
        throw std::invalid_argument("build_group: table entry out of range");
      seen_r[r] = seen_c[c] = 1;
    }
    for (int j = 0; j < k; ++j)
      if (!seen_r[j] || !seen_c[j])
        throw std::invalid_argument("build_group: row/column " + std::to_string(i) +
                                    " is not a permutation");
  }
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int c = 0; c < k; ++c)
        if (table[table[a][b]][c] != table[a][table[b][c]])
          throw std::invalid_argument("build_group: table is not associative");

  FiniteGroupoid g;
  g.n_arrows = k;
  g.units = {0};
  g.src.assign(k, 0);
  g.rng.assign(k, 0);
  g.inv.assign(k, -1);
  g.comp.assign(static_cast<std::size_t>(k) * k, -1);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      g.comp[static_cast<std::size_t>(a) * k + b] = table[a][b];
      if (table[a][b] == 0) g.inv[a] = b;
    }
    if (g.inv[a] < 0) throw std::invalid_argument("build_group: missing inverse");
  }
  return finish(std::move(g));
}

FiniteGroupoid build_pair_groupoid(int k) {
  if (k <= 0) throw std::invalid_argument("build_pair_groupoid: need k >= 1");
  FiniteGroupoid g;
  const int n = k * k;
  g.n_arrows = n;
  auto id = [&](int i, int j) { return i * k + j; };
  g.src.resize(n);
  g.rng.resize(n);
  g.inv.resize(n);
  g.comp.assign(static_cast<std::size_t>(n) * n, -1);
  for (int i = 0; i < k; ++i) {
    g.units.push_back(id(i, i));
    for (int j = 0; j < k; ++j) {
      g.src[id(i, j)] = id(j, j);
      g.rng[id(i, j)] = id(i, i);
      g.inv[id(i, j)] = id(j, i);
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l)
        g.comp[static_cast<std::size_t>(id(i, j)) * n + id(j, l)] = id(i, l);
  return finish(std::move(g));
}

FiniteGroupoid build_action_groupoid(const std::vector<std::vector<int>>& table,
                                     const std::vector<std::vector<int>>& perm) {
  FiniteGroupoid grp = build_group(table);  // validates the group table
  const int k = static_cast<int>(table.size());
  if (static_cast<int>(perm.size()) != k)
    throw std::invalid_argument("build_action_groupoid: one permutation per group element required");
  const int s = perm.empty() ? 0 : static_cast<int>(perm[0].size());
  if (s == 0) throw std::invalid_argument("build_action_groupoid: empty set");
  for (const auto& p : perm) {
    if (static_cast<int>(p.size()) != s)
      throw std::invalid_argument("build_action_groupoid: permutation size mismatch");
    std::vector<char> seen(s, 0);
    for (int v : p) {
      if (v < 0 || v >= s) throw std::invalid_argument("build_action_groupoid: permutation out of range");
      seen[v] = 1;
    }
    for (char c : seen)
      if (!c) throw std::invalid_argument("build_action_groupoid: not a permutation");
  }
  for (int x = 0; x < s; ++x)
    if (perm[0][x] != x)
      throw std::invalid_argument("build_action_groupoid: identity must act trivially");
  for (int h2 = 0; h2 < k; ++h2)
    for (int h1 = 0; h1 < k; ++h1)
      for (int x = 0; x < s; ++x)
        if (perm[table[h2][h1]][x] != perm[h2][perm[h1][x]])
          throw std::invalid_argument("build_action_groupoid: not a group action");

  FiniteGroupoid g;
  const int n = k * s;
  g.n_arrows = n;
  auto id = [&](int h, int x) { return h * s + x; };
  g.src.resize(n);
  g.rng.resize(n);
  g.inv.resize(n);
  g.comp.assign(static_cast<std::size_t>(n) * n, -1);
  for (int x = 0; x < s; ++x) g.units.push_back(id(0, x));
  for (int h = 0; h < k; ++h) {
    const int hinv = grp.inv[h];
    for (int x = 0; x < s; ++x) {
      g.src[id(h, x)] = id(0, x);
      g.rng[id(h, x)] = id(0, perm[h][x]);
      g.inv[id(h, x)] = id(hinv, perm[h][x]);
    }
  }
  for (int h2 = 0; h2 < k; ++h2)
    for (int h1 = 0; h1 < k; ++h1)
      for (int x = 0; x < s; ++x) {
        // (h2, h1.x) . (h1, x) = (h2 h1, x)
        g.comp[static_cast<std::size_t>(id(h2, perm[h1][x])) * n + id(h1, x)] =
            id(table[h2][h1], x);
      }
  return finish(std::move(g));
}

}  // namespace fslab
