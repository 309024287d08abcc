#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace fslab {

// Ordered list of human-readable findings; empty means the object checks out.
struct Report {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
  void add(std::string s) { issues.push_back(std::move(s)); }
};

// A finite groupoid on a dense arrow set {0,...,n_arrows-1}. Units are the
// identity arrows; src/rng map every arrow to a unit arrow. comp is the full
// partial composition table (-1 where undefined): comp[g*n+h] = gh whenever
// src(g) = rng(h).
struct FiniteGroupoid {
  int n_arrows = 0;
  std::vector<int> units;  // sorted unit arrows
  std::vector<int> src, rng, inv;
  std::vector<int> comp;  // dense n x n, -1 = undefined
  std::vector<char> unit_flag;

  void reindex();  // rebuild unit_flag from units

  bool valid_arrow(int g) const { return g >= 0 && g < n_arrows; }
  bool is_unit(int g) const { return valid_arrow(g) && unit_flag[g]; }
  bool composable(int g, int h) const {
    return valid_arrow(g) && valid_arrow(h) && comp[static_cast<std::size_t>(g) * n_arrows + h] >= 0;
  }
  int compose(int g, int h) const;  // throws std::domain_error if undefined
  int inverse(int g) const;

  std::vector<int> fibre_s(int x) const;  // G_x  = {g : src(g) = x}
  std::vector<int> fibre_r(int x) const;  // G^x = {g : rng(g) = x}
  std::vector<std::pair<int, int>> composable_pairs() const;
  std::vector<std::array<int, 3>> composable_triples() const;

  // orbit index per unit arrow (arrows not units get the orbit of their source)
  std::vector<int> orbit_of_arrow() const;
};

Report validate(const FiniteGroupoid& g);

// group as a one-unit groupoid; table[g][h] = gh with 0 the identity
FiniteGroupoid build_group(const std::vector<std::vector<int>>& table);

// pair groupoid on k points; arrow i*k+j is (i <- j)
FiniteGroupoid build_pair_groupoid(int k);

// transformation groupoid H x S for a right-to-left action h.x = perm[h][x];
// arrow h*|S|+x has source x and range h.x
FiniteGroupoid build_action_groupoid(const std::vector<std::vector<int>>& table,
                                     const std::vector<std::vector<int>>& perm);

}  // namespace fslab
