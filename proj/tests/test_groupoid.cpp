#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fslab/groupoid.hpp"

using namespace fslab;

namespace {

std::vector<std::vector<int>> z2_table() { return {{0, 1}, {1, 0}}; }

std::vector<std::vector<int>> klein4_table() {
  // elements e, a, b, ab
  return {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
}

std::vector<std::vector<int>> z3_table() {
  return {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
}

}  // namespace

TEST_CASE("group builder: Z2") {
  FiniteGroupoid g = build_group(z2_table());
  CHECK(g.n_arrows == 2);
  CHECK(g.units == std::vector<int>{0});
  CHECK(g.compose(1, 1) == 0);
  CHECK(g.inv[1] == 1);
  CHECK(validate(g).ok());
}

TEST_CASE("group builder: Z3 and Klein four") {
  FiniteGroupoid z3 = build_group(z3_table());
  CHECK(validate(z3).ok());
  CHECK(z3.compose(1, 1) == 2);
  CHECK(z3.inv[1] == 2);

  FiniteGroupoid k4 = build_group(klein4_table());
  CHECK(validate(k4).ok());
  for (int g = 0; g < 4; ++g) CHECK(k4.inv[g] == g);
  CHECK(k4.compose(1, 2) == 3);
}

TEST_CASE("group builder rejects non-groups") {
  CHECK_THROWS(build_group({{0, 1}, {1, 1}}));          // not a latin square
  CHECK_THROWS(build_group({{1, 0}, {0, 1}}));          // 0 is not the identity
  CHECK_THROWS(build_group({{0, 1, 2}, {1, 2, 0}}));    // ragged
}

TEST_CASE("pair groupoid") {
  FiniteGroupoid g = build_pair_groupoid(3);
  CHECK(g.n_arrows == 9);
  CHECK(g.units.size() == 3);
  // arrow i*3+j is i <- j
  const int a01 = 0 * 3 + 1, a12 = 1 * 3 + 2;
  CHECK(g.src[a01] == 1 * 3 + 1);
  CHECK(g.rng[a01] == 0);
  CHECK(g.composable(a01, a12));
  CHECK(g.compose(a01, a12) == 0 * 3 + 2);
  CHECK(g.inv[a01] == 1 * 3 + 0);
  CHECK(validate(g).ok());

  auto fs = g.fibre_s(1 * 3 + 1);
  CHECK(fs.size() == 3);
  for (int a : fs) CHECK(g.src[a] == 1 * 3 + 1);
  auto fr = g.fibre_r(0);
  CHECK(fr == std::vector<int>{0, 1, 2});
}

TEST_CASE("action groupoid: Z2 flipping two points") {
  FiniteGroupoid g = build_action_groupoid(z2_table(), {{0, 1}, {1, 0}});
  CHECK(g.n_arrows == 4);
  CHECK(g.units.size() == 2);
  CHECK(validate(g).ok());
  // arrow h*2+x has source x and range h.x
  CHECK(g.src[2] == 0);
  CHECK(g.rng[2] == 1);
  CHECK(g.compose(3, 2) == 0);  // (s,1)(s,0) = (e,0)
  CHECK(g.inv[2] == 3);
  CHECK(g.orbit_of_arrow()[0] == g.orbit_of_arrow()[1]);
}

TEST_CASE("action groupoid rejects incompatible data") {
  CHECK_THROWS(build_action_groupoid(z2_table(), {{0, 1}, {1, 1}}));  // not a permutation
  CHECK_THROWS(build_action_groupoid(z2_table(), {{1, 0}, {0, 1}}));  // identity must act trivially
  CHECK_THROWS(build_action_groupoid(z3_table(), {{0, 1}, {1, 0}, {0, 1}}));  // not an action
}

TEST_CASE("orbits of a disjoint union") {
  // Z2 group next to a single extra unit
  FiniteGroupoid g;
  g.n_arrows = 3;
  g.units = {0, 2};
  g.src = {0, 0, 2};
  g.rng = {0, 0, 2};
  g.inv = {0, 1, 2};
  g.comp.assign(9, -1);
  g.comp[0 * 3 + 0] = 0;
  g.comp[0 * 3 + 1] = 1;
  g.comp[1 * 3 + 0] = 1;
  g.comp[1 * 3 + 1] = 0;
  g.comp[2 * 3 + 2] = 2;
  g.reindex();
  CHECK(validate(g).ok());
  auto orb = g.orbit_of_arrow();
  CHECK(orb[0] == orb[1]);
  CHECK(orb[0] != orb[2]);
}

TEST_CASE("validate catches structural damage") {
  FiniteGroupoid g = build_group(z2_table());
  SUBCASE("broken inverse") {
    g.inv[1] = 0;
    CHECK_FALSE(validate(g).ok());
  }
  SUBCASE("missing composition") {
    g.comp[1 * 2 + 1] = -1;
    CHECK_FALSE(validate(g).ok());
  }
  SUBCASE("composition out of fibre") {
    g.comp[1 * 2 + 1] = 1;
    CHECK_FALSE(validate(g).ok());
  }
  SUBCASE("source points at a non-unit") {
    FiniteGroupoid p = build_pair_groupoid(2);
    p.src[1] = 1;
    CHECK_FALSE(validate(p).ok());
  }
}

TEST_CASE("compose throws on non-composable arrows") {
  FiniteGroupoid g = build_pair_groupoid(2);
  // arrows 0<-1 and 0<-1 do not compose
  CHECK_THROWS_AS(g.compose(1, 1), std::domain_error);
}
