#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <memory>

#include "fslab/crossed.hpp"
#include "helpers.hpp"

using namespace fslab;
namespace ft = fslab::testing;

namespace {

std::shared_ptr<const Action> share(Action act) {
  return std::make_shared<const Action>(std::move(act));
}

// full matrix algebra as a crossed product over the trivial group
ConcreteAlgebra full_matrix_algebra(int n) {
  auto g = std::make_shared<FiniteGroupoid>(build_group({{0}}));
  return crossed_algebra(share(trivial_action(g, {n})));
}

std::vector<std::pair<int, int>> block_shape(const Wedderburn& w) {
  std::vector<std::pair<int, int>> s;
  for (const auto& b : w.blocks) s.push_back({b.m, b.multiplicity});
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

TEST_CASE("regular representation of the twisted Z2") {
  auto act = share(ft::z2_twisted());
  Section ds = delta_section(*act, 1, CMatrix::identity(1));
  CMatrix m = regular_block(*act, 0, ds);
  CMatrix expect(2, 2);
  expect(0, 1) = -1;
  expect(1, 0) = 1;
  CHECK(approx_equal(m, expect, 1e-14));
  // delta_s^2 = -delta_e
  CHECK(approx_equal(m * m, cd(-1) * CMatrix::identity(2), 1e-14));
}

TEST_CASE("regular representation of the plain Z2") {
  auto act = share(ft::z2_trivial());
  Section ds = delta_section(*act, 1, CMatrix::identity(1));
  CMatrix m = regular_block(*act, 0, ds);
  CMatrix expect(2, 2);
  expect(0, 1) = 1;
  expect(1, 0) = 1;
  CHECK(approx_equal(m, expect, 1e-14));
  CHECK(reduced_norm(*act, ds) == doctest::Approx(1.0));
  CHECK(reduced_norm(*act, unit_section(*act)) == doctest::Approx(1.0));
}

TEST_CASE("pi is a faithful *-homomorphism") {
  std::mt19937_64 rng(10);
  for (Action a : ft::all_fixtures()) {
    auto act = share(std::move(a));
    ConcreteAlgebra alg = crossed_algebra(act);
    Section s = ft::random_section(*act, rng);
    Section t = ft::random_section(*act, rng);
    Ambient ps = pi_of_section(alg, s);
    Ambient pt = pi_of_section(alg, t);
    Ambient prod = pi_of_section(alg, convolve(*act, s, t));
    Ambient dir = ambient_mul(ps, pt);
    for (std::size_t b = 0; b < prod.size(); ++b)
      CHECK(approx_equal(prod[b], dir[b], 1e-10));
    Ambient st = pi_of_section(alg, star(*act, s));
    Ambient ad = ambient_adjoint(ps);
    for (std::size_t b = 0; b < st.size(); ++b) CHECK(approx_equal(st[b], ad[b], 1e-10));
    // read-back inverts pi
    Section back = section_of_pi(alg, ps);
    for (int g = 0; g < act->G->n_arrows; ++g) CHECK(approx_equal(back[g], s[g], 1e-10));
  }
}

TEST_CASE("reduced norm satisfies the C* identity") {
  std::mt19937_64 rng(11);
  for (const Action& act : ft::all_fixtures()) {
    Section s = ft::random_section(act, rng);
    const double n = reduced_norm(act, s);
    const double nn = reduced_norm(act, convolve(act, star(act, s), s));
    CHECK(nn == doctest::Approx(n * n).epsilon(1e-8));
  }
}

TEST_CASE("the vectorised left picture is conjugate to pi") {
  std::mt19937_64 rng(12);
  for (const Action& act : ft::all_fixtures()) {
    Section s = ft::random_section(act, rng);
    for (int x : act.G->units) {
      CMatrix w = w_block_vec(act, x);
      CHECK(is_unitary(w, 1e-12));
      CMatrix lhs = lambda_block_vec(act, x, s) * w;
      CMatrix rhs = w * pi_block_vec(act, x, s);
      CHECK(approx_equal(lhs, rhs, 1e-10));
    }
  }
}

TEST_CASE("membership separates the algebra from its ambient") {
  auto act = share(ft::z2_twisted());
  ConcreteAlgebra alg = crossed_algebra(act);
  CHECK(alg.dim() == 2);
  double res = 0.0;
  std::mt19937_64 rng(13);
  alg.membership(pi_of_section(alg, ft::random_section(*act, rng)), &res);
  CHECK(res < 1e-12);
  Ambient outside = {CMatrix::identity(2)};
  outside[0](0, 0) = 2.0;  // diag(2,1) is not in span{1, delta_s}
  alg.membership(outside, &res);
  CHECK(res > 1e-3);
}

TEST_CASE("wedderburn anchors") {
  auto shape_of = [](Action a) {
    ConcreteAlgebra alg = crossed_algebra(share(std::move(a)));
    return block_shape(wedderburn(alg, 0));
  };
  using VP = std::vector<std::pair<int, int>>;
  CHECK(shape_of(ft::z2_trivial()) == VP{{1, 1}, {1, 1}});
  CHECK(shape_of(ft::z2_twisted()) == VP{{1, 1}, {1, 1}});
  CHECK(shape_of(ft::klein4_twisted()) == VP{{2, 2}});
  CHECK(shape_of(ft::pair3_trivial()) == VP{{3, 3}});
  CHECK(shape_of(ft::z2_two_points()) == VP{{2, 2}});
  CHECK(shape_of(ft::two_orbit_mixed()) == VP{{2, 1}, {2, 1}, {2, 2}});
  CHECK(block_shape(wedderburn(full_matrix_algebra(2), 0)) == VP{{2, 1}});
}

TEST_CASE("wedderburn produces consistent matrix units") {
  std::mt19937_64 rng(14);
  for (Action a : ft::all_fixtures()) {
    auto act = share(std::move(a));
    ConcreteAlgebra alg = crossed_algebra(act);
    Wedderburn w = wedderburn(alg, 1);
    int total = 0;
    for (const auto& blk : w.blocks) total += blk.m * blk.m;
    CHECK(total == alg.dim());

    Ambient y = pi_of_section(alg, ft::random_section(*act, rng));
    Ambient z = pi_of_section(alg, ft::random_section(*act, rng));
    for (const auto& blk : w.blocks) {
      auto cut = [&](const Ambient& v) {
        return blk.compress(ambient_mul(blk.projection, ambient_mul(v, blk.projection)));
      };
      // compress is a unital *-homomorphism on each corner
      CHECK(approx_equal(cut(ambient_mul(y, z)), cut(y) * cut(z), 1e-8));
      CHECK(approx_equal(cut(ambient_adjoint(y)), cut(y).adjoint(), 1e-8));
      CHECK(approx_equal(cut(alg.unit()), CMatrix::identity(blk.m), 1e-8));
      for (int i = 0; i < blk.m; ++i)
        for (int j = 0; j < blk.m; ++j) {
          CMatrix eij(blk.m, blk.m);
          eij(i, j) = 1;
          Ambient lifted = blk.lift(eij);
          double res = 0.0;
          alg.membership(lifted, &res);
          CHECK(res < 1e-8);
          CHECK(approx_equal(blk.compress(lifted), eij, 1e-8));
        }
    }
  }
}

TEST_CASE("complete positivity on the full matrix algebra") {
  auto alg = std::make_shared<const ConcreteAlgebra>(full_matrix_algebra(2));
  double res = 0.0;

  AlgebraMap id = algebra_map(alg, alg, [](const Ambient& y) { return y; }, &res);
  CHECK(res < 1e-12);
  CHECK(is_cp_on_algebra(id));

  AlgebraMap tr = algebra_map(
      alg, alg, [](const Ambient& y) { return Ambient{y[0].transpose()}; }, &res);
  CHECK(res < 1e-12);
  CHECK_FALSE(is_cp_on_algebra(tr));

  AlgebraMap neg = algebra_map(alg, alg, [](const Ambient& y) { return Ambient{cd(-1) * y[0]}; },
                               &res);
  CHECK_FALSE(is_cp_on_algebra(neg));

  std::mt19937_64 rng(15);
  CMatrix u = random_unitary(rng, 2);
  AlgebraMap adu = algebra_map(
      alg, alg, [&](const Ambient& y) { return Ambient{u * y[0] * u.adjoint()}; }, &res);
  CHECK(res < 1e-12);
  CHECK(is_cp_on_algebra(adu));

  AlgebraMap depol = algebra_map(
      alg, alg,
      [](const Ambient& y) { return Ambient{0.5 * y[0].trace() * CMatrix::identity(2)}; }, &res);
  CHECK(is_cp_on_algebra(depol));
}

TEST_CASE("complete positivity across different algebras") {
  // conditional expectation C*(K4,u) = Mat_2 -> C*(Z2) x 2 copies is CP;
  // here: compress a two-orbit algebra onto its unit-diagonal part
  auto act = share(ft::two_orbit_mixed());
  auto alg = std::make_shared<const ConcreteAlgebra>(crossed_algebra(act));
  double res = 0.0;
  AlgebraMap exp_map = algebra_map(
      alg, alg,
      [&](const Ambient& y) {
        Section s = section_of_pi(*alg, y);
        return pi_of_section(*alg, expectation(*act, s));
      },
      &res);
  CHECK(res < 1e-10);
  CHECK(is_cp_on_algebra(exp_map));
}
