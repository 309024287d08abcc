#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <memory>
#include <random>

#include "doctest.h"
#include "fslab/correspondence.hpp"
#include "helpers.hpp"

using namespace fslab;
using namespace fslab::testing;

namespace {

std::shared_ptr<const Action> share(Action a) {
  return std::make_shared<const Action>(std::move(a));
}

// the line-bundle twist of the trivial Z2 module: P_s = -1
Correspondence sign_twisted_z2(std::shared_ptr<const Action> act) {
  Correspondence c = identity_correspondence(act);
  c.P[1] *= cd(-1.0);
  return c;
}

ESection random_unit_section(const Correspondence& c, std::mt19937_64& rng) {
  ESection s(c.src->G->n_arrows);
  for (int x : c.src->G->units) s[x] = random_matrix(rng, c.d[x], c.nb(x));
  return s;
}

ESection random_arrow_section(const Correspondence& c, std::mt19937_64& rng) {
  ESection s(c.src->G->n_arrows);
  for (int t = 0; t < c.src->G->n_arrows; ++t) {
    const int x = c.src->G->src[t];
    s[t] = random_matrix(rng, c.d[x], c.nb(x));
  }
  return s;
}

std::string first_issue(const Report& rep) {
  return rep.issues.empty() ? std::string("ok") : rep.issues.front();
}

Section hermitian_section(const Action& act, std::mt19937_64& rng) {
  Section a = random_section(act, rng);
  const Section as = star(act, a);
  for (std::size_t g = 0; g < a.size(); ++g) a[g] += as[g];
  return a;
}

}  // namespace

TEST_CASE("identity correspondences validate") {
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    const Correspondence c = identity_correspondence(act);
    const Report rep = validate_correspondence(c);
    CHECK_MESSAGE(rep.ok(), first_issue(rep));
  }
}

TEST_CASE("validation catches broken correspondences") {
  auto act = share(z2_trivial());
  CHECK(validate_correspondence(sign_twisted_z2(act)).ok());

  SUBCASE("non-unitary arrow operator") {
    Correspondence c = identity_correspondence(act);
    c.P[1](0, 0) = 2.0;
    CHECK_FALSE(validate_correspondence(c).ok());
  }
  SUBCASE("unit arrow operator must be exactly one") {
    Correspondence c = identity_correspondence(act);
    c.P[0](0, 0) = 1.0 + 1e-12;
    CHECK_FALSE(validate_correspondence(c).ok());
  }
  SUBCASE("non-unitary frame") {
    Correspondence c = identity_correspondence(act);
    c.W[0](0, 0) = 0.5;
    CHECK_FALSE(validate_correspondence(c).ok());
  }
  SUBCASE("phase that is not a character breaks the cocycle identity") {
    auto k4 = share(klein4_twisted());
    Correspondence c = identity_correspondence(k4);
    c.P[1] *= cd(-1.0);
    c.P[3] *= cd(-1.0);
    CHECK(validate_correspondence(c).ok());  // a genuine character survives
    c.P[3] *= cd(-1.0);
    CHECK_FALSE(validate_correspondence(c).ok());
  }
  SUBCASE("equivariance failure") {
    auto mx = share(two_orbit_mixed());
    Correspondence c = identity_correspondence(mx);
    c.P[1] = CMatrix::identity(2);  // forgets the Ad diag(1,-1) twist
    CHECK_FALSE(validate_correspondence(c).ok());
  }
}

TEST_CASE("module_from_gram reproduces the gram matrix") {
  std::mt19937_64 rng(7);
  const CMatrix r = random_matrix(rng, 3, 10);
  const CMatrix gram = r.adjoint() * r;
  const GramRealization gr = module_from_gram(gram, 2);
  CHECK(gr.rho == 3);
  REQUIRE(gr.vectors.size() == 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const CMatrix got = gr.vectors[i].adjoint() * gr.vectors[j];
      const CMatrix want = get_block(gram, 2 * i, 2 * j, 2, 2);
      CHECK((got - want).max_abs() < 1e-10);
    }
}

TEST_CASE("normalize_left_action recovers amplified representations") {
  std::mt19937_64 rng(11);
  for (auto [na, k] : {std::pair{2, 1}, std::pair{2, 3}, std::pair{3, 2}}) {
    const int d = na * k;
    const CMatrix u = random_unitary(rng, d);
    const CMatrix ik = CMatrix::identity(k);
    std::vector<CMatrix> phi_units(static_cast<std::size_t>(na) * na);
    for (int p = 0; p < na; ++p)
      for (int q = 0; q < na; ++q) {
        CMatrix e(na, na);
        e(p, q) = 1.0;
        phi_units[static_cast<std::size_t>(p) * na + q] = u * kron(e, ik) * u.adjoint();
      }
    const auto [k2, frame] = normalize_left_action(phi_units, na);
    CHECK(k2 == k);
    for (int p = 0; p < na; ++p)
      for (int q = 0; q < na; ++q) {
        CMatrix e(na, na);
        e(p, q) = 1.0;
        const CMatrix got = frame * kron(e, ik) * frame.adjoint();
        CHECK((got - phi_units[static_cast<std::size_t>(p) * na + q]).max_abs() < 1e-10);
      }
  }
  CHECK_THROWS_AS(normalize_left_action(std::vector<CMatrix>(4, CMatrix::identity(5)), 2),
                  std::runtime_error);
}

TEST_CASE("tensor products are balanced and preserve inner products") {
  std::mt19937_64 rng(23);
  for (const Action& fx : {z2_twisted(), klein4_twisted(), pair3_trivial(), two_orbit_mixed()}) {
    auto act = share(fx);
    const Correspondence e = identity_correspondence(act);
    const TensorData td = tensor(e, e);
    const Report rep = validate_correspondence(td.c);
    CHECK_MESSAGE(rep.ok(), first_issue(rep));
    for (int x : act->G->units) {
      CHECK(td.c.d[x] == e.d[x] * e.k[x]);
      const int d = e.d[x], nb = e.nb(x);
      const CMatrix xi = random_matrix(rng, d, nb), zeta = random_matrix(rng, d, nb);
      const CMatrix xi2 = random_matrix(rng, d, nb), b = random_matrix(rng, nb, nb);
      const CMatrix v1 = tensor_vector(td, x, xi * b, zeta);
      const CMatrix v2 = tensor_vector(td, x, xi, e.phi(x, b) * zeta);
      CHECK((v1 - v2).max_abs() < 1e-9);
      const CMatrix got = tensor_vector(td, x, xi, zeta).adjoint() * tensor_vector(td, x, xi2, b);
      const CMatrix want = zeta.adjoint() * e.phi(x, xi.adjoint() * xi2) * b;
      CHECK((got - want).max_abs() < 1e-9);
    }
  }
}

TEST_CASE("tensor of line bundle twists multiplies the phases") {
  auto act = share(z2_trivial());
  const Correspondence sign = sign_twisted_z2(act);
  const Correspondence id = identity_correspondence(act);
  const TensorData both = tensor(sign, sign);
  CHECK((both.c.P[1] - CMatrix::identity(1)).max_abs() < 1e-9);
  const TensorData one = tensor(sign, id);
  CHECK((one.c.P[1] + CMatrix::identity(1)).max_abs() < 1e-9);
}

TEST_CASE("direct sum and amplification") {
  auto act = share(two_orbit_mixed());
  const Correspondence e = identity_correspondence(act);
  const Correspondence s = direct_sum(e, e);
  CHECK(validate_correspondence(s).ok());
  for (int x : act->G->units) {
    CHECK(s.d[x] == 2 * e.d[x]);
    CHECK(s.k[x] == 2 * e.k[x]);
  }
  const Correspondence a3 = amplify(e, 3);
  CHECK(validate_correspondence(a3).ok());
  for (int x : act->G->units) CHECK(a3.d[x] == 3 * e.d[x]);

  auto z2 = share(z2_trivial());
  const Correspondence twisted = amplify(sign_twisted_z2(z2), 2);
  CHECK(validate_correspondence(twisted).ok());
  CHECK((twisted.P[1] + CMatrix::identity(2)).max_abs() == 0.0);
}

TEST_CASE("regularization stacks translated slots") {
  std::mt19937_64 rng(31);
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    const Correspondence e = identity_correspondence(act);
    const Correspondence r = regularize(e);
    const Report rep = validate_correspondence(r);
    CHECK_MESSAGE(rep.ok(), first_issue(rep));
    const ESection xi = random_arrow_section(e, rng);
    const ESection st = stack_section(e, xi);
    const FiniteGroupoid& G = *act->G;
    for (int g = 0; g < G.n_arrows; ++g) {
      const CMatrix got = r.L(g, st[G.src[g]]);
      const auto fib = G.fibre_s(G.rng[g]);
      const std::size_t d = static_cast<std::size_t>(e.d[G.rng[g]]);
      CMatrix want(fib.size() * d, static_cast<std::size_t>(e.nb(G.rng[g])));
      for (std::size_t tp = 0; tp < fib.size(); ++tp)
        set_block(want, tp * d, 0, e.L(g, xi[G.compose(fib[tp], g)]));
      CHECK((got - want).max_abs() < 1e-12);
    }
  }
}

TEST_CASE("pi on the regular module extends the regular representation") {
  std::mt19937_64 rng(37);
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    const Correspondence e = identity_correspondence(act);
    const Section a = random_section(*act, rng);
    for (int x : act->G->units)
      CHECK((pi_e_block(e, x, a) - regular_block(*act, x, a)).max_abs() < 1e-12);
  }
  // pi stays a *-homomorphism on a non-trivial module
  auto act = share(two_orbit_mixed());
  const Correspondence e = identity_correspondence(act);
  const TensorData td = tensor(e, e);
  const Section a = random_section(*act, rng), b = random_section(*act, rng);
  for (int x : act->G->units) {
    const CMatrix pa = pi_e_block(td.c, x, a), pb = pi_e_block(td.c, x, b);
    CHECK((pi_e_block(td.c, x, convolve(*act, a, b)) - pa * pb).max_abs() < 1e-9);
    CHECK((pi_e_block(td.c, x, star(*act, a)) - pa.adjoint()).max_abs() < 1e-9);
  }
}

TEST_CASE("absorption of the regular module") {
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    const Correspondence e = identity_correspondence(act);
    for (bool right : {true, false}) {
      const Absorption ab = right ? absorb_regular_right(e) : absorb_regular_left(e);
      const FiniteGroupoid& G = *act->G;
      for (int g = 0; g < G.n_arrows; ++g) {
        const CMatrix lhs = ab.gamma[G.rng[g]] * ab.lhs.c.P[g];
        const CMatrix rhs = ab.rhs.P[g] * ab.gamma[G.src[g]];
        CHECK((lhs - rhs).max_abs() < 1e-8);
      }
      std::mt19937_64 rng(41);
      for (int x : G.units) {
        const CMatrix a = random_matrix(rng, e.na(x), e.na(x));
        const CMatrix lhs = ab.gamma[x] * ab.lhs.c.phi(x, a);
        const CMatrix rhs = ab.rhs.phi(x, a) * ab.gamma[x];
        CHECK((lhs - rhs).max_abs() < 1e-8 * (1.0 + a.max_abs()));
      }
    }
  }
}

TEST_CASE("fell absorption turns multiplication into the regular picture") {
  std::mt19937_64 rng(43);
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    auto e = std::make_shared<const Correspondence>(identity_correspondence(act));
    const FellAbsorption fa = fell_absorption(e);
    const FiniteGroupoid& G = *act->G;
    for (std::size_t ui = 0; ui < G.units.size(); ++ui) {
      const int x = G.units[ui];
      const auto fib = G.fibre_s(x);
      const int d = e->d[x], nb = e->nb(x);
      const ESection xi = random_unit_section(*e, rng);
      const CMatrix b = random_matrix(rng, fib.size() * nb, nb);
      // the defining action of the unitary on simple tensors
      CMatrix want(fib.size() * static_cast<std::size_t>(d), static_cast<std::size_t>(nb));
      for (std::size_t tp = 0; tp < fib.size(); ++tp)
        set_block(want, tp * d, 0,
                  e->L_inverse(fib[tp], xi[G.rng[fib[tp]]]) *
                      get_block(b, tp * nb, 0, nb, nb));
      const CMatrix got = fa.w[ui] * fell_domain_vector(fa, x, xi, b);
      CHECK((got - want).max_abs() < 1e-9 * (1.0 + b.max_abs()));
      // conjugation identity for generators
      for (int f = 0; f < G.n_arrows; ++f) {
        const CMatrix a = random_matrix(rng, act->fibre_dim(f), act->fibre_dim(f));
        const double res = fell_conjugation_residual(fa, f, a, xi, x, b);
        CHECK(res < 1e-9 * (1.0 + a.max_abs() * b.max_abs()));
      }
    }
  }
}

TEST_CASE("fell absorption on a twisted line bundle") {
  std::mt19937_64 rng(47);
  auto act = share(z2_twisted());
  // line-bundle twist over the twisted action, so both twists are exercised
  auto et = std::make_shared<const Correspondence>([&] {
    Correspondence c = identity_correspondence(act);
    c.P[1] *= cd(-1.0);
    return c;
  }());
  REQUIRE(validate_correspondence(*et).ok());
  const FellAbsorption fa = fell_absorption(et);
  const FiniteGroupoid& G = *act->G;
  const ESection xi = random_unit_section(*et, rng);
  const CMatrix b = random_matrix(rng, 2, 1);
  for (int f = 0; f < G.n_arrows; ++f) {
    const CMatrix a = random_matrix(rng, 1, 1);
    CHECK(fell_conjugation_residual(fa, f, a, xi, 0, b) < 1e-9);
  }
}

TEST_CASE("representations of the section algebra validate") {
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    auto alg = std::make_shared<const ConcreteAlgebra>(crossed_algebra(act));
    const Rep reg = regular_rep(alg);
    CHECK(validate_rep(reg).ok());
    const Rep rnd = random_rep(alg, 17);
    CHECK(validate_rep(rnd).ok());
  }
}

TEST_CASE("induced representations are star homomorphisms") {
  std::mt19937_64 rng(53);
  for (const Action& fx : {z2_twisted(), klein4_twisted(), z2_two_points()}) {
    auto act = share(fx);
    auto alg = std::make_shared<const ConcreteAlgebra>(crossed_algebra(act));
    auto e = std::make_shared<const Correspondence>(identity_correspondence(act));
    const Induced ind = induce(e, regular_rep(alg));
    CHECK((ind.apply_algebra(unit_section(*act)) - CMatrix::identity(ind.rho)).max_abs() < 1e-9);
    const Section a = random_section(*act, rng), b = random_section(*act, rng);
    const CMatrix xa = ind.apply_algebra(a), xb = ind.apply_algebra(b);
    const double scale = 1.0 + xa.max_abs() * xb.max_abs();
    CHECK((ind.apply_algebra(convolve(*act, a, b)) - xa * xb).max_abs() < 1e-8 * scale);
    CHECK((ind.apply_algebra(star(*act, a)) - xa.adjoint()).max_abs() < 1e-8 * scale);
  }
}

TEST_CASE("fell absorption ii intertwines the induced representation") {
  std::mt19937_64 rng(59);
  for (const Action& fx : all_fixtures()) {
    auto act = share(fx);
    auto alg = std::make_shared<const ConcreteAlgebra>(crossed_algebra(act));
    auto e = std::make_shared<const Correspondence>(identity_correspondence(act));
    std::vector<Rep> reps;
    reps.push_back(regular_rep(alg));
    if (act->G->n_arrows <= 8) reps.push_back(random_rep(alg, 61));
    for (const Rep& psi : reps) {
      const AbsorptionII ab = fell_absorption_ii(e, psi);
      const FiniteGroupoid& G = *act->G;
      for (int v = 0; v < G.n_arrows; ++v) {
        const CMatrix a = random_matrix(rng, act->fibre_dim(v), act->fibre_dim(v));
        const CMatrix lhs = ab.w * ab.ind.generator(v, a);
        const CMatrix rhs = ab.pi_tensor(v, a) * ab.w;
        CHECK((lhs - rhs).max_abs() < 1e-8 * (1.0 + a.max_abs()));
      }
      const Section c = hermitian_section(*act, rng);
      CMatrix m1 = ab.ind.apply_algebra(c), m2 = ab.pi_tensor_section(c);
      m1 += m1.adjoint();
      m1 *= 0.5;
      m2 += m2.adjoint();
      m2 *= 0.5;
      const auto e1 = hermitian_eig(m1), e2 = hermitian_eig(m2);
      REQUIRE(e1.values.size() == e2.values.size());
      for (std::size_t i = 0; i < e1.values.size(); ++i)
        CHECK(std::abs(e1.values[i] - e2.values[i]) < 1e-7 * (1.0 + std::abs(e1.values[i])));
    }
  }
}
