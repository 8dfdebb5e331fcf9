#include <doctest.h>

#include <random>

#include "gapforge/canonical.hpp"
#include "gapforge/facial.hpp"
#include "gapforge/generators.hpp"
#include "gapforge/instance.hpp"
#include "oracles.hpp"

using namespace gapforge;
using namespace gapforge::testing;

TEST_CASE("slack_at on the small instance") {
  ExactInstance small = gen_small(rat(1));
  Slack<Rat> at0 = slack_at(small, {rat(0), rat(0)});
  CHECK(at0.z == small.b);
  CHECK(at0.feasible);
  // x2 = 1 puts a nonzero entry next to the zero (3,3) diagonal
  Slack<Rat> at01 = slack_at(small, {rat(0), rat(1)});
  CHECK_FALSE(at01.feasible);
  CHECK(at01.z(2, 2) == 0);
  CHECK(at01.z(0, 2) != 0);

  ExactInstance sing = gen_single(3, rat(1), false);
  CHECK(slack_at(sing, {rat(-5), rat(0), rat(0)}).feasible);
}

TEST_CASE("dual_residual") {
  ExactInstance ex = gen_example51();
  auto resid = dual_residual(ex, *ex.meta.dual_point);
  CHECK(resid[0] == 0);
  CHECK(resid[1] == 0);
  auto at_zero = dual_residual(ex, SymMat<Rat>(4));
  CHECK(at_zero[0] == -13);
  CHECK(at_zero[1] == 3);

  ExactInstance small = gen_small(rat(1));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Rat t = rat(static_cast<long>(rng() % 9) - 4);
    SymMat<Rat> y = SymMat<Rat>::diag({rat(0), rat(1), t});
    auto r = dual_residual(small, y);
    CHECK(r[0] == 0);
    CHECK(r[1] == 0);
  }
}

TEST_CASE("hd_constraints") {
  ExactInstance small = gen_small(rat(1));
  auto h = hd_constraints(small);
  CHECK(h.size() == 3);
  SymMat<Rat> y = SymMat<Rat>::diag({rat(0), rat(0), rat(1)});
  for (const auto& hc : h) CHECK(inner(hc, y) == 0);
  for (const auto& hc : h) CHECK(inner(hc, SymMat<Rat>(3)) == 0);
}

TEST_CASE("apply_reform: parameter validation and involution") {
  ExactInstance small = gen_small(rat(1));
  CHECK_THROWS_AS(apply_reform(small, OpSwap{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(apply_reform(small, OpAddToB{0, rat(0)}), std::invalid_argument);
  CHECK_THROWS_AS(apply_reform(small, OpCombine{0, rat(0), 1, rat(1)}), std::invalid_argument);
  Mat<Rat> sing(3, 3);
  CHECK_THROWS_AS(apply_reform(small, OpCongruence{sing}), std::invalid_argument);

  ExactInstance once = apply_reform(small, OpSwap{0, 1});
  ExactInstance twice = apply_reform(once, OpSwap{0, 1});
  CHECK(twice.a[0] == small.a[0]);
  CHECK(twice.a[1] == small.a[1]);
  CHECK(twice.c == small.c);

  ExactInstance same = apply_reform(small, OpCongruence{Mat<Rat>::identity(3)});
  CHECK(same.a[0] == small.a[0]);
  CHECK(same.b == small.b);
  CHECK(same.meta.reform_history.size() == 1);
}

TEST_CASE("certified values are invariant under a combine op") {
  ExactInstance single = gen_single(2, rat(1), false);
  GapCertificate before = certify_gap(single);
  REQUIRE(before.conclusive());
  // this op leaves no zero-rhs constraint, so the structural elimination
  // stalls; for m = 2 the canonical pipeline supplies the certificate
  ExactInstance reformed = apply_reform(single, OpCombine{0, rat(1), 1, rat(3)});
  GapCertificate stalled = certify_gap(reformed);
  CHECK_FALSE(stalled.dual_value.has_value());
  CanonicalizeOutcome out = canonicalize(reformed);
  const auto* form = std::get_if<CanonicalForm>(&out);
  REQUIRE(form);
  GapCertificate after = canonical_certificate(*form);
  CHECK(*before.primal_value == *after.primal_value);
  CHECK(*before.dual_value == *after.dual_value);
}

TEST_CASE("AddToB shifts both known values by lambda * c_j") {
  ExactInstance small = gen_small(rat(1));
  ExactInstance shifted = apply_reform(small, OpAddToB{1, rat(2)});
  REQUIRE(shifted.meta.known_gap);
  CHECK(shifted.meta.known_gap->first == ExtendedRat(rat(2)));
  CHECK(shifted.meta.known_gap->second == ExtendedRat(rat(3)));
  // with c_j = 0 the values are unchanged
  ExactInstance same = apply_reform(small, OpAddToB{0, rat(2)});
  CHECK(same.meta.known_gap->first == ExtendedRat(rat(0)));
  CHECK(same.meta.known_gap->second == ExtendedRat(rat(1)));
}

TEST_CASE("feasibility is invariant under ops 2-4 at the transformed point") {
  std::mt19937_64 rng(41);
  ExactInstance inst = gen_single(3, rat(1), false);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Rat> x(inst.m);
    for (auto& v : x) v = rat(static_cast<long>(rng() % 7) - 3);
    const bool feas = slack_at(inst, x).feasible;

    ExactInstance sw = apply_reform(inst, OpSwap{0, 2});
    std::vector<Rat> xs = {x[2], x[1], x[0]};
    CHECK(slack_at(sw, xs).feasible == feas);

    const Rat lam = rat(2), mu = rat(-1);
    ExactInstance cb = apply_reform(inst, OpCombine{1, lam, 2, mu});
    std::vector<Rat> xc = x;
    xc[1] = x[1] / lam;
    xc[2] = x[2] - mu * x[1] / lam;
    CHECK(slack_at(cb, xc).feasible == feas);

    Mat<Rat> t = random_unimodular(inst.n, rng);
    ExactInstance cg = apply_reform(inst, OpCongruence{t});
    CHECK(slack_at(cg, x).feasible == feas);
  }
}

TEST_CASE("weak duality on sampled feasible pairs") {
  ExactInstance inst = gen_single(3, rat(10), false);
  // dual-feasible points: zero out rows 1..m-1 and solve the last constraint
  std::vector<SymMat<Rat>> duals;
  for (long t = 1; t <= 3; ++t) {
    SymMat<Rat> y(inst.n);
    y.set(inst.m - 1, inst.m - 1, rat(10));
    y.set(inst.n - 1, inst.n - 1, rat(t));
    duals.push_back(y);
  }
  std::mt19937_64 rng(43);
  int pairs = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // feasible points have x_2 = x_3 = 0; mix constructed and random draws
    std::vector<Rat> x(inst.m, rat(0));
    x[0] = rat(static_cast<long>(rng() % 7) - 5);
    if (trial % 3 == 0)
      for (auto& v : x) v = rat(static_cast<long>(rng() % 11) - 5);
    Slack<Rat> s = slack_at(inst, x);
    if (!s.feasible) continue;
    for (const auto& y : duals) {
      REQUIRE(psd_status(y).is_psd());
      for (const Rat& r : dual_residual(inst, y)) REQUIRE(r == 0);
      Rat obj(0);
      for (int i = 0; i < inst.m; ++i) obj += inst.c[i] * x[i];
      CHECK(obj <= inner(inst.b, y));
      ++pairs;
    }
  }
  CHECK(pairs > 0);
}
