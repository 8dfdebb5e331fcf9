#include <doctest.h>

#include <random>

#include "gapforge/generators.hpp"
#include "gapforge/symmetric_matrix.hpp"
#include "oracles.hpp"

using namespace gapforge;
using namespace gapforge::testing;

namespace {

SymMat<Rat> e_ij(int n, int i, int j) { return SymMat<Rat>::unit(n, i, j); }

}  // namespace

TEST_CASE("symmetry is a construction invariant") {
  Mat<Rat> bad(2, 2);
  bad(0, 1) = 1;
  CHECK_THROWS_AS(SymMat<Rat>::from_matrix(bad), std::invalid_argument);
  CHECK_THROWS_AS(SymMat<Rat>(0), std::invalid_argument);
}

TEST_CASE("inner product examples") {
  CHECK(inner(e_ij(3, 0, 0), SymMat<Rat>::identity(3)) == 1);
  SymMat<Rat> a(2), b(2);
  a.set(0, 1, Rat(1));
  b.set(0, 1, Rat(2));
  CHECK(inner(a, b) == 4);
  // objective row of the order-4 instance against its feasible dual point
  ExactInstance ex = gen_example51();
  CHECK(inner(ex.a[0], *ex.meta.dual_point) == 13);
  CHECK(inner(ex.a[1], *ex.meta.dual_point) == -3);
}

TEST_CASE("inner is bilinear and symmetric") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    SymMat<Rat> a = random_sym(n, rng), b = random_sym(n, rng), c = random_sym(n, rng);
    const Rat alpha = rat(static_cast<long>(rng() % 7) - 3), beta = rat(static_cast<long>(rng() % 7) - 3);
    CHECK(inner(a, b) == inner(b, a));
    CHECK(inner(alpha * a + beta * c, b) == alpha * inner(a, b) + beta * inner(c, b));
  }
}

TEST_CASE("congruence: identity, round trip, singular rejection") {
  std::mt19937_64 rng(11);
  SymMat<Rat> m = random_sym(4, rng);
  CHECK(congruence(m, Mat<Rat>::identity(4)) == m);
  Mat<Rat> t = random_unimodular(4, rng);
  auto tinv = inverse(t);
  REQUIRE(tinv);
  CHECK(congruence(congruence(m, t), *tinv) == m);
  Mat<Rat> sing(4, 4);  // zero matrix
  CHECK_THROWS_AS(congruence(m, sing), std::invalid_argument);
}

TEST_CASE("congruence preserves the inertia class") {
  std::mt19937_64 rng(13);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 100; ++trial) {
      SymMat<Rat> m = random_sym(n, rng);
      Mat<Rat> t = random_unimodular(n, rng);
      CHECK(psd_status(congruence(m, t)).cls == psd_status(m).cls);
    }
  }
}

TEST_CASE("exact psd classification matches the eigenvalue oracle") {
  CHECK(psd_status(SymMat<Rat>::identity(3)).cls == PsdClass::PositiveDefinite);
  CHECK(psd_status(SymMat<Rat>::diag({rat(1), rat(1), rat(0)})) ==
        PsdStatus{PsdClass::PsdRankDeficient, 2});
  // A2 of the small instance has eigenvalues {1, 1, -1}
  ExactInstance small = gen_small(rat(1));
  CHECK(oracle_psd_class(small.a[1]) == PsdClass::Indefinite);
  CHECK(psd_status(small.a[1]).cls == PsdClass::Indefinite);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    SymMat<Rat> m = random_sym(n, rng);
    CHECK(psd_status(m).cls == oracle_psd_class(m));
  }
}

TEST_CASE("exact and float psd classification agree away from the tolerance") {
  std::mt19937_64 rng(19);
  Tolerances tol;
  int compared = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    SymMat<Rat> m = random_sym(n, rng);
    SymMat<double> f = sym_to_float(m);
    // skip spectra that graze the classification threshold
    EigSym es = eig_sym(f);
    bool near = false;
    for (double v : es.values)
      if (std::abs(v) > 0 && std::abs(v) < 10 * tol.psd) near = true;
    if (near) continue;
    ++compared;
    CHECK(psd_status(f, tol).cls == psd_status(m).cls);
  }
  CHECK(compared > 300);
}

TEST_CASE("find_direction_of_sign certifies indefiniteness") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    SymMat<Rat> m = random_sym(n, rng);
    const PsdStatus st = psd_status(m);
    if (st.cls != PsdClass::Indefinite) continue;
    auto up = find_direction_of_sign(m, +1);
    auto dn = find_direction_of_sign(m, -1);
    REQUIRE(up);
    REQUIRE(dn);
    Rat qup(0), qdn(0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        qup += (*up)[i] * m(i, j) * (*up)[j];
        qdn += (*dn)[i] * m(i, j) * (*dn)[j];
      }
    CHECK(sgn(qup) > 0);
    CHECK(sgn(qdn) < 0);
  }
}

TEST_CASE("schur complement: identities and psd consistency") {
  CHECK(schur_complement(SymMat<Rat>::identity(4), 2) == SymMat<Rat>::identity(2));
  SymMat<Rat> g(2);
  g.set(0, 0, rat(2));
  g.set(0, 1, rat(1));
  g.set(1, 1, rat(1));
  SymMat<Rat> sc = schur_complement(g, 1);
  CHECK(sc.order() == 1);
  CHECK(sc(0, 0) == 1);

  CHECK_THROWS_AS(schur_complement(SymMat<Rat>::diag({rat(1), rat(0)}), 1), std::invalid_argument);

  std::mt19937_64 rng(29);
  int tested = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % (n - 1));
    SymMat<Rat> g2 = random_sym(n, rng);
    std::vector<int> tail;
    for (int i = n - k; i < n; ++i) tail.push_back(i);
    if (psd_status(g2.restrict_to(tail)).cls != PsdClass::PositiveDefinite) continue;
    ++tested;
    CHECK(psd_status(g2).is_psd() == psd_status(schur_complement(g2, k)).is_psd());
  }
  CHECK(tested > 20);
}

TEST_CASE("schur complement certifies definiteness along a ray (no-gap 2-variable instance)") {
  // diagonal instance: B - x1 A1 - x2 A2 with pd upper block for x1 << 0
  ExactInstance lp;
  lp.m = 2;
  lp.n = 3;
  lp.a = {SymMat<Rat>::diag({rat(1), rat(0), rat(0)}), SymMat<Rat>::diag({rat(0), rat(1), rat(0)})};
  lp.b = SymMat<Rat>::diag({rat(1), rat(1), rat(1)});
  lp.c = {rat(0), rat(1)};
  Slack<Rat> s = slack_at(lp, {rat(-10), rat(0)});
  // trailing 1x1 block is pd, so psd-ness reduces to the schur complement
  CHECK(psd_status(s.z).cls == PsdClass::PositiveDefinite);
  CHECK(psd_status(schur_complement(s.z, 1)).cls == PsdClass::PositiveDefinite);
}

TEST_CASE("eig_sym: identity, off-diagonal unit, construct-then-recover") {
  EigSym id = eig_sym(sym_to_float(SymMat<Rat>::identity(2)));
  CHECK(id.values[0] == doctest::Approx(1.0));
  CHECK(id.values[1] == doctest::Approx(1.0));

  SymMat<double> e12(2);
  e12.set(0, 1, 1.0);
  EigSym off = eig_sym(e12);
  CHECK(off.values[0] == doctest::Approx(1.0));
  CHECK(off.values[1] == doctest::Approx(-1.0));

  std::mt19937_64 rng(31);
  Mat<Rat> q = random_unimodular(2, rng);
  // orthonormalize the first column by scaling: instead rotate by an angle
  const double theta = 0.7;
  Mat<double> rot(2, 2);
  rot(0, 0) = std::cos(theta);
  rot(0, 1) = -std::sin(theta);
  rot(1, 0) = std::sin(theta);
  rot(1, 1) = std::cos(theta);
  SymMat<double> d = SymMat<double>::diag({3.0, 1.0});
  SymMat<double> m = congruence(d, rot);
  EigSym es = eig_sym(m);
  CHECK(es.values[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(es.values[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rank_psd") {
  CHECK(rank_psd(SymMat<Rat>::diag({rat(1), rat(1), rat(0)})) == 2);
  CHECK(rank_psd(SymMat<Rat>(3)) == 0);
  ExactInstance single = gen_single(5, rat(1), false);
  CHECK(rank_psd(single.b) == 5);
  SymMat<Rat> indef = SymMat<Rat>::diag({rat(1), rat(-1)});
  CHECK_THROWS_AS(rank_psd(indef), std::invalid_argument);
}

TEST_CASE("tolerance overrides parse from the environment") {
  Tolerances base;
  CHECK(tolerances_from_env(base).psd == base.psd);
  setenv("GAPFORGE_TOLERANCES", "psd=1e-7, zero=1e-5", 1);
  Tolerances t = tolerances_from_env(base);
  CHECK(t.psd == doctest::Approx(1e-7));
  CHECK(t.zero == doctest::Approx(1e-5));
  CHECK(t.eig == base.eig);
  setenv("GAPFORGE_TOLERANCES", "bogus=1", 1);
  CHECK_THROWS_AS(tolerances_from_env(base), std::invalid_argument);
  unsetenv("GAPFORGE_TOLERANCES");
}
