#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "towerforge/biquad.hpp"
#include "towerforge/errors.hpp"
#include "towerforge/quadfield.hpp"

using namespace towerforge;
using namespace towerforge::biquad;
using namespace towerforge::quad;
using arith::i64;

namespace {

QuadInt qi(const QuadField& K, i64 u, i64 v) { return qi_make(K, mpz_class(u), mpz_class(v)); }

BqElem radical(const BiquadField& B, int i) {
  BqElem r = bq_from_rational(0);
  r.c[i] = 1;
  return r;
}

mpq_class q_of(i64 num, i64 den) {
  mpq_class r(num, den);
  r.canonicalize();
  return r;
}

// the product torsion^cls[0] * prod eps_i^cls[i] that a Kubota root squares to
BqElem class_product(const BiquadField& B, const KubotaResult& R, const std::array<int, 4>& cls) {
  BqElem x = bq_from_rational(1);
  for (int t = 0; t < cls[0]; ++t) x = bq_mul(B, x, R.torsion_gen);
  for (int i = 1; i < 4; ++i)
    if (cls[i]) x = bq_mul(B, x, bq_embed(B, i, unit_group(B.subfield(i)).eps));
  return x;
}

void check_kubota_roots(const BiquadField& B, const KubotaResult& R) {
  REQUIRE(R.new_roots.size() == R.root_squares.size());
  REQUIRE(R.new_roots.size() == R.root_classes.size());
  for (size_t i = 0; i < R.new_roots.size(); ++i) {
    CHECK(bq_mul(B, R.new_roots[i], R.new_roots[i]) == R.root_squares[i]);
    CHECK(R.root_squares[i] == class_product(B, R, R.root_classes[i]));
  }
}

}  // namespace

TEST_CASE("biquadratic field construction derives the third subfield") {
  BiquadField B(2, 5);
  CHECK(B.d1 == 8);
  CHECK(B.d2 == 5);
  CHECK(B.m3 == 10);
  CHECK(B.d3 == 40);
  CHECK(B.real());

  BiquadField C(-1, -3);
  CHECK(C.d1 == -4);
  CHECK(C.d2 == -3);
  CHECK(C.m3 == 3);
  CHECK(C.d3 == 12);
  CHECK(!C.real());

  // non-squarefree input reduces to the kernel
  BiquadField D(8, 5);
  CHECK(D.m1 == 2);
  CHECK(D.d1 == 8);

  CHECK(B.subfield(3).d == 10);
  CHECK_THROWS_AS(B.subfield(0), domain_error);
  CHECK_THROWS_AS(BiquadField(2, 2), domain_error);
  CHECK_THROWS_AS(BiquadField(2, 8), domain_error);   // same kernel
  CHECK_THROWS_AS(BiquadField(0, 5), domain_error);
  CHECK_THROWS_AS(BiquadField(4, 5), domain_error);   // square
}

TEST_CASE("multiplication respects the radical product conventions") {
  // sqrt(-1) sqrt(-3) = -sqrt(3)
  BiquadField B(-1, -3);
  BqElem i1 = radical(B, 1), r3m = radical(B, 2);
  BqElem p = bq_mul(B, i1, r3m);
  CHECK(p == bq_neg(radical(B, 3)));

  // sqrt(2) sqrt(10) = 2 sqrt(5)
  BiquadField C(2, 10);
  CHECK(C.m2 == 10);
  CHECK(C.m3 == 5);
  BqElem q = bq_mul(C, radical(C, 1), radical(C, 2));
  BqElem expect = bq_from_rational(0);
  expect.c[3] = 2;
  CHECK(q == expect);

  // zeta_8 = (sqrt(2) + sqrt(-2))/2 squares to i
  BiquadField Z(-1, 2);
  CHECK(Z.m3 == -2);
  BqElem z8 = bq_from_rational(0);
  z8.c[2] = q_of(1, 2);
  z8.c[3] = q_of(1, 2);
  CHECK(bq_mul(Z, z8, z8) == radical(Z, 1));

  // squares of the radicals
  for (int i = 1; i <= 3; ++i) {
    i64 m = i == 1 ? Z.m1 : (i == 2 ? Z.m2 : Z.m3);
    CHECK(bq_mul(Z, radical(Z, i), radical(Z, i)) == bq_from_rational(m));
  }
}

TEST_CASE("ring axioms on sampled elements") {
  BiquadField B(-1, 2);
  std::mt19937_64 rng(7001);
  auto rnd = [&]() {
    BqElem x;
    for (int i = 0; i < 4; ++i) x.c[i] = q_of(i64(rng() % 19) - 9, i64(rng() % 3) + 1);
    return x;
  };
  for (int trial = 0; trial < 40; ++trial) {
    BqElem x = rnd(), y = rnd(), z = rnd();
    CHECK(bq_mul(B, x, y) == bq_mul(B, y, x));
    CHECK(bq_mul(B, x, bq_mul(B, y, z)) == bq_mul(B, bq_mul(B, x, y), z));
    CHECK(bq_mul(B, x, bq_add(y, z)) == bq_add(bq_mul(B, x, y), bq_mul(B, x, z)));
  }
}

TEST_CASE("conjugations fix their subfield and compose to the norm") {
  BiquadField B(2, 5);
  BqElem x;
  x.c = {q_of(1, 2), q_of(3, 1), q_of(-2, 1), q_of(5, 2)};
  for (int i = 1; i <= 3; ++i) {
    BqElem c = bq_conj(B, x, i);
    CHECK(bq_conj(B, c, i) == x);
    CHECK(c.c[0] == x.c[0]);
    CHECK(c.c[i] == x.c[i]);
  }
  // norm of an embedded subfield unit is a rational unit
  QuadField k3(10);
  BqElem eps10 = bq_embed(B, 3, unit_group(k3).eps);
  CHECK(bq_abs_norm(B, eps10) == 1);
  CHECK(bq_abs_norm(B, bq_from_rational(q_of(-3, 2))) == q_of(81, 16));

  BiquadField Z(-1, 2);
  BqElem z8 = bq_from_rational(0);
  z8.c[2] = q_of(1, 2);
  z8.c[3] = q_of(1, 2);
  CHECK(bq_abs_norm(Z, z8) == 1);
}

TEST_CASE("square roots in the biquadratic field") {
  BiquadField B(-1, 2);

  SUBCASE("rational squares and radical multiples") {
    auto r = bq_sqrt(B, bq_from_rational(4));
    REQUIRE(r.has_value());
    CHECK(bq_mul(B, *r, *r) == bq_from_rational(4));
    // -4 = (2i)^2
    auto s = bq_sqrt(B, bq_from_rational(-4));
    REQUIRE(s.has_value());
    CHECK(bq_mul(B, *s, *s) == bq_from_rational(-4));
    // 2 has the root sqrt(2) inside the field
    auto t = bq_sqrt(B, bq_from_rational(2));
    REQUIRE(t.has_value());
    CHECK(bq_mul(B, *t, *t) == bq_from_rational(2));
  }

  SUBCASE("roundtrip on sampled squares") {
    std::mt19937_64 rng(7002);
    for (i64 pr : {0, 1}) {
      BiquadField F = pr == 0 ? BiquadField(-1, 2) : BiquadField(2, 5);
      for (int trial = 0; trial < 25; ++trial) {
        BqElem y;
        for (int i = 0; i < 4; ++i) y.c[i] = q_of(i64(rng() % 9) - 4, i64(rng() % 2) + 1);
        BqElem x = bq_mul(F, y, y);
        auto r = bq_sqrt(F, x);
        REQUIRE(r.has_value());
        CHECK(bq_mul(F, *r, *r) == x);
      }
    }
  }

  SUBCASE("non-squares are rejected") {
    CHECK(!bq_sqrt(B, bq_from_rational(3)).has_value());
    CHECK(!bq_sqrt(B, radical(B, 2)).has_value());  // fourth root of 2
    BiquadField R(2, 5);
    CHECK(!bq_sqrt(R, bq_from_rational(-1)).has_value());
    CHECK(!bq_sqrt(R, bq_from_rational(3)).has_value());
  }

  SUBCASE("zero") {
    auto r = bq_sqrt(B, bq_from_rational(0));
    REQUIRE(r.has_value());
    CHECK(bq_is_zero(*r));
  }
}

TEST_CASE("unit index of real biquadratic fields") {
  SUBCASE("Q(sqrt 2, sqrt 5): the product of the three units is a square") {
    BiquadField B(2, 5);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.q_index == 2);
    CHECK(R.torsion_order == 2);
    REQUIRE(R.new_roots.size() == 1);
    CHECK(R.root_classes[0] == std::array<int, 4>{0, 1, 1, 1});
    CHECK(R.fundamental.size() == 3);
    check_kubota_roots(B, R);
  }

  SUBCASE("Q(sqrt 2, sqrt 3): index four, sqrt(eps_12) = (sqrt 2 + sqrt 6)/2") {
    BiquadField B(2, 3);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.q_index == 4);
    REQUIRE(R.new_roots.size() == 2);
    bool found = false;
    for (size_t i = 0; i < R.new_roots.size(); ++i) {
      if (R.root_classes[i] == std::array<int, 4>{0, 0, 1, 0}) {
        found = true;
        BqElem expect = bq_from_rational(0);
        expect.c[1] = q_of(1, 2);  // sqrt(2)/2
        expect.c[3] = q_of(1, 2);  // sqrt(6)/2
        BqElem got = R.new_roots[i];
        CHECK((got == expect || got == bq_neg(expect)));
      }
    }
    CHECK(found);
    check_kubota_roots(B, R);
  }

  SUBCASE("Q(sqrt 3, sqrt 5)") {
    BiquadField B(3, 5);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.q_index == 2);
    check_kubota_roots(B, R);
  }
}

TEST_CASE("unit index of imaginary biquadratic fields") {
  SUBCASE("Q(zeta_8)") {
    BiquadField B(-1, 2);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.torsion_order == 8);
    CHECK(R.q_index == 2);
    CHECK(R.new_roots.empty());
    CHECK(R.fundamental.size() == 1);
    BqElem z = R.torsion_gen;
    BqElem z2 = bq_mul(B, z, z);
    CHECK(z2 == radical(B, 1));  // zeta_8^2 = i
    check_kubota_roots(B, R);
  }

  SUBCASE("Q(zeta_12): zeta eps_12 is a square") {
    BiquadField B(-1, -3);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.torsion_order == 12);
    CHECK(R.q_index == 2);
    REQUIRE(R.new_roots.size() == 1);
    CHECK(R.root_classes[0] == std::array<int, 4>{1, 0, 0, 1});
    check_kubota_roots(B, R);
  }

  SUBCASE("Q(i, sqrt 5): index one") {
    BiquadField B(-1, 5);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.torsion_order == 4);
    CHECK(R.q_index == 1);
    CHECK(R.new_roots.empty());
    CHECK(R.fundamental.size() == 1);
    check_kubota_roots(B, R);
  }

  SUBCASE("generic imaginary field without extra torsion") {
    BiquadField B(-5, 2);
    KubotaResult R = kubota_unit_index(B);
    CHECK(R.torsion_order == 2);
    CHECK((R.q_index == 1 || R.q_index == 2));
    check_kubota_roots(B, R);
  }
}

TEST_CASE("class numbers of biquadratic fields") {
  CHECK(kuroda_class_number(BiquadField(2, 5)) == 1);
  CHECK(kuroda_class_number(BiquadField(2, 3)) == 1);
  CHECK(kuroda_class_number(BiquadField(3, 5)) == 1);
  CHECK(kuroda_class_number(BiquadField(-1, 2)) == 1);   // Q(zeta_8)
  CHECK(kuroda_class_number(BiquadField(-1, -3)) == 1);  // Q(zeta_12)
  CHECK(kuroda_class_number(BiquadField(-1, 5)) == 1);
  // Q(i, sqrt -5) = Q(i, sqrt 5): the Hilbert class field of Q(sqrt -5)
  CHECK(kuroda_class_number(BiquadField(-1, -5)) == 1);
}

TEST_CASE("the same field gives the same invariants from any generating pair") {
  // Q(sqrt 2, sqrt 5) three ways
  mpz_class h = kuroda_class_number(BiquadField(2, 5));
  CHECK(kuroda_class_number(BiquadField(5, 2)) == h);
  CHECK(kuroda_class_number(BiquadField(2, 10)) == h);
  CHECK(kuroda_class_number(BiquadField(5, 40)) == h);
  CHECK(kubota_unit_index(BiquadField(2, 10)).q_index ==
        kubota_unit_index(BiquadField(2, 5)).q_index);

  // Q(zeta_12) three ways
  mpz_class h12 = kuroda_class_number(BiquadField(-1, -3));
  CHECK(kuroda_class_number(BiquadField(-1, 3)) == h12);
  CHECK(kuroda_class_number(BiquadField(3, -3)) == h12);
  CHECK(kubota_unit_index(BiquadField(-1, 3)).q_index ==
        kubota_unit_index(BiquadField(-1, -3)).q_index);
}

TEST_CASE("class number formula stays integral on sampled fields") {
  std::mt19937_64 rng(7003);
  int done = 0;
  while (done < 12) {
    i64 a = i64(rng() % 60) - 30, b = i64(rng() % 60) - 30;
    if (a == 0 || a == 1 || b == 0 || b == 1) continue;
    if (arith::is_square(a < 0 ? -a : a) && a > 0) continue;
    if (arith::is_square(b < 0 ? -b : b) && b > 0) continue;
    if (arith::squarefree_core(a) == arith::squarefree_core(b)) continue;
    BiquadField B(a, b);
    mpz_class h = kuroda_class_number(B);
    CHECK(h >= 1);
    CHECK(kuroda_class_number(BiquadField(b, a)) == h);
    ++done;
  }
}

TEST_CASE("ramification data of quadratic extensions of Q") {
  RelativeQuadExt E = relquad_over_rationals(10);
  CHECK(E.over_rationals());
  CHECK(E.gen_rational == 10);
  CHECK(E.ramified_finite_q == std::vector<i64>{2, 5});
  CHECK(E.ramified_at_two);
  CHECK(E.ramified_real_places == 0);

  RelativeQuadExt F = relquad_over_rationals(-23);
  CHECK(F.ramified_finite_q == std::vector<i64>{23});
  CHECK(!F.ramified_at_two);
  CHECK(F.infinite_ramification());

  RelativeQuadExt G = relquad_over_rationals(12);  // kernel 3, disc 12
  CHECK(G.gen_rational == 3);
  CHECK(G.ramified_finite_q == std::vector<i64>{2, 3});

  CHECK_THROWS_AS(relquad_over_rationals(0), domain_error);
  CHECK_THROWS_AS(relquad_over_rationals(1), domain_error);
  CHECK_THROWS_AS(relquad_over_rationals(9), domain_error);
  CHECK_THROWS_AS(relquad_over_rationals(-23).base(), domain_error);
}

TEST_CASE("ramification data of quadratic extensions of a quadratic base") {
  SUBCASE("unramified everywhere: K = Q(sqrt 10), x = 5") {
    QuadField K(10);
    RelativeQuadExt E = relquad(K, qi(K, 10, 0));
    CHECK(E.ramified_finite.empty());
    CHECK(!E.ramified_at_two);
    CHECK(E.ramified_real_places == 0);
  }

  SUBCASE("split odd prime, one side odd valuation") {
    QuadField K(-5);
    RelativeQuadExt E = relquad(K, qi(K, 6, 0));  // x = 3, both primes above 3
    REQUIRE(E.ramified_finite.size() == 2);
    CHECK(E.ramified_finite[0].p == 3);
    CHECK(E.ramified_finite[1].p == 3);
    CHECK(E.ramified_finite[0].r != E.ramified_finite[1].r);
    // 3 - omega^2 = 8 has valuation 6 at the prime above 2: no ramification there
    CHECK(!E.ramified_at_two);
  }

  SUBCASE("negative unit ramifies only at infinity over a real field") {
    QuadField K(10);
    RelativeQuadExt E = relquad(K, qi(K, -2, 0));  // x = -1
    CHECK(E.ramified_finite.empty());
    CHECK(E.ramified_real_places == 2);
  }

  SUBCASE("sqrt 5 over Q(sqrt 5) ramifies at 2 and at one real place") {
    QuadField K(5);
    RelativeQuadExt E = relquad(K, qi(K, 0, 2));  // x = sqrt 5
    REQUIRE(E.ramified_finite.size() == 1);
    CHECK(E.ramified_finite[0].p == 5);
    CHECK(E.ramified_at_two);
    CHECK(E.ramified_real_places == 1);
  }

  SUBCASE("rejects zero and squares") {
    QuadField K(10);
    CHECK_THROWS_AS(relquad(K, qi(K, 0, 0)), domain_error);
    CHECK_THROWS_AS(relquad(K, qi(K, 8, 0)), domain_error);  // x = 4
  }
}

TEST_CASE("unramified extension test") {
  SUBCASE("true instances over quadratic bases") {
    QuadField K(10);
    UnramifiedReport r1 = unramified_test(relquad(K, qi(K, 4, 0)));  // Q(sqrt 10)(sqrt 2)
    CHECK(r1.unramified);
    UnramifiedReport r2 = unramified_test(relquad(K, qi(K, 10, 0)));  // ... (sqrt 5)
    CHECK(r2.unramified);
    QuadField L(-5);
    UnramifiedReport r3 = unramified_test(relquad(L, qi(L, -2, 0)));  // Q(sqrt -5)(i)
    CHECK(r3.unramified);
    for (const auto& pl : r3.places) CHECK(pl.unramified);
  }

  SUBCASE("false instances report the offending places") {
    QuadField K(10);
    UnramifiedReport r = unramified_test(relquad(K, qi(K, 6, 0)));  // x = 3 ramifies
    CHECK(!r.unramified);
    int bad = 0;
    for (const auto& pl : r.places) bad += !pl.unramified;
    CHECK(bad > 0);

    UnramifiedReport s = unramified_test(relquad_over_rationals(-23));
    CHECK(!s.unramified);
  }

  SUBCASE("fundamental unit generator: no odd finite ramification") {
    for (i64 d : {2, 3, 5, 6, 7, 10, 11, 13, 15, 26, 30}) {
      QuadField K(d);
      UnitGroup U = unit_group(K);
      RelativeQuadExt E = relquad(K, U.eps);
      CHECK(E.ramified_finite.empty());
      CHECK(E.ramified_real_places == (U.eps_norm == -1 ? 1 : 0));
    }
  }
}

TEST_CASE("ambiguous class counts over Q follow the genus formula") {
  auto count_of = [](i64 d) { return chevalley_ambiguous(relquad_over_rationals(d)).count; };
  CHECK(count_of(10) == 2);
  CHECK(count_of(5) == 1);
  CHECK(count_of(-5) == 2);
  CHECK(count_of(3) == 2);
  CHECK(count_of(-23) == 1);
  CHECK(count_of(30) == 4);

  // matches the 2-torsion count of the narrow class group
  std::mt19937_64 rng(7004);
  int done = 0;
  while (done < 50) {
    i64 d = i64(rng() % 300) - 150;
    if (d == 0 || d == 1) continue;
    if (d > 0 && arith::is_square(d)) continue;
    i64 D = fundamental_discriminant(arith::squarefree_core(d));
    ClassGroup cl = class_group_of_disc(D);
    i64 two_torsion = 0;
    for (i64 i = 0; i < cl.h_narrow(); ++i)
      if (cl.narrow_order(i) <= 2) ++two_torsion;
    CHECK(count_of(d) == two_torsion);
    ++done;
  }
}

TEST_CASE("ambiguous class counts over a quadratic base") {
  SUBCASE("K = Q(sqrt 5), ramified at a degree-one prime and one real place") {
    QuadField K(5);
    ChevalleyResult R = chevalley_ambiguous(relquad(K, qi(K, -1, -3)));
    CHECK(R.count == 1);
    CHECK(R.h_base == 1);
    CHECK(R.t == 2);
    CHECK(R.unit_norm_index == 2);
  }

  SUBCASE("K = Q(sqrt 10), unramified extension keeps half the class group") {
    QuadField K(10);
    ChevalleyResult R = chevalley_ambiguous(relquad(K, qi(K, 10, 0)));
    CHECK(R.count == 1);
    CHECK(R.h_base == 2);
    CHECK(R.t == 0);
    CHECK(R.unit_norm_index == 1);
  }

  SUBCASE("K = Q(sqrt -5), both primes above 3 ramify") {
    QuadField K(-5);
    ChevalleyResult R = chevalley_ambiguous(relquad(K, qi(K, 6, 0)));
    CHECK(R.count == 2);
    CHECK(R.h_base == 2);
    CHECK(R.t == 2);
    CHECK(R.unit_norm_index == 2);
  }

  SUBCASE("K = Q(sqrt -5), the genus extension") {
    QuadField K(-5);
    ChevalleyResult R = chevalley_ambiguous(relquad(K, qi(K, -2, 0)));
    CHECK(R.count == 1);
    CHECK(R.h_base == 2);
    CHECK(R.t == 0);
    CHECK(R.unit_norm_index == 1);
  }

  SUBCASE("extensions ramified above 2 are refused") {
    QuadField K(5);
    CHECK_THROWS_AS(chevalley_ambiguous(relquad(K, qi(K, 0, 2))), hypothesis_error);
    QuadField L(10);
    CHECK_THROWS_AS(chevalley_ambiguous(relquad(L, qi(L, 6, 0))), hypothesis_error);
  }
}

TEST_CASE("string rendering") {
  BiquadField B(2, 5);
  BqElem x;
  x.c = {q_of(1, 2), q_of(-1, 1), 0, q_of(3, 1)};
  std::string s = bq_str(B, x);
  CHECK(s.find("1/2") != std::string::npos);
  CHECK(s.find("sqrt(2)") != std::string::npos);
  CHECK(s.find("sqrt(10)") != std::string::npos);
  CHECK(s.find("sqrt(5)") == std::string::npos);
  CHECK(bq_str(B, bq_from_rational(0)) == "0");
}
