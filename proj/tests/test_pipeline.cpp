#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "towerforge/biquad.hpp"
#include "towerforge/errors.hpp"
#include "towerforge/pipeline.hpp"
#include "towerforge/quadfield.hpp"

using namespace towerforge;
using namespace towerforge::pipeline;

namespace {

/* First prime q = 1 mod 4 that every ell in S stays inert under, by trial
 * division and enumeration symbols only. */
i64 first_tame_prime_q(const std::vector<i64>& S) {
  for (i64 q = 3;; q += 2) {
    if (!oracles::is_prime_trial(q)) continue;
    if (std::find(S.begin(), S.end(), q) != S.end()) continue;
    if (q % 4 != 1) continue;
    bool ok = true;
    for (i64 ell : S) ok = ok && oracles::legendre_by_enumeration(q % ell, ell) == -1;
    if (ok) return q;
  }
}

/* First auxiliary prime for d in {10, -5}: split, principal, and split in the
 * degree-two class-field layer.  Both discriminants (40 and -20) have two
 * classes in two genera, so the mod-5 character alone decides principality,
 * and the layer condition is the symbol of 2. */
i64 first_aux_prime(i64 d, const std::vector<i64>& S) {
  i64 D = d == 10 ? 40 : -20;
  for (i64 ell = 3;; ell += 2) {
    if (!oracles::is_prime_trial(ell)) continue;
    if (std::find(S.begin(), S.end(), ell) != S.end()) continue;
    if (D % ell == 0) continue;
    if (oracles::legendre_by_enumeration(((D % ell) + ell) % ell, ell) != 1) continue;
    if (oracles::legendre_by_enumeration(ell % 5, 5) != 1) continue;
    if (oracles::legendre_by_enumeration(2, ell) != 1) continue;
    return ell;
  }
}

bool message_contains(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("two-torsion agreement between the class group and its S-quotient") {
  CHECK(check_cs(0, {3, 5}));
  CHECK(check_cs(0, {}));
  // the primes over 3 and 41 sit in the nontrivial and trivial class of Q(sqrt(10))
  CHECK_FALSE(check_cs(10, {3}));
  CHECK(check_cs(10, {41}));
  CHECK_FALSE(check_cs(-5, {3}));
  CHECK(check_cs(-5, {29}));
  // odd class number: nothing to lose
  CHECK(check_cs(13, {3}));
  CHECK_THROWS_AS(check_cs(0, {4}), domain_error);
}

TEST_CASE("compositum ranks grow by one per place under agreement") {
  CompositumReport r = cs_compositum_rank(0, {3, 5});
  CHECK(r.base_dim == 1);
  REQUIRE(r.rows.size() == 4);
  // rows ordered by subset size then mask: {}, {3}, {5}, {3,5}
  CHECK(r.rows[0].places.empty());
  CHECK(r.rows[0].delta == 0);
  CHECK(r.rows[1].places == std::vector<std::string>{"3"});
  CHECK(r.rows[1].dim == 2);
  CHECK(r.rows[2].places == std::vector<std::string>{"5"});
  CHECK(r.rows[3].delta == 2);

  CompositumReport k = cs_compositum_rank(10, {41});
  CHECK(k.base_dim == 3);
  REQUIRE(k.rows.size() == 4);  // 41 splits: two places
  CHECK(k.rows[1].places.size() == 1);
  CHECK(k.rows[1].dim == 4);
  CHECK(k.rows[3].places.size() == 2);
  CHECK(k.rows[3].dim == 5);

  CHECK_THROWS_AS(cs_compositum_rank(10, {3}), hypothesis_error);
  CHECK_THROWS_AS(cs_compositum_rank(0, {3, 5, 7, 11, 13, 17}), resource_error);
}

TEST_CASE("sigma augmentation is trivial over the rationals") {
  SigmaReport r = augment_sigma(0, {3, 5});
  CHECK(r.sigma == std::vector<i64>{3, 5});
  CHECK(r.sigma_prime == 0);
  CHECK_FALSE(r.all_ones_in_image);
  CHECK(r.s_places == 2);
}

TEST_CASE("sigma augmentation finds the first principal split prime with split layers") {
  CHECK(first_aux_prime(10, {3}) == 31);
  SigmaReport r = augment_sigma(10, {3});
  CHECK(r.all_ones_in_image);
  CHECK(r.psi_rank == 1);
  CHECK(r.s_places == 2);
  CHECK(r.sigma_prime == 31);
  CHECK(r.sigma == std::vector<i64>{3, 31});

  CHECK(first_aux_prime(-5, {3}) == 41);
  SigmaReport s = augment_sigma(-5, {3});
  CHECK(s.sigma_prime == 41);
  CHECK(s.sigma == std::vector<i64>{3, 41});

  // principal split primes need no help
  SigmaReport t = augment_sigma(10, {41});
  CHECK_FALSE(t.all_ones_in_image);
  CHECK(t.sigma_prime == 0);
  CHECK(t.sigma == std::vector<i64>{41});

  CHECK_THROWS_AS(augment_sigma(10, {3}, 20), search_error);
}

TEST_CASE("five-term rank bookkeeping on hand instances") {
  SeqCheckReport r = cohomology_rank_check(0, {5}, {3});
  CHECK(r.h1_t_sigma == 0);
  CHECK(r.h1_t == 1);
  CHECK(r.local_term == 1);
  CHECK(r.m_t_sigma == 1);
  CHECK(r.m_t == 1);
  CHECK(r.psi_rank == 1);
  CHECK(r.alternating_sum == 0);

  SeqCheckReport e = cohomology_rank_check(0, {}, {});
  CHECK(e.h1_t == 0);
  CHECK(e.m_t_sigma == 1);
  CHECK(e.m_t == 1);

  // the sign character of 3 removes both a global and a local dimension
  SeqCheckReport p = cohomology_rank_check(0, {3}, {5});
  CHECK(p.h1_t == 0);
  CHECK(p.h1_t_sigma == 0);
  CHECK(p.m_t_sigma == 1);
  CHECK(p.m_t == 0);

  CHECK_THROWS_AS(cohomology_rank_check(0, {3}, {3}), domain_error);
}

TEST_CASE("five-term rank bookkeeping over quadratic bases") {
  SeqCheckReport a = cohomology_rank_check(10, {7}, {3});
  CHECK(a.h1_t_sigma == 0);
  CHECK(a.h1_t == 1);
  CHECK(a.local_term == 2);
  CHECK(a.m_t_sigma == 3);
  CHECK(a.m_t == 2);

  SeqCheckReport b = cohomology_rank_check(-5, {7}, {3});
  CHECK(b.h1_t_sigma == 1);
  CHECK(b.h1_t == 2);
  CHECK(b.local_term == 2);
  CHECK(b.m_t_sigma == 2);
  CHECK(b.m_t == 1);

  SeqCheckReport c = cohomology_rank_check(10, {7, 13}, {3});
  CHECK(c.h1_t_sigma == 1);
  CHECK(c.h1_t == 2);
  CHECK(c.alternating_sum == 0);
}

TEST_CASE("five-term rank bookkeeping randomized over the rationals") {
  std::vector<i64> pool = {3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59};
  std::mt19937_64 rng(271828);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<i64> bag = pool;
    std::shuffle(bag.begin(), bag.end(), rng);
    size_t nt = rng() % 4, ns = rng() % 4;
    std::vector<i64> T(bag.begin(), bag.begin() + nt);
    std::vector<i64> S(bag.begin() + nt, bag.begin() + nt + ns);
    SeqCheckReport r = cohomology_rank_check(0, T, S);  // throws on any rank mismatch
    CHECK(r.alternating_sum == 0);
    CHECK(r.h1_t - r.h1_t_sigma == r.psi_rank);
    CHECK(r.m_t_sigma - r.m_t == r.local_term - r.psi_rank);
  }
}

TEST_CASE("elimination over the rationals picks the first admissible tame prime") {
  CHECK(first_tame_prime_q({5}) == 13);
  EliminationOutcome o = elimination_step(0, {5});
  CHECK(o.cert.scan.q == 13);
  CHECK(o.cert.gen_rational);
  CHECK(o.cert.gen_rational_value == 13);
  CHECK(o.cert.kummer_gen == "13");
  CHECK(o.cert.status == "certified");
  CHECK(o.cert.sigma.sigma == std::vector<i64>{5});
  REQUIRE(o.cert.inertia.count("5") == 1);
  CHECK(o.cert.inertia.at("5"));
  CHECK(o.cert.ledger_before.at(5) == 1);
  CHECK(o.cert.ledger_after.at(5) == 1);
  CHECK(o.ext.ramified_finite_q == std::vector<i64>{13});

  CHECK(first_tame_prime_q({3, 5}) == 17);
  EliminationOutcome p = elimination_step(0, {3, 5});
  CHECK(p.cert.scan.q == 17);
  CHECK(p.cert.inertia.at("3"));
  CHECK(p.cert.inertia.at("5"));

  CHECK_THROWS_AS(elimination_step(0, {}), domain_error);
  CHECK_THROWS_AS(elimination_step(0, {2}), domain_error);
}

TEST_CASE("elimination over a real quadratic base") {
  EliminationOutcome o = elimination_step(10, {3});
  CHECK(o.cert.sigma.sigma_prime == 31);
  CHECK(o.cert.scan.q == 17);
  CHECK(o.cert.filter == "rational-inert");
  CHECK(o.cert.gen_rational);
  CHECK(o.cert.gen_rational_value == 17);
  CHECK(o.cert.status == "certified");
  CHECK(o.cert.class_field_gen == "2");

  // both places over 3 are inert in the new layer
  REQUIRE(o.cert.inertia.size() == 2);
  for (const auto& kv : o.cert.inertia) CHECK(kv.second);

  CHECK(o.cert.ledger_before.at(3) == 2);
  CHECK(o.cert.ledger_after.at(3) == 1);

  REQUIRE(o.cert.stability.size() == 4);
  for (const auto& c : o.cert.stability) CHECK(c.passed);
  CHECK(o.cert.stability[0].name.find("class-field layer") != std::string::npos);
  CHECK(o.cert.stability[1].name.find("ambiguous class count 2") != std::string::npos);
  CHECK(o.cert.stability[2].name.find("kuroda class number 2") != std::string::npos);

  REQUIRE(o.cert.residuosity.size() == 2);
  for (const auto& c : o.cert.residuosity) CHECK(c.passed);

  // the step extension is ramified at the tame prime only
  CHECK(o.ext.base_m == 10);
  CHECK_FALSE(o.ext.ramified_at_two);
  CHECK(o.ext.ramified_real_places == 0);
  REQUIRE(o.ext.ramified_finite.size() == 1);
  CHECK(o.ext.ramified_finite[0].p == 17);

  // thread count must not change the outcome
  PipelineConfig par;
  par.threads = 4;
  EliminationOutcome o4 = elimination_step(10, {3}, par);
  CHECK(o4.cert.scan.q == o.cert.scan.q);
  CHECK(o4.cert.kummer_gen == o.cert.kummer_gen);
}

TEST_CASE("a full run eliminates residue degree in one step") {
  PipelineReport r = run(10, {3}, "C2");
  CHECK(r.m == 1);
  CHECK(r.e_g == 1);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.final_field == "Q(sqrt(10))(sqrt(17))");
  CHECK(r.s_f_count == 1);
  CHECK(r.a_k == 1);
  CHECK(r.h1_g == 1);
  CHECK(r.lambda == 1);
  CHECK_FALSE(r.lambda_assumed);
  REQUIRE(r.claims.size() == 6);
  for (const auto& c : r.claims) CHECK(c.passed);

  PipelineReport r2 = run(10, {3}, "C2");
  CHECK(r2.steps[0].scan.q == r.steps[0].scan.q);
  CHECK(r2.final_field == r.final_field);
}

TEST_CASE("runs that must refuse explain themselves") {
  try {
    run(-5, {3}, "C2");
    FAIL("expected a hypothesis refusal");
  } catch (const hypothesis_error& e) {
    CHECK(message_contains(e, "A_K = 0 < h^1 = 1"));
  }

  // overriding the free rank lets the step run; the certified checks then
  // catch the tower growth honestly
  PipelineConfig assume;
  assume.assume_lambda = 1;
  try {
    run(-5, {3}, "C2", assume);
    FAIL("expected a stability refusal");
  } catch (const hypothesis_error& e) {
    CHECK(message_contains(e, "stability check failed under an assumed free rank"));
  }

  try {
    run(10, {3}, "C4");
    FAIL("expected a target mismatch");
  } catch (const hypothesis_error& e) {
    CHECK(message_contains(e, "realizes C2"));
  }

  CHECK_THROWS_AS(run(10, {3}, "C3"), domain_error);
}

TEST_CASE("trivial targets run with zero steps") {
  PipelineReport q = run(0, {7}, "C1");
  CHECK(q.m == 0);
  CHECK(q.final_field == "Q");
  CHECK(q.steps.empty());
  CHECK(q.s_f_count == 1);

  PipelineReport g = run(-1, {5}, "C1");
  CHECK(g.m == 0);
  CHECK(g.final_field == "Q(sqrt(-1))");
}

TEST_CASE("tame direction selection and its independence guarantee") {
  TameSelection t = select_tame_set(0, 1);
  REQUIRE(t.primes.size() == 1);
  CHECK(t.primes[0].q == 3);
  CHECK(t.audits[0] == std::vector<int>{1});
  REQUIRE(t.subset_checks.size() == 1);
  CHECK(t.subset_checks[0].passed);

  TameSelection k = select_tame_set(10, 1);
  CHECK(k.primes[0].q == 31);
  CHECK(k.audits[0] == std::vector<int>{1, 0, 0});

  CHECK_THROWS_AS(select_tame_set(0, 2), hypothesis_error);
  CHECK_THROWS_AS(select_tame_set(10, 2), hypothesis_error);
  CHECK_THROWS_AS(select_tame_set(0, 0), domain_error);
}

TEST_CASE("odd powers of two keep their square class in the 2-adic criterion") {
  using namespace towerforge::quad;
  QuadField K(-5);
  PrimeIdeal P2 = prime_above(K, 2);
  CHECK_FALSE(unramified_at_2(K, qi_from_int(2), P2));
  CHECK_FALSE(unramified_at_2(K, qi_from_int(-2), P2));
  CHECK(unramified_at_2(K, qi_from_int(-1), P2));

  QuadField R(10);
  PrimeIdeal Q2 = prime_above(R, 2);
  CHECK(unramified_at_2(R, qi_from_int(2), Q2));
  // 2 * fundamental unit lands in a different class
  QuadInt twoeps = qi_mul(R, qi_from_int(2), unit_group(R).eps);
  CHECK_FALSE(unramified_at_2(R, twoeps, Q2));

  // multiplying by the square of a uniformizer never changes the verdict
  for (i64 d : {-5, 10, -6, 3}) {
    QuadField F(d);
    PrimeIdeal P = prime_above(F, 2);
    REQUIRE(P.type == SplitType::ramified);
    i64 m4 = ((d % 4) + 4) % 4;
    QuadInt pi = m4 == 2 ? qi_make(F, 0, 1) : qi_make(F, 2, 1);
    QuadInt pi2 = qi_mul(F, pi, pi);
    std::mt19937_64 rng(577);
    int sampled = 0;
    for (int trial = 0; trial < 300 && sampled < 40; ++trial) {
      i64 u = static_cast<i64>(rng() % 40) - 20, v = static_cast<i64>(rng() % 40) - 20;
      if ((u - v * F.D) % 2 != 0) ++u;
      QuadInt x = qi_make(F, u, v);
      if (qi_is_zero(x)) continue;
      if (valuation(F, x, P) % 2 != 0) continue;
      ++sampled;
      CHECK(unramified_at_2(F, x, P) == unramified_at_2(F, qi_mul(F, x, pi2), P));
    }
    CHECK(sampled >= 20);
  }
}
