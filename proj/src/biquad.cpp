#include "towerforge/biquad.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "towerforge/errors.hpp"

namespace towerforge::biquad {

using arith::factorize;
using arith::isqrt;
using arith::squarefree_core;
using quad::class_group;
using quad::class_group_of_disc;
using quad::ClassGroup;
using quad::form_of_ideal;
using quad::fundamental_discriminant;
using quad::Ideal;
using quad::prime_above;
using quad::qi_conj;
using quad::qi_from_int;
using quad::qi_is_zero;
using quad::qi_make;
using quad::qi_norm;
using quad::qi_sqrt;
using quad::SplitType;
using quad::unit_group;
using quad::UnitGroup;
using quad::unramified_at_2;
using quad::valuation;

namespace {

struct Twist {
  i64 s;    // |sqrt(mi) sqrt(mj)| = s sqrt(mk)
  int sig;  // -1 when mi and mj are both negative
};

Twist twist(i64 mi, i64 mj, i64 mk) {
  i64 s2 = (mi * mj) / mk;
  if (s2 * mk != mi * mj || s2 <= 0) throw inconsistency_error("broken radical product");
  i64 s = isqrt(s2);
  if (s * s != s2) throw inconsistency_error("broken radical product");
  return {s, (mi < 0 && mj < 0) ? -1 : 1};
}

mpq_class mk_q(i64 num, i64 den) {
  mpq_class r(num, den);
  r.canonicalize();
  return r;
}

int sign_of(const mpz_class& z) { return z > 0 ? 1 : (z < 0 ? -1 : 0); }

// sign of (u + v sqrt(D))/2 at the embedding sending sqrt(D) to +/-|sqrt(D)|
int sign_at(const QuadField& K, const QuadInt& x, bool positive_root) {
  if (K.D < 0) throw domain_error("sign_at: no real embedding");
  mpz_class u = x.u, v = positive_root ? x.v : mpz_class(-x.v);
  if (v == 0) return sign_of(u);
  if (u == 0) return sign_of(v);
  if (u > 0 && v > 0) return 1;
  if (u < 0 && v < 0) return -1;
  mpz_class cmp = u * u - v * v * K.D;
  if (cmp == 0) throw inconsistency_error("rational square disc");
  if (u > 0) return cmp > 0 ? 1 : -1;
  return cmp > 0 ? -1 : 1;
}

}  // namespace

BiquadField::BiquadField(i64 a, i64 b) {
  m1 = squarefree_core(a);
  m2 = squarefree_core(b);
  d1 = fundamental_discriminant(m1);
  d2 = fundamental_discriminant(m2);
  if (m1 == m2) throw domain_error("subfields coincide: not a biquadratic field");
  m3 = squarefree_core(m1 * m2);
  d3 = fundamental_discriminant(m3);
}

QuadField BiquadField::subfield(int i) const {
  switch (i) {
    case 1: return QuadField(m1);
    case 2: return QuadField(m2);
    case 3: return QuadField(m3);
    default: throw domain_error("subfield index must be 1, 2 or 3");
  }
}

BqElem bq_from_rational(const mpq_class& r) { return BqElem{{r, 0, 0, 0}}; }

BqElem bq_embed(const BiquadField& B, int subfield_index, const QuadInt& x) {
  i64 d = 0, m = 0;
  switch (subfield_index) {
    case 1: d = B.d1, m = B.m1; break;
    case 2: d = B.d2, m = B.m2; break;
    case 3: d = B.d3, m = B.m3; break;
    default: throw domain_error("subfield index must be 1, 2 or 3");
  }
  BqElem r{{0, 0, 0, 0}};
  r.c[0] = mpq_class(x.u) / 2;
  // (u + v sqrt(d))/2 with sqrt(d) = sqrt(m) or 2 sqrt(m)
  r.c[subfield_index] = d == m ? mpq_class(x.v) / 2 : mpq_class(x.v);
  return r;
}

BqElem bq_add(const BqElem& x, const BqElem& y) {
  BqElem r;
  for (int i = 0; i < 4; ++i) r.c[i] = x.c[i] + y.c[i];
  return r;
}

BqElem bq_sub(const BqElem& x, const BqElem& y) {
  BqElem r;
  for (int i = 0; i < 4; ++i) r.c[i] = x.c[i] - y.c[i];
  return r;
}

BqElem bq_neg(const BqElem& x) {
  BqElem r;
  for (int i = 0; i < 4; ++i) r.c[i] = -x.c[i];
  return r;
}

BqElem bq_mul(const BiquadField& B, const BqElem& x, const BqElem& y) {
  Twist t12 = twist(B.m1, B.m2, B.m3);
  Twist t13 = twist(B.m1, B.m3, B.m2);
  Twist t23 = twist(B.m2, B.m3, B.m1);
  BqElem r;
  r.c[0] = x.c[0] * y.c[0] + B.m1 * x.c[1] * y.c[1] + B.m2 * x.c[2] * y.c[2] +
           B.m3 * x.c[3] * y.c[3];
  r.c[1] = x.c[0] * y.c[1] + x.c[1] * y.c[0] +
           t23.s * t23.sig * (x.c[2] * y.c[3] + x.c[3] * y.c[2]);
  r.c[2] = x.c[0] * y.c[2] + x.c[2] * y.c[0] +
           t13.s * t13.sig * (x.c[1] * y.c[3] + x.c[3] * y.c[1]);
  r.c[3] = x.c[0] * y.c[3] + x.c[3] * y.c[0] +
           t12.s * t12.sig * (x.c[1] * y.c[2] + x.c[2] * y.c[1]);
  return r;
}

BqElem bq_conj(const BiquadField&, const BqElem& x, int fixed_subfield) {
  if (fixed_subfield < 1 || fixed_subfield > 3)
    throw domain_error("subfield index must be 1, 2 or 3");
  BqElem r = x;
  for (int i = 1; i < 4; ++i)
    if (i != fixed_subfield) r.c[i] = -r.c[i];
  return r;
}

bool bq_is_zero(const BqElem& x) {
  return x.c[0] == 0 && x.c[1] == 0 && x.c[2] == 0 && x.c[3] == 0;
}

mpq_class bq_abs_norm(const BiquadField& B, const BqElem& x) {
  BqElem y = bq_mul(B, x, bq_conj(B, x, 1));
  if (y.c[2] != 0 || y.c[3] != 0) throw inconsistency_error("relative norm left the subfield");
  return y.c[0] * y.c[0] - B.m1 * y.c[1] * y.c[1];
}

std::string bq_str(const BiquadField& B, const BqElem& x) {
  const i64 ms[4] = {1, B.m1, B.m2, B.m3};
  std::ostringstream out;
  bool first = true;
  for (int i = 0; i < 4; ++i) {
    if (x.c[i] == 0) continue;
    mpq_class a = x.c[i];
    if (!first) {
      out << (a > 0 ? " + " : " - ");
      if (a < 0) a = -a;
      out << a.get_str();
    } else {
      out << a.get_str();
      first = false;
    }
    if (i > 0) out << "*sqrt(" << ms[i] << ")";
  }
  if (first) out << "0";
  return out.str();
}

/* ---------- square roots ---------- */

namespace {

// element p + q sqrt(m3) of the third quadratic subfield
struct QQ {
  mpq_class p, q;
};

bool qq_zero(const QQ& a) { return a.p == 0 && a.q == 0; }
QQ qq_add(const QQ& a, const QQ& b) { return {a.p + b.p, a.q + b.q}; }
QQ qq_sub(const QQ& a, const QQ& b) { return {a.p - b.p, a.q - b.q}; }
QQ qq_mul(const QQ& a, const QQ& b, i64 m3) {
  return {a.p * b.p + m3 * a.q * b.q, a.p * b.q + a.q * b.p};
}
QQ qq_div(const QQ& a, const QQ& b, i64 m3) {
  mpq_class n = b.p * b.p - m3 * b.q * b.q;
  if (n == 0) throw inconsistency_error("division by zero in quadratic subfield");
  return {(a.p * b.p - m3 * a.q * b.q) / n, (a.q * b.p - a.p * b.q) / n};
}

std::optional<QQ> qq_sqrt(const QuadField& k3, const QQ& a) {
  if (qq_zero(a)) return QQ{0, 0};
  mpz_class t;
  mpz_lcm(t.get_mpz_t(), a.p.get_den().get_mpz_t(), a.q.get_den().get_mpz_t());
  mpq_class t2(t * t);
  mpq_class sp = a.p * t2, sq = a.q * t2;
  if (sp.get_den() != 1 || sq.get_den() != 1) throw inconsistency_error("denominator scale failed");
  mpz_class P = sp.get_num(), Q = sq.get_num();
  i64 m3 = k3.d;
  QuadInt z = k3.D == m3 ? qi_make(k3, 2 * P, 2 * Q) : qi_make(k3, 2 * P, Q);
  auto y = qi_sqrt(k3, z);
  if (!y) return std::nullopt;
  QQ r;
  r.p = mpq_class(y->u) / 2;
  r.q = k3.D == m3 ? mpq_class(y->v) / 2 : mpq_class(y->v);
  r.p /= t;
  r.q /= t;
  return r;
}

}  // namespace

std::optional<BqElem> bq_sqrt(const BiquadField& B, const BqElem& x) {
  QuadField k3(B.m3);
  Twist t13 = twist(B.m1, B.m3, B.m2);
  // x = A + sqrt(m1) C with A, C in the third subfield
  QQ A{x.c[0], x.c[3]};
  QQ C{x.c[1], x.c[2] * t13.sig / t13.s};
  auto assemble = [&](const QQ& alpha, const QQ& beta) {
    BqElem y{{alpha.p, beta.p, beta.q * t13.s * t13.sig, alpha.q}};
    return y;
  };
  auto verified = [&](const BqElem& y) -> std::optional<BqElem> {
    if (bq_mul(B, y, y) == x) return y;
    return std::nullopt;
  };
  if (qq_zero(C)) {
    if (auto r = qq_sqrt(k3, A))
      if (auto y = verified(assemble(*r, QQ{0, 0}))) return y;
    QQ scaled{A.p / B.m1, A.q / B.m1};
    if (auto r = qq_sqrt(k3, scaled))
      if (auto y = verified(assemble(QQ{0, 0}, *r))) return y;
    return std::nullopt;
  }
  // y = alpha + sqrt(m1) beta: alpha^2 + m1 beta^2 = A, 2 alpha beta = C
  QQ c2 = qq_mul(C, C, B.m3);
  QQ disc = qq_sub(qq_mul(A, A, B.m3), {B.m1 * c2.p, B.m1 * c2.q});
  auto delta = qq_sqrt(k3, disc);
  if (!delta) return std::nullopt;
  for (int sgn : {1, -1}) {
    QQ d = sgn == 1 ? *delta : QQ{-delta->p, -delta->q};
    QQ half{(A.p + d.p) / 2, (A.q + d.q) / 2};
    auto alpha = qq_sqrt(k3, half);
    if (!alpha || qq_zero(*alpha)) continue;
    QQ beta = qq_div(C, {2 * alpha->p, 2 * alpha->q}, B.m3);
    if (auto y = verified(assemble(*alpha, beta))) return y;
  }
  return std::nullopt;
}

/* ---------- unit index and class number ---------- */

namespace {

BqElem bq_pow(const BiquadField& B, const BqElem& x, int k) {
  BqElem r = bq_from_rational(1);
  for (int i = 0; i < k; ++i) r = bq_mul(B, r, x);
  return r;
}

// greedy F2 basis bookkeeping over exponent classes
struct F2Span {
  std::vector<int> rows;
  bool add(int v) {  // reduces v; true when it enlarges the span
    for (int r : rows) v = std::min(v, v ^ r);
    if (v == 0) return false;
    rows.push_back(v);
    return true;
  }
};

}  // namespace

KubotaResult kubota_unit_index(const BiquadField& B) {
  KubotaResult R;
  if (B.real()) {
    UnitGroup U[3] = {unit_group(QuadField(B.m1)), unit_group(QuadField(B.m2)),
                      unit_group(QuadField(B.m3))};
    BqElem eps[3];
    for (int i = 0; i < 3; ++i) eps[i] = bq_embed(B, i + 1, U[i].eps);
    R.torsion_order = 2;
    R.torsion_gen = bq_from_rational(-1);
    std::set<int> classes{0};
    F2Span span;
    for (int v = 1; v < 8; ++v) {
      BqElem x = bq_from_rational(1);
      for (int i = 0; i < 3; ++i)
        if (v >> i & 1) x = bq_mul(B, x, eps[i]);
      for (int e : {0, 1}) {
        BqElem cand = e ? bq_neg(x) : x;
        auto y = bq_sqrt(B, cand);
        if (!y) continue;
        classes.insert(v);
        if (span.add(v)) {
          R.new_roots.push_back(*y);
          R.root_squares.push_back(cand);
          R.root_classes.push_back({e, v & 1, v >> 1 & 1, v >> 2 & 1});
        }
        break;
      }
    }
    for (int a : classes)
      for (int b : classes)
        if (!classes.count(a ^ b))
          throw inconsistency_error("square classes of unit products not a subgroup");
    R.q_index = static_cast<int>(classes.size());
    // fundamental system: the found roots, completed by subfield units
    F2Span fs;
    for (size_t i = 0; i < R.new_roots.size(); ++i) {
      const auto& c = R.root_classes[i];
      fs.add(c[1] | c[2] << 1 | c[3] << 2);
      R.fundamental.push_back(R.new_roots[i]);
    }
    for (int i = 0; i < 3; ++i)
      if (fs.add(1 << i)) R.fundamental.push_back(eps[i]);
    if (R.fundamental.size() != 3) throw inconsistency_error("unit rank mismatch");
    return R;
  }

  // imaginary: one real subfield carries the only fundamental unit
  int ri = B.m1 > 0 ? 1 : (B.m2 > 0 ? 2 : 3);
  i64 mr = ri == 1 ? B.m1 : (ri == 2 ? B.m2 : B.m3);
  UnitGroup Ur = unit_group(QuadField(mr));
  BqElem eps = bq_embed(B, ri, Ur.eps);
  std::set<i64> discs{B.d1, B.d2, B.d3};
  std::set<i64> kernels{B.m1, B.m2, B.m3};
  auto coord_of = [&](i64 m) {
    if (B.m1 == m) return 1;
    if (B.m2 == m) return 2;
    return 3;
  };
  int w = 2;
  BqElem zeta = bq_from_rational(-1);
  if (discs == std::set<i64>{-4, 8, -8}) {
    w = 8;  // the eighth roots of unity: zeta = (sqrt(2) + sqrt(-2))/2
    zeta = bq_from_rational(0);
    zeta.c[coord_of(2)] = mk_q(1, 2);
    zeta.c[coord_of(-2)] = mk_q(1, 2);
  } else if (kernels.count(-1) && kernels.count(-3)) {
    w = 12;  // zeta_12 = (sqrt(3) + sqrt(-1))/2
    zeta = bq_from_rational(0);
    zeta.c[coord_of(3)] = mk_q(1, 2);
    zeta.c[coord_of(-1)] = mk_q(1, 2);
  } else if (kernels.count(-1)) {
    w = 4;
    zeta = bq_from_rational(0);
    zeta.c[coord_of(-1)] = 1;
  } else if (kernels.count(-3)) {
    w = 6;  // zeta_6 = (1 + sqrt(-3))/2
    zeta = bq_from_rational(0);
    zeta.c[0] = mk_q(1, 2);
    zeta.c[coord_of(-3)] = mk_q(1, 2);
  }
  if (!(bq_pow(B, zeta, w) == bq_from_rational(1)) ||
      !(bq_pow(B, zeta, w / 2) == bq_from_rational(-1)))
    throw inconsistency_error("torsion generator order check failed");
  R.torsion_order = w;
  R.torsion_gen = zeta;
  int torsion_factor = w == 8 ? 2 : 1;  // [W_B : W1 W2 W3]
  int q2 = 1;
  for (int j : {0, 1}) {
    BqElem cand = j ? bq_mul(B, zeta, eps) : eps;
    auto y = bq_sqrt(B, cand);
    if (!y) continue;
    q2 = 2;
    R.new_roots.push_back(*y);
    R.root_squares.push_back(cand);
    R.root_classes.push_back({j, ri == 1, ri == 2, ri == 3});
    break;
  }
  R.q_index = torsion_factor * q2;
  R.fundamental.push_back(q2 == 2 ? R.new_roots[0] : eps);
  return R;
}

mpz_class kuroda_class_number(const BiquadField& B) {
  KubotaResult k = kubota_unit_index(B);
  mpz_class num = k.q_index;
  num *= class_group_of_disc(B.d1).h_wide();
  num *= class_group_of_disc(B.d2).h_wide();
  num *= class_group_of_disc(B.d3).h_wide();
  i64 den = B.real() ? 4 : 2;
  if (num % den != 0) throw inconsistency_error("unit index incompatible with class number formula");
  return num / den;
}

/* ---------- relative quadratic extensions ---------- */

namespace {

PrimeIdeal conj_prime(const QuadField& K, const PrimeIdeal& P) {
  if (P.type != SplitType::split) return P;
  i64 r = 2 * P.p - P.r;
  Ideal I{1, P.p, r};
  return PrimeIdeal{P.p, SplitType::split, r, form_of_ideal(K, I)};
}

struct PlaceInfo {
  std::string label;
  bool unramified;
  bool above_two;
  bool infinite;
  std::optional<PrimeIdeal> prime;
};

std::vector<PlaceInfo> analyze_places(const QuadField& K, const QuadInt& x) {
  std::vector<PlaceInfo> out;
  mpz_class n = qi_norm(K, x);
  if (n < 0) n = -n;
  if (!n.fits_slong_p()) throw resource_error("kummer generator norm too large");
  auto push_finite = [&](const PrimeIdeal& P, bool ok, const std::string& tag) {
    out.push_back({tag, ok, P.p == 2, false, P});
  };
  // every prime above 2 is always reported
  {
    PrimeIdeal P2 = prime_above(K, 2);
    if (P2.type == SplitType::split) {
      push_finite(P2, unramified_at_2(K, x, P2), "(2," + std::to_string(P2.r) + ")");
      PrimeIdeal Q2 = conj_prime(K, P2);
      push_finite(Q2, unramified_at_2(K, qi_conj(x), P2), "(2," + std::to_string(Q2.r) + ")");
    } else {
      push_finite(P2, unramified_at_2(K, x, P2),
                  P2.type == SplitType::inert ? "(2)" : "(2,ram)");
    }
  }
  for (auto [p, e] : factorize(n.get_si())) {
    if (p == 2) continue;
    PrimeIdeal P = prime_above(K, p);
    std::string ps = std::to_string(p);
    if (P.type == SplitType::split) {
      push_finite(P, valuation(K, x, P) % 2 == 0, "(" + ps + "," + std::to_string(P.r) + ")");
      PrimeIdeal Q = conj_prime(K, P);
      push_finite(Q, valuation(K, qi_conj(x), P) % 2 == 0,
                  "(" + ps + "," + std::to_string(Q.r) + ")");
    } else {
      push_finite(P, valuation(K, x, P) % 2 == 0,
                  P.type == SplitType::inert ? "(" + ps + ")" : "(" + ps + ",ram)");
    }
  }
  if (K.D > 0) {
    out.push_back({"infinity_1", sign_at(K, x, true) > 0, false, true, std::nullopt});
    out.push_back({"infinity_2", sign_at(K, x, false) > 0, false, true, std::nullopt});
  }
  return out;
}

}  // namespace

QuadField RelativeQuadExt::base() const {
  if (base_m == 0) throw domain_error("base field is the rationals");
  return QuadField(base_m);
}

RelativeQuadExt relquad_over_rationals(i64 d) {
  RelativeQuadExt E;
  E.base_m = 0;
  E.gen_rational = squarefree_core(d);
  i64 disc = fundamental_discriminant(E.gen_rational);
  E.gen = qi_from_int(0);
  i64 a = disc < 0 ? -disc : disc;
  for (auto [p, e] : factorize(a)) E.ramified_finite_q.push_back(p);
  E.ramified_at_two = disc % 2 == 0;
  E.ramified_real_places = d < 0 ? 1 : 0;
  return E;
}

RelativeQuadExt relquad(const QuadField& K, const QuadInt& x) {
  if (qi_is_zero(x)) throw domain_error("kummer generator must be nonzero");
  if (qi_sqrt(K, x)) throw domain_error("kummer generator is a square: trivial extension");
  RelativeQuadExt E;
  E.base_m = K.d;
  E.gen_rational = 0;
  E.gen = x;
  for (const auto& pl : analyze_places(K, x)) {
    if (pl.unramified) continue;
    if (pl.infinite)
      ++E.ramified_real_places;
    else if (pl.above_two)
      E.ramified_at_two = true;
    else
      E.ramified_finite.push_back(*pl.prime);
  }
  return E;
}

UnramifiedReport unramified_test(const RelativeQuadExt& E) {
  UnramifiedReport rep;
  rep.unramified = true;
  if (E.over_rationals()) {
    i64 disc = fundamental_discriminant(E.gen_rational);
    for (i64 p : E.ramified_finite_q) rep.places.push_back({std::to_string(p), false});
    if (disc % 2 != 0) rep.places.push_back({"2", true});
    rep.places.push_back({"infinity", E.ramified_real_places == 0});
  } else {
    for (const auto& pl : analyze_places(E.base(), E.gen))
      rep.places.push_back({pl.label, pl.unramified});
  }
  for (const auto& pl : rep.places) rep.unramified = rep.unramified && pl.unramified;
  return rep;
}

ChevalleyResult chevalley_ambiguous(const RelativeQuadExt& E) {
  ChevalleyResult R;
  if (E.over_rationals()) {
    R.h_base = 1;
    R.t = static_cast<int>(E.ramified_finite_q.size());
    R.unit_norm_index = 1;
    R.count = 1;
    R.count <<= R.t - 1;  // genus bound: t >= 1 for a nontrivial extension
    R.convention = "narrow ambiguous classes over Q (genus count)";
    return R;
  }
  if (E.ramified_at_two)
    throw hypothesis_error(
        "ambiguous class count over a quadratic base requires odd ramification");
  QuadField K = E.base();
  R.h_base = class_group(K).h_wide();
  // ramified places: the recorded odd primes plus negative real embeddings
  std::vector<bool> real_ram;
  if (K.D > 0)
    for (bool first : {true, false}) real_ram.push_back(sign_at(K, E.gen, first) < 0);
  int t = static_cast<int>(E.ramified_finite.size());
  for (bool b : real_ram) t += b;
  R.t = t;
  // unit generators modulo squares
  std::vector<QuadInt> gens;
  if (K.D == -4)
    gens.push_back(qi_make(K, 0, 1));
  else if (K.D == -3)
    gens.push_back(qi_make(K, 1, 1));
  else
    gens.push_back(qi_from_int(-1));
  if (K.D > 0) gens.push_back(unit_group(K).eps);
  // local norm symbols at the ramified places
  std::vector<unsigned long> rows;
  for (const QuadInt& u : gens) {
    unsigned long row = 0;
    int col = 0, parity = 0;
    for (const PrimeIdeal& P : E.ramified_finite) {
      int sym = P.type == SplitType::inert
                    ? quad::residue_symbol_inert(K, u, P.p)
                    : quad::residue_symbol_deg1(K, u, P.p, P.r);
      if (sym == 0) throw inconsistency_error("unit vanishes at a ramified prime");
      if (sym < 0) row |= 1ul << col, ++parity;
      ++col;
    }
    for (size_t i = 0; i < real_ram.size(); ++i) {
      if (!real_ram[i]) continue;
      if (sign_at(K, u, i == 0) < 0) row |= 1ul << col, ++parity;
      ++col;
    }
    if (parity % 2 != 0)
      throw inconsistency_error("local symbols violate the product formula");
    rows.push_back(row);
  }
  int rank = 0;
  std::vector<unsigned long> basis;
  for (unsigned long row : rows) {
    for (unsigned long b : basis) row = std::min(row, row ^ b);
    if (row) basis.push_back(row), ++rank;
  }
  R.unit_norm_index = 1 << rank;
  mpz_class num = R.h_base;
  num <<= t;
  mpz_class den = 2 * R.unit_norm_index;
  if (num % den != 0) throw inconsistency_error("ambiguous class formula does not divide");
  R.count = num / den;
  R.convention = "ordinary ambiguous classes over a quadratic base";
  return R;
}

}  // namespace towerforge::biquad
