#pragma once
#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "towerforge/arith.hpp"

namespace towerforge::quad {

using arith::i64;
using arith::i128;

/* Fundamental discriminant attached to the squarefree integer d != 0, 1:
 * d itself when d = 1 (mod 4), else 4d. */
i64 fundamental_discriminant(i64 d);

struct QuadField {
  i64 d;  // squarefree, != 0, 1
  i64 D;  // fundamental discriminant
  explicit QuadField(i64 m);  // any integer with non-square |m| > 1 or m < 0; core is taken
  bool real() const { return d > 0; }
  friend bool operator==(const QuadField&, const QuadField&) = default;
};

enum class SplitType { split, inert, ramified };
SplitType splitting_type(const QuadField& K, i64 p);

/* Integral binary quadratic form a x^2 + b xy + c y^2. */
struct Form {
  i64 a, b, c;
  i64 disc() const { return b * b - 4 * a * c; }
  bool primitive() const;
  auto operator<=>(const Form&) const = default;
};
std::string form_str(const Form& f);

Form principal_form(i64 D);
bool is_reduced(const Form& f);
Form reduce(Form f);
Form rho_step(const Form& f);                  // indefinite reduction/cycle step
std::vector<Form> rho_cycle(const Form& f);    // cycle of a reduced indefinite form
/* Canonical class representative: the reduced form itself (definite) or the
 * lexicographic minimum over the forms with a > 0 in the cycle (indefinite). */
Form canonical_form(Form f);
Form compose(const Form& f, const Form& g);    // Dirichlet composition, same disc
Form form_pow(Form f, i64 k);                  // canonical result, k may be negative

/* Quadratic integer (u + v sqrt(D))/2 with u = v D (mod 2), D the field
 * discriminant.  Rational integers embed as (2n, 0). */
struct QuadInt {
  mpz_class u, v;
  friend bool operator==(const QuadInt&, const QuadInt&) = default;
};
QuadInt qi_make(const QuadField& K, mpz_class u, mpz_class v);  // checks parity
QuadInt qi_from_int(i64 n);
QuadInt qi_add(const QuadInt& x, const QuadInt& y);
QuadInt qi_mul(const QuadField& K, const QuadInt& x, const QuadInt& y);
QuadInt qi_conj(const QuadInt& x);
QuadInt qi_neg(const QuadInt& x);
mpz_class qi_norm(const QuadField& K, const QuadInt& x);   // (u^2 - D v^2)/4
mpz_class qi_trace(const QuadInt& x);                      // u
bool qi_is_zero(const QuadInt& x);
bool qi_divides_int(const QuadField& K, i64 n, const QuadInt& x);  // n | x in O
QuadInt qi_div_int(const QuadField& K, const QuadInt& x, i64 n);
std::optional<QuadInt> qi_sqrt(const QuadField& K, const QuadInt& x);
std::string qi_str(const QuadField& K, const QuadInt& x);  // in terms of sqrt(d)

/* Unit group of the maximal order: torsion order w (4 for d = -1, 6 for
 * d = -3, else 2) and for real fields the fundamental unit > 1 with its norm. */
struct UnitGroup {
  int w;
  int rank;            // 0 imaginary, 1 real
  QuadInt eps;         // real only; (0,0) otherwise
  int eps_norm;        // +1 or -1; 0 when imaginary
};
UnitGroup unit_group(const QuadField& K);

/* Prime of K above p, pinned: for split and ramified p the ideal is
 * [p, (-r + sqrt(D))/2] with r the smallest r >= 0 such that r^2 = D (mod 4p);
 * equivalently the kernel of sqrt(D) -> r.  Inert primes carry r = -1. */
struct PrimeIdeal {
  i64 p;
  SplitType type;
  i64 r;
  Form form;  // (p, r, (r^2-D)/(4p)) for split/ramified; principal form for inert
};
PrimeIdeal prime_above(const QuadField& K, i64 p);

i64 valuation(const QuadField& K, const QuadInt& x, const PrimeIdeal& P);

/* Legendre symbol of x at the degree-1 prime [q, (-r+sqrt(D))/2]: reduce via
 * sqrt(D) -> r and take (.|q).  Zero when q divides x. */
int residue_symbol_deg1(const QuadField& K, const QuadInt& x, i64 q, i64 r);
/* Symbol at the inert prime (q): x mod q generates F_{q^2}; the symbol equals
 * the Legendre symbol of the norm, which is how it is computed. */
int residue_symbol_inert(const QuadField& K, const QuadInt& x, i64 q);
/* Same value through the generic Euler power in F_{q^2}; cross-check path. */
int residue_symbol_inert_slow(const QuadField& K, const QuadInt& x, i64 q);

/* Ideal m * (Z a + Z (-b + sqrt(D))/2) with the inner part primitive,
 * a = its norm, b^2 = D (mod 4a). */
struct Ideal {
  mpz_class m, a, b;
};
Ideal ideal_of_form(const QuadField& K, const Form& f);  // requires f.a > 0
Ideal ideal_mul(const QuadField& K, const Ideal& I, const Ideal& J);
Ideal ideal_pow(const QuadField& K, Ideal I, i64 k);
Ideal ideal_of_element(const QuadField& K, const QuadInt& x);
bool ideal_eq(const Ideal& I, const Ideal& J);
Form form_of_ideal(const QuadField& K, const Ideal& I);  // class of the inner part

/* Generator of I when I is principal as an ideal (either sign of norm).
 * Deterministic: the representation of +-1 found first along the principal
 * cycle scan is used, then the sign is normalized (u > 0, or u = 0 and v > 0). */
std::optional<QuadInt> principal_generator(const QuadField& K, const Ideal& I);

/* Narrow form class group with elementary divisor structure, plus the wide
 * quotient.  Enumeration is capped: |D| above the TOWERFORGE_MAX_DISC
 * environment value (default 1000000) raises resource_error. */
struct ClassGroup {
  i64 D;
  std::vector<Form> classes;  // canonical reps, sorted; index is the class id
  int principal_id;
  int minus_id;  // class of the ideal (sqrt(D)); principal when it is trivial
  std::vector<int> generator_ids;            // narrow SNF generators
  std::vector<i64> divisors;                 // narrow elementary divisors, d1 | d2 | ...
  std::vector<std::vector<i64>> coords;      // narrow coordinates per class id
  std::vector<i64> wide_divisors;
  std::vector<std::vector<i64>> wide_coords;
  std::vector<int> wide_generator_lifts;     // class ids lifting the wide generators

  i64 h_narrow() const { return static_cast<i64>(classes.size()); }
  i64 h_wide() const;
  int id_of(const Form& f) const;  // throws domain_error when disc mismatches
  int mul(int x, int y) const;
  int inv(int x) const;
  int pow(int x, i64 k) const;
  i64 narrow_order(int x) const;
  i64 wide_order(int x) const;
};
ClassGroup class_group(const QuadField& K);
ClassGroup class_group_of_disc(i64 D);

/* Quotient of the wide class group by the subgroup generated by the listed
 * classes.  Generators come with lifts to parent class ids. */
struct QuotientGroup {
  std::vector<i64> divisors;             // elementary divisors, chain, > 1
  std::vector<std::vector<i64>> coords;  // per parent class id
  std::vector<int> generator_lifts;      // parent class ids
  i64 order() const;
  int two_rank() const;
};
QuotientGroup s_class_group(const ClassGroup& cl, const std::vector<int>& class_ids);

/* Generator of P^k for k the wide order of [P]; the S-unit attached to a
 * non-inert prime.  Inert primes have the rational p itself as S-unit. */
QuadInt s_unit_generator(const QuadField& K, const ClassGroup& cl, const PrimeIdeal& P);

/* True when x = t^2 (mod 4 O) is solvable; the everywhere-above-2 unramified
 * criterion for K(sqrt(x))/K once x has even valuation at every prime over 2. */
bool square_mod_4O(const QuadField& K, const QuadInt& x);
/* Unramifiedness of K(sqrt(x))/K at one prime P above 2. */
bool unramified_at_2(const QuadField& K, const QuadInt& x, const PrimeIdeal& P);

}  // namespace towerforge::quad
