#pragma once

#include <gmpxx.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "towerforge/arith.hpp"
#include "towerforge/quadfield.hpp"

namespace towerforge::biquad {

using arith::i64;
using quad::PrimeIdeal;
using quad::QuadField;
using quad::QuadInt;

// Biquadratic (V4) field Q(sqrt(m1), sqrt(m2)) recorded through the fundamental
// discriminants d1, d2, d3 of its three quadratic subfields.  The third is
// derived: d3 = disc of Q(sqrt(m1 m2)).
struct BiquadField {
  i64 d1, d2, d3;
  i64 m1, m2, m3;  // matching squarefree kernels
  BiquadField(i64 a, i64 b);
  bool real() const { return d1 > 0 && d2 > 0; }
  QuadField subfield(int i) const;  // i in {1, 2, 3}
};

// Exact element c0 + c1 sqrt(m1) + c2 sqrt(m2) + c3 sqrt(m3).  For m < 0 the
// convention sqrt(m) = i sqrt(|m|) fixes every product sign.
struct BqElem {
  std::array<mpq_class, 4> c;
  bool operator==(const BqElem&) const = default;
};

BqElem bq_from_rational(const mpq_class& r);
// embeds an integer of the i-th quadratic subfield
BqElem bq_embed(const BiquadField& B, int subfield_index, const QuadInt& x);
BqElem bq_add(const BqElem& x, const BqElem& y);
BqElem bq_sub(const BqElem& x, const BqElem& y);
BqElem bq_neg(const BqElem& x);
BqElem bq_mul(const BiquadField& B, const BqElem& x, const BqElem& y);
// the automorphism fixing the i-th quadratic subfield
BqElem bq_conj(const BiquadField& B, const BqElem& x, int fixed_subfield);
bool bq_is_zero(const BqElem& x);
mpq_class bq_abs_norm(const BiquadField& B, const BqElem& x);  // norm to Q
std::optional<BqElem> bq_sqrt(const BiquadField& B, const BqElem& x);
std::string bq_str(const BiquadField& B, const BqElem& x);

// Unit index q = [E_B : E1 E2 E3] via exact square-root tests of the products
// of subfield fundamental units (Kubota).  root_squares[i] states the product
// that new_roots[i] squares to: torsion_gen^(cls[0]) * prod_i eps_i^(cls[i]),
// with cls = root_classes[i]; for a real field torsion_gen is -1.
struct KubotaResult {
  int q_index;
  int torsion_order;  // number of roots of unity in B
  BqElem torsion_gen;
  std::vector<BqElem> fundamental;  // fundamental system modulo torsion
  std::vector<BqElem> new_roots;
  std::vector<BqElem> root_squares;
  std::vector<std::array<int, 4>> root_classes;
};
KubotaResult kubota_unit_index(const BiquadField& B);

// h(B) = (q / 2^v) h(d1) h(d2) h(d3), v = 2 for a real field and 1 otherwise.
mpz_class kuroda_class_number(const BiquadField& B);

// Quadratic extension of Q or of a quadratic field, given by its Kummer
// generator.  Ramification data is derived on construction.
struct RelativeQuadExt {
  i64 base_m;        // 0 when the base is Q, else the kernel of the base field
  i64 gen_rational;  // base Q: squarefree Kummer generator
  QuadInt gen;       // quadratic base: Kummer generator
  std::vector<i64> ramified_finite_q;       // base Q: ramified primes
  std::vector<PrimeIdeal> ramified_finite;  // quadratic base: odd ramified primes
  bool ramified_at_two = false;
  int ramified_real_places = 0;
  bool infinite_ramification() const { return ramified_real_places > 0; }
  bool over_rationals() const { return base_m == 0; }
  QuadField base() const;  // domain_error when the base is Q
};

RelativeQuadExt relquad_over_rationals(i64 d);
RelativeQuadExt relquad(const QuadField& K, const QuadInt& x);

struct PlaceStatus {
  std::string place;
  bool unramified;
};
struct UnramifiedReport {
  bool unramified;
  std::vector<PlaceStatus> places;
};
UnramifiedReport unramified_test(const RelativeQuadExt& E);

// Ambiguous class count of the extension.  Over Q the count is for the narrow
// class group (genus convention: 2^(t-1) with t the ramified primes); over a
// quadratic base it is the ordinary count h(K) 2^t / (2 [E : E cap N]) with t
// running over ramified finite and real places, and the unit-norm index
// computed through residue symbols at the ramified places.  Extensions of a
// quadratic base ramified above 2 are refused.
struct ChevalleyResult {
  mpz_class count;
  mpz_class h_base;
  int t;
  int unit_norm_index;
  std::string convention;
};
ChevalleyResult chevalley_ambiguous(const RelativeQuadExt& E);

}  // namespace towerforge::biquad
