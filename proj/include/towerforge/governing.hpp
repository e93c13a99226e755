#pragma once

#include <gmpxx.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "towerforge/arith.hpp"
#include "towerforge/quadfield.hpp"

namespace towerforge::governing {

using arith::i64;
using quad::QuadField;
using quad::QuadInt;

// Square class of the base field: the value modulo squares together with the
// odd-valuation prime support of its ideal (the b-part of (x) = a^2 b).
struct SquareClass {
  i64 base_m = 0;   // 0: the rationals
  i64 repr_q = 0;   // base Q: squarefree representative
  QuadInt repr{};   // quadratic base: integer representative
  std::vector<std::string> odd_support;  // labels of primes with odd valuation
};

// x and y generate the same class iff x y is a square of the base field.
bool same_class(const SquareClass& x, const SquareClass& y);

enum class Origin { torsion_unit, fundamental_unit, s_unit, class_lift };
std::string origin_str(Origin o);

struct BasisEntry {
  SquareClass cls;
  Origin tag;
  i64 s_prime = 0;  // the rational prime for s_unit entries
};

// Kummer-dual basis of the 2-governing group for (K, S): independent square
// classes generating { x : (x) in I^2 <S> } modulo squares, in the pinned
// order torsion unit, fundamental unit, s-units by increasing prime,
// class lifts.  dim = dim E^S/(E^S)^2 + dim Cl^S[2] is asserted.
struct GoverningDatum {
  i64 base_m = 0;
  std::vector<i64> S;
  std::vector<i64> T;  // local-square conditions already imposed, if any
  std::vector<BasisEntry> basis;
  int dim = 0;
};

GoverningDatum v_group_q(std::vector<i64> S);
GoverningDatum v_group(const QuadField& K, std::vector<i64> S);

// Subgroup of v_group(K, S) of elements that are local squares at every place
// above each q in T.  T must be odd primes, disjoint from S and unramified in
// K (Frobenius data at ramified primes is undefined).
GoverningDatum v_group_restricted_q(std::vector<i64> S, std::vector<i64> T);
GoverningDatum v_group_restricted(const QuadField& K, std::vector<i64> S,
                                  std::vector<i64> T);

// Frobenius of the pinned prime above q, written in the coordinates dual to
// G's basis: coords[i] = 1 iff basis[i] is a non-square at that prime.
// conjugate_prime selects the other prime above a split q.
struct FrobeniusVector {
  std::vector<int> coords;
  i64 q = 0;
  i64 r = -1;  // pinned local root for a degree-one prime, -1 otherwise
  bool conjugate = false;
};
FrobeniusVector frobenius_vector(const GoverningDatum& G, i64 q,
                                 bool conjugate_prime = false);

// Two-block search target: the local-condition block (all-ones on the s-unit
// coordinates: inert at every searched layer) and the stability block
// supplied by the tower module.  Blocks live in the two factors of the
// governing decomposition and are aimed independently.
struct LatticeTarget {
  std::vector<int> block_a;
  std::vector<int> block_z;
  std::vector<std::string> a_labels;
  std::vector<std::string> z_labels;
  std::string mode;  // "full" or "local-conditions-only"
};
LatticeTarget lattice_target(const GoverningDatum& G, const std::vector<int>& z_block,
                             bool tower_data_available);

// The other prime above a split p, with the form kept literal so the ideal
// can be recovered from it.  Non-split primes are returned unchanged.
quad::PrimeIdeal conjugate_prime(const QuadField& K, const quad::PrimeIdeal& P);

// Local squareness data of x at the prime of K above the odd unramified q:
// {valuation parity, unit-part residue symbol bit}; x is a local square iff
// both are zero.  conjugate_side reads the other prime of a split q.  Even
// positive valuations are cleared with the conjugate prime's s-unit, which
// does not move the square class.
std::array<int, 2> local_square_condition(const QuadField& K, const quad::ClassGroup& cl,
                                          const QuadInt& x, i64 q,
                                          const quad::PrimeIdeal& pinned,
                                          bool conjugate_side);

}  // namespace towerforge::governing
