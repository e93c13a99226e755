#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "towerforge/errors.hpp"

namespace towerforge::arith {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;
using u128 = unsigned __int128;

/* Kronecker symbol (a|n).  Total on Z x Z: (a|0) = [|a| = 1], (a|-1) = sign
 * extension, (a|2) the standard supplement.  For n an odd prime this is the
 * Legendre symbol; for odd n > 0 the Jacobi symbol. */
int kronecker(i64 a, i64 n);

/* Deterministic Miller-Rabin with the fixed base set
 * {2,3,5,7,11,13,17,19,23,29,31,37}, correct for every n < 3.317e24 and in
 * particular for the whole uint64 range accepted here. */
bool is_prime(u64 n);
inline bool is_prime(i64 n) { return n >= 2 && is_prime(static_cast<u64>(n)); }

/* Odd prime wrapper: constructing one certifies primality and oddness. */
struct OddPrime {
  i64 v;
  explicit OddPrime(i64 p) : v(p) {
    if (p < 3 || p % 2 == 0 || !is_prime(p))
      throw domain_error("OddPrime: " + std::to_string(p) + " is not an odd prime");
  }
  friend bool operator==(const OddPrime&, const OddPrime&) = default;
};

u64 mulmod(u64 a, u64 b, u64 m);
u64 powmod(u64 base, u64 exp, u64 m);
i64 mod_inverse(i64 a, i64 m);  // throws domain_error when gcd(a,m) != 1

/* Square root mod an odd prime (Tonelli-Shanks); nullopt encoded as -1 when a
 * is a non-residue.  Returns the root r with 0 <= r < p, no parity pinning. */
i64 sqrt_mod(i64 a, i64 p);

/* Euler test in F_q (deg 1) or F_{q^2} (deg 2): value of x^((q^deg - 1)/2),
 * mapped to {+1,-1,0}.  The quadratic extension is modeled as F_q[t]/(t^2 - r)
 * with r the smallest positive non-residue mod q; the model is part of the
 * result contract and is exposed below for callers that need the embedding. */
int residue_power_test(i64 x, OddPrime q, int deg);

struct Fq2Model {
  i64 q;  // odd prime
  i64 r;  // smallest positive non-residue mod q; t^2 = r
};
Fq2Model fq2_model(OddPrime q);

/* Element a + b t of F_{q^2} in the model above.  Throws domain_error if the
 * model is malformed (r a square mod q makes t^2 - r reducible). */
int residue_power_test(i64 a, i64 b, const Fq2Model& model);

/* Factorization by trial division + Pollard rho, certificate scale only.
 * Returns (prime, exponent) pairs, primes ascending.  n >= 1. */
std::vector<std::pair<i64, int>> factorize(i64 n);

/* Squarefree part of n keeping sign: n = core * square. */
i64 squarefree_core(i64 n);

/* Floor of sqrt for non-negative x, exact. */
i64 isqrt(i64 x);
inline bool is_square(i64 x) {
  if (x < 0) return false;
  i64 r = isqrt(x);
  return r * r == x;
}

}  // namespace towerforge::arith
