#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "towerforge/biquad.hpp"
#include "towerforge/governing.hpp"
#include "towerforge/quadfield.hpp"

namespace towerforge::gras {

using arith::i64;
using arith::u64;
using governing::FrobeniusVector;
using governing::GoverningDatum;
using governing::LatticeTarget;
using quad::QuadField;
using quad::QuadInt;

// Tame prime of the base field: the rational prime underneath, and which of
// the two primes above it when the base is quadratic and q splits.
struct TamePrime {
  i64 q;
  bool conjugate = false;
};

// A quadratic extension exactly ramified at T and totally decomposed at S
// exists iff the Frobenius vectors of the T-primes sum to zero in the
// coordinates of v_group(base, S) while no proper nonempty subset does (the
// subset condition keeps every prime of T ramified).
bool gras_exists(const GoverningDatum& G, const std::vector<TamePrime>& T);
bool gras_exists_q(const std::vector<i64>& T, const std::vector<i64>& S);
bool gras_exists(const QuadField& K, const std::vector<TamePrime>& T,
                 const std::vector<i64>& S);

// Quadratic extension of the base ramified exactly at one tame prime,
// unramified at 2 and at the real places, split at every prime above S.
struct KummerDatum {
  i64 base_m = 0;  // 0 when the base is Q
  TamePrime tame{};
  i64 gen_rational = 0;  // base Q: q* = (-1)^((q-1)/2) q
  QuadInt gen{};         // quadratic base: Kummer generator
  biquad::RelativeQuadExt ext;
  int twist_index = -1;  // index of the unit/class twist that passed (base K)
};

// Closed form over Q: the generator is q*; no local search is needed.
KummerDatum build_extension_q(i64 q);

// Over a quadratic base the generator is searched as x0 u with (x0) = b^2 q
// for a square root b of the inverse ideal class, and u running over the
// unit/class twists of v_group(K, {}).  Exhaustion means a precondition of
// the existence theorem was violated upstream.
KummerDatum build_extension(const QuadField& K, const TamePrime& tq,
                            const std::vector<i64>& S);

// Prescribed completion behaviour at the primes of the base above each entry
// of S: 0 = totally split (the default of the overload above), 1 = inert at
// every prime above the key.  Keys are rational primes of S; absent keys
// default to split.
using LocalConditions = std::map<i64, int>;
KummerDatum build_extension(const QuadField& K, const TamePrime& tq,
                            const std::vector<i64>& S, const LocalConditions& want);

// Splitting of each prime of the base above S in the built extension:
// value true = inert (residue symbol -1), false = split.  Keys follow the odd
// support labels: "5" over Q, "(3,2)" / "(7)" over a quadratic base.
std::map<std::string, bool> inertia_check(const KummerDatum& E, const std::vector<i64>& S);

enum class PrimeFilter { any, rational_inert, degree_one };
std::string filter_str(PrimeFilter f);

struct ScanStats {
  u64 tested = 0;             // admissible primes evaluated up to the hit/bound
  double expected_density = 0;  // 2^-(number of constrained bits)
};

struct ChebotarevResult {
  i64 q = 0;
  bool conjugate = false;
  FrobeniusVector audit;      // recomputed vector; equals the target by construction
  std::vector<int> z_audit;   // evaluated stability block, when one was aimed
  ScanStats stats;
};

// Extra splitting conditions attached to the stability block; must be a pure
// deterministic function of (q, side).
using ZEvaluator = std::function<std::vector<int>(i64 q, bool conjugate)>;

// Smallest admissible prime whose Frobenius vector equals the target
// coordinatewise.  Admissible: odd, passes the filter, and coprime to the
// basis supports.  The scan walks fixed-size blocks in order; inside a block
// evaluations may be sharded across threads, the block minimum wins, so the
// result does not depend on thread timing.  Exhausting the bound raises
// search_error carrying the scan statistics.
ChebotarevResult chebotarev_search(const GoverningDatum& G, const std::vector<int>& target,
                                   i64 bound, PrimeFilter filter = PrimeFilter::any,
                                   int threads = 1);
ChebotarevResult chebotarev_search(const GoverningDatum& G, const LatticeTarget& target,
                                   const ZEvaluator& z_eval, i64 bound,
                                   PrimeFilter filter = PrimeFilter::any, int threads = 1);

// Full-range hit statistics for a target: every admissible prime below bound
// is evaluated.  se is the binomial standard error at the expected density.
struct DensityReport {
  u64 tested = 0;
  u64 hits = 0;
  double expected = 0;
  double observed = 0;
  double se = 0;
};
DensityReport chebotarev_density(const GoverningDatum& G, const std::vector<int>& target,
                                 i64 bound, int threads = 1);

}  // namespace towerforge::gras
