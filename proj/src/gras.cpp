#include "towerforge/gras.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <sstream>

#include "towerforge/errors.hpp"

namespace towerforge::gras {

using arith::kronecker;
using governing::conjugate_prime;
using governing::local_square_condition;
using governing::v_group;
using governing::v_group_q;
using quad::class_group;
using quad::ClassGroup;
using quad::Ideal;
using quad::ideal_mul;
using quad::ideal_of_form;
using quad::ideal_pow;
using quad::prime_above;
using quad::PrimeIdeal;
using quad::principal_generator;
using quad::qi_from_int;
using quad::qi_mul;
using quad::QuadInt;
using quad::residue_symbol_deg1;
using quad::residue_symbol_inert;
using quad::SplitType;
using quad::splitting_type;
using quad::valuation;

namespace {

std::vector<i64> checked_prime_set(std::vector<i64> S) {
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());
  for (i64 p : S) arith::OddPrime{p};
  return S;
}

Ideal ideal_of_prime(const QuadField& K, const PrimeIdeal& P) {
  if (P.type == SplitType::inert) return Ideal{P.p, 1, (K.D % 2 + 2) % 2};
  return Ideal{1, P.p, P.r};
}

}  // namespace

bool gras_exists(const GoverningDatum& G, const std::vector<TamePrime>& T) {
  if (T.empty()) throw domain_error("tame prime set is empty");
  if (T.size() > 16) throw resource_error("tame prime set too large");
  std::vector<TamePrime> ts = T;
  if (G.base_m == 0)
    for (TamePrime& t : ts) t.conjugate = false;
  std::sort(ts.begin(), ts.end(), [](const TamePrime& a, const TamePrime& b) {
    return a.q != b.q ? a.q < b.q : a.conjugate < b.conjugate;
  });
  for (size_t i = 1; i < ts.size(); ++i)
    if (ts[i].q == ts[i - 1].q && ts[i].conjugate == ts[i - 1].conjugate)
      throw domain_error("repeated tame prime");
  for (const TamePrime& t : ts)
    if (std::find(G.S.begin(), G.S.end(), t.q) != G.S.end())
      throw domain_error("tame primes must avoid S");

  std::vector<std::vector<int>> vs;
  for (const TamePrime& t : ts)
    vs.push_back(governing::frobenius_vector(G, t.q, t.conjugate).coords);
  auto xor_of = [&](unsigned mask) {
    std::vector<int> acc(G.dim, 0);
    for (size_t i = 0; i < vs.size(); ++i)
      if (mask >> i & 1)
        for (int j = 0; j < G.dim; ++j) acc[j] ^= vs[i][j];
    return acc;
  };
  std::vector<int> zero(G.dim, 0);
  unsigned full = (1u << vs.size()) - 1;
  if (xor_of(full) != zero) return false;
  for (unsigned mask = 1; mask < full; ++mask)
    if (xor_of(mask) == zero) return false;
  return true;
}

bool gras_exists_q(const std::vector<i64>& T, const std::vector<i64>& S) {
  std::vector<TamePrime> ts;
  for (i64 q : T) ts.push_back({q, false});
  return gras_exists(v_group_q(S), ts);
}

bool gras_exists(const QuadField& K, const std::vector<TamePrime>& T,
                 const std::vector<i64>& S) {
  return gras_exists(v_group(K, S), T);
}

KummerDatum build_extension_q(i64 q) {
  arith::OddPrime{q};
  KummerDatum E;
  E.base_m = 0;
  E.tame = {q, false};
  E.gen_rational = q % 4 == 1 ? q : -q;
  E.ext = biquad::relquad_over_rationals(E.gen_rational);
  return E;
}

namespace {

/* x generates an extension ramified exactly at P, unramified at 2 and the
 * real places, with the prescribed behaviour at every prime above S: split
 * when the wanted bit is 0, inert when it is 1.  Primes of S with even
 * positive valuation at a ramified base prime cannot be tested and reject x. */
bool candidate_passes(const QuadField& K, const ClassGroup& cl, const QuadInt& x,
                      const PrimeIdeal& P, const std::vector<i64>& S,
                      const LocalConditions& want, biquad::RelativeQuadExt& out) {
  biquad::RelativeQuadExt E = biquad::relquad(K, x);
  if (E.ramified_at_two || E.ramified_real_places != 0) return false;
  if (E.ramified_finite.size() != 1) return false;
  const PrimeIdeal& R = E.ramified_finite[0];
  if (R.p != P.p || R.type != P.type) return false;
  if (P.type == SplitType::split && R.r != P.r) return false;
  for (i64 ell : S) {
    int w = 0;
    if (auto it = want.find(ell); it != want.end()) w = it->second;
    PrimeIdeal Pl = prime_above(K, ell);
    if (Pl.type == SplitType::ramified) {
      if (valuation(K, x, Pl) != 0) return false;
      if (residue_symbol_deg1(K, x, ell, Pl.r) != (w ? -1 : 1)) return false;
      continue;
    }
    int sides = Pl.type == SplitType::split ? 2 : 1;
    for (int side = 0; side < sides; ++side) {
      auto bits = local_square_condition(K, cl, x, ell, Pl, side == 1);
      if (bits[0] != 0 || bits[1] != w) return false;
    }
  }
  out = std::move(E);
  return true;
}

}  // namespace

KummerDatum build_extension(const QuadField& K, const TamePrime& tq,
                            const std::vector<i64>& S) {
  return build_extension(K, tq, S, {});
}

KummerDatum build_extension(const QuadField& K, const TamePrime& tq,
                            const std::vector<i64>& S, const LocalConditions& want) {
  arith::OddPrime{tq.q};
  std::vector<i64> s_primes = checked_prime_set(S);
  if (std::find(s_primes.begin(), s_primes.end(), tq.q) != s_primes.end())
    throw domain_error("tame prime lies in S");
  PrimeIdeal P = prime_above(K, tq.q);
  if (tq.conjugate) {
    if (P.type != SplitType::split)
      throw domain_error("conjugate prime requested at a non-split prime");
    P = conjugate_prime(K, P);
  }
  ClassGroup cl = class_group(K);
  int id_q = cl.id_of(P.form);

  GoverningDatum twists = v_group(K, {});
  if (twists.dim >= 16) throw resource_error("twist group too large");

  for (int b = 0; b < static_cast<int>(cl.classes.size()); ++b) {
    int cls = cl.mul(cl.mul(b, b), id_q);
    bool wide_trivial = true;
    for (i64 c : cl.wide_coords[cls]) wide_trivial &= c == 0;
    if (!wide_trivial) continue;
    Ideal J = ideal_mul(K, ideal_pow(K, ideal_of_form(K, cl.classes[b]), 2),
                        ideal_of_prime(K, P));
    auto x0 = principal_generator(K, J);
    if (!x0) throw inconsistency_error("square-corrected tame ideal is not principal");
    for (unsigned mask = 0; mask < (1u << twists.dim); ++mask) {
      QuadInt x = *x0;
      for (int i = 0; i < twists.dim; ++i)
        if (mask >> i & 1) x = qi_mul(K, x, twists.basis[i].cls.repr);
      KummerDatum E;
      if (candidate_passes(K, cl, x, P, s_primes, want, E.ext)) {
        E.base_m = K.d;
        E.tame = tq;
        E.gen = x;
        E.twist_index = static_cast<int>(mask);
        return E;
      }
    }
  }
  throw inconsistency_error(
      "no Kummer generator satisfies the local conditions; an existence "
      "precondition was violated upstream");
}

std::map<std::string, bool> inertia_check(const KummerDatum& E, const std::vector<i64>& S) {
  std::map<std::string, bool> out;
  std::vector<i64> s_primes = checked_prime_set(S);
  if (E.base_m == 0) {
    for (i64 ell : s_primes) {
      if (E.gen_rational % ell == 0)
        throw domain_error("S meets the ramified set of the extension");
      out[std::to_string(ell)] = kronecker(E.gen_rational, ell) < 0;
    }
    return out;
  }
  QuadField K(E.base_m);
  ClassGroup cl = class_group(K);
  for (i64 ell : s_primes) {
    PrimeIdeal P = prime_above(K, ell);
    if (P.type == SplitType::ramified) {
      i64 v = valuation(K, E.gen, P);
      if (v % 2 != 0) throw domain_error("S meets the ramified set of the extension");
      if (v != 0)
        throw hypothesis_error("cannot clear valuations at a prime ramified in the base");
      int sym = residue_symbol_deg1(K, E.gen, ell, P.r);
      out["(" + std::to_string(ell) + ",ram)"] = sym < 0;
      continue;
    }
    int sides = P.type == SplitType::split ? 2 : 1;
    for (int side = 0; side < sides; ++side) {
      auto bits = local_square_condition(K, cl, E.gen, ell, P, side == 1);
      if (bits[0] != 0) throw domain_error("S meets the ramified set of the extension");
      std::string label =
          P.type == SplitType::inert
              ? "(" + std::to_string(ell) + ")"
              : "(" + std::to_string(ell) + "," +
                    std::to_string(side == 1 ? 2 * ell - P.r : P.r) + ")";
      out[label] = bits[1] == 1;
    }
  }
  return out;
}

std::string filter_str(PrimeFilter f) {
  switch (f) {
    case PrimeFilter::any: return "any";
    case PrimeFilter::rational_inert: return "rational-inert";
    case PrimeFilter::degree_one: return "degree-one";
  }
  return "?";
}

/* ---------- the prime scan ---------- */

namespace {

struct SideMatch {
  i64 q;
  bool conj;
};

struct EvalContext {
  const GoverningDatum& G;
  std::optional<QuadField> K;
  const std::vector<int>& target;
  const std::vector<int>* z_target;  // null: no stability block aimed
  const ZEvaluator* z_eval;
  PrimeFilter filter;
};

std::optional<std::vector<int>> coords_at(const EvalContext& C, i64 q, bool conj) {
  std::vector<int> out;
  out.reserve(C.G.dim);
  if (!C.K) {
    for (const auto& e : C.G.basis) {
      if (e.cls.repr_q % q == 0) return std::nullopt;
      out.push_back(kronecker(e.cls.repr_q, q) < 0 ? 1 : 0);
    }
    return out;
  }
  SplitType st = splitting_type(*C.K, q);
  if (st == SplitType::inert) {
    for (const auto& e : C.G.basis) {
      int s = residue_symbol_inert(*C.K, e.cls.repr, q);
      if (s == 0) return std::nullopt;
      out.push_back(s < 0 ? 1 : 0);
    }
    return out;
  }
  PrimeIdeal P = prime_above(*C.K, q);
  i64 r = conj ? 2 * q - P.r : P.r;
  for (const auto& e : C.G.basis) {
    int s = residue_symbol_deg1(*C.K, e.cls.repr, q, r);
    if (s == 0) return std::nullopt;
    out.push_back(s < 0 ? 1 : 0);
  }
  return out;
}

struct RangeResult {
  std::vector<i64> evaluated;  // admissible primes in the range, ascending
  u64 side_evals = 0;
  std::vector<SideMatch> matches;
};

RangeResult scan_range(const EvalContext& C, i64 lo, i64 hi) {
  RangeResult R;
  for (i64 n = lo | 1; n < hi; n += 2) {
    if (n < 3 || !arith::is_prime(static_cast<u64>(n))) continue;
    std::vector<bool> sides{false};
    if (C.K) {
      SplitType st = splitting_type(*C.K, n);
      if (st == SplitType::ramified) continue;
      if (st == SplitType::inert) {
        if (C.filter == PrimeFilter::degree_one) continue;
      } else {
        if (C.filter == PrimeFilter::rational_inert) continue;
        sides = {false, true};
      }
    }
    bool counted = false;
    for (bool conj : sides) {
      auto c = coords_at(C, n, conj);
      if (!c) break;  // divides a basis support: the prime is inadmissible
      counted = true;
      ++R.side_evals;
      bool hit = *c == C.target;
      if (hit && C.z_target) hit = (*C.z_eval)(n, conj) == *C.z_target;
      if (hit) R.matches.push_back({n, conj});
    }
    if (counted) R.evaluated.push_back(n);
  }
  return R;
}

RangeResult scan_block_parallel(const EvalContext& C, i64 lo, i64 hi, int threads) {
  if (threads <= 1) return scan_range(C, lo, hi);
  i64 step = (hi - lo + threads - 1) / threads;
  std::vector<std::future<RangeResult>> futs;
  for (int t = 0; t < threads; ++t) {
    i64 a = lo + t * step;
    i64 b = std::min(hi, a + step);
    if (a >= b) break;
    futs.push_back(std::async(std::launch::async, [&C, a, b] { return scan_range(C, a, b); }));
  }
  RangeResult all;
  for (auto& f : futs) {
    RangeResult r = f.get();
    all.evaluated.insert(all.evaluated.end(), r.evaluated.begin(), r.evaluated.end());
    all.side_evals += r.side_evals;
    all.matches.insert(all.matches.end(), r.matches.begin(), r.matches.end());
  }
  return all;
}

constexpr i64 kScanBlock = 1 << 15;

ChebotarevResult run_scan(const EvalContext& C, i64 bound, int threads) {
  if (bound <= 2) throw domain_error("scan bound must exceed 2");
  if (static_cast<int>(C.target.size()) != C.G.dim)
    throw domain_error("target length does not match the governing dimension");
  int zlen = C.z_target ? static_cast<int>(C.z_target->size()) : 0;
  double expected = std::ldexp(1.0, -(C.G.dim + zlen));
  u64 tested = 0;
  for (i64 lo = 3; lo < bound; lo += kScanBlock) {
    i64 hi = std::min(bound, lo + kScanBlock);
    RangeResult r = scan_block_parallel(C, lo, hi, threads);
    if (!r.matches.empty()) {
      SideMatch best = r.matches[0];
      for (const SideMatch& m : r.matches)
        if (m.q < best.q || (m.q == best.q && best.conj && !m.conj)) best = m;
      for (i64 p : r.evaluated)
        if (p <= best.q) ++tested;
      ChebotarevResult out;
      out.q = best.q;
      out.conjugate = best.conj;
      out.stats = {tested, expected};
      return out;
    }
    tested += r.evaluated.size();
  }
  std::ostringstream os;
  os << "chebotarev scan exhausted: bound=" << bound << " tested=" << tested
     << " hits=0 expected_density=" << expected;
  throw search_error(os.str());
}

std::optional<QuadField> base_of(const GoverningDatum& G, PrimeFilter filter) {
  if (G.base_m == 0) {
    if (filter != PrimeFilter::any)
      throw domain_error("prime filters apply to quadratic base fields only");
    return std::nullopt;
  }
  return QuadField(G.base_m);
}

}  // namespace

ChebotarevResult chebotarev_search(const GoverningDatum& G, const std::vector<int>& target,
                                   i64 bound, PrimeFilter filter, int threads) {
  EvalContext C{G, base_of(G, filter), target, nullptr, nullptr, filter};
  ChebotarevResult R = run_scan(C, bound, threads);
  R.audit = governing::frobenius_vector(G, R.q, R.conjugate);
  if (R.audit.coords != target) throw inconsistency_error("scan hit fails its audit");
  return R;
}

ChebotarevResult chebotarev_search(const GoverningDatum& G, const LatticeTarget& target,
                                   const ZEvaluator& z_eval, i64 bound, PrimeFilter filter,
                                   int threads) {
  bool aim_z = target.mode == "full" && !target.block_z.empty();
  if (aim_z && !z_eval)
    throw domain_error("a stability block target requires an evaluator");
  EvalContext C{G,      base_of(G, filter), target.block_a, aim_z ? &target.block_z : nullptr,
                &z_eval, filter};
  ChebotarevResult R = run_scan(C, bound, threads);
  R.audit = governing::frobenius_vector(G, R.q, R.conjugate);
  if (R.audit.coords != target.block_a) throw inconsistency_error("scan hit fails its audit");
  if (aim_z) {
    R.z_audit = z_eval(R.q, R.conjugate);
    if (R.z_audit != target.block_z)
      throw inconsistency_error("scan hit fails its stability audit");
  }
  return R;
}

DensityReport chebotarev_density(const GoverningDatum& G, const std::vector<int>& target,
                                 i64 bound, int threads) {
  if (static_cast<int>(target.size()) != G.dim)
    throw domain_error("target length does not match the governing dimension");
  if (bound <= 2) throw domain_error("scan bound must exceed 2");
  EvalContext C{G, base_of(G, PrimeFilter::any), target, nullptr, nullptr, PrimeFilter::any};
  DensityReport D;
  D.expected = std::ldexp(1.0, -G.dim);
  for (i64 lo = 3; lo < bound; lo += kScanBlock) {
    i64 hi = std::min(bound, lo + kScanBlock);
    RangeResult r = scan_block_parallel(C, lo, hi, threads);
    D.tested += r.side_evals;
    D.hits += r.matches.size();
  }
  if (D.tested) {
    D.observed = static_cast<double>(D.hits) / static_cast<double>(D.tested);
    D.se = std::sqrt(D.expected * (1 - D.expected) / static_cast<double>(D.tested));
  }
  return D;
}

}  // namespace towerforge::gras
