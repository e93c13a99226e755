#include "towerforge/governing.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>

#include "towerforge/errors.hpp"
#include "towerforge/f2.hpp"

namespace towerforge::governing {

using arith::factorize;
using arith::kronecker;
using arith::squarefree_core;
using quad::class_group;
using quad::ClassGroup;
using quad::Form;
using quad::form_of_ideal;
using quad::Ideal;
using quad::ideal_mul;
using quad::ideal_of_form;
using quad::ideal_pow;
using quad::prime_above;
using quad::PrimeIdeal;
using quad::principal_generator;
using quad::qi_conj;
using quad::qi_div_int;
using quad::qi_from_int;
using quad::qi_is_zero;
using quad::qi_make;
using quad::qi_mul;
using quad::qi_norm;
using quad::qi_sqrt;
using quad::qi_str;
using quad::QuotientGroup;
using quad::s_class_group;
using quad::s_unit_generator;
using quad::SplitType;
using quad::splitting_type;
using quad::unit_group;
using quad::valuation;

namespace {

std::vector<i64> checked_prime_set(std::vector<i64> S) {
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());
  for (i64 p : S) arith::OddPrime{p};
  return S;
}


Ideal ideal_of_prime(const QuadField& K, const PrimeIdeal& P) {
  if (P.type == SplitType::inert)
    return Ideal{P.p, 1, (K.D % 2 + 2) % 2};
  return Ideal{1, P.p, P.r};
}

std::vector<std::string> odd_support_q(i64 x) {
  std::vector<std::string> out;
  for (auto [p, e] : factorize(x < 0 ? -x : x)) out.push_back(std::to_string(p));
  return out;
}

std::vector<std::string> odd_support_k(const QuadField& K, const QuadInt& x) {
  std::vector<std::string> out;
  mpz_class n = qi_norm(K, x);
  if (n < 0) n = -n;
  if (!n.fits_slong_p()) throw resource_error("square class norm too large to factor");
  for (auto [p, e] : factorize(n.get_si())) {
    PrimeIdeal P = prime_above(K, p);
    if (P.type == SplitType::split) {
      if (valuation(K, x, P) % 2 != 0)
        out.push_back("(" + std::to_string(p) + "," + std::to_string(P.r) + ")");
      if (valuation(K, qi_conj(x), P) % 2 != 0)
        out.push_back("(" + std::to_string(p) + "," + std::to_string(2 * p - P.r) + ")");
    } else if (valuation(K, x, P) % 2 != 0) {
      out.push_back(P.type == SplitType::inert ? "(" + std::to_string(p) + ")"
                                               : "(" + std::to_string(p) + ",ram)");
    }
  }
  return out;
}

SquareClass sc_q(i64 x) {
  SquareClass c;
  c.base_m = 0;
  c.repr_q = squarefree_core(x);
  if (c.repr_q == 1) throw domain_error("square class of a square");
  c.odd_support = odd_support_q(c.repr_q);
  return c;
}

SquareClass sc_k(const QuadField& K, const QuadInt& x) {
  if (qi_is_zero(x)) throw domain_error("square class of zero");
  if (qi_sqrt(K, x)) throw domain_error("square class of a square");
  SquareClass c;
  c.base_m = K.d;
  c.repr = x;
  c.odd_support = odd_support_k(K, x);
  return c;
}

std::string repr_str(const SquareClass& c) {
  if (c.base_m == 0) return std::to_string(c.repr_q);
  return qi_str(QuadField(c.base_m), c.repr);
}

/* product over a subset mask of basis representatives */
i64 mask_product_q(const std::vector<BasisEntry>& es, unsigned mask) {
  i64 p = 1;
  for (size_t i = 0; i < es.size(); ++i)
    if (mask >> i & 1) p = squarefree_core(p * es[i].cls.repr_q);
  return p;
}

QuadInt mask_product_k(const QuadField& K, const std::vector<BasisEntry>& es, unsigned mask) {
  QuadInt p = qi_from_int(1);
  for (size_t i = 0; i < es.size(); ++i)
    if (mask >> i & 1) p = qi_mul(K, p, es[i].cls.repr);
  return p;
}

bool subset_dependent_q(const std::vector<BasisEntry>& kept, i64 cand) {
  for (unsigned mask = 0; mask < (1u << kept.size()); ++mask)
    if (squarefree_core(cand * mask_product_q(kept, mask)) == 1) return true;
  return false;
}

bool subset_dependent_k(const QuadField& K, const std::vector<BasisEntry>& kept,
                        const QuadInt& cand) {
  for (unsigned mask = 0; mask < (1u << kept.size()); ++mask)
    if (qi_sqrt(K, qi_mul(K, cand, mask_product_k(K, kept, mask)))) return true;
  return false;
}

void verify_independent(const GoverningDatum& G) {
  if (G.basis.size() >= 16) throw resource_error("governing basis too large to verify");
  if (G.base_m == 0) {
    for (unsigned mask = 1; mask < (1u << G.basis.size()); ++mask)
      if (mask_product_q(G.basis, mask) == 1)
        throw inconsistency_error("governing basis has a square subproduct");
    return;
  }
  QuadField K(G.base_m);
  for (unsigned mask = 1; mask < (1u << G.basis.size()); ++mask)
    if (qi_sqrt(K, mask_product_k(K, G.basis, mask)))
      throw inconsistency_error("governing basis has a square subproduct");
}

/* kernel of the integer matrix A (entries A[i][j], m rows, n cols) */
std::vector<std::vector<mpz_class>> z_kernel(std::vector<std::vector<mpz_class>> A) {
  int m = static_cast<int>(A.size());
  int n = m ? static_cast<int>(A[0].size()) : 0;
  std::vector<std::vector<mpz_class>> U(n, std::vector<mpz_class>(n, 0));
  for (int i = 0; i < n; ++i) U[i][i] = 1;
  auto col_sub = [&](int dst, int src, const mpz_class& q) {
    for (int i = 0; i < m; ++i) A[i][dst] -= q * A[i][src];
    for (int i = 0; i < n; ++i) U[i][dst] -= q * U[i][src];
  };
  auto col_swap = [&](int a, int b) {
    for (int i = 0; i < m; ++i) std::swap(A[i][a], A[i][b]);
    for (int i = 0; i < n; ++i) std::swap(U[i][a], U[i][b]);
  };
  int lead = 0;
  for (int row = 0; row < m && lead < n; ++row) {
    while (true) {
      int piv = -1;
      mpz_class best;
      for (int j = lead; j < n; ++j) {
        if (A[row][j] == 0) continue;
        mpz_class aj = abs(A[row][j]);
        if (piv < 0 || aj < best) {
          piv = j;
          best = aj;
        }
      }
      if (piv < 0) break;
      col_swap(piv, lead);
      bool clean = true;
      for (int j = lead + 1; j < n; ++j) {
        if (A[row][j] == 0) continue;
        mpz_class q = A[row][j] / A[row][lead];
        if (q != 0) col_sub(j, lead, q);
        if (A[row][j] != 0) clean = false;
      }
      if (clean) break;
    }
    if (A[row][lead] != 0) ++lead;
  }
  std::vector<std::vector<mpz_class>> ker;
  for (int j = 0; j < n; ++j) {
    bool zero = true;
    for (int i = 0; i < m && zero; ++i) zero = A[i][j] == 0;
    if (!zero) continue;
    std::vector<mpz_class> v(n);
    for (int i = 0; i < n; ++i) v[i] = U[i][j];
    ker.push_back(std::move(v));
  }
  return ker;
}

struct SPrime {
  i64 ell;
  PrimeIdeal P;
  int class_id;
  i64 wide_ord;
};

/* wide-class discrete log: exponents g >= 0 with prod [P_i]^g_i = target */
std::vector<i64> wide_dlog(const ClassGroup& cl, const std::vector<SPrime>& primes,
                           int target_id) {
  auto key_of = [&](int id) { return cl.wide_coords[id]; };
  std::map<std::vector<i64>, std::pair<int, std::vector<i64>>> seen;
  std::queue<int> work;
  int start = cl.principal_id;
  seen[key_of(start)] = {start, std::vector<i64>(primes.size(), 0)};
  work.push(start);
  auto target_key = key_of(target_id);
  while (!work.empty()) {
    int cur = work.front();
    work.pop();
    auto expr = seen[key_of(cur)].second;
    if (key_of(cur) == target_key) return expr;
    for (size_t i = 0; i < primes.size(); ++i) {
      int nxt = cl.mul(cur, primes[i].class_id);
      auto k = key_of(nxt);
      if (seen.count(k)) continue;
      auto e = expr;
      ++e[i];
      seen[k] = {nxt, e};
      work.push(nxt);
    }
  }
  throw inconsistency_error("class not generated by the S-primes");
}

}  // namespace

std::string origin_str(Origin o) {
  switch (o) {
    case Origin::torsion_unit: return "torsion_unit";
    case Origin::fundamental_unit: return "fundamental_unit";
    case Origin::s_unit: return "s_unit";
    case Origin::class_lift: return "class_lift";
  }
  return "?";
}

bool same_class(const SquareClass& x, const SquareClass& y) {
  if (x.base_m != y.base_m) throw domain_error("square classes over different fields");
  if (x.base_m == 0) return squarefree_core(x.repr_q * y.repr_q) == 1;
  QuadField K(x.base_m);
  return qi_sqrt(K, qi_mul(K, x.repr, y.repr)).has_value();
}

GoverningDatum v_group_q(std::vector<i64> S) {
  GoverningDatum G;
  G.base_m = 0;
  G.S = checked_prime_set(std::move(S));
  G.basis.push_back({sc_q(-1), Origin::torsion_unit, 0});
  for (i64 p : G.S) G.basis.push_back({sc_q(p), Origin::s_unit, p});
  G.dim = static_cast<int>(G.basis.size());
  verify_independent(G);
  return G;
}

GoverningDatum v_group(const QuadField& K, std::vector<i64> S) {
  GoverningDatum G;
  G.base_m = K.d;
  G.S = checked_prime_set(std::move(S));
  ClassGroup cl = class_group(K);

  std::vector<SPrime> primes;
  for (i64 ell : G.S) {
    PrimeIdeal P = prime_above(K, ell);
    int id = cl.id_of(P.form);
    primes.push_back({ell, P, id, cl.wide_order(id)});
    if (P.type == SplitType::split) {
      PrimeIdeal Pc = conjugate_prime(K, P);
      int idc = cl.id_of(Pc.form);
      primes.push_back({ell, Pc, idc, cl.wide_order(idc)});
    }
  }
  int r = static_cast<int>(primes.size());

  // candidate generators in the pinned order; greedy independence pruning
  struct Cand {
    QuadInt x;
    Origin tag;
    i64 s_prime;
  };
  std::vector<Cand> cands;
  cands.push_back({K.D == -4 ? qi_make(K, 0, 1) : qi_from_int(-1), Origin::torsion_unit, 0});
  if (K.D > 0) cands.push_back({unit_group(K).eps, Origin::fundamental_unit, 0});
  for (i64 ell : G.S) {
    cands.push_back({qi_from_int(ell), Origin::s_unit, ell});
    for (const SPrime& sp : primes) {
      if (sp.ell != ell || sp.P.type == SplitType::inert) continue;
      cands.push_back({s_unit_generator(K, cl, sp.P), Origin::s_unit, ell});
    }
  }
  if (r > 0) {
    // exponent vectors e with prod P_i^e_i principal: kernel of the class map,
    // computed with the elementary divisors as extra columns
    int s = static_cast<int>(cl.wide_divisors.size());
    if (s > 0) {
      std::vector<std::vector<mpz_class>> A(s, std::vector<mpz_class>(r + s, 0));
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < s; ++j) A[j][i] = cl.wide_coords[primes[i].class_id][j];
      for (int j = 0; j < s; ++j) A[j][r + j] = cl.wide_divisors[j];
      for (const auto& kv : z_kernel(A)) {
        std::vector<i64> e(r);
        bool zero = true;
        for (int i = 0; i < r; ++i) {
          mpz_class red = kv[i] % primes[i].wide_ord;
          if (red < 0) red += primes[i].wide_ord;
          e[i] = red.get_si();
          if (e[i]) zero = false;
        }
        if (zero) continue;
        Ideal J{1, 1, (K.D % 2 + 2) % 2};
        for (int i = 0; i < r; ++i)
          if (e[i]) J = ideal_mul(K, J, ideal_pow(K, ideal_of_prime(K, primes[i].P), e[i]));
        auto g = principal_generator(K, J);
        if (!g) throw inconsistency_error("kernel vector gave a non-principal ideal");
        i64 ell = 0;
        for (int i = 0; i < r && !ell; ++i)
          if (e[i]) ell = primes[i].ell;
        cands.push_back({*g, Origin::s_unit, ell});
      }
    }
  }
  // class lifts: one per even elementary divisor of Cl^S
  std::vector<int> prime_ids;
  for (const SPrime& sp : primes) prime_ids.push_back(sp.class_id);
  QuotientGroup Q = s_class_group(cl, prime_ids);
  for (size_t j = 0; j < Q.divisors.size(); ++j) {
    if (Q.divisors[j] % 2 != 0) continue;
    Ideal a = ideal_of_form(K, cl.classes[Q.generator_lifts[j]]);
    Ideal b = ideal_pow(K, a, Q.divisors[j] / 2);
    Ideal b2 = ideal_mul(K, b, b);
    int id_b2 = cl.id_of(form_of_ideal(K, b2));
    std::vector<i64> g;
    if (r > 0) {
      g = wide_dlog(cl, primes, cl.inv(id_b2));
    } else {
      // no S-primes: b^2 must itself be principal (its class is 2-torsion in
      // the wide group modulo nothing but the minus part)
      g.clear();
    }
    Ideal J = b2;
    for (size_t i = 0; i < g.size(); ++i)
      if (g[i]) J = ideal_mul(K, J, ideal_pow(K, ideal_of_prime(K, primes[i].P), g[i]));
    auto x = principal_generator(K, J);
    if (!x) throw inconsistency_error("class lift is not principal");
    cands.push_back({*x, Origin::class_lift, 0});
  }

  for (const Cand& c : cands) {
    if (qi_sqrt(K, c.x)) continue;  // square representative carries no class
    if (subset_dependent_k(K, G.basis, c.x)) continue;
    G.basis.push_back({sc_k(K, c.x), c.tag, c.s_prime});
  }
  G.dim = static_cast<int>(G.basis.size());

  int expected = 1 + (K.D > 0 ? 1 : 0) + r + Q.two_rank();
  if (G.dim != expected)
    throw inconsistency_error("governing dimension " + std::to_string(G.dim) +
                              " disagrees with the unit/class count " +
                              std::to_string(expected));
  verify_independent(G);
  return G;
}

/* ---------- local square conditions ---------- */

/* The form is kept literal, (p, r', .), so that ideal_of_form recovers the
 * conjugate prime itself and not a canonical representative of its class. */
PrimeIdeal conjugate_prime(const QuadField& K, const PrimeIdeal& P) {
  if (P.type != SplitType::split) return P;
  i64 r = 2 * P.p - P.r;
  return PrimeIdeal{P.p, SplitType::split, r, Form{P.p, r, (r * r - K.D) / (4 * P.p)}};
}

std::array<int, 2> local_square_condition(const QuadField& K, const ClassGroup& cl,
                                          const QuadInt& x, i64 q, const PrimeIdeal& P,
                                          bool conj_side) {
  if (P.type == SplitType::ramified)
    throw hypothesis_error("local square conditions need an unramified prime");
  QuadInt y = conj_side ? qi_conj(x) : x;
  i64 a = valuation(K, y, P);
  QuadInt z = y;
  if (a > 0) {
    if (P.type == SplitType::inert) {
      for (i64 t = 0; t < a; ++t) z = qi_div_int(K, z, q);
    } else {
      // clear q from the P side with the conjugate prime's s-unit
      PrimeIdeal Po = conjugate_prime(K, P);
      QuadInt go = s_unit_generator(K, cl, Po);
      i64 k = cl.wide_order(cl.id_of(Po.form));
      i64 t = (a + 2 * k - 1) / (2 * k);
      for (i64 s = 0; s < 2 * t; ++s) z = qi_mul(K, z, go);
      for (i64 s = 0; s < a; ++s) z = qi_div_int(K, z, q);
    }
  }
  int sym = P.type == SplitType::inert ? quad::residue_symbol_inert(K, z, q)
                                       : quad::residue_symbol_deg1(K, z, q, P.r);
  if (sym == 0) throw inconsistency_error("unit part vanished after clearing valuations");
  return {static_cast<int>(a & 1), sym < 0 ? 1 : 0};
}

namespace {

std::array<int, 2> local_bits_q(i64 x, i64 q) {
  int a = x % q == 0 ? 1 : 0;
  i64 u = a ? x / q : x;
  return {a, kronecker(u, q) < 0 ? 1 : 0};
}

GoverningDatum restrict_datum(const GoverningDatum& G, std::vector<i64> T) {
  for (i64 q : T)
    if (std::find(G.S.begin(), G.S.end(), q) != G.S.end())
      throw domain_error("restriction primes must avoid S");
  GoverningDatum R;
  R.base_m = G.base_m;
  R.S = G.S;
  R.T = T;
  if (T.empty()) {
    R.basis = G.basis;
    R.dim = G.dim;
    return R;
  }

  std::vector<f2::Vec> rows;  // one condition per row, coords over G.basis
  if (G.base_m == 0) {
    for (i64 q : T)
      for (int bit = 0; bit < 2; ++bit) {
        f2::Vec row(G.dim);
        for (int i = 0; i < G.dim; ++i)
          row.set(i, local_bits_q(G.basis[i].cls.repr_q, q)[bit]);
        rows.push_back(row);
      }
  } else {
    QuadField K(G.base_m);
    ClassGroup cl = class_group(K);
    for (i64 q : T) {
      SplitType st = splitting_type(K, q);
      if (st == SplitType::ramified)
        throw hypothesis_error("restriction prime " + std::to_string(q) +
                               " ramifies in the base field");
      PrimeIdeal P = prime_above(K, q);
      int sides = st == SplitType::split ? 2 : 1;
      for (int side = 0; side < sides; ++side)
        for (int bit = 0; bit < 2; ++bit) {
          f2::Vec row(G.dim);
          for (int i = 0; i < G.dim; ++i)
            row.set(i, local_square_condition(K, cl, G.basis[i].cls.repr, q, P, side == 1)[bit]);
          rows.push_back(row);
        }
    }
  }

  f2::Mat M(static_cast<int>(rows.size()), G.dim);
  for (size_t i = 0; i < rows.size(); ++i) M.r[i] = rows[i];
  for (const f2::Vec& v : f2::kernel(M)) {
    // assemble the subset product for this kernel vector
    unsigned mask = 0;
    for (int i = 0; i < G.dim; ++i)
      if (v.get(i)) mask |= 1u << i;
    BasisEntry e;
    e.tag = Origin::torsion_unit;
    e.s_prime = 0;
    for (int i = 0; i < G.dim; ++i) {
      if (!v.get(i)) continue;
      Origin t = G.basis[i].tag;
      if (t == Origin::class_lift || (t == Origin::s_unit && e.tag != Origin::class_lift) ||
          (t == Origin::fundamental_unit && e.tag == Origin::torsion_unit))
        e.tag = t;
      if (t == Origin::s_unit && (e.s_prime == 0 || G.basis[i].s_prime < e.s_prime))
        e.s_prime = G.basis[i].s_prime;
    }
    if (G.base_m == 0)
      e.cls = sc_q(mask_product_q(G.basis, mask));
    else
      e.cls = sc_k(QuadField(G.base_m), mask_product_k(QuadField(G.base_m), G.basis, mask));
    R.basis.push_back(std::move(e));
  }
  R.dim = static_cast<int>(R.basis.size());
  verify_independent(R);
  return R;
}

}  // namespace

GoverningDatum v_group_restricted_q(std::vector<i64> S, std::vector<i64> T) {
  return restrict_datum(v_group_q(std::move(S)), checked_prime_set(std::move(T)));
}

GoverningDatum v_group_restricted(const QuadField& K, std::vector<i64> S,
                                  std::vector<i64> T) {
  return restrict_datum(v_group(K, std::move(S)), checked_prime_set(std::move(T)));
}

FrobeniusVector frobenius_vector(const GoverningDatum& G, i64 q, bool conjugate_prime) {
  arith::OddPrime{q};
  FrobeniusVector F;
  F.q = q;
  F.conjugate = conjugate_prime;
  if (G.base_m == 0) {
    F.r = 0;
    F.conjugate = false;
    for (const BasisEntry& e : G.basis) {
      if (e.cls.repr_q % q == 0)
        throw domain_error("frobenius prime divides a basis representative");
      F.coords.push_back(kronecker(e.cls.repr_q, q) < 0 ? 1 : 0);
    }
    return F;
  }
  QuadField K(G.base_m);
  SplitType st = splitting_type(K, q);
  if (st == SplitType::ramified)
    throw hypothesis_error("frobenius undefined at a prime ramified in the base field");
  PrimeIdeal P = prime_above(K, q);
  if (st == SplitType::inert) {
    F.conjugate = false;
    F.r = -1;
    for (const BasisEntry& e : G.basis) {
      int sym = quad::residue_symbol_inert(K, e.cls.repr, q);
      if (sym == 0) throw domain_error("frobenius prime divides a basis representative");
      F.coords.push_back(sym < 0 ? 1 : 0);
    }
    return F;
  }
  i64 r = conjugate_prime ? 2 * q - P.r : P.r;
  F.r = r;
  for (const BasisEntry& e : G.basis) {
    int sym = quad::residue_symbol_deg1(K, e.cls.repr, q, r);
    if (sym == 0) throw domain_error("frobenius prime divides a basis representative");
    F.coords.push_back(sym < 0 ? 1 : 0);
  }
  return F;
}

LatticeTarget lattice_target(const GoverningDatum& G, const std::vector<int>& z_block,
                             bool tower_data_available) {
  LatticeTarget L;
  L.block_a.resize(G.dim, 0);
  for (int i = 0; i < G.dim; ++i) {
    const BasisEntry& e = G.basis[i];
    L.a_labels.push_back(origin_str(e.tag) + ":" + repr_str(e.cls));
    if (e.tag == Origin::s_unit) L.block_a[i] = 1;
  }
  L.block_z = z_block;
  for (size_t i = 0; i < z_block.size(); ++i)
    L.z_labels.push_back("stability_" + std::to_string(i));
  L.mode = tower_data_available ? "full" : "local-conditions-only";
  return L;
}

}  // namespace towerforge::governing
