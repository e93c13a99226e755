#include "towerforge/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "towerforge/errors.hpp"
#include "towerforge/f2.hpp"

namespace towerforge::pipeline {

using arith::kronecker;
using gmodule::a_invariant;
using gmodule::group_cohomology;
using gmodule::group_exponent_log;
using gmodule::TowerProfile;
using governing::conjugate_prime;
using governing::GoverningDatum;
using governing::local_square_condition;
using governing::Origin;
using governing::v_group;
using governing::v_group_q;
using governing::v_group_restricted;
using governing::v_group_restricted_q;
using quad::class_group;
using quad::ClassGroup;
using quad::class_group_of_disc;
using quad::fundamental_discriminant;
using quad::Ideal;
using quad::ideal_mul;
using quad::ideal_of_form;
using quad::ideal_pow;
using quad::prime_above;
using quad::PrimeIdeal;
using quad::principal_generator;
using quad::qi_from_int;
using quad::qi_mul;
using quad::qi_sqrt;
using quad::qi_str;
using quad::QuadInt;
using quad::s_class_group;
using quad::s_unit_generator;
using quad::SplitType;
using quad::splitting_type;
using quad::unit_group;
using quad::valuation;

namespace {

std::vector<i64> checked_odd_primes(std::vector<i64> S) {
  std::sort(S.begin(), S.end());
  S.erase(std::unique(S.begin(), S.end()), S.end());
  for (i64 p : S) arith::OddPrime{p};
  return S;
}

int two_part(mpz_class n) {
  if (n == 0) throw domain_error("two-part of zero");
  if (n < 0) n = -n;
  int t = 1;
  while (n % 2 == 0) {
    n /= 2;
    t *= 2;
  }
  return t;
}

int log2_exact(size_t n) {
  int k = 0;
  while ((size_t(1) << k) < n) ++k;
  if ((size_t(1) << k) != n)
    throw inconsistency_error("a character count is not a power of two");
  return k;
}

Ideal ideal_of_prime(const QuadField& K, const PrimeIdeal& P) {
  if (P.type == SplitType::inert)
    return Ideal{P.p, 1, (K.D % 2 + 2) % 2};
  return Ideal{1, P.p, P.r};
}

/* One prime of the base above a rational prime.  P stays the pinned prime of
 * prime_above so symbol evaluations can address the side by flag; ideal is
 * the prime itself (the conjugate on the second side of a split pair). */
struct Place {
  i64 ell = 0;
  PrimeIdeal P;
  bool conjugate = false;
  PrimeIdeal ideal;
  int class_id = 0;
  std::string label;
};

std::string place_label(i64 ell, const PrimeIdeal& P, bool conj) {
  if (P.type == SplitType::inert) return "(" + std::to_string(ell) + ")";
  if (P.type == SplitType::ramified) return "(" + std::to_string(ell) + ",ram)";
  i64 r = conj ? 2 * ell - P.r : P.r;
  return "(" + std::to_string(ell) + "," + std::to_string(r) + ")";
}

std::vector<Place> places_above(const QuadField& K, const ClassGroup& cl,
                                const std::vector<i64>& S) {
  std::vector<Place> out;
  for (i64 ell : S) {
    PrimeIdeal P = prime_above(K, ell);
    out.push_back({ell, P, false, P, cl.id_of(P.form), place_label(ell, P, false)});
    if (P.type == SplitType::split) {
      PrimeIdeal Pc = conjugate_prime(K, P);
      out.push_back({ell, P, true, Pc, cl.id_of(Pc.form), place_label(ell, P, true)});
    }
  }
  return out;
}

bool wide_trivial(const ClassGroup& cl, int id) {
  for (i64 c : cl.wide_coords[id])
    if (c != 0) return false;
  return true;
}

/* Square classes with even valuation away from the place set X: units, the
 * per-place S-units, principal cross-place products, and the 2-torsion lifts
 * of the X-localized class group, pruned greedily by exact square tests. */
int place_group_dim(const QuadField& K, const ClassGroup& cl, const std::vector<Place>& X) {
  std::vector<QuadInt> cands;
  cands.push_back(K.D == -4 ? quad::qi_make(K, 0, 1) : qi_from_int(-1));
  if (K.D > 0) cands.push_back(unit_group(K).eps);
  for (const Place& pl : X) cands.push_back(s_unit_generator(K, cl, pl.ideal));

  int n = static_cast<int>(X.size());
  std::vector<i64> ords(n);
  i64 box = 1;
  for (int i = 0; i < n; ++i) {
    ords[i] = cl.wide_order(X[i].class_id);
    box *= ords[i];
    if (box > 4096) throw resource_error("class-order box over the place set is too large");
  }
  auto class_of_tuple = [&](const std::vector<i64>& e) {
    int c = cl.principal_id;
    for (int i = 0; i < n; ++i)
      for (i64 j = 0; j < e[i]; ++j) c = cl.mul(c, X[i].class_id);
    return c;
  };
  auto ideal_of_tuple = [&](const std::vector<i64>& e) {
    Ideal J{1, 1, (K.D % 2 + 2) % 2};
    for (int i = 0; i < n; ++i)
      if (e[i]) J = ideal_mul(K, J, ideal_pow(K, ideal_of_prime(K, X[i].ideal), e[i]));
    return J;
  };
  if (n > 0) {
    std::vector<i64> e(n, 0);
    for (i64 it = 1; it < box; ++it) {
      int k = 0;
      while (++e[k] == ords[k]) {
        e[k] = 0;
        ++k;
      }
      if (!wide_trivial(cl, class_of_tuple(e))) continue;
      auto g = principal_generator(K, ideal_of_tuple(e));
      if (!g) throw inconsistency_error("a class-trivial product of place primes is not principal");
      cands.push_back(*g);
    }
  }

  std::vector<int> ids;
  for (const Place& pl : X) ids.push_back(pl.class_id);
  quad::QuotientGroup Qg = s_class_group(cl, ids);
  for (size_t j = 0; j < Qg.divisors.size(); ++j) {
    if (Qg.divisors[j] % 2 != 0) continue;
    Ideal a = ideal_of_form(K, cl.classes[Qg.generator_lifts[j]]);
    Ideal b2 = ideal_pow(K, a, Qg.divisors[j]);
    int cb2 = cl.id_of(quad::form_of_ideal(K, b2));
    // clear the leftover class with place primes; the quotient guarantees one
    bool done = false;
    std::vector<i64> e(n, 0);
    for (i64 it = 0; it < box && !done; ++it) {
      if (it) {
        int k = 0;
        while (++e[k] == ords[k]) {
          e[k] = 0;
          ++k;
        }
      }
      int c = cb2;
      int t = class_of_tuple(e);
      c = cl.mul(c, t);
      if (!wide_trivial(cl, c)) continue;
      auto g = principal_generator(K, ideal_mul(K, b2, ideal_of_tuple(e)));
      if (!g) throw inconsistency_error("a class-field lift ideal is not principal");
      cands.push_back(*g);
      done = true;
    }
    if (!done)
      throw inconsistency_error("no place correction clears the class-field lift");
  }

  std::vector<QuadInt> kept;
  for (const QuadInt& c : cands) {
    if (kept.size() >= 16) throw resource_error("too many independent candidates");
    bool dep = false;
    for (unsigned mask = 0; mask < (1u << kept.size()) && !dep; ++mask) {
      QuadInt prod = c;
      for (size_t i = 0; i < kept.size(); ++i)
        if (mask >> i & 1) prod = qi_mul(K, prod, kept[i]);
      dep = qi_sqrt(K, prod).has_value();
    }
    if (!dep) kept.push_back(c);
  }
  return static_cast<int>(kept.size());
}

/* Subset products of the trivial-ideal basis entries: the coset of unit
 * square classes a class lift can be twisted by. */
std::vector<QuadInt> unit_span(const QuadField& K, const GoverningDatum& G0) {
  std::vector<QuadInt> gens;
  for (const auto& b : G0.basis)
    if (b.tag != Origin::class_lift) gens.push_back(b.cls.repr);
  std::vector<QuadInt> out;
  for (unsigned mask = 0; mask < (1u << gens.size()); ++mask) {
    QuadInt x = qi_from_int(1);
    for (size_t i = 0; i < gens.size(); ++i)
      if (mask >> i & 1) x = qi_mul(K, x, gens[i]);
    out.push_back(x);
  }
  return out;
}

bool is_rational(const QuadInt& x, i64& value) {
  // coordinates represent (u + v sqrt(D)) / 2
  if (x.v != 0) return false;
  mpz_class half = x.u / 2;
  if (half * 2 != x.u) return false;
  if (!half.fits_slong_p()) return false;
  value = half.get_si();
  return true;
}

/* Canonical test element for a class-lift direction: the twist generating an
 * extension unramified at 2 and infinity when one exists, else the positive
 * rational twist, else the stored representative. */
QuadInt normalized_lift(const QuadField& K, const QuadInt& lift,
                        const std::vector<QuadInt>& units) {
  std::optional<QuadInt> rational_pos;
  for (const QuadInt& u : units) {
    QuadInt c = qi_mul(K, lift, u);
    biquad::RelativeQuadExt E = biquad::relquad(K, c);
    if (!E.ramified_at_two && !E.infinite_ramification()) return c;
    i64 val = 0;
    if (!rational_pos && is_rational(c, val) && val > 0) rational_pos = c;
  }
  return rational_pos.value_or(lift);
}

/* The quadratic subextensions of the 2-Hilbert class field: the square
 * classes in the span of the S-free governing group whose extension is
 * unramified everywhere.  Their count must match the 2-rank of the wide
 * class group, which cross-checks two independent code paths. */
std::vector<QuadInt> hilbert_layers(const QuadField& K, const ClassGroup& cl,
                                    const GoverningDatum& G0) {
  if (G0.dim > 10) throw resource_error("class-field layer enumeration too large");
  std::vector<QuadInt> out;
  for (unsigned mask = 1; mask < (1u << G0.dim); ++mask) {
    QuadInt x = qi_from_int(1);
    for (int i = 0; i < G0.dim; ++i)
      if (mask >> i & 1) x = qi_mul(K, x, G0.basis[i].cls.repr);
    if (biquad::unramified_test(biquad::relquad(K, x)).unramified) out.push_back(x);
  }
  int rank = 0;
  for (i64 d : cl.wide_divisors)
    if (d % 2 == 0) ++rank;
  if (out.size() + 1 != (size_t(1) << rank))
    throw inconsistency_error("unramified layer count disagrees with the class-group 2-rank");
  return out;
}

struct HypothesisData {
  std::string tower_name;
  TowerProfile profile;
  int a_k = 0;
  int h1_g = 0;
  int lambda = 0;
  bool assumed = false;
};

std::string tower_group_name(const ClassGroup& cl) {
  std::vector<int> tp;
  for (i64 d : cl.wide_divisors)
    if (d % 2 == 0) tp.push_back(two_part(mpz_class(d)));
  if (tp.empty()) return "C1";
  if (tp.size() == 1) return "C" + std::to_string(tp[0]);
  if (tp.size() == 2 && tp[0] == 2 && tp[1] == 2) return "V4";
  throw domain_error("the base 2-class group structure is outside the certified table");
}

HypothesisData gather_hypothesis(i64 base_m, const std::optional<int>& assume) {
  HypothesisData h;
  TowerProfile p;
  if (base_m == 0) {
    h.tower_name = "C1";
    p.r1 = 1;
    p.r2 = 0;
  } else {
    QuadField K(base_m);
    h.tower_name = tower_group_name(class_group(K));
    p.r1 = K.real() ? 2 : 0;
    p.r2 = K.real() ? 0 : 1;
  }
  auto coh = group_cohomology(h.tower_name);
  p.h1 = coh.h1;
  p.h2 = coh.h2;
  p.exponent_log = group_exponent_log(h.tower_name);
  h.profile = p;
  h.a_k = a_invariant(p);
  h.h1_g = coh.h1;
  h.lambda = assume.value_or(h.a_k);
  h.assumed = assume.has_value();
  if (h.assumed) gmodule::assert_minkowski(h.lambda, h.a_k);
  return h;
}

void require_free_rank(const HypothesisData& h, i64 base_m) {
  if (h.lambda >= h.h1_g) return;
  std::ostringstream os;
  if (h.assumed)
    os << "assumed lambda = " << h.lambda << " < h^1 = " << h.h1_g
       << " for the tower group " << h.tower_name;
  else
    os << "A_K = " << h.a_k << " < h^1 = " << h.h1_g << " for the tower group "
       << h.tower_name << " of the base (m = " << base_m << ")";
  os << "; the elimination hypothesis fails";
  throw hypothesis_error(os.str());
}

std::string int_str(const mpz_class& n) { return n.get_str(); }

}  // namespace

HypothesisReport describe_hypothesis(i64 base_m, std::optional<int> assume_lambda) {
  HypothesisData h = gather_hypothesis(base_m, assume_lambda);
  HypothesisReport r;
  r.tower_name = h.tower_name;
  r.profile = h.profile;
  r.a_k = h.a_k;
  r.a_next = gmodule::a_growth(h.profile);
  r.lambda = h.lambda;
  r.assumed = h.assumed;
  return r;
}

bool check_cs(i64 base_m, const std::vector<i64>& S) {
  std::vector<i64> s = checked_odd_primes(S);
  if (base_m == 0) return true;
  QuadField K(base_m);
  ClassGroup cl = class_group(K);
  int wide_rank = 0;
  for (i64 d : cl.wide_divisors)
    if (d % 2 == 0) ++wide_rank;
  std::vector<int> ids;
  for (const Place& pl : places_above(K, cl, s)) ids.push_back(pl.class_id);
  return s_class_group(cl, ids).two_rank() == wide_rank;
}

CompositumReport cs_compositum_rank(i64 base_m, const std::vector<i64>& S) {
  std::vector<i64> s = checked_odd_primes(S);
  if (!check_cs(base_m, s))
    throw hypothesis_error("C_S fails: the class-group 2-rank drops at S");
  CompositumReport rep;
  rep.base_m = base_m;
  rep.s = s;

  auto sorted_masks = [](int n) {
    std::vector<unsigned> masks(size_t(1) << n);
    for (unsigned m = 0; m < masks.size(); ++m) masks[m] = m;
    std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
      int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
      return pa != pb ? pa < pb : a < b;
    });
    return masks;
  };

  if (base_m == 0) {
    if (s.size() > 5) throw resource_error("more than 5 primes above S");
    rep.base_dim = v_group_q({}).dim;
    for (unsigned mask : sorted_masks(static_cast<int>(s.size()))) {
      CompositumRow row;
      std::vector<i64> X;
      for (size_t i = 0; i < s.size(); ++i)
        if (mask >> i & 1) {
          X.push_back(s[i]);
          row.places.push_back(std::to_string(s[i]));
        }
      row.dim = v_group_q(X).dim;
      row.delta = row.dim - rep.base_dim;
      if (row.delta != static_cast<int>(X.size()))
        throw inconsistency_error("compositum increment " + std::to_string(row.delta) +
                                  " differs from the place count under C_S");
      rep.rows.push_back(std::move(row));
    }
    return rep;
  }

  QuadField K(base_m);
  ClassGroup cl = class_group(K);
  std::vector<Place> pls = places_above(K, cl, s);
  if (pls.size() > 5) throw resource_error("more than 5 primes above S");
  rep.base_dim = place_group_dim(K, cl, {});
  if (rep.base_dim != v_group(K, {}).dim)
    throw inconsistency_error("place-set dimension disagrees with the governing group");
  for (unsigned mask : sorted_masks(static_cast<int>(pls.size()))) {
    CompositumRow row;
    std::vector<Place> X;
    for (size_t i = 0; i < pls.size(); ++i)
      if (mask >> i & 1) {
        X.push_back(pls[i]);
        row.places.push_back(pls[i].label);
      }
    row.dim = place_group_dim(K, cl, X);
    row.delta = row.dim - rep.base_dim;
    if (row.delta != static_cast<int>(X.size()))
      throw inconsistency_error("compositum increment " + std::to_string(row.delta) +
                                " differs from the place count under C_S");
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

SigmaReport augment_sigma(i64 base_m, const std::vector<i64>& S, i64 bound) {
  std::vector<i64> s = checked_odd_primes(S);
  SigmaReport rep;
  rep.base_m = base_m;
  rep.s = s;
  rep.sigma = s;
  if (base_m == 0 || s.empty()) {
    rep.all_ones_in_image = s.empty();
    rep.s_places = static_cast<int>(s.size());
    return rep;
  }
  QuadField K(base_m);
  ClassGroup cl = class_group(K);
  std::vector<Place> pls = places_above(K, cl, s);
  rep.s_places = static_cast<int>(pls.size());

  std::vector<int> even_j;
  for (size_t j = 0; j < cl.wide_divisors.size(); ++j)
    if (cl.wide_divisors[j] % 2 == 0) even_j.push_back(static_cast<int>(j));
  f2::Mat M(static_cast<int>(pls.size()), static_cast<int>(even_j.size()));
  for (size_t i = 0; i < pls.size(); ++i)
    for (size_t j = 0; j < even_j.size(); ++j)
      if (cl.wide_coords[pls[i].class_id][even_j[j]] % 2) M.set(static_cast<int>(i), static_cast<int>(j), true);
  rep.psi_rank = f2::rank(M);
  f2::Vec ones(static_cast<int>(pls.size()));
  for (int i = 0; i < ones.n; ++i) ones.set(i, true);
  f2::Vec sol(static_cast<int>(even_j.size()));
  rep.all_ones_in_image = f2::solve(M, ones, sol);
  if (!rep.all_ones_in_image) return rep;

  GoverningDatum G0 = v_group(K, {});
  std::vector<QuadInt> units = unit_span(K, G0);
  std::vector<QuadInt> layers;
  for (const auto& b : G0.basis)
    if (b.tag == Origin::class_lift)
      layers.push_back(normalized_lift(K, b.cls.repr, units));

  for (i64 ell = 3; ell <= bound; ell += 2) {
    if (!arith::is_prime(ell)) continue;
    if (std::find(s.begin(), s.end(), ell) != s.end()) continue;
    if (K.D % ell == 0) continue;
    if (kronecker(K.D, ell) != 1) continue;
    PrimeIdeal P = prime_above(K, ell);
    if (cl.wide_order(cl.id_of(P.form)) != 1) continue;
    bool layer_split = true;
    for (const QuadInt& t : layers) {
      auto b0 = local_square_condition(K, cl, t, ell, P, false);
      auto b1 = local_square_condition(K, cl, t, ell, P, true);
      layer_split &= b0[0] == 0 && b0[1] == 0 && b1[0] == 0 && b1[1] == 0;
      if (!layer_split) break;
    }
    if (!layer_split) continue;
    rep.sigma_prime = ell;
    rep.sigma.push_back(ell);
    std::sort(rep.sigma.begin(), rep.sigma.end());
    return rep;
  }
  throw search_error("no auxiliary split prime with principal primes and split class-field layers below " +
                     std::to_string(bound));
}

SeqCheckReport cohomology_rank_check(i64 base_m, std::vector<i64> T, std::vector<i64> Sigma) {
  T = checked_odd_primes(std::move(T));
  Sigma = checked_odd_primes(std::move(Sigma));
  for (i64 q : T)
    if (std::find(Sigma.begin(), Sigma.end(), q) != Sigma.end())
      throw domain_error("T and Sigma must be disjoint");
  SeqCheckReport r;

  if (base_m == 0) {
    int n = static_cast<int>(T.size());
    f2::Mat A(1 + static_cast<int>(Sigma.size()), n);
    f2::Mat Asign(1, n);
    for (int j = 0; j < n; ++j) {
      bool neg = T[j] % 4 == 3;
      A.set(0, j, neg);
      Asign.set(0, j, neg);
      i64 qstar = T[j] % 4 == 1 ? T[j] : -T[j];
      for (size_t i = 0; i < Sigma.size(); ++i)
        A.set(1 + static_cast<int>(i), j, kronecker(qstar, Sigma[i]) == -1);
    }
    r.h1_t = n - f2::rank(Asign);
    r.h1_t_sigma = n - f2::rank(A);
    r.psi_rank = r.h1_t - r.h1_t_sigma;
    r.local_term = static_cast<int>(Sigma.size());
    r.m_t_sigma = v_group_restricted_q(Sigma, T).dim;
    r.m_t = v_group_restricted_q({}, T).dim;
  } else {
    QuadField K(base_m);
    for (i64 q : T)
      if (splitting_type(K, q) == SplitType::ramified)
        throw domain_error("T must avoid primes ramified in the base");
    for (i64 q : Sigma)
      if (splitting_type(K, q) == SplitType::ramified)
        throw domain_error("Sigma must avoid primes ramified in the base");
    ClassGroup cl = class_group(K);
    GoverningDatum GT = v_group(K, T);
    if (GT.dim > 12) throw resource_error("character enumeration too large");
    std::vector<Place> spl = places_above(K, cl, Sigma);
    r.local_term = static_cast<int>(spl.size());
    size_t count_t = 0, count_ts = 0;
    std::set<std::vector<int>> image;
    for (unsigned mask = 0; mask < (1u << GT.dim); ++mask) {
      if (mask == 0) {
        ++count_t;
        ++count_ts;
        image.insert(std::vector<int>(spl.size(), 0));
        continue;
      }
      QuadInt x = qi_from_int(1);
      for (int i = 0; i < GT.dim; ++i)
        if (mask >> i & 1) x = qi_mul(K, x, GT.basis[i].cls.repr);
      biquad::RelativeQuadExt E = biquad::relquad(K, x);
      if (E.ramified_at_two || E.ramified_real_places != 0) continue;
      ++count_t;
      std::vector<int> loc;
      bool split_all = true;
      for (const Place& pl : spl) {
        auto bits = local_square_condition(K, cl, x, pl.ell, pl.P, pl.conjugate);
        if (bits[0] != 0)
          throw inconsistency_error("a T-unit has odd valuation above Sigma");
        loc.push_back(bits[1]);
        split_all &= bits[1] == 0;
      }
      image.insert(std::move(loc));
      if (split_all) ++count_ts;
    }
    r.h1_t = log2_exact(count_t);
    r.h1_t_sigma = log2_exact(count_ts);
    r.psi_rank = log2_exact(image.size());
    r.m_t_sigma = v_group_restricted(K, Sigma, T).dim;
    r.m_t = v_group_restricted(K, {}, T).dim;
  }

  r.alternating_sum = r.h1_t_sigma - r.h1_t + r.local_term - r.m_t_sigma + r.m_t;
  if (r.alternating_sum != 0)
    throw inconsistency_error("five-term alternating sum is " + std::to_string(r.alternating_sum));
  if (r.h1_t - r.h1_t_sigma != r.psi_rank)
    throw inconsistency_error("localization rank differs from the character-count drop");
  if (r.m_t_sigma - r.m_t != r.local_term - r.psi_rank)
    throw inconsistency_error("connecting rank differs from the cokernel of localization");
  return r;
}

EliminationOutcome elimination_step(i64 base_m, const std::vector<i64>& S,
                                    const PipelineConfig& cfg) {
  std::vector<i64> s = checked_odd_primes(S);
  if (s.empty()) throw domain_error("S must be nonempty for an elimination step");
  HypothesisData hyp = gather_hypothesis(base_m, cfg.assume_lambda);
  require_free_rank(hyp, base_m);

  StepCertificate cert;
  cert.base_m = base_m;
  cert.s = s;
  cert.sigma = augment_sigma(base_m, s, cfg.sigma_bound);
  const std::vector<i64>& sigma = cert.sigma.sigma;

  if (base_m == 0) {
    GoverningDatum G = v_group_q(sigma);
    std::vector<int> target(G.dim, 0);
    for (int i = 0; i < G.dim; ++i)
      if (G.basis[i].tag == Origin::s_unit) target[i] = 1;
    cert.filter = gras::filter_str(gras::PrimeFilter::any);
    cert.scan = gras::chebotarev_search(G, target, cfg.scan_bound, gras::PrimeFilter::any,
                                        cfg.threads);
    gras::KummerDatum E = gras::build_extension_q(cert.scan.q);
    cert.kummer_gen = std::to_string(E.gen_rational);
    cert.gen_rational = true;
    cert.gen_rational_value = E.gen_rational;
    cert.inertia = gras::inertia_check(E, sigma);
    for (const auto& kv : cert.inertia)
      if (!kv.second)
        throw inconsistency_error("the built extension is not inert at " + kv.first);
    ClassGroup cln = class_group_of_disc(fundamental_discriminant(E.gen_rational));
    mpz_class hw = 1;
    for (i64 dv : cln.wide_divisors) hw *= dv;
    bool h2_one = hw % 2 == 1;
    cert.stability.push_back(
        {"two-class number of Q(sqrt(" + std::to_string(E.gen_rational) + ")) is one", h2_one});
    if (!h2_one)
      throw inconsistency_error("a prime-discriminant layer has even class number");
    cert.status = "certified";
    cert.class_field_gen = "1";
    for (i64 ell : s) {
      cert.ledger_before[ell] = 1;
      cert.ledger_after[ell] = 1;
    }
    return {E.ext, cert};
  }

  QuadField K(base_m);
  ClassGroup cl = class_group(K);
  GoverningDatum G = v_group(K, sigma);
  std::vector<Place> spl = places_above(K, cl, sigma);

  // scan target: the pairing of the everywhere-inert condition with the
  // governing basis, i.e. the total valuation parity above sigma
  std::vector<int> target(G.dim, 0);
  bool nonzero = false;
  for (int i = 0; i < G.dim; ++i) {
    int bit = 0;
    for (const Place& pl : spl)
      bit ^= static_cast<int>(valuation(K, G.basis[i].cls.repr, pl.ideal) & 1);
    target[i] = bit;
    nonzero |= bit != 0;
  }
  if (!nonzero)
    throw inconsistency_error("the inert condition pairs to zero even after augmentation");

  gras::PrimeFilter filter = cfg.filter;
  try {
    cert.scan = gras::chebotarev_search(G, target, cfg.scan_bound, filter, cfg.threads);
  } catch (const search_error&) {
    if (cfg.filter != gras::PrimeFilter::rational_inert) throw;
    filter = gras::PrimeFilter::degree_one;
    cert.scan = gras::chebotarev_search(G, target, cfg.scan_bound, filter, cfg.threads);
  }
  cert.filter = gras::filter_str(filter);

  gras::LocalConditions ones;
  for (i64 ell : sigma) ones[ell] = 1;
  gras::KummerDatum E =
      gras::build_extension(K, {cert.scan.q, cert.scan.conjugate}, sigma, ones);
  cert.kummer_gen = qi_str(K, E.gen);

  i64 ad = K.d < 0 ? -K.d : K.d;
  for (i64 e = 1; e <= ad && !cert.gen_rational; ++e) {
    if (ad % e != 0) continue;
    for (int sign = 0; sign < 2 && !cert.gen_rational; ++sign) {
      i64 rr = (sign ? -1 : 1) * cert.scan.q * e;
      if (qi_sqrt(K, qi_mul(K, E.gen, qi_from_int(rr))).has_value()) {
        cert.gen_rational = true;
        cert.gen_rational_value = rr;
        cert.kummer_gen = std::to_string(rr);
      }
    }
  }

  cert.inertia = gras::inertia_check(E, s);
  for (const auto& kv : cert.inertia)
    if (!kv.second)
      throw inconsistency_error("the built extension is not inert at " + kv.first);

  GoverningDatum G0 = v_group(K, {});
  std::vector<QuadInt> layers = hilbert_layers(K, cl, G0);
  {
    std::string cg;
    for (const QuadInt& L : layers) cg += (cg.empty() ? "" : ",") + qi_str(K, L);
    cert.class_field_gen = cg.empty() ? "1" : cg;
  }

  mpz_class hK = 1;
  for (i64 dv : cl.wide_divisors) hK *= dv;
  int h2K = two_part(hK);

  for (const QuadInt& L : layers) {
    auto layer = biquad::unramified_test(biquad::relquad(K, L));
    cert.stability.push_back(
        {"class-field layer K(sqrt(" + qi_str(K, L) + ")) is unramified", layer.unramified});
  }
  biquad::ChevalleyResult chev = biquad::chevalley_ambiguous(E.ext);
  cert.stability.push_back(
      {"ambiguous class count " + int_str(chev.count) + " matches the base two-class number " +
           std::to_string(h2K),
       two_part(chev.count) == h2K});
  if (cert.gen_rational) {
    biquad::BiquadField B(K.d, cert.gen_rational_value);
    mpz_class hN = biquad::kuroda_class_number(B);
    cert.stability.push_back(
        {"kuroda class number " + int_str(hN) + " keeps the two-part " + std::to_string(h2K),
         two_part(hN) == h2K});
    biquad::KubotaResult kub = biquad::kubota_unit_index(B);
    cert.stability.push_back(
        {"kubota unit index = " + std::to_string(kub.q_index), true});
  }
  for (const auto& c : cert.stability)
    if (!c.passed) {
      if (cfg.assume_lambda)
        throw hypothesis_error("stability check failed under an assumed free rank: " + c.name);
      throw inconsistency_error("stability check failed: " + c.name);
    }
  cert.status = cert.gen_rational ? "certified" : "partial";

  for (i64 ell : s) {
    PrimeIdeal P = prime_above(K, ell);
    int sides = P.type == SplitType::split ? 2 : 1;
    int fK = P.type == SplitType::inert ? 2 : 1;
    int fN = 2 * fK;  // every prime above s is inert in the step extension
    for (int side = 0; side < sides; ++side) {
      std::string lbl = place_label(ell, P, side == 1);
      bool sq = true;
      for (const QuadInt& L : layers) {
        if (fN % 2 == 0) continue;  // index-2 residue extension: all units are squares
        auto bits = local_square_condition(K, cl, L, ell, P, side == 1);
        sq &= bits[0] == 0 && bits[1] == 0;
      }
      cert.residuosity.push_back(
          {lbl + ": class-field generator is a square in the residue field of degree " +
               std::to_string(fN),
           sq});
    }
  }

  for (i64 ell : s) {
    int f = two_part(mpz_class(cl.wide_order(cl.id_of(prime_above(K, ell).form))));
    cert.ledger_before[ell] = f;
    cert.ledger_after[ell] = f % 2 == 0 ? f / 2 : f;
  }
  return {E.ext, cert};
}

PipelineReport run(i64 base_m, const std::vector<i64>& S, const std::string& target,
                   const PipelineConfig& cfg) {
  std::vector<i64> s = checked_odd_primes(S);
  PipelineReport rep;
  rep.base_m = base_m;
  rep.s = s;
  rep.target = target;
  rep.e_g = group_exponent_log(target);

  HypothesisData hyp = gather_hypothesis(base_m, cfg.assume_lambda);
  if (hyp.tower_name != target)
    throw hypothesis_error("the base two-class group realizes " + hyp.tower_name +
                           ", not the requested " + target);
  if (hyp.h1_g > 0) require_free_rank(hyp, base_m);
  rep.a_k = hyp.a_k;
  rep.h1_g = hyp.h1_g;
  rep.lambda = hyp.lambda;
  rep.lambda_assumed = hyp.assumed;

  std::map<i64, int> ledger;
  std::string field_desc;
  if (base_m == 0) {
    for (i64 ell : s) ledger[ell] = 1;
    field_desc = "Q";
  } else {
    QuadField K(base_m);
    ClassGroup cl = class_group(K);
    for (i64 ell : s)
      ledger[ell] = two_part(mpz_class(cl.wide_order(cl.id_of(prime_above(K, ell).form))));
    field_desc = "Q(sqrt(" + std::to_string(K.d) + "))";
  }
  for (const auto& kv : ledger)
    if (kv.second > (1 << rep.e_g))
      throw inconsistency_error("initial residue degree exceeds the exponent of the target");

  auto unresolved = [&ledger]() {
    for (const auto& kv : ledger)
      if (kv.second > 1) return true;
    return false;
  };
  while (unresolved()) {
    if (rep.m >= 1)
      throw domain_error(
          "a second elimination step needs governing data over a degree-4 base, which is "
          "beyond the supported desk scale");
    EliminationOutcome step = elimination_step(base_m, s, cfg);
    ledger = step.cert.ledger_after;
    field_desc += "(sqrt(" + step.cert.kummer_gen + "))";
    rep.steps.push_back(std::move(step.cert));
    ++rep.m;
  }
  if (rep.m > rep.e_g) throw inconsistency_error("step count exceeds the exponent bound");

  rep.final_field = field_desc;
  rep.s_f_count = static_cast<int>(s.size());
  bool all_certified = true, all_res = true;
  for (const auto& st : rep.steps) {
    all_certified &= st.status == "certified";
    for (const auto& c : st.residuosity) all_res &= c.passed;
  }
  rep.claims.push_back({"base two-class group realizes " + target, true});
  rep.claims.push_back({"all residue degrees above S equal one", true});
  rep.claims.push_back({"m <= e_G", rep.m <= rep.e_g});
  rep.claims.push_back({"#S_F = #S", rep.s_f_count == static_cast<int>(s.size())});
  rep.claims.push_back({"every step stability certified", all_certified});
  rep.claims.push_back({"final residuosity checks passed", all_res});
  return rep;
}

TameSelection select_tame_set(i64 base_m, int n, const PipelineConfig& cfg) {
  if (n < 1) throw domain_error("the tame-set size must be positive");
  HypothesisData hyp = gather_hypothesis(base_m, cfg.assume_lambda);
  if (hyp.lambda < n)
    throw hypothesis_error("free-rank evidence lambda = " + std::to_string(hyp.lambda) +
                           " is below the requested set size n = " + std::to_string(n));
  GoverningDatum G = base_m == 0 ? v_group_q({}) : v_group(QuadField(base_m), {});
  if (n > G.dim)
    throw domain_error("only " + std::to_string(G.dim) +
                       " independent coordinates exist over this base");
  TameSelection sel;
  sel.base_m = base_m;
  sel.n = n;
  for (int i = 0; i < n; ++i) {
    std::vector<int> e(G.dim, 0);
    e[i] = 1;
    gras::ChebotarevResult r =
        gras::chebotarev_search(G, e, cfg.scan_bound, gras::PrimeFilter::any, cfg.threads);
    sel.primes.push_back({r.q, r.conjugate});
    sel.audits.push_back(r.audit.coords);
  }
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<gras::TamePrime> X;
    std::string nm;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1) {
        X.push_back(sel.primes[i]);
        nm += (nm.empty() ? "" : ",") + std::to_string(sel.primes[i].q);
      }
    bool ex = gras::gras_exists(G, X);
    sel.subset_checks.push_back({"no extension ramified exactly at {" + nm + "}", !ex});
    if (ex)
      throw inconsistency_error("a subfamily of the tame set admits an unramified-elsewhere "
                                "extension: {" + nm + "}");
  }
  return sel;
}

}  // namespace towerforge::pipeline
