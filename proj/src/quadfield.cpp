#include "towerforge/quadfield.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace towerforge::quad {

using arith::factorize;
using arith::u64;
using arith::is_prime;
using arith::isqrt;
using arith::kronecker;
using arith::sqrt_mod;

namespace {

i64 max_disc_cap() {
  static i64 cap = [] {
    const char* s = std::getenv("TOWERFORGE_MAX_DISC");
    if (!s) return i64(1000000);
    i64 v = std::atoll(s);
    return v > 0 ? v : i64(1000000);
  }();
  return cap;
}

void check_disc(i64 D) {
  if (D == 0 || (((D % 4) + 4) % 4) > 1)
    throw domain_error("not a discriminant: " + std::to_string(D));
  if (D > 0 && arith::is_square(D))
    throw domain_error("square discriminant: " + std::to_string(D));
}

i64 mod_into(i64 x, i64 m) {  // representative in [0, m)
  i64 r = x % m;
  return r < 0 ? r + m : r;
}

struct LV {
  mpz_class u, v;
};
Ideal ideal_from_lattice(i64 D, std::vector<LV> gens, const mpz_class& scale);

}  // namespace

i64 fundamental_discriminant(i64 d) {
  if (d == 0 || d == 1) throw domain_error("no discriminant for d = 0, 1");
  if (arith::squarefree_core(d) != d) throw domain_error("d must be squarefree");
  return mod_into(d, 4) == 1 ? d : 4 * d;
}

QuadField::QuadField(i64 m) {
  if (m == 0 || m == 1 || (m > 1 && arith::is_square(m)))
    throw domain_error("not a quadratic field: " + std::to_string(m));
  d = arith::squarefree_core(m);
  D = fundamental_discriminant(d);
}

SplitType splitting_type(const QuadField& K, i64 p) {
  if (!is_prime(p)) throw domain_error("splitting_type: " + std::to_string(p) + " not prime");
  int k = kronecker(K.D, p);
  if (k == 0) return SplitType::ramified;
  return k == 1 ? SplitType::split : SplitType::inert;
}

/* ---------- forms ---------- */

bool Form::primitive() const {
  return std::gcd(std::gcd(std::abs(a), std::abs(b)), std::abs(c)) == 1;
}

std::string form_str(const Form& f) {
  std::ostringstream os;
  os << "(" << f.a << "," << f.b << "," << f.c << ")";
  return os.str();
}

Form principal_form(i64 D) {
  check_disc(D);
  i64 b = mod_into(D, 2);
  return Form{1, b, (b * b - D) / 4};
}

bool is_reduced(const Form& f) {
  i64 D = f.disc();
  check_disc(D);
  if (D < 0) {
    if (f.a <= 0) return false;
    i64 ab = std::abs(f.b);
    if (!(ab <= f.a && f.a <= f.c)) return false;
    if (f.b < 0 && (ab == f.a || f.a == f.c)) return false;
    return true;
  }
  // 0 < (sqrt(D) - b)/2 < |a| < (sqrt(D) + b)/2, stated exactly
  if (f.b <= 0 || f.b * f.b >= D) return false;
  i64 t = 2 * std::abs(f.a);
  if (D >= (t + f.b) * (t + f.b)) return false;
  if (t - f.b >= 0 && (t - f.b) * (t - f.b) >= D) return false;
  return true;
}

Form rho_step(const Form& f) {
  i64 D = f.disc();
  check_disc(D);
  if (D < 0) throw domain_error("rho_step needs positive discriminant");
  if (f.c == 0) throw domain_error("degenerate form");
  i64 m = 2 * std::abs(f.c);
  i64 r0 = mod_into(-f.b, m);
  i64 s = isqrt(D);
  i64 r;
  if (std::abs(f.c) > s) {
    r = r0 <= m / 2 ? r0 : r0 - m;  // r in (-|c|, |c|]
  } else {
    // largest r = r0 (mod m) with r <= floor(sqrt(D))
    r = r0 + m * ((s - r0) >= 0 ? (s - r0) / m : -(((r0 - s) + m - 1) / m));
  }
  i64 c2 = i64((i128(r) * r - D) / (4 * f.c));
  return Form{f.c, r, c2};
}

namespace {
Form reduce_definite(Form f) {
  if (f.a <= 0) throw domain_error("reduce: form not positive definite");
  while (true) {
    i64 b = mod_into(f.b + f.a, 2 * f.a) - f.a;  // in [-a, a)
    if (b == -f.a) b = f.a;
    i64 c = f.c + i64((i128(b) * b - i128(f.b) * f.b) / (4 * f.a));
    f = Form{f.a, b, c};
    if (f.a > f.c) {
      f = Form{f.c, -f.b, f.a};
      continue;
    }
    if (f.a == f.c && f.b < 0) f.b = -f.b;
    return f;
  }
}
}  // namespace

Form reduce(Form f) {
  i64 D = f.disc();
  check_disc(D);
  if (D < 0) return reduce_definite(f);
  for (int i = 0; i < 1000000; ++i) {
    if (is_reduced(f)) return f;
    f = rho_step(f);
  }
  throw inconsistency_error("reduce: rho did not terminate");
}

std::vector<Form> rho_cycle(const Form& f) {
  if (!is_reduced(f)) throw domain_error("rho_cycle needs a reduced form");
  std::vector<Form> cyc;
  Form g = f;
  do {
    cyc.push_back(g);
    g = rho_step(g);
    if (cyc.size() > 1000000) throw inconsistency_error("rho cycle unbounded");
  } while (!(g == f));
  return cyc;
}

Form canonical_form(Form f) {
  i64 D = f.disc();
  check_disc(D);
  if (D < 0) return reduce_definite(f);
  Form red = reduce(f);
  Form best{0, 0, 0};
  bool have = false;
  for (const Form& g : rho_cycle(red)) {
    if (g.a <= 0) continue;
    if (!have || g < best) {
      best = g;
      have = true;
    }
  }
  if (!have) throw inconsistency_error("cycle without positive leading coefficient");
  return best;
}

Form compose(const Form& f0, const Form& g0) {
  if (f0.disc() != g0.disc()) throw domain_error("compose: discriminant mismatch");
  if (!f0.primitive() || !g0.primitive()) throw domain_error("compose: imprimitive form");
  Form f = canonical_form(f0), g = canonical_form(g0);
  i64 D = f.disc();
  i64 a1 = f.a, b1 = f.b;
  i64 a2 = g.a, b2 = g.b, c2 = g.c;
  i64 m = (b1 + b2) / 2;
  i64 e = std::gcd(std::gcd(a1, a2), m);
  i64 mod = a1 / e;
  i64 n = (b1 - b2) / 2;
  i64 x = -1;
  for (i64 t = 0; t < mod; ++t) {
    if (mod_into((a2 / e) * t - n, mod) != 0) continue;
    if (mod_into((m / e) * t + c2, mod) != 0) continue;
    x = t;
    break;
  }
  if (x < 0) throw inconsistency_error("compose: congruences unsolvable");
  i64 A = (a1 / e) * (a2 / e);
  i64 B = b2 + 2 * (a2 / e) * x;
  i128 num = i128(B) * B - D;
  if (num % (4 * i128(A)) != 0) throw inconsistency_error("compose: bad discriminant");
  i64 C = i64(num / (4 * i128(A)));
  return canonical_form(Form{A, B, C});
}

Form form_pow(Form f, i64 k) {
  i64 D = f.disc();
  Form r = canonical_form(principal_form(D));
  Form base = canonical_form(k < 0 ? Form{f.a, -f.b, f.c} : f);
  u64 e = k < 0 ? u64(-(k + 1)) + 1 : u64(k);
  while (e) {
    if (e & 1) r = compose(r, base);
    base = compose(base, base);
    e >>= 1;
  }
  return r;
}

/* ---------- quadratic integers ---------- */

QuadInt qi_make(const QuadField& K, mpz_class u, mpz_class v) {
  mpz_class par = u - v * K.D;
  if (par % 2 != 0) throw domain_error("not an algebraic integer: parity");
  return QuadInt{std::move(u), std::move(v)};
}

QuadInt qi_from_int(i64 n) { return QuadInt{2 * mpz_class(n), 0}; }

QuadInt qi_add(const QuadInt& x, const QuadInt& y) { return QuadInt{x.u + y.u, x.v + y.v}; }

QuadInt qi_mul(const QuadField& K, const QuadInt& x, const QuadInt& y) {
  mpz_class u = x.u * y.u + x.v * y.v * K.D;
  mpz_class v = x.u * y.v + x.v * y.u;
  if (u % 2 != 0 || v % 2 != 0) throw inconsistency_error("parity broken in product");
  return QuadInt{u / 2, v / 2};
}

QuadInt qi_conj(const QuadInt& x) { return QuadInt{x.u, -x.v}; }
QuadInt qi_neg(const QuadInt& x) { return QuadInt{-x.u, -x.v}; }

mpz_class qi_norm(const QuadField& K, const QuadInt& x) {
  return (x.u * x.u - mpz_class(K.D) * x.v * x.v) / 4;
}

mpz_class qi_trace(const QuadInt& x) { return x.u; }

bool qi_is_zero(const QuadInt& x) { return x.u == 0 && x.v == 0; }

bool qi_divides_int(const QuadField& K, i64 n, const QuadInt& x) {
  (void)K;
  return x.u % n == 0 && x.v % n == 0;
}

QuadInt qi_div_int(const QuadField& K, const QuadInt& x, i64 n) {
  if (n == 0 || x.u % n != 0 || x.v % n != 0)
    throw domain_error("qi_div_int: not divisible");
  return qi_make(K, x.u / n, x.v / n);
}

std::optional<QuadInt> qi_sqrt(const QuadField& K, const QuadInt& x) {
  if (qi_is_zero(x)) return qi_from_int(0);
  mpz_class n = qi_norm(K, x);
  if (n < 0) return std::nullopt;  // N(y^2) = N(y)^2 >= 0
  if (mpz_perfect_square_p(n.get_mpz_t()) == 0) return std::nullopt;
  mpz_class w;
  mpz_sqrt(w.get_mpz_t(), n.get_mpz_t());
  // y = (s + t sqrt(D))/2: s^2 + D t^2 = 2u, s t = v; s^2 = u +- 2w
  for (int sgn : {1, -1}) {
    mpz_class s2 = x.u + 2 * sgn * w;
    if (s2 < 0) continue;
    if (mpz_perfect_square_p(s2.get_mpz_t()) == 0) continue;
    mpz_class s;
    mpz_sqrt(s.get_mpz_t(), s2.get_mpz_t());
    for (int ssgn : {1, -1}) {
      mpz_class sv = ssgn * s;
      mpz_class t;
      if (sv == 0) {
        mpz_class t2num = 2 * x.u;
        if (t2num % K.D != 0) continue;
        mpz_class t2 = t2num / K.D;
        if (t2 < 0 || mpz_perfect_square_p(t2.get_mpz_t()) == 0) continue;
        mpz_sqrt(t.get_mpz_t(), t2.get_mpz_t());
        if (x.v != 0 && t != 0) continue;
      } else {
        if (x.v % sv != 0) continue;
        t = x.v / sv;
      }
      mpz_class par = sv - t * K.D;
      if (par % 2 != 0) continue;
      QuadInt y{sv, t};
      if (qi_mul(K, y, y) == x) return y;
      QuadInt y2{sv, -t};
      if (qi_mul(K, y2, y2) == x) return y2;
    }
  }
  return std::nullopt;
}

std::string qi_str(const QuadField& K, const QuadInt& x) {
  // express in sqrt(d): D = 4d gives integer coordinates (u/2, v);
  // D = d odd keeps the /2 denominator when u, v are not both even
  mpz_class a, b, den;
  if (K.D % 4 == 0) {
    a = x.u / 2;
    b = x.v;
    den = 1;
  } else if (x.u % 2 == 0 && x.v % 2 == 0) {
    a = x.u / 2;
    b = x.v / 2;
    den = 1;
  } else {
    a = x.u;
    b = x.v;
    den = 2;
  }
  std::ostringstream os;
  if (den == 2) os << "(";
  if (b == 0) {
    os << a.get_str();
  } else {
    if (a != 0) os << a.get_str();
    if (b > 0 && a != 0) os << "+";
    if (b == -1)
      os << "-";
    else if (b != 1)
      os << b.get_str() << "*";
    os << "sqrt(" << K.d << ")";
  }
  if (den == 2) os << ")/2";
  return os.str();
}

/* ---------- Smith normal form over Z with column transforms ---------- */

namespace {

struct Snf {
  std::vector<i64> diag;                 // size m, divisibility chain
  std::vector<std::vector<i64>> V;       // coords transform: w = x V
  std::vector<std::vector<i64>> Vinv;    // generator j = prod g_i^(Vinv[j][i])
};

Snf smith(std::vector<std::vector<i64>> R, int m) {
  int rows = static_cast<int>(R.size());
  for (auto& r : R) r.resize(m, 0);
  std::vector<std::vector<i64>> V(m, std::vector<i64>(m, 0)), Vi(m, std::vector<i64>(m, 0));
  for (int i = 0; i < m; ++i) V[i][i] = Vi[i][i] = 1;

  auto col_add = [&](int dst, int src, i64 k) {  // col dst += k * col src
    for (int i = 0; i < rows; ++i) R[i][dst] += k * R[i][src];
    for (int i = 0; i < m; ++i) V[i][dst] += k * V[i][src];
    for (int j = 0; j < m; ++j) Vi[src][j] -= k * Vi[dst][j];
  };
  auto col_swap = [&](int x, int y) {
    for (int i = 0; i < rows; ++i) std::swap(R[i][x], R[i][y]);
    for (int i = 0; i < m; ++i) std::swap(V[i][x], V[i][y]);
    std::swap(Vi[x], Vi[y]);
  };
  auto col_neg = [&](int x) {
    for (int i = 0; i < rows; ++i) R[i][x] = -R[i][x];
    for (int i = 0; i < m; ++i) V[i][x] = -V[i][x];
    for (int j = 0; j < m; ++j) Vi[x][j] = -Vi[x][j];
  };

  int t = 0;
  int lim = std::min(rows, m);
  for (; t < lim; ++t) {
    // pivot: smallest nonzero |R[i][j]|, i,j >= t
    int pi = -1, pj = -1;
    for (int i = t; i < rows; ++i)
      for (int j = t; j < m; ++j)
        if (R[i][j] != 0 && (pi < 0 || std::abs(R[i][j]) < std::abs(R[pi][pj]))) {
          pi = i;
          pj = j;
        }
    if (pi < 0) break;
    std::swap(R[t], R[pi]);
    if (pj != t) col_swap(t, pj);
    bool clean = false;
    while (!clean) {
      clean = true;
      for (int i = t + 1; i < rows; ++i) {
        if (R[i][t] == 0) continue;
        i64 q = R[i][t] / R[t][t];
        for (int j = t; j < m; ++j) R[i][j] -= q * R[t][j];
        if (R[i][t] != 0) {  // remainder smaller than pivot; promote it
          std::swap(R[t], R[i]);
          clean = false;
        }
      }
      for (int j = t + 1; j < m; ++j) {
        if (R[t][j] == 0) continue;
        i64 q = R[t][j] / R[t][t];
        col_add(j, t, -q);
        if (R[t][j] != 0) {
          col_swap(t, j);
          clean = false;
        }
      }
    }
    if (R[t][t] < 0) col_neg(t);
  }

  std::vector<i64> diag(m, 0);
  for (int i = 0; i < std::min(rows, m); ++i) diag[i] = R[i][i];

  // enforce the divisibility chain on adjacent diagonal pairs; row ops are
  // simulated on the 2x2 block (rows are zero outside it), column ops are
  // applied for real so V and Vinv stay exact
  int guard = 0;
  bool changed = true;
  while (changed) {
    if (++guard > 10000) throw inconsistency_error("smith: chain normalization diverged");
    changed = false;
    for (int i = 0; i + 1 < m; ++i) {
      if (diag[i] == 0 && diag[i + 1] != 0) {
        std::swap(diag[i], diag[i + 1]);
        col_swap(i, i + 1);
        changed = true;
        continue;
      }
      if (diag[i] == 0 || diag[i + 1] % diag[i] == 0) continue;
      i64 a = diag[i], b = diag[i + 1];
      col_add(i, i + 1, 1);  // block rows become (a, 0) and (b, b)
      i64 r1a = a, r1b = 0, r2a = b, r2b = b;
      while (r2a != 0) {
        if (std::abs(r2a) < std::abs(r1a)) {
          std::swap(r1a, r2a);
          std::swap(r1b, r2b);
        }
        if (r2a == 0) break;
        i64 q = r2a / r1a;
        r2a -= q * r1a;
        r2b -= q * r1b;
      }
      if (r1b % r1a != 0) throw inconsistency_error("smith: block gcd does not divide");
      col_add(i + 1, i, -r1b / r1a);
      r2b -= (r1b / r1a) * r2a;  // r2a = 0, no effect; kept for clarity
      r1b = 0;
      if (r1a < 0) {
        col_neg(i);
        r1a = -r1a;
      }
      if (r2b < 0) {
        col_neg(i + 1);
        r2b = -r2b;
      }
      if (r1a != std::gcd(a, b) || r1a * r2b != a * b)
        throw inconsistency_error("smith: block normalization inconsistent");
      diag[i] = r1a;
      diag[i + 1] = r2b;
      changed = true;
    }
  }
  return Snf{diag, V, Vi};
}

}  // namespace

/* ---------- class group ---------- */

namespace {

std::vector<Form> enumerate_classes(i64 D) {
  check_disc(D);
  if (std::abs(D) > max_disc_cap())
    throw resource_error("|D| exceeds TOWERFORGE_MAX_DISC");
  std::vector<Form> out;
  if (D < 0) {
    for (i64 a = 1; 3 * a * a <= -D; ++a)
      for (i64 b = -a + 1; b <= a; ++b) {
        i64 num = b * b - D;
        if (num % (4 * a) != 0) continue;
        i64 c = num / (4 * a);
        if (c < a) continue;
        if (b < 0 && a == c) continue;
        Form f{a, b, c};
        if (!f.primitive()) continue;
        out.push_back(f);
      }
  } else {
    i64 s = isqrt(D);
    std::vector<Form> reduced;
    for (i64 b = 2 - (D % 2 == 0 ? 0 : 1); b <= s; b += 2) {
      i64 num = D - b * b;
      if (num % 4 != 0) continue;
      i64 m = num / 4;  // -ac
      for (i64 dd = 1; dd * dd <= m; ++dd) {
        if (m % dd != 0) continue;
        for (i64 aa : {dd, m / dd})
          for (int sign : {1, -1}) {
            i64 a = sign * aa, c = -m / a;
            Form f{a, b, c};
            if (!is_reduced(f) || !f.primitive()) continue;
            reduced.push_back(f);
          }
      }
    }
    std::sort(reduced.begin(), reduced.end());
    reduced.erase(std::unique(reduced.begin(), reduced.end()), reduced.end());
    for (const Form& f : reduced) out.push_back(canonical_form(f));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

i64 ClassGroup::h_wide() const {
  i64 h = 1;
  for (i64 d : wide_divisors) h *= d;
  return h;
}

int ClassGroup::id_of(const Form& f) const {
  Form c = canonical_form(f);
  auto it = std::lower_bound(classes.begin(), classes.end(), c);
  if (it == classes.end() || !(*it == c))
    throw domain_error("form not in class group: " + form_str(f));
  return static_cast<int>(it - classes.begin());
}

int ClassGroup::mul(int x, int y) const { return id_of(compose(classes[x], classes[y])); }

int ClassGroup::inv(int x) const {
  const Form& f = classes[x];
  return id_of(Form{f.a, -f.b, f.c});
}

int ClassGroup::pow(int x, i64 k) const {
  int b = k < 0 ? inv(x) : x;
  u64 e = k < 0 ? u64(-(k + 1)) + 1 : u64(k);
  int r = principal_id;
  while (e) {
    if (e & 1) r = mul(r, b);
    b = mul(b, b);
    e >>= 1;
  }
  return r;
}

namespace {
i64 order_in(const std::vector<i64>& divisors, const std::vector<i64>& coords) {
  i64 o = 1;
  for (size_t j = 0; j < divisors.size(); ++j) {
    i64 d = divisors[j], c = mod_into(coords[j], d);
    o = std::lcm(o, d / std::gcd(d, c == 0 ? d : c));
  }
  return o;
}
}  // namespace

i64 ClassGroup::narrow_order(int x) const { return order_in(divisors, coords[x]); }
i64 ClassGroup::wide_order(int x) const { return order_in(wide_divisors, wide_coords[x]); }

namespace {

/* Quotient of the group presented by (divisors, gen_ids, coords on classes)
 * by the subgroup generated by sub_ids.  Needs the parent for arithmetic. */
void build_quotient(const ClassGroup& cl, const std::vector<int>& sub_ids,
                    std::vector<i64>& qdiv, std::vector<std::vector<i64>>& qcoords,
                    std::vector<int>& qlifts) {
  int m = static_cast<int>(cl.divisors.size());
  qdiv.clear();
  qcoords.assign(cl.classes.size(), {});
  qlifts.clear();
  if (m == 0) return;
  std::vector<std::vector<i64>> rel;
  for (int i = 0; i < m; ++i) {
    std::vector<i64> row(m, 0);
    row[i] = cl.divisors[i];
    rel.push_back(row);
  }
  for (int id : sub_ids) rel.push_back(cl.coords[id]);
  Snf s = smith(rel, m);
  std::vector<int> keep;
  for (int j = 0; j < m; ++j) {
    if (s.diag[j] == 0) throw inconsistency_error("infinite quotient of a finite group");
    if (s.diag[j] > 1) keep.push_back(j);
  }
  for (int j : keep) qdiv.push_back(s.diag[j]);
  for (int j : keep) {
    int g = cl.principal_id;
    for (int i = 0; i < m; ++i)
      g = cl.mul(g, cl.pow(cl.generator_ids[i], s.Vinv[j][i]));
    qlifts.push_back(g);
  }
  for (size_t id = 0; id < cl.classes.size(); ++id) {
    std::vector<i64> w;
    for (int j : keep) {
      i64 acc = 0;
      for (int i = 0; i < m; ++i) acc += cl.coords[id][i] * s.V[i][j];
      w.push_back(mod_into(acc, s.diag[j]));
    }
    qcoords[id] = std::move(w);
  }
}

}  // namespace

ClassGroup class_group_of_disc(i64 D) {
  check_disc(D);
  ClassGroup cl;
  cl.D = D;
  cl.classes = enumerate_classes(D);
  cl.principal_id = cl.id_of(principal_form(D));

  int h = static_cast<int>(cl.classes.size());
  std::vector<std::optional<std::vector<i64>>> coord(h);
  coord[cl.principal_id] = std::vector<i64>{};
  std::vector<int> members{cl.principal_id};
  std::vector<int> greedy;
  std::vector<std::vector<i64>> rel;

  for (int id = 0; id < h; ++id) {
    if (coord[id]) continue;
    greedy.push_back(id);
    int gi = static_cast<int>(greedy.size());
    for (auto& c : coord)
      if (c) c->resize(gi, 0);
    for (auto& r : rel) r.resize(gi, 0);
    std::vector<int> old_members = members;
    int p = id;
    i64 k = 1;
    while (!coord[p]) {
      for (int hh : old_members) {
        int e = cl.mul(hh, p);
        if (!coord[e]) {
          auto v = *coord[hh];
          v[gi - 1] = k;
          coord[e] = v;
          members.push_back(e);
        }
      }
      ++k;
      p = cl.mul(p, id);
    }
    std::vector<i64> row = *coord[p];
    for (auto& x : row) x = -x;
    row[gi - 1] += k;
    rel.push_back(row);
  }
  if (static_cast<int>(members.size()) != h)
    throw inconsistency_error("class group closure incomplete");

  int m = static_cast<int>(greedy.size());
  Snf s = smith(rel, m);
  std::vector<int> keep;
  for (int j = 0; j < m; ++j) {
    if (s.diag[j] == 0) throw inconsistency_error("class group SNF not finite");
    if (s.diag[j] > 1) keep.push_back(j);
  }
  for (int j : keep) {
    cl.divisors.push_back(s.diag[j]);
    int g = cl.principal_id;
    for (int i = 0; i < m; ++i) g = cl.mul(g, cl.pow(greedy[i], s.Vinv[j][i]));
    cl.generator_ids.push_back(g);
  }
  cl.coords.assign(h, {});
  for (int id = 0; id < h; ++id) {
    std::vector<i64> w;
    for (int j : keep) {
      i64 acc = 0;
      for (int i = 0; i < m; ++i) acc += (*coord[id])[i] * s.V[i][j];
      w.push_back(mod_into(acc, s.diag[j]));
    }
    cl.coords[id] = std::move(w);
  }
  i64 check = 1;
  for (i64 d : cl.divisors) check *= d;
  if (check != h) throw inconsistency_error("elementary divisors do not multiply to h");

  // wide structure: quotient by the class of the ideal (sqrt(D))
  if (D < 0) {
    cl.minus_id = cl.principal_id;
  } else {
    std::vector<LV> gens;
    gens.push_back(LV{0, 2});                            // sqrt(D)
    gens.push_back(LV{mpz_class(D), mpz_class(D)});      // sqrt(D) * (D + sqrt(D))/2
    Ideal I = ideal_from_lattice(D, std::move(gens), 1);
    if (!I.a.fits_slong_p()) throw inconsistency_error("sqrt(D) ideal too large");
    i64 a = I.a.get_si();
    i64 b = mod_into(I.b.get_si() + a, 2 * a) - a;
    i64 c = i64((i128(b) * b - D) / (4 * a));
    cl.minus_id = cl.id_of(Form{a, b, c});
  }
  build_quotient(cl, {cl.minus_id}, cl.wide_divisors, cl.wide_coords, cl.wide_generator_lifts);
  return cl;
}

ClassGroup class_group(const QuadField& K) { return class_group_of_disc(K.D); }

QuotientGroup s_class_group(const ClassGroup& cl, const std::vector<int>& class_ids) {
  std::vector<int> sub = class_ids;
  sub.push_back(cl.minus_id);
  QuotientGroup q;
  build_quotient(cl, sub, q.divisors, q.coords, q.generator_lifts);
  return q;
}

i64 QuotientGroup::order() const {
  i64 h = 1;
  for (i64 d : divisors) h *= d;
  return h;
}

int QuotientGroup::two_rank() const {
  int r = 0;
  for (i64 d : divisors)
    if (d % 2 == 0) ++r;
  return r;
}

/* ---------- ideals ---------- */

namespace {

LV lv_mul(i64 D, const LV& x, const LV& y) {
  mpz_class u = x.u * y.u + x.v * y.v * D;
  mpz_class v = x.u * y.v + x.v * y.u;
  if (u % 2 != 0 || v % 2 != 0) throw inconsistency_error("ideal product parity");
  return LV{u / 2, v / 2};
}

/* HNF basis {(d, 0), (p, q)} of the lattice spanned by gens; q = gcd of the
 * v parts, p reduced mod d. */
void hnf_of(std::vector<LV> gens, mpz_class& d, mpz_class& p, mpz_class& q) {
  for (size_t i = 1; i < gens.size(); ++i) {
    while (gens[i].v != 0) {
      if (gens[0].v == 0 || cmp(abs(gens[i].v), abs(gens[0].v)) < 0) std::swap(gens[0], gens[i]);
      if (gens[i].v == 0) break;
      mpz_class k = gens[i].v / gens[0].v;
      gens[i].u -= k * gens[0].u;
      gens[i].v -= k * gens[0].v;
    }
  }
  if (gens[0].v < 0) {
    gens[0].u = -gens[0].u;
    gens[0].v = -gens[0].v;
  }
  d = 0;
  for (size_t i = 1; i < gens.size(); ++i) d = gcd(d, gens[i].u);
  if (d == 0 || gens[0].v == 0) throw inconsistency_error("degenerate ideal lattice");
  p = gens[0].u % d;
  if (p < 0) p += d;
  q = gens[0].v;
}

/* Strip the rational content so the remaining (d, p, q) is a primitive
 * O-ideal basis; returns the content. */
mpz_class strip_content(i64 D, mpz_class& d, mpz_class& p, mpz_class& q) {
  mpz_class g = gcd(gcd(d, p), q);
  if (!g.fits_slong_p()) throw resource_error("ideal content too large");
  i64 gi = g.get_si();
  std::vector<i64> divs{1};
  for (auto [pr, e] : factorize(gi)) {
    size_t n = divs.size();
    i64 pe = 1;
    for (int i = 0; i < e; ++i) {
      pe *= pr;
      for (size_t j = 0; j < n; ++j) divs.push_back(divs[j] * pe);
    }
  }
  std::sort(divs.rbegin(), divs.rend());
  for (i64 e : divs) {
    mpz_class d2 = d / e, p2 = p / e, q2 = q / e;
    if (d % e != 0 || p % e != 0 || q % e != 0) continue;
    if (d2 % 2 != 0) continue;
    if ((p2 - q2 * D) % 2 != 0) continue;
    d = d2;
    p = p2;
    q = q2;
    return mpz_class(e);
  }
  throw inconsistency_error("content strip failed");
}

Ideal ideal_from_lattice(i64 D, std::vector<LV> gens, const mpz_class& scale) {
  mpz_class d, p, q;
  hnf_of(std::move(gens), d, p, q);
  mpz_class content = strip_content(D, d, p, q);
  if (q != 1) throw inconsistency_error("non-invertible ideal encountered");
  mpz_class a = d / 2;
  mpz_class b = -p;
  b %= 2 * a;
  if (b < 0) b += 2 * a;
  if ((b * b - D) % (4 * a) != 0) throw inconsistency_error("lattice is not an ideal");
  return Ideal{scale * content, a, b};
}

}  // namespace

Ideal ideal_of_form(const QuadField& K, const Form& f) {
  if (f.disc() != K.D) throw domain_error("ideal_of_form: discriminant mismatch");
  if (f.a <= 0) throw domain_error("ideal_of_form: need positive leading coefficient");
  if (!f.primitive()) throw domain_error("ideal_of_form: imprimitive form");
  mpz_class a(f.a), b(f.b);
  b %= 2 * a;
  if (b < 0) b += 2 * a;
  return Ideal{1, a, b};
}

Ideal ideal_mul(const QuadField& K, const Ideal& I, const Ideal& J) {
  std::vector<LV> gi = {{2 * I.a, 0}, {-I.b, 1}};
  std::vector<LV> gj = {{2 * J.a, 0}, {-J.b, 1}};
  std::vector<LV> prod;
  for (const auto& x : gi)
    for (const auto& y : gj) prod.push_back(lv_mul(K.D, x, y));
  return ideal_from_lattice(K.D, std::move(prod), I.m * J.m);
}

Ideal ideal_pow(const QuadField& K, Ideal I, i64 k) {
  if (k < 0) throw domain_error("ideal_pow: negative exponent");
  Ideal r{1, 1, mod_into(K.D, 2)};
  for (i64 i = 0; i < k; ++i) r = ideal_mul(K, r, I);
  return r;
}

Ideal ideal_of_element(const QuadField& K, const QuadInt& x) {
  if (qi_is_zero(x)) throw domain_error("ideal of zero");
  QuadInt omega = qi_make(K, K.D, 1);
  QuadInt xw = qi_mul(K, x, omega);
  std::vector<LV> gens = {{x.u, x.v}, {xw.u, xw.v}};
  Ideal I = ideal_from_lattice(K.D, std::move(gens), 1);
  if (I.m * I.m * I.a != abs(qi_norm(K, x)))
    throw inconsistency_error("principal ideal norm mismatch");
  return I;
}

bool ideal_eq(const Ideal& I, const Ideal& J) {
  return I.m == J.m && I.a == J.a && I.b == J.b;
}

Form form_of_ideal(const QuadField& K, const Ideal& I) {
  if (!I.a.fits_slong_p() || !I.b.fits_slong_p())
    throw resource_error("ideal too large for form extraction");
  i64 a = I.a.get_si();
  i64 b = I.b.get_si();
  b = mod_into(b + a, 2 * a) - a;
  i128 num = i128(b) * b - K.D;
  i64 c = i64(num / (4 * a));
  return canonical_form(Form{a, b, c});
}

/* ---------- principal generators via tracked reduction ---------- */

namespace {

struct MForm {
  mpz_class a, b, c;
};

struct MMat {
  mpz_class m[2][2];
};

MMat mat_id() { return MMat{{{1, 0}, {0, 1}}}; }

void mat_mul_right(MMat& M, const mpz_class& t00, const mpz_class& t01, const mpz_class& t10,
                   const mpz_class& t11) {
  mpz_class a = M.m[0][0] * t00 + M.m[0][1] * t10;
  mpz_class b = M.m[0][0] * t01 + M.m[0][1] * t11;
  mpz_class c = M.m[1][0] * t00 + M.m[1][1] * t10;
  mpz_class d = M.m[1][0] * t01 + M.m[1][1] * t11;
  M.m[0][0] = a;
  M.m[0][1] = b;
  M.m[1][0] = c;
  M.m[1][1] = d;
}

bool mform_reduced_indef(const MForm& f, i64 D, i64 s) {
  if (f.b <= 0 || f.b * f.b >= D) return false;
  mpz_class t = 2 * abs(f.a);
  if ((t + f.b) * (t + f.b) <= D) return false;
  if (t - f.b >= 0 && (t - f.b) * (t - f.b) >= D) return false;
  (void)s;
  return true;
}

MForm mrho(const MForm& f, i64 D, i64 s, MMat& M) {
  mpz_class m = 2 * abs(f.c);
  mpz_class r0 = (-f.b) % m;
  if (r0 < 0) r0 += m;
  mpz_class r;
  if (abs(f.c) > s) {
    r = 2 * r0 <= m ? r0 : r0 - m;
  } else {
    mpz_class k;
    mpz_class diff = s - r0;
    mpz_fdiv_q(k.get_mpz_t(), diff.get_mpz_t(), m.get_mpz_t());
    r = r0 + k * m;
  }
  mpz_class t = (f.b + r) / (2 * f.c);
  mat_mul_right(M, 0, -1, 1, t);
  mpz_class c2 = (r * r - D) / (4 * f.c);
  return MForm{f.c, r, c2};
}

MForm mreduce_definite(MForm f, MMat& M) {
  while (true) {
    // translate b into [-a, a), then fix the b = -a edge via convention later
    mpz_class k;
    mpz_class num = f.a - f.b;
    mpz_class den = 2 * f.a;
    mpz_fdiv_q(k.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (k != 0) {
      mpz_class b2 = f.b + 2 * f.a * k;
      mpz_class c2 = f.a * k * k + f.b * k + f.c;
      f.b = b2;
      f.c = c2;
      mat_mul_right(M, 1, k, 0, 1);
    }
    if (f.a > f.c) {
      f = MForm{f.c, -f.b, f.a};
      mat_mul_right(M, 0, -1, 1, 0);
      continue;
    }
    if (f.a == f.c && f.b < 0) {
      f = MForm{f.c, -f.b, f.a};
      mat_mul_right(M, 0, -1, 1, 0);
      continue;
    }
    return f;
  }
}

}  // namespace

std::optional<QuadInt> principal_generator(const QuadField& K, const Ideal& I) {
  i64 D = K.D;
  MForm f{I.a, I.b, (I.b * I.b - D) / (4 * I.a)};
  // normalize b into (-a, a] first
  {
    mpz_class t = f.b + f.a;
    mpz_class den = 2 * f.a;
    mpz_class r;
    mpz_fdiv_r(r.get_mpz_t(), t.get_mpz_t(), den.get_mpz_t());
    mpz_class b2 = r - f.a;
    if (b2 == -f.a) b2 = f.a;
    f.c += (b2 * b2 - f.b * f.b) / (4 * f.a);
    f.b = b2;
  }
  MMat M = mat_id();
  mpz_class aorig = I.a, borig = f.b;
  mpz_class x0, y0;
  int sign = 0;

  if (D < 0) {
    MForm red = mreduce_definite(f, M);
    if (red.a == 1) {
      x0 = M.m[0][0];
      y0 = M.m[1][0];
      sign = 1;
    }
  } else {
    i64 s = isqrt(D);
    int guard = 0;
    while (!mform_reduced_indef(f, D, s)) {
      f = mrho(f, D, s, M);
      if (++guard > 2000000) throw inconsistency_error("tracked reduction diverged");
    }
    MForm start = f;
    do {
      if (f.a == 1 || f.a == -1) {
        x0 = M.m[0][0];
        y0 = M.m[1][0];
        sign = static_cast<int>(f.a.get_si());
        break;
      }
      f = mrho(f, D, s, M);
      if (++guard > 2000000) throw inconsistency_error("cycle scan diverged");
    } while (!(f.a == start.a && f.b == start.b && f.c == start.c));
  }
  if (sign == 0) return std::nullopt;

  // gamma = a x0 - y0 (-b + sqrt(D))/2, so N(gamma) = sign * a
  mpz_class u = 2 * aorig * x0 + y0 * borig;
  mpz_class v = -y0;
  QuadInt g = qi_make(K, u * I.m, v * I.m);
  if (abs(qi_norm(K, g)) != I.m * I.m * I.a)
    throw inconsistency_error("principal generator norm mismatch");
  if (!ideal_eq(ideal_of_element(K, g), I))
    throw inconsistency_error("principal generator does not generate");
  if (g.u < 0 || (g.u == 0 && g.v < 0)) g = qi_neg(g);
  return g;
}

/* ---------- units ---------- */

UnitGroup unit_group(const QuadField& K) {
  UnitGroup U;
  U.eps = QuadInt{0, 0};
  if (!K.real()) {
    U.rank = 0;
    U.eps_norm = 0;
    U.w = K.D == -4 ? 4 : K.D == -3 ? 6 : 2;
    return U;
  }
  U.rank = 1;
  U.w = 2;
  i64 D = K.D;
  i64 s = isqrt(D);
  Form f0 = reduce(principal_form(D));
  MForm f{f0.a, f0.b, f0.c};
  MMat M = mat_id();
  int guard = 0;
  // rebase at a cycle member with |a| = 1; the principal cycle represents 1
  while (!(f.a == 1 || f.a == -1)) {
    f = mrho(f, D, s, M);
    if (++guard > 2000000) throw inconsistency_error("unit cycle diverged");
  }
  MForm g0 = f;
  M = mat_id();
  int norm = 0;
  while (true) {
    f = mrho(f, D, s, M);
    if (++guard > 2000000) throw inconsistency_error("unit cycle diverged");
    // (-a, b, -c) in the cycle detects norm -1: g0(Mv) = -g0(v with y negated)
    if (f.a == -g0.a && f.b == g0.b && f.c == -g0.c) {
      norm = -1;
      break;
    }
    if (f.a == g0.a && f.b == g0.b && f.c == g0.c) {
      norm = 1;
      break;
    }
  }
  // either way the first column (x0, y0) of M has g0(x0, y0) = norm * g0.a,
  // and gamma = a x0 - y0 (-b + sqrt(D))/2 has N(gamma) = norm * a^2 = norm
  mpz_class x0 = M.m[0][0], y0 = M.m[1][0];
  mpz_class u = 2 * g0.a * x0 + y0 * g0.b;
  mpz_class v = -y0;
  if (u < 0) u = -u;
  if (v < 0) v = -v;
  U.eps = qi_make(K, u, v);
  U.eps_norm = norm;
  if (qi_norm(K, U.eps) != norm || v == 0)
    throw inconsistency_error("fundamental unit extraction failed");
  return U;
}

/* ---------- primes, valuations, symbols ---------- */

PrimeIdeal prime_above(const QuadField& K, i64 p) {
  SplitType st = splitting_type(K, p);
  if (st == SplitType::inert)
    return PrimeIdeal{p, st, -1, canonical_form(principal_form(K.D))};
  i64 r = -1;
  if (p == 2) {
    for (i64 cand = 0; cand < 4; ++cand)
      if (mod_into(cand * cand - K.D, 8) == 0) {
        r = cand;
        break;
      }
  } else {
    i64 r0 = sqrt_mod(mod_into(K.D, p), p);
    if (r0 < 0) throw inconsistency_error("split prime without square root");
    std::vector<i64> cands{r0, p - r0, r0 + p, 2 * p - r0};
    std::sort(cands.begin(), cands.end());
    for (i64 cand : cands)
      if (cand >= 0 && mod_into(cand * cand - K.D, 4 * p) == 0) {
        r = cand;
        break;
      }
  }
  if (r < 0) throw inconsistency_error("no pinned root above " + std::to_string(p));
  i128 num = i128(r) * r - K.D;
  return PrimeIdeal{p, st, r, Form{p, r, i64(num / (4 * p))}};
}

namespace {

i64 mpz_val(const mpz_class& x, i64 p) {
  if (x == 0) throw domain_error("valuation of zero");
  mpz_class t = x;
  i64 v = 0;
  while (t % p == 0) {
    t /= p;
    ++v;
  }
  return v;
}

/* 2-adic lift of the root of t^2 - t - (D-1)/4 with t odd; returns
 * R = 2t - 1, the sqrt(D) image in Z_2, modulo 2^m. */
mpz_class hensel_root_2(i64 D, i64 m) {
  mpz_class mod = 1;
  mod <<= m;
  mpz_class c = (mpz_class(D) - 1) / 4;
  mpz_class t = 1;
  for (i64 k = 0; k < m + 2; ++k) {
    mpz_class ft = (t * t - t - c) % mod;
    if (ft == 0) break;
    mpz_class fp = 2 * t - 1;  // odd, invertible
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), fp.get_mpz_t(), mod.get_mpz_t()) == 0)
      throw inconsistency_error("2-adic derivative not invertible");
    t = (t - ft * inv) % mod;
    if (t < 0) t += mod;
  }
  if ((t * t - t - c) % mod != 0) throw inconsistency_error("2-adic lift failed");
  mpz_class R = (2 * t - 1) % mod;
  if (R < 0) R += mod;
  return R;
}

mpz_class hensel_root_odd(i64 D, i64 r0, i64 p, i64 m) {
  mpz_class mod = 1;
  mpz_class pp(p);
  mpz_pow_ui(mod.get_mpz_t(), pp.get_mpz_t(), static_cast<unsigned long>(m));
  mpz_class r(r0 % p);
  mpz_class cur = p;
  while (cur < mod) {
    cur = cur * cur;
    if (cur > mod) cur = mod;
    mpz_class f = (r * r - D) % cur;
    if (f < 0) f += cur;
    mpz_class der = 2 * r;
    mpz_class inv;
    if (mpz_invert(inv.get_mpz_t(), der.get_mpz_t(), cur.get_mpz_t()) == 0)
      throw inconsistency_error("Hensel derivative not invertible");
    r = (r - f * inv) % cur;
    if (r < 0) r += cur;
  }
  if ((r * r - D) % mod != 0) throw inconsistency_error("Hensel lift failed");
  return r;
}

}  // namespace

i64 valuation(const QuadField& K, const QuadInt& x, const PrimeIdeal& P) {
  if (qi_is_zero(x)) throw domain_error("valuation of zero");
  mpz_class n = qi_norm(K, x);
  i64 vn = mpz_val(n, P.p);
  if (P.type == SplitType::ramified) return vn;
  if (P.type == SplitType::inert) {
    if (vn % 2 != 0) throw inconsistency_error("odd norm valuation at inert prime");
    return vn / 2;
  }
  i64 m = vn + 4;
  mpz_class mod;
  mpz_class R;
  if (P.p == 2) {
    R = hensel_root_2(K.D, m);
    mod = 1;
    mod <<= m;
  } else {
    R = hensel_root_odd(K.D, P.r, P.p, m);
    mpz_class pp(P.p);
    mpz_pow_ui(mod.get_mpz_t(), pp.get_mpz_t(), static_cast<unsigned long>(m));
  }
  mpz_class t = (x.u + x.v * R) % mod;
  if (t < 0) t += mod;
  if (t == 0) throw inconsistency_error("valuation precision exhausted");
  i64 v = mpz_val(t, P.p);
  if (v >= m) throw inconsistency_error("valuation precision exhausted");
  return P.p == 2 ? v - 1 : v;
}

int residue_symbol_deg1(const QuadField& K, const QuadInt& x, i64 q, i64 r) {
  if (q == 2 || !is_prime(q)) throw domain_error("residue_symbol_deg1: bad modulus");
  if (mod_into(i64((i128(r) * r - K.D) % q), q) != 0)
    throw domain_error("residue_symbol_deg1: r is not a root");
  mpz_class t = (x.u + x.v * r) % q;
  i64 ti = t.get_si();
  if (ti < 0) ti += q;
  i64 inv2 = arith::mod_inverse(2, q);
  return kronecker(arith::mulmod(ti, inv2, q), q);
}

int residue_symbol_inert(const QuadField& K, const QuadInt& x, i64 q) {
  if (splitting_type(K, q) != SplitType::inert)
    throw domain_error("residue_symbol_inert: prime is not inert");
  mpz_class n = qi_norm(K, x) % q;
  return kronecker(mod_into(n.get_si(), q), q);
}

int residue_symbol_inert_slow(const QuadField& K, const QuadInt& x, i64 q) {
  if (splitting_type(K, q) != SplitType::inert)
    throw domain_error("residue_symbol_inert: prime is not inert");
  arith::Fq2Model model{q, mod_into(K.D, q)};
  i64 inv2 = arith::mod_inverse(2, q);
  i64 a = arith::mulmod(mod_into(static_cast<i64>(mpz_class(x.u % q).get_si()), q), inv2, q);
  i64 b = arith::mulmod(mod_into(static_cast<i64>(mpz_class(x.v % q).get_si()), q), inv2, q);
  return arith::residue_power_test(a, b, model);
}

/* ---------- S-units and 2-adic conditions ---------- */

QuadInt s_unit_generator(const QuadField& K, const ClassGroup& cl, const PrimeIdeal& P) {
  if (P.type == SplitType::inert) return qi_from_int(P.p);
  int id = cl.id_of(P.form);
  i64 k = cl.wide_order(id);
  // power the pinned prime itself, not its class representative
  Ideal I = ideal_pow(K, ideal_of_form(K, P.form), k);
  auto g = principal_generator(K, I);
  if (!g) throw inconsistency_error("prime power not principal at its wide order");
  return *g;
}

bool square_mod_4O(const QuadField& K, const QuadInt& x) {
  for (i64 i : {0, 1})
    for (i64 j : {0, 1}) {
      QuadInt t = qi_make(K, i * 2 + j * K.D, j);
      QuadInt t2 = qi_mul(K, t, t);
      mpz_class du = x.u - t2.u, dv = x.v - t2.v;
      // (du + dv sqrt(D))/2 lies in 4O iff du, dv are divisible by 4 and the
      // quotient pair still satisfies the integrality parity
      if (du % 4 == 0 && dv % 4 == 0 && (du / 4 - dv / 4 * K.D) % 2 == 0) return true;
    }
  return false;
}

bool unramified_at_2(const QuadField& K, const QuadInt& x, const PrimeIdeal& P) {
  if (P.p != 2) throw domain_error("unramified_at_2 needs a prime above 2");
  i64 k = valuation(K, x, P);
  if (k % 2 != 0) return false;
  if (P.type == SplitType::split) {
    mpz_class n = qi_norm(K, x);
    i64 m = mpz_val(n, 2) + 6;
    mpz_class R = hensel_root_2(K.D, m);
    mpz_class mod = 1;
    mod <<= m;
    mpz_class t = (x.u + x.v * R) % mod;
    if (t < 0) t += mod;
    for (i64 i = 0; i < k + 1; ++i) t /= 2;  // valuation k+1 in the numerator
    i64 eta = static_cast<i64>(mpz_class(t % 8).get_si());
    return eta == 1 || eta == 5;
  }
  // one prime above 2: 2^j divides x exactly
  i64 e = P.type == SplitType::ramified ? 2 : 1;
  i64 j = k / e;
  QuadInt y = x;
  for (i64 i = 0; i < j; ++i) y = qi_div_int(K, y, 2);
  if (P.type == SplitType::ramified && j % 2 != 0) {
    // an odd power of 2 stays in the square class of y; fold in pi^2 / 2 for
    // a uniformizer pi so the tested element is a unit in the same class
    i64 m4 = ((K.d % 4) + 4) % 4;
    QuadInt pi = m4 == 2 ? qi_make(K, 0, 1) : qi_make(K, 2, 1);
    y = qi_mul(K, y, qi_div_int(K, qi_mul(K, pi, pi), 2));
  }
  for (i64 i : {0, 1})
    for (i64 jj : {0, 1}) {
      QuadInt t = qi_make(K, i * 2 + jj * K.D, jj);
      QuadInt t2 = qi_mul(K, t, t);
      QuadInt z = qi_add(y, qi_neg(t2));
      if (qi_is_zero(z)) return true;
      if (valuation(K, z, P) >= 2 * e) return true;
    }
  return false;
}

}  // namespace towerforge::quad
