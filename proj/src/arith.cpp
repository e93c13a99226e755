#include "towerforge/arith.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace towerforge::arith {

int kronecker(i64 a, i64 n) {
  if (n == 0) return (a == 1 || a == -1) ? 1 : 0;
  int result = 1;
  if (n < 0) {
    n = -n;
    if (a < 0) result = -result;
  }
  int twos = 0;
  while ((n & 1) == 0) {
    n >>= 1;
    ++twos;
  }
  if (twos & 1) {
    if ((a & 1) == 0) return 0;
    i64 a8 = ((a % 8) + 8) % 8;
    if (a8 == 3 || a8 == 5) result = -result;
  }
  // n now odd and positive: Jacobi with reciprocity
  a %= n;
  if (a < 0) a += n;
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      i64 n8 = n % 8;
      if (n8 == 3 || n8 == 5) result = -result;
    }
    std::swap(a, n);
    if ((a & 3) == 3 && (n & 3) == 3) result = -result;
    a %= n;
  }
  return n == 1 ? result : 0;
}

u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(u128(a) * b % m); }

u64 powmod(u64 base, u64 exp, u64 m) {
  if (m == 1) return 0;
  u64 r = 1;
  base %= m;
  while (exp) {
    if (exp & 1) r = mulmod(r, base, m);
    base = mulmod(base, base, m);
    exp >>= 1;
  }
  return r;
}

bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    u64 x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

i64 mod_inverse(i64 a, i64 m) {
  i64 g = m, x = 0, x1 = 1, a1 = ((a % m) + m) % m;
  while (a1) {
    i64 q = g / a1;
    g -= q * a1;
    std::swap(g, a1);
    x -= q * x1;
    std::swap(x, x1);
  }
  if (g != 1) throw domain_error("mod_inverse: arguments not coprime");
  return ((x % m) + m) % m;
}

i64 sqrt_mod(i64 a, i64 p) {
  a = ((a % p) + p) % p;
  if (a == 0) return 0;
  if (kronecker(a, p) != 1) return -1;
  if (p % 4 == 3) return static_cast<i64>(powmod(a, (p + 1) / 4, p));
  // Tonelli-Shanks
  i64 q = p - 1;
  int s = 0;
  while ((q & 1) == 0) {
    q >>= 1;
    ++s;
  }
  i64 z = 2;
  while (kronecker(z, p) != -1) ++z;
  u64 m = s;
  u64 c = powmod(z, q, p);
  u64 t = powmod(a, q, p);
  u64 r = powmod(a, (q + 1) / 2, p);
  while (t != 1) {
    u64 t2 = t;
    u64 i = 0;
    while (t2 != 1) {
      t2 = mulmod(t2, t2, p);
      ++i;
    }
    u64 b = c;
    for (u64 j = 0; j + i + 1 < m; ++j) b = mulmod(b, b, p);
    m = i;
    c = mulmod(b, b, p);
    t = mulmod(t, c, p);
    r = mulmod(r, b, p);
  }
  return static_cast<i64>(r);
}

int residue_power_test(i64 x, OddPrime q, int deg) {
  if (deg == 1) {
    i64 xr = ((x % q.v) + q.v) % q.v;
    if (xr == 0) return 0;
    u64 e = powmod(xr, (q.v - 1) / 2, q.v);
    return e == 1 ? 1 : -1;
  }
  if (deg == 2) return residue_power_test(x, 0, fq2_model(q));
  throw domain_error("residue_power_test: deg must be 1 or 2");
}

Fq2Model fq2_model(OddPrime q) {
  i64 r = 2;
  while (kronecker(r, q.v) != -1) ++r;
  return Fq2Model{q.v, r};
}

namespace {
// multiplication in F_q[t]/(t^2 - r)
struct Fq2El {
  u64 a, b;
};
Fq2El fq2_mul(const Fq2El& x, const Fq2El& y, i64 q, i64 r) {
  u64 a = (mulmod(x.a, y.a, q) + mulmod(mulmod(x.b, y.b, q), r, q)) % q;
  u64 b = (mulmod(x.a, y.b, q) + mulmod(x.b, y.a, q)) % q;
  return {a, b};
}
}  // namespace

int residue_power_test(i64 a, i64 b, const Fq2Model& model) {
  i64 q = model.q;
  if (q < 3 || !is_prime(q)) throw domain_error("residue_power_test: modulus is not an odd prime");
  if (kronecker(model.r, q) != -1)
    throw domain_error("residue_power_test: t^2 - r is reducible, model is malformed");
  Fq2El x{static_cast<u64>(((a % q) + q) % q), static_cast<u64>(((b % q) + q) % q)};
  if (x.a == 0 && x.b == 0) return 0;
  // exponent (q^2 - 1)/2 as 128-bit
  u128 e = (u128(q) * q - 1) / 2;
  Fq2El acc{1, 0};
  Fq2El base = x;
  while (e) {
    if (e & 1) acc = fq2_mul(acc, base, q, model.r);
    base = fq2_mul(base, base, q, model.r);
    e >>= 1;
  }
  if (acc.b != 0) throw inconsistency_error("residue_power_test: Euler power is not scalar");
  return acc.a == 1 ? 1 : -1;
}

namespace {
u64 pollard_rho(u64 n) {
  if ((n & 1) == 0) return 2;
  for (u64 c = 1;; ++c) {
    u64 x = 2, y = 2, d = 1;
    while (d == 1) {
      x = (mulmod(x, x, n) + c) % n;
      y = (mulmod(y, y, n) + c) % n;
      y = (mulmod(y, y, n) + c) % n;
      d = std::gcd(x > y ? x - y : y - x, n);
    }
    if (d != n) return d;
  }
}

void factor_rec(u64 n, std::vector<u64>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  u64 d = pollard_rho(n);
  factor_rec(d, out);
  factor_rec(n / d, out);
}
}  // namespace

std::vector<std::pair<i64, int>> factorize(i64 n) {
  if (n < 1) throw domain_error("factorize: n must be >= 1");
  std::vector<u64> ps;
  u64 m = static_cast<u64>(n);
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull,
                41ull, 43ull, 47ull}) {
    while (m % p == 0) {
      ps.push_back(p);
      m /= p;
    }
  }
  factor_rec(m, ps);
  std::sort(ps.begin(), ps.end());
  std::vector<std::pair<i64, int>> out;
  for (u64 p : ps) {
    if (!out.empty() && out.back().first == static_cast<i64>(p))
      ++out.back().second;
    else
      out.push_back({static_cast<i64>(p), 1});
  }
  return out;
}

i64 squarefree_core(i64 n) {
  if (n == 0) throw domain_error("squarefree_core: n must be nonzero");
  i64 sign = n < 0 ? -1 : 1;
  i64 core = sign;
  for (auto [p, e] : factorize(sign * n))
    if (e & 1) core *= p;
  return core;
}

i64 isqrt(i64 x) {
  if (x < 0) throw domain_error("isqrt: negative input");
  if (x == 0) return 0;
  i64 r = static_cast<i64>(std::sqrt(static_cast<double>(x)));
  while (r > 0 && i128(r) * r > x) --r;
  while (i128(r + 1) * (r + 1) <= x) ++r;
  return r;
}

}  // namespace towerforge::arith
