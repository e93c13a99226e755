#include "towerforge/gmodule.hpp"

#include <algorithm>
#include <utility>

#include "towerforge/errors.hpp"

namespace towerforge::gmodule {

namespace {

/* Every supported group is generated by at most two elements g0, g1 with
 * g0^n0 = 1, g1^2 = g0^jsq, and g1 g0 g1^-1 = g0^(twist ? -1 : 1), so each
 * element has a unique normal form g0^p g1^q with p < n0, q < n1. */
struct GroupInfo {
  int order = 1;
  int gens = 0;
  int n0 = 1;
  int n1 = 1;
  bool twist = false;
  int jsq = 0;
  int exponent_log = 0;
};

GroupInfo group_info(const std::string& name) {
  if (name == "V4") return {4, 2, 2, 2, false, 0, 1};
  if (name == "Q8") return {8, 2, 4, 2, true, 2, 2};
  if (name == "D4") return {8, 2, 4, 2, true, 0, 2};
  if (name.size() >= 2 && name[0] == 'C') {
    i64 n = 0;
    for (size_t i = 1; i < name.size(); ++i) {
      if (name[i] < '0' || name[i] > '9' || n > 4096) throw domain_error("unsupported group: " + name);
      n = 10 * n + (name[i] - '0');
    }
    if (n < 1 || n > 4096 || (n & (n - 1))) throw domain_error("unsupported group: " + name);
    int e = 0;
    while ((1 << e) < n) ++e;
    if (n == 1) return {1, 0, 1, 1, false, 0, 0};
    return {static_cast<int>(n), 1, static_cast<int>(n), 1, false, 0, e};
  }
  throw domain_error("unsupported group: " + name);
}

f2::Mat mat_pow(const f2::Mat& a, int e) {
  f2::Mat acc = f2::Mat::identity(a.rows);
  f2::Mat b = a;
  while (e > 0) {
    if (e & 1) acc = acc * b;
    e >>= 1;
    if (e) b = b * b;
  }
  return acc;
}

f2::Mat inverse(const f2::Mat& u) {
  int n = u.rows;
  f2::Mat a = u;
  f2::Mat inv = f2::Mat::identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int i = col; i < n; ++i)
      if (a.get(i, col)) {
        piv = i;
        break;
      }
    if (piv < 0) throw domain_error("basis-change matrix is singular");
    std::swap(a.r[col], a.r[piv]);
    std::swap(inv.r[col], inv.r[piv]);
    for (int i = 0; i < n; ++i)
      if (i != col && a.get(i, col)) {
        a.r[i] ^= a.r[col];
        inv.r[i] ^= inv.r[col];
      }
  }
  return inv;
}

/* Norm element sum_{g in G} g = (sum_p g0^p)(sum_q g1^q) by the normal form. */
f2::Mat norm_matrix(const GroupInfo& gi, const F2GModule& m) {
  f2::Mat nu = f2::Mat::identity(m.dim);
  for (int side = 0; side < gi.gens; ++side) {
    const f2::Mat& g = m.action[side];
    int ord = side == 0 ? gi.n0 : gi.n1;
    f2::Mat sum(m.dim, m.dim);
    f2::Mat pw = f2::Mat::identity(m.dim);
    for (int p = 0; p < ord; ++p) {
      sum = sum + pw;
      if (p + 1 < ord) pw = pw * g;
    }
    nu = nu * sum;
  }
  return nu;
}

std::pair<int, int> word_mult(const GroupInfo& gi, std::pair<int, int> a, std::pair<int, int> b) {
  int p2 = (gi.twist && (a.second & 1)) ? (gi.n0 - b.first) % gi.n0 : b.first;
  int qs = a.second + b.second;
  int p = (a.first + p2 + gi.jsq * (qs / 2)) % gi.n0;
  return {p, qs % 2};
}

}  // namespace

int group_order(const std::string& group) { return group_info(group).order; }
int group_generator_count(const std::string& group) { return group_info(group).gens; }
int group_exponent_log(const std::string& group) { return group_info(group).exponent_log; }

CohomologyRanks group_cohomology(const std::string& group) {
  GroupInfo gi = group_info(group);
  if (group == "V4") return {2, 3};
  if (group == "Q8") return {2, 2};
  if (group == "D4") return {2, 3};
  if (gi.order == 1) return {0, 0};
  return {1, 1};  // cyclic
}

F2GModule make_module(const std::string& group, int dim, std::vector<f2::Mat> action) {
  GroupInfo gi = group_info(group);
  if (dim < 0) throw domain_error("module dimension must be nonnegative");
  if (static_cast<i64>(gi.order) * dim > 4096)
    throw resource_error("module too large: |G| * dim exceeds the 4096 enumeration cap");
  if (static_cast<int>(action.size()) != gi.gens)
    throw domain_error("expected " + std::to_string(gi.gens) + " generator matrices for " + group);
  for (const f2::Mat& g : action) {
    if (g.rows != dim || g.cols != dim) throw domain_error("generator matrix size does not match dim");
    if (f2::rank(g) != dim) throw domain_error("generator action is not invertible");
  }
  f2::Mat id = f2::Mat::identity(dim);
  if (gi.gens >= 1 && mat_pow(action[0], gi.n0) != id)
    throw domain_error("group relation violated: g0 does not have order dividing " + std::to_string(gi.n0));
  if (gi.gens == 2) {
    if (action[1] * action[1] != mat_pow(action[0], gi.jsq))
      throw domain_error("group relation violated: g1^2 != g0^" + std::to_string(gi.jsq));
    f2::Mat rhs = gi.twist ? mat_pow(action[0], gi.n0 - 1) * action[1] : action[0] * action[1];
    if (action[1] * action[0] != rhs) throw domain_error("group relation violated: conjugation rule fails");
  }
  return F2GModule{group, dim, std::move(action)};
}

F2GModule regular_module(const std::string& group) {
  GroupInfo gi = group_info(group);
  int n = gi.order;
  auto id_of = [&](std::pair<int, int> w) { return w.first * gi.n1 + w.second; };
  std::vector<f2::Mat> action;
  for (int side = 0; side < gi.gens; ++side) {
    std::pair<int, int> g = side == 0 ? std::pair{1, 0} : std::pair{0, 1};
    f2::Mat a(n, n);
    for (int p = 0; p < gi.n0; ++p)
      for (int q = 0; q < gi.n1; ++q) a.set(id_of(word_mult(gi, g, {p, q})), id_of({p, q}), true);
    action.push_back(std::move(a));
  }
  return make_module(group, n, std::move(action));
}

F2GModule trivial_module(const std::string& group, int dim) {
  GroupInfo gi = group_info(group);
  return make_module(group, dim, std::vector<f2::Mat>(gi.gens, f2::Mat::identity(dim)));
}

F2GModule direct_sum(const F2GModule& a, const F2GModule& b) {
  if (a.group != b.group) throw domain_error("direct sum needs modules over the same group");
  int n = a.dim + b.dim;
  std::vector<f2::Mat> action;
  for (size_t k = 0; k < a.action.size(); ++k) {
    f2::Mat g(n, n);
    for (int i = 0; i < a.dim; ++i)
      for (int j = 0; j < a.dim; ++j) g.set(i, j, a.action[k].get(i, j));
    for (int i = 0; i < b.dim; ++i)
      for (int j = 0; j < b.dim; ++j) g.set(a.dim + i, a.dim + j, b.action[k].get(i, j));
    action.push_back(std::move(g));
  }
  return make_module(a.group, n, std::move(action));
}

F2GModule conjugated(const F2GModule& m, const f2::Mat& u) {
  if (u.rows != m.dim || u.cols != m.dim) throw domain_error("basis-change matrix size does not match dim");
  f2::Mat uinv = inverse(u);
  std::vector<f2::Mat> action;
  for (const f2::Mat& g : m.action) action.push_back(u * g * uinv);
  return make_module(m.group, m.dim, std::move(action));
}

F2GModule jordan_module(const std::string& cyclic_group, const std::vector<int>& blocks) {
  GroupInfo gi = group_info(cyclic_group);
  if (gi.gens != 1) throw domain_error("jordan_module needs a cyclic group of order >= 2");
  int dim = 0;
  for (int b : blocks) {
    if (b < 1 || b > gi.order) throw domain_error("jordan block size must lie in [1, |G|]");
    dim += b;
  }
  f2::Mat g = f2::Mat::identity(dim);
  int at = 0;
  for (int b : blocks) {
    for (int i = 0; i + 1 < b; ++i) g.set(at + i, at + i + 1, true);
    at += b;
  }
  return make_module(cyclic_group, dim, {std::move(g)});
}

Decomposition decompose(const F2GModule& m) {
  GroupInfo gi = group_info(m.group);
  if (static_cast<i64>(gi.order) * m.dim > 4096)
    throw resource_error("module too large: |G| * dim exceeds the 4096 enumeration cap");
  if (m.dim == 0) return {0, 0};
  int lambda = f2::rank(norm_matrix(gi, m));
  if (gi.gens == 1) {
    // Jordan profile of the unipotent generator: free summands are exactly
    // the (g-1)-blocks of full size |G|, counted by rank (g-1)^(|G|-1).
    f2::Mat n = m.action[0] + f2::Mat::identity(m.dim);
    int jordan = f2::rank(mat_pow(n, gi.order - 1));
    if (jordan != lambda)
      throw inconsistency_error("cyclic decomposition mismatch: norm rank " + std::to_string(lambda) +
                                " vs top jordan count " + std::to_string(jordan));
  }
  int torsion = m.dim - lambda * gi.order;
  if (torsion < 0)
    throw inconsistency_error("free rank " + std::to_string(lambda) + " exceeds dim " + std::to_string(m.dim));
  return {lambda, torsion};
}

int a_invariant(const TowerProfile& p) {
  if (p.h1 < 0 || p.h2 < 0 || p.r1 < 0 || p.r2 < 0 || p.exponent_log < 0)
    throw domain_error("tower profile entries must be nonnegative");
  if (p.zeta_in_k) return p.r1 + p.r2 - p.h2;
  return p.r1 + p.r2 - p.h2 + p.h1 - 1;
}

int a_growth(const TowerProfile& p) { return a_invariant(p) + p.r1 + p.r2; }

void assert_minkowski(int lambda, int a_k) {
  if (lambda < a_k)
    throw inconsistency_error("free rank " + std::to_string(lambda) + " smaller than the a-invariant " +
                              std::to_string(a_k));
}

StabilityTarget stability_target(const F2GModule& m, int lambda, int d) {
  GroupInfo gi = group_info(m.group);
  Decomposition dec = decompose(m);
  if (dec.lambda != lambda)
    throw domain_error("declared free rank " + std::to_string(lambda) + " disagrees with decomposition rank " +
                       std::to_string(dec.lambda));
  if (d < 1 || d > gi.gens) throw domain_error("d must name between 1 and " + std::to_string(gi.gens) + " generators");
  if (lambda < d)
    throw hypothesis_error("stability target needs free rank >= d; have lambda = " + std::to_string(lambda) +
                           ", d = " + std::to_string(d));

  // Basis vectors whose norm images are independent generate independent free
  // summands (the socle of a free module is essential in it).
  f2::Mat nu_cols = norm_matrix(gi, m).transposed();
  std::vector<int> chosen;
  f2::Mat picked(0, m.dim);
  for (int j = 0; j < m.dim && static_cast<int>(chosen.size()) < lambda; ++j) {
    picked.r.push_back(nu_cols.r[j]);
    picked.rows = static_cast<int>(picked.r.size());
    if (f2::rank(picked) == picked.rows) {
      chosen.push_back(j);
    } else {
      picked.r.pop_back();
      picked.rows = static_cast<int>(picked.r.size());
    }
  }
  if (static_cast<int>(chosen.size()) != lambda)
    throw inconsistency_error("could not locate " + std::to_string(lambda) + " free generators");

  f2::Vec z(m.dim);
  for (int i = 0; i < d; ++i) {
    f2::Vec e(m.dim);
    e.set(chosen[i], true);
    z ^= (m.action[i] + f2::Mat::identity(m.dim)).apply(e);
  }
  if (z.zero()) throw inconsistency_error("stability target collapsed to zero on a free summand");
  return {std::move(z), std::move(chosen)};
}

GSReport gs_diagnostics(const TowerProfile& p, int s) {
  if (p.h1 < 0 || p.h2 < 0 || p.r1 < 0 || p.r2 < 0 || s < 0)
    throw domain_error("diagnostics need nonnegative ranks and prime count");
  GSReport rep;
  rep.d = p.h1;
  rep.r = p.h2;
  rep.s = s;
  rep.r1 = p.r1;
  rep.r2 = p.r2;
  rep.sk_slack = rep.r - rep.d;
  rep.sk_cap = p.r1 + p.r2 + s;
  if (rep.d == 0) {
    rep.trivial = true;
    rep.finite_consistent = true;
    rep.sk_window_ok = true;
    rep.rs_bound_ok = true;
    return rep;
  }
  rep.finite_consistent = 4 * rep.r > rep.d * rep.d;
  rep.sk_window_ok = rep.sk_slack >= 0 && rep.sk_slack <= rep.sk_cap;
  rep.rs_bound_ok = 4 * rep.sk_cap > rep.d * rep.d - 4 * rep.d;
  return rep;
}

}  // namespace towerforge::gmodule
