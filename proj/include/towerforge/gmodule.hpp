#pragma once

#include <string>
#include <vector>

#include "towerforge/arith.hpp"
#include "towerforge/f2.hpp"

namespace towerforge::gmodule {

using arith::i64;

// Module over F2[G] for a small 2-group G, given by one invertible matrix per
// group generator.  Supported groups: C1, C2, C4, ... (cyclic 2-groups, one
// generator), V4 = (Z/2)^2, Q8, D4 (two generators each).
struct F2GModule {
  std::string group;
  int dim = 0;
  std::vector<f2::Mat> action;
};

// Validates the name, matrix count, invertibility, the group relations, and
// the size cap |G| * dim <= 4096.
F2GModule make_module(const std::string& group, int dim, std::vector<f2::Mat> action);

int group_order(const std::string& group);
int group_generator_count(const std::string& group);
int group_exponent_log(const std::string& group);  // e_G: exponent = 2^e_G

struct CohomologyRanks {
  int h1 = 0;
  int h2 = 0;
};
// Built-in table: cyclic (1,1); V4 (2,3); Q8 (2,2); D4 (2,3).
CohomologyRanks group_cohomology(const std::string& group);

F2GModule regular_module(const std::string& group);
F2GModule trivial_module(const std::string& group, int dim);
F2GModule direct_sum(const F2GModule& a, const F2GModule& b);
F2GModule conjugated(const F2GModule& M, const f2::Mat& u);  // basis change
// Cyclic groups only: unipotent generator with the given Jordan block sizes
// for g - 1; each block size must be between 1 and |G|.
F2GModule jordan_module(const std::string& cyclic_group, const std::vector<int>& blocks);

// M = F2[G]^lambda + N with N free of free summands (Krull-Schmidt).  lambda
// is the rank of the norm element sum_{g in G} g acting on M: the norm spans
// the socle of the local Frobenius algebra F2[G], so its rank counts exactly
// the free summands.  Cyclic groups are cross-checked against the Jordan
// profile rank (g-1)^(|G|-1).
struct Decomposition {
  int lambda = 0;
  int torsion_dim = 0;  // dim - lambda * |G|
};
Decomposition decompose(const F2GModule& M);

// Arithmetic profile of a tower step: cohomology ranks of the target group,
// its exponent, and the signature of the base field.
struct TowerProfile {
  int h1 = 0;
  int h2 = 0;
  int exponent_log = 1;
  int r1 = 0;
  int r2 = 0;
  bool zeta_in_k = true;  // always true at p = 2
};

// A_K = r1 + r2 - h2 when the p-th roots of unity lie in K (always at p = 2);
// the other branch r1 + r2 - h2 + h1 - 1 is kept for completeness.
int a_invariant(const TowerProfile& p);
// Predicted A of a Z/2 step field unramified at infinity: A + (r1 + r2).
int a_growth(const TowerProfile& p);
// The free rank always dominates the invariant; a violation is a bug.
void assert_minkowski(int lambda, int a_k);

// z = ((x_1, ..., x_d), 0): the i-th chosen free generator moved by g_i - 1.
// Lives in the augmentation-ideal image of M by construction.
struct StabilityTarget {
  f2::Vec z;
  std::vector<int> free_generators;  // basis indices generating free summands
};
StabilityTarget stability_target(const F2GModule& m, int lambda, int d);

// Golod-Shafarevich and Shafarevich-Koch diagnostics for d = h1, r = h2.
struct GSReport {
  int d = 0;
  int r = 0;
  int s = 0;
  int r1 = 0;
  int r2 = 0;
  bool trivial = false;            // d = 0: every check is vacuous
  bool finite_consistent = false;  // 4 r > d^2; otherwise the tower is infinite
  int sk_slack = 0;                // r - d
  int sk_cap = 0;                  // r1 + r2 + s
  bool sk_window_ok = false;       // 0 <= r - d <= r1 + r2 + s
  bool rs_bound_ok = false;        // 4 (r1 + r2 + s) > d^2 - 4 d
};
GSReport gs_diagnostics(const TowerProfile& p, int s);

}  // namespace towerforge::gmodule
