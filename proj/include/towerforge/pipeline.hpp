#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "towerforge/biquad.hpp"
#include "towerforge/gmodule.hpp"
#include "towerforge/gras.hpp"
#include "towerforge/governing.hpp"
#include "towerforge/quadfield.hpp"

namespace towerforge::pipeline {

using arith::i64;
using quad::QuadField;

// Fields are addressed by an integer kernel m: 0 is Q, anything else the
// quadratic field Q(sqrt(m)) with the squarefree core taken.

struct NamedCheck {
  std::string name;
  bool passed = false;
};

// C_S: localizing the class group at the primes above S preserves its
// 2-torsion rank.
bool check_cs(i64 base_m, const std::vector<i64>& S);

struct CompositumRow {
  std::vector<std::string> places;  // labels of the base primes in the subset
  int dim = 0;                      // independent square classes over the subset
  int delta = 0;                    // increment over the empty subset
};
struct CompositumReport {
  i64 base_m = 0;
  std::vector<i64> s;
  int base_dim = 0;
  std::vector<CompositumRow> rows;  // subsets ordered by (size, pinned position)
};
// Rank law of the compositum of governing groups: under C_S every subset X of
// the primes of the base above S raises the square-class dimension by exactly
// #X.  Requires C_S; more than 5 primes above S is refused; a broken
// increment is an internal inconsistency.
CompositumReport cs_compositum_rank(i64 base_m, const std::vector<i64>& S);

struct SigmaReport {
  i64 base_m = 0;
  std::vector<i64> s;
  std::vector<i64> sigma;          // s plus the auxiliary prime when needed
  i64 sigma_prime = 0;             // 0 when no augmentation was needed
  bool all_ones_in_image = false;  // everywhere-inert condition lay in Im(psi)
  int psi_rank = 0;                // rank of the unramified character matrix
  int s_places = 0;                // primes of the base above s
};
// Decide whether the everywhere-inert local condition at S is annihilated by
// the unramified characters of the base (the image of psi); when it is,
// append the smallest auxiliary prime that is split in the base, has
// principal primes above it, and splits in every 2-class-field layer.
SigmaReport augment_sigma(i64 base_m, const std::vector<i64>& S, i64 bound = 100000);

struct SeqCheckReport {
  int h1_t_sigma = 0;  // characters unramified outside T, split at Sigma
  int h1_t = 0;        // characters unramified outside T
  int local_term = 0;  // primes of the base above Sigma
  int m_t_sigma = 0;   // governing dimension over Sigma with T-conditions
  int m_t = 0;         // governing dimension over the empty set with T-conditions
  int psi_rank = 0;    // rank of the localization map on the h1_t space
  int alternating_sum = 0;  // h1_t_sigma - h1_t + local_term - m_t_sigma + m_t
};
// Dimension bookkeeping of the five-term localization sequence.  Exactness
// (zero alternating sum and the two stepwise rank identities) is asserted;
// a violation is an internal inconsistency.
SeqCheckReport cohomology_rank_check(i64 base_m, std::vector<i64> T, std::vector<i64> Sigma);

struct HypothesisReport {
  std::string tower_name;  // tower group of the base's 2-class group
  gmodule::TowerProfile profile;
  int a_k = 0;
  int a_next = 0;  // predicted invariant after one step unramified at infinity
  int lambda = 0;  // free-rank evidence, or the override when assumed
  bool assumed = false;
};
// Cohomological profile of the base tower group together with the free-rank
// evidence the elimination hypothesis rests on.
HypothesisReport describe_hypothesis(i64 base_m, std::optional<int> assume_lambda = {});

struct PipelineConfig {
  i64 scan_bound = 1000000;
  i64 sigma_bound = 100000;
  gras::PrimeFilter filter = gras::PrimeFilter::rational_inert;  // quadratic bases
  int threads = 1;
  std::optional<int> assume_lambda;  // free-rank override, recorded when used
};

struct StepCertificate {
  i64 base_m = 0;
  std::vector<i64> s;
  SigmaReport sigma;
  std::string filter;      // filter that produced the hit ("any" over Q)
  gras::ChebotarevResult scan;
  std::string kummer_gen;  // generator of the step extension
  bool gen_rational = false;      // step is biquadratic over Q
  i64 gen_rational_value = 0;     // rational kernel when gen_rational
  std::map<std::string, bool> inertia;  // true = inert, keyed by prime label
  std::vector<NamedCheck> stability;
  std::string status;      // "certified" or "partial"
  std::string class_field_gen;          // generator of the base 2-class-field layer
  std::vector<NamedCheck> residuosity;  // generator squareness above s in the new field
  std::map<i64, int> ledger_before;     // tracked residue degrees per prime of s
  std::map<i64, int> ledger_after;
};

struct EliminationOutcome {
  biquad::RelativeQuadExt ext;
  StepCertificate cert;
};
// One elimination step: a quadratic extension of the base ramified at exactly
// one fresh tame prime, inert at every prime above S (and above the
// auxiliary prime), with tower-stability evidence.  Requires the free-rank
// hypothesis: a-invariant at least h^1 of the base tower group, or an
// explicit assume_lambda override.
EliminationOutcome elimination_step(i64 base_m, const std::vector<i64>& S,
                                    const PipelineConfig& cfg = {});

struct PipelineReport {
  i64 base_m = 0;
  std::vector<i64> s;
  std::string target;  // tower group name: "C1", "C2", "C4", ..., "V4"
  int e_g = 0;         // exponent log of the target
  int m = 0;           // steps performed
  std::vector<StepCertificate> steps;
  std::string final_field;
  int s_f_count = 0;   // tracked primes at the end; stays equal to |s|
  int a_k = 0;
  int h1_g = 0;
  int lambda = 0;
  bool lambda_assumed = false;
  std::vector<NamedCheck> claims;
};
// Iterate elimination steps until every tracked prime of S has residue
// degree one in the 2-class field of the end field.  target must name the
// tower group realized by the base's 2-class group; bases whose a-invariant
// falls below h^1 of that group are refused unless assume_lambda is given.
PipelineReport run(i64 base_m, const std::vector<i64>& S, const std::string& target,
                   const PipelineConfig& cfg = {});

struct TameSelection {
  i64 base_m = 0;
  int n = 0;
  std::vector<gras::TamePrime> primes;
  std::vector<std::vector<int>> audits;   // Frobenius coordinates per pick
  std::vector<NamedCheck> subset_checks;  // no subset admits a split extension
};
// n tame primes whose Frobenius vectors are the first n standard basis
// vectors of the governing group over the empty set, with the subset
// non-existence certificate.  Requires free rank at least n.
TameSelection select_tame_set(i64 base_m, int n, const PipelineConfig& cfg = {});

}  // namespace towerforge::pipeline
