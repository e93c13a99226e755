#include "towerforge/report.hpp"

#include <string>
#include <vector>

#include "towerforge/quadfield.hpp"

namespace towerforge::report {

using arith::i64;
using pipeline::NamedCheck;

namespace {

json checks_json(const std::vector<NamedCheck>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back({{"name", c.name}, {"passed", c.passed}});
  return a;
}

std::vector<NamedCheck> checks_from(const json& a) {
  std::vector<NamedCheck> out;
  for (const auto& c : a) out.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>()});
  return out;
}

json ledger_json(const std::map<i64, int>& m) {
  json o = json::object();
  for (const auto& [p, f] : m) o[std::to_string(p)] = f;
  return o;
}

std::map<i64, int> ledger_from(const json& o) {
  std::map<i64, int> m;
  for (auto it = o.begin(); it != o.end(); ++it) m[std::stoll(it.key())] = it.value().get<int>();
  return m;
}

const char* split_name(quad::SplitType t) {
  switch (t) {
    case quad::SplitType::split: return "split";
    case quad::SplitType::inert: return "inert";
    default: return "ramified";
  }
}

}  // namespace

json envelope(const std::string& kind, json body) {
  json j;
  j["schema_version"] = schema_version;
  j["kind"] = kind;
  // pinned choices every certificate relies on, stated once per document
  j["conventions"] = {
      {"prime_above", "[p, (-r + sqrt(D))/2] with the smallest r >= 0, r^2 = D mod 4p"},
      {"class_group", "wide (ordinary); narrow data kept alongside"},
      {"basis_order", "torsion unit, fundamental unit, s-units by prime, class lifts"},
      {"governing_coords", "Kummer-dual bits in basis order"},
  };
  j["report"] = std::move(body);
  return j;
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

json to_json(const pipeline::SigmaReport& r) {
  json j;
  j["base_m"] = r.base_m;
  j["s"] = r.s;
  j["sigma"] = r.sigma;
  j["sigma_prime"] = r.sigma_prime;
  j["all_ones_in_image"] = r.all_ones_in_image;
  j["psi_rank"] = r.psi_rank;
  j["s_places"] = r.s_places;
  return j;
}

pipeline::SigmaReport sigma_from_json(const json& j) {
  pipeline::SigmaReport r;
  r.base_m = j.at("base_m").get<i64>();
  r.s = j.at("s").get<std::vector<i64>>();
  r.sigma = j.at("sigma").get<std::vector<i64>>();
  r.sigma_prime = j.at("sigma_prime").get<i64>();
  r.all_ones_in_image = j.at("all_ones_in_image").get<bool>();
  r.psi_rank = j.at("psi_rank").get<int>();
  r.s_places = j.at("s_places").get<int>();
  return r;
}

json to_json(const pipeline::SeqCheckReport& r) {
  json j;
  j["h1_t_sigma"] = r.h1_t_sigma;
  j["h1_t"] = r.h1_t;
  j["local_term"] = r.local_term;
  j["m_t_sigma"] = r.m_t_sigma;
  j["m_t"] = r.m_t;
  j["psi_rank"] = r.psi_rank;
  j["alternating_sum"] = r.alternating_sum;
  return j;
}

pipeline::SeqCheckReport seq_from_json(const json& j) {
  pipeline::SeqCheckReport r;
  r.h1_t_sigma = j.at("h1_t_sigma").get<int>();
  r.h1_t = j.at("h1_t").get<int>();
  r.local_term = j.at("local_term").get<int>();
  r.m_t_sigma = j.at("m_t_sigma").get<int>();
  r.m_t = j.at("m_t").get<int>();
  r.psi_rank = j.at("psi_rank").get<int>();
  r.alternating_sum = j.at("alternating_sum").get<int>();
  return r;
}

json to_json(const pipeline::CompositumReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"places", row.places}, {"dim", row.dim}, {"delta", row.delta}});
  json j;
  j["base_m"] = r.base_m;
  j["s"] = r.s;
  j["base_dim"] = r.base_dim;
  j["rows"] = std::move(rows);
  return j;
}

pipeline::CompositumReport compositum_from_json(const json& j) {
  pipeline::CompositumReport r;
  r.base_m = j.at("base_m").get<i64>();
  r.s = j.at("s").get<std::vector<i64>>();
  r.base_dim = j.at("base_dim").get<int>();
  for (const auto& row : j.at("rows"))
    r.rows.push_back({row.at("places").get<std::vector<std::string>>(), row.at("dim").get<int>(),
                      row.at("delta").get<int>()});
  return r;
}

json to_json(const pipeline::StepCertificate& c) {
  json scan;
  scan["q"] = c.scan.q;
  scan["conjugate"] = c.scan.conjugate;
  scan["audit"] = {{"coords", c.scan.audit.coords},
                   {"q", c.scan.audit.q},
                   {"r", c.scan.audit.r},
                   {"conjugate", c.scan.audit.conjugate}};
  scan["z_audit"] = c.scan.z_audit;
  scan["tested"] = c.scan.stats.tested;
  scan["expected_density"] = c.scan.stats.expected_density;

  json inert = json::object();
  for (const auto& [label, flag] : c.inertia) inert[label] = flag;

  json j;
  j["base_m"] = c.base_m;
  j["s"] = c.s;
  j["sigma"] = to_json(c.sigma);
  j["filter"] = c.filter;
  j["scan"] = std::move(scan);
  j["kummer_gen"] = c.kummer_gen;
  j["gen_rational"] = c.gen_rational;
  j["gen_rational_value"] = c.gen_rational_value;
  j["inertia"] = std::move(inert);
  j["stability"] = checks_json(c.stability);
  j["status"] = c.status;
  j["class_field_gen"] = c.class_field_gen;
  j["residuosity"] = checks_json(c.residuosity);
  j["ledger_before"] = ledger_json(c.ledger_before);
  j["ledger_after"] = ledger_json(c.ledger_after);
  return j;
}

pipeline::StepCertificate step_from_json(const json& j) {
  pipeline::StepCertificate c;
  c.base_m = j.at("base_m").get<i64>();
  c.s = j.at("s").get<std::vector<i64>>();
  c.sigma = sigma_from_json(j.at("sigma"));
  c.filter = j.at("filter").get<std::string>();
  const json& scan = j.at("scan");
  c.scan.q = scan.at("q").get<i64>();
  c.scan.conjugate = scan.at("conjugate").get<bool>();
  c.scan.audit.coords = scan.at("audit").at("coords").get<std::vector<int>>();
  c.scan.audit.q = scan.at("audit").at("q").get<i64>();
  c.scan.audit.r = scan.at("audit").at("r").get<i64>();
  c.scan.audit.conjugate = scan.at("audit").at("conjugate").get<bool>();
  c.scan.z_audit = scan.at("z_audit").get<std::vector<int>>();
  c.scan.stats.tested = scan.at("tested").get<arith::u64>();
  c.scan.stats.expected_density = scan.at("expected_density").get<double>();
  const json& inert = j.at("inertia");
  for (auto it = inert.begin(); it != inert.end(); ++it) c.inertia[it.key()] = it.value().get<bool>();
  c.kummer_gen = j.at("kummer_gen").get<std::string>();
  c.gen_rational = j.at("gen_rational").get<bool>();
  c.gen_rational_value = j.at("gen_rational_value").get<i64>();
  c.stability = checks_from(j.at("stability"));
  c.status = j.at("status").get<std::string>();
  c.class_field_gen = j.at("class_field_gen").get<std::string>();
  c.residuosity = checks_from(j.at("residuosity"));
  c.ledger_before = ledger_from(j.at("ledger_before"));
  c.ledger_after = ledger_from(j.at("ledger_after"));
  return c;
}

json to_json(const pipeline::PipelineReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  json j;
  j["base_m"] = r.base_m;
  j["s"] = r.s;
  j["target"] = r.target;
  j["e_g"] = r.e_g;
  j["m"] = r.m;
  j["steps"] = std::move(steps);
  j["final_field"] = r.final_field;
  j["s_f_count"] = r.s_f_count;
  j["a_k"] = r.a_k;
  j["h1_g"] = r.h1_g;
  j["lambda"] = r.lambda;
  j["lambda_assumed"] = r.lambda_assumed;
  j["claims"] = checks_json(r.claims);
  return j;
}

pipeline::PipelineReport pipeline_from_json(const json& j) {
  pipeline::PipelineReport r;
  r.base_m = j.at("base_m").get<i64>();
  r.s = j.at("s").get<std::vector<i64>>();
  r.target = j.at("target").get<std::string>();
  r.e_g = j.at("e_g").get<int>();
  r.m = j.at("m").get<int>();
  for (const auto& s : j.at("steps")) r.steps.push_back(step_from_json(s));
  r.final_field = j.at("final_field").get<std::string>();
  r.s_f_count = j.at("s_f_count").get<int>();
  r.a_k = j.at("a_k").get<int>();
  r.h1_g = j.at("h1_g").get<int>();
  r.lambda = j.at("lambda").get<int>();
  r.lambda_assumed = j.at("lambda_assumed").get<bool>();
  r.claims = checks_from(j.at("claims"));
  return r;
}

json to_json(const pipeline::TameSelection& t) {
  json primes = json::array();
  for (const auto& p : t.primes) primes.push_back({{"q", p.q}, {"conjugate", p.conjugate}});
  json j;
  j["base_m"] = t.base_m;
  j["n"] = t.n;
  j["primes"] = std::move(primes);
  j["audits"] = t.audits;
  j["subset_checks"] = checks_json(t.subset_checks);
  return j;
}

pipeline::TameSelection tame_from_json(const json& j) {
  pipeline::TameSelection t;
  t.base_m = j.at("base_m").get<i64>();
  t.n = j.at("n").get<int>();
  for (const auto& p : j.at("primes"))
    t.primes.push_back({p.at("q").get<i64>(), p.at("conjugate").get<bool>()});
  t.audits = j.at("audits").get<std::vector<std::vector<int>>>();
  t.subset_checks = checks_from(j.at("subset_checks"));
  return t;
}

json to_json(const pipeline::EliminationOutcome& o) {
  const biquad::RelativeQuadExt& e = o.ext;
  json ext;
  ext["base_m"] = e.base_m;
  if (e.over_rationals()) {
    ext["base"] = "Q";
    ext["gen"] = std::to_string(e.gen_rational);
    ext["ramified_finite"] = e.ramified_finite_q;
  } else {
    quad::QuadField K = e.base();
    ext["base"] = "Q(sqrt(" + std::to_string(K.d) + "))";
    ext["gen"] = qi_str(K, e.gen);
    json ram = json::array();
    for (const auto& P : e.ramified_finite)
      ram.push_back({{"p", P.p}, {"type", split_name(P.type)}, {"r", P.r}});
    ext["ramified_finite"] = std::move(ram);
  }
  ext["ramified_at_two"] = e.ramified_at_two;
  ext["ramified_real_places"] = e.ramified_real_places;

  json j;
  j["extension"] = std::move(ext);
  j["certificate"] = to_json(o.cert);
  return j;
}

}  // namespace towerforge::report
