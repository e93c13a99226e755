#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "towerforge/biquad.hpp"
#include "towerforge/errors.hpp"
#include "towerforge/gmodule.hpp"
#include "towerforge/governing.hpp"
#include "towerforge/gras.hpp"
#include "towerforge/pipeline.hpp"
#include "towerforge/quadfield.hpp"
#include "towerforge/report.hpp"

using namespace towerforge;
using arith::i64;
using report::json;

namespace {

i64 parse_field(const std::string& s) {
  if (s == "Q" || s == "q") return 0;
  try {
    size_t used = 0;
    i64 m = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return m;
  } catch (const std::exception&) {
    throw domain_error("the field must be \"Q\" or an integer kernel m for Q(sqrt(m))");
  }
}

i64 disc_cap() {
  const char* env = std::getenv("TOWERFORGE_MAX_DISC");
  if (!env) return 100000000;
  try {
    i64 cap = std::stoll(env);
    if (cap < 1) throw std::invalid_argument(env);
    return cap;
  } catch (const std::exception&) {
    throw domain_error("TOWERFORGE_MAX_DISC must be a positive integer");
  }
}

void check_disc(i64 D) {
  i64 cap = disc_cap();
  i64 a = D < 0 ? -D : D;
  if (a > cap)
    throw resource_error("field discriminant " + std::to_string(D) +
                         " exceeds the enumeration cap " + std::to_string(cap) +
                         " (set TOWERFORGE_MAX_DISC to raise it)");
}

quad::QuadField make_field(i64 m) {
  quad::QuadField K(m);
  check_disc(K.D);
  return K;
}

gras::PrimeFilter parse_filter(const std::string& s) {
  if (s == "any") return gras::PrimeFilter::any;
  if (s == "rational-inert") return gras::PrimeFilter::rational_inert;
  if (s == "degree-one") return gras::PrimeFilter::degree_one;
  throw domain_error("unknown filter \"" + s + "\" (any, rational-inert, degree-one)");
}

/* Text format: one "key: value" line per scalar, nested blocks indented, list
 * entries bulleted.  Rendered from the same json body the json format dumps,
 * so both formats always agree. */
void render_text(std::ostream& os, const json& j, int indent) {
  std::string pad(indent, ' ');
  for (auto it = j.begin(); it != j.end(); ++it) {
    const json& v = it.value();
    if (v.is_object()) {
      os << pad << it.key() << ":\n";
      render_text(os, v, indent + 2);
    } else if (v.is_array()) {
      bool scalars = true;
      for (const auto& e : v) scalars = scalars && !e.is_structured();
      if (scalars) {
        os << pad << it.key() << ":";
        if (v.empty()) os << " (none)";
        for (const auto& e : v) os << " " << e.dump();
        os << "\n";
      } else {
        os << pad << it.key() << ":\n";
        for (const auto& e : v) {
          os << pad << "  -\n";
          render_text(os, e, indent + 4);
        }
      }
    } else {
      os << pad << it.key() << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }
  }
}

void emit(const std::string& kind, json body, bool as_json) {
  if (as_json) {
    std::cout << report::render(report::envelope(kind, std::move(body)));
  } else {
    render_text(std::cout, body, 0);
  }
}

json basis_json(const governing::GoverningDatum& G) {
  json rows = json::array();
  for (const auto& e : G.basis) {
    json row;
    row["origin"] = governing::origin_str(e.tag);
    if (e.tag == governing::Origin::s_unit) row["s_prime"] = e.s_prime;
    if (G.base_m == 0) {
      row["class"] = std::to_string(e.cls.repr_q);
    } else {
      quad::QuadField K(G.base_m);
      row["class"] = qi_str(K, e.cls.repr);
    }
    row["odd_support"] = e.cls.odd_support;
    rows.push_back(std::move(row));
  }
  return rows;
}

json gs_json(const gmodule::GSReport& g) {
  json j;
  j["d"] = g.d;
  j["r"] = g.r;
  j["s"] = g.s;
  j["r1"] = g.r1;
  j["r2"] = g.r2;
  j["trivial"] = g.trivial;
  j["finite_consistent"] = g.finite_consistent;
  j["sk_slack"] = g.sk_slack;
  j["sk_cap"] = g.sk_cap;
  j["sk_window_ok"] = g.sk_window_ok;
  j["rs_bound_ok"] = g.rs_bound_ok;
  return j;
}

json chevalley_json(const biquad::RelativeQuadExt& E) {
  biquad::ChevalleyResult c = biquad::chevalley_ambiguous(E);
  biquad::UnramifiedReport u = biquad::unramified_test(E);
  json j;
  j["base"] = E.over_rationals() ? "Q" : "Q(sqrt(" + std::to_string(E.base().d) + "))";
  j["gen"] = E.over_rationals() ? std::to_string(E.gen_rational) : qi_str(E.base(), E.gen);
  j["ambiguous_classes"] = c.count.get_str();
  j["h_base"] = c.h_base.get_str();
  j["ramified_count"] = c.t;
  j["unit_norm_index"] = c.unit_norm_index;
  j["convention"] = c.convention;
  j["unramified"] = u.unramified;
  json places = json::array();
  for (const auto& p : u.places) places.push_back({{"place", p.place}, {"unramified", p.unramified}});
  j["places"] = std::move(places);
  return j;
}

struct CommonOpts {
  std::string field = "Q";
  std::string format = "text";
  std::string filter = "rational-inert";
  i64 bound = 1000000;
  i64 sigma_bound = 100000;
  int threads = 0;  // 0: pick the hardware parallelism
  std::optional<int> assume_lambda;

  i64 base_m() const { return parse_field(field); }
  bool as_json() const {
    if (format == "json") return true;
    if (format == "text") return false;
    throw domain_error("unknown format \"" + format + "\" (text, json)");
  }
  pipeline::PipelineConfig config() const {
    pipeline::PipelineConfig cfg;
    cfg.scan_bound = bound;
    cfg.sigma_bound = sigma_bound;
    cfg.filter = parse_filter(filter);
    cfg.threads = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    cfg.assume_lambda = assume_lambda;
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_scan = false) {
  cmd->add_option("--field", o.field, "base field: Q, or m for Q(sqrt(m))");
  cmd->add_option("--format", o.format, "output format: text or json");
  if (with_scan) {
    cmd->add_option("--bound", o.bound, "prime scan bound");
    cmd->add_option("--sigma-bound", o.sigma_bound, "auxiliary-prime search bound");
    cmd->add_option("--filter", o.filter, "tame prime filter: any, rational-inert, degree-one");
    cmd->add_option("--threads", o.threads, "scan worker count (0 = hardware)");
    cmd->add_option("--assume-lambda", o.assume_lambda,
                    "assert the unit-module free rank instead of deriving it");
  }
}

void field_guard(i64 m) {
  if (m != 0) make_field(m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"towerforge: residue-degree elimination in 2-class-field towers"};
  app.require_subcommand(1);

  // gov
  auto o_gov = std::make_shared<CommonOpts>();
  auto gov_primes = std::make_shared<std::vector<i64>>();
  auto gov_cond = std::make_shared<std::vector<i64>>();
  CLI::App* gov = app.add_subcommand("gov", "governing group basis for (field, S)");
  add_common(gov, *o_gov);
  gov->add_option("--primes", *gov_primes, "support set S")->delimiter(',');
  gov->add_option("--cond", *gov_cond, "local-square conditions T")->delimiter(',');
  gov->callback([o_gov, gov_primes, gov_cond] {
    i64 m = o_gov->base_m();
    field_guard(m);
    governing::GoverningDatum G;
    if (m == 0) {
      G = gov_cond->empty() ? governing::v_group_q(*gov_primes)
                            : governing::v_group_restricted_q(*gov_primes, *gov_cond);
    } else {
      quad::QuadField K = make_field(m);
      G = gov_cond->empty() ? governing::v_group(K, *gov_primes)
                            : governing::v_group_restricted(K, *gov_primes, *gov_cond);
    }
    json body;
    body["base_m"] = G.base_m;
    body["s"] = G.S;
    body["t"] = G.T;
    body["dim"] = G.dim;
    body["basis"] = basis_json(G);
    emit("gov", std::move(body), o_gov->as_json());
  });

  // frob
  auto o_frob = std::make_shared<CommonOpts>();
  auto frob_primes = std::make_shared<std::vector<i64>>();
  auto frob_support = std::make_shared<std::vector<i64>>();
  auto frob_conj = std::make_shared<bool>(false);
  CLI::App* frob = app.add_subcommand("frob", "Frobenius vectors of tame primes");
  add_common(frob, *o_frob);
  frob->add_option("--primes", *frob_primes, "tame primes to evaluate")->delimiter(',')->required();
  frob->add_option("--split-at", *frob_support, "support set S of the governing group")
      ->delimiter(',');
  frob->add_flag("--conjugate", *frob_conj, "use the conjugate prime above each q");
  frob->callback([o_frob, frob_primes, frob_support, frob_conj] {
    i64 m = o_frob->base_m();
    field_guard(m);
    governing::GoverningDatum G = m == 0 ? governing::v_group_q(*frob_support)
                                         : governing::v_group(make_field(m), *frob_support);
    json rows = json::array();
    for (i64 q : *frob_primes) {
      governing::FrobeniusVector v = governing::frobenius_vector(G, q, *frob_conj);
      rows.push_back({{"q", v.q}, {"conjugate", v.conjugate}, {"coords", v.coords}, {"r", v.r}});
    }
    json body;
    body["base_m"] = G.base_m;
    body["s"] = G.S;
    body["dim"] = G.dim;
    body["vectors"] = std::move(rows);
    emit("frob", std::move(body), o_frob->as_json());
  });

  // gras
  auto o_gras = std::make_shared<CommonOpts>();
  auto gras_t = std::make_shared<std::vector<i64>>();
  auto gras_s = std::make_shared<std::vector<i64>>();
  auto gras_max = std::make_shared<i64>(0);
  CLI::App* gr = app.add_subcommand("gras", "existence of an extension ramified exactly at T, split at S");
  add_common(gr, *o_gras);
  gr->add_option("--ramified", *gras_t, "tame ramification set T")->delimiter(',');
  gr->add_option("--split-at", *gras_s, "required split set S")->delimiter(',');
  gr->add_option("--ramified-max", *gras_max,
                 "sweep mode: test every odd prime q < N as T = {q} (base Q)");
  gr->callback([o_gras, gras_t, gras_s, gras_max] {
    i64 m = o_gras->base_m();
    field_guard(m);
    if (*gras_max > 0) {
      if (m != 0) throw domain_error("the sweep mode runs over the rationals");
      if (!gras_t->empty()) throw domain_error("give either --ramified or --ramified-max");
      json rows = json::array();
      i64 count = 0, hits = 0;
      for (i64 q = 3; q < *gras_max; q += 2) {
        if (!arith::is_prime(q)) continue;
        bool e = gras::gras_exists_q({q}, *gras_s);
        rows.push_back({{"q", q}, {"exists", e}});
        ++count;
        hits += e;
      }
      json body;
      body["base"] = "Q";
      body["split_at"] = *gras_s;
      body["max"] = *gras_max;
      body["primes_tested"] = count;
      body["exists_count"] = hits;
      body["rows"] = std::move(rows);
      emit("gras-sweep", std::move(body), o_gras->as_json());
      return;
    }
    if (gras_t->empty()) throw domain_error("--ramified needs at least one prime");
    json body;
    bool exists = false;
    if (m == 0) {
      exists = gras::gras_exists_q(*gras_t, *gras_s);
      body["base"] = "Q";
    } else {
      quad::QuadField K = make_field(m);
      std::vector<gras::TamePrime> T;
      for (i64 q : *gras_t) T.push_back({q, false});
      exists = gras::gras_exists(K, T, *gras_s);
      body["base"] = "Q(sqrt(" + std::to_string(K.d) + "))";
    }
    body["ramified"] = *gras_t;
    body["split_at"] = *gras_s;
    body["exists"] = exists;
    if (exists && gras_t->size() == 1) {
      if (m == 0) {
        gras::KummerDatum E = gras::build_extension_q((*gras_t)[0]);
        body["gen"] = std::to_string(E.gen_rational);
        body["field"] = "Q(sqrt(" + std::to_string(E.gen_rational) + "))";
      } else {
        quad::QuadField K = make_field(m);
        gras::KummerDatum E = gras::build_extension(K, {(*gras_t)[0], false}, *gras_s);
        body["gen"] = qi_str(K, E.gen);
        body["field"] = "Q(sqrt(" + std::to_string(K.d) + "))(sqrt(" + qi_str(K, E.gen) + "))";
      }
    }
    emit("gras", std::move(body), o_gras->as_json());
  });

  // eliminate
  auto o_elim = std::make_shared<CommonOpts>();
  auto elim_s = std::make_shared<std::vector<i64>>();
  CLI::App* elim = app.add_subcommand("eliminate", "one residue-degree elimination step");
  add_common(elim, *o_elim, true);
  elim->add_option("--split-at", *elim_s, "primes whose residue degree is to drop")
      ->delimiter(',')
      ->required();
  elim->callback([o_elim, elim_s] {
    i64 m = o_elim->base_m();
    field_guard(m);
    pipeline::EliminationOutcome o = pipeline::elimination_step(m, *elim_s, o_elim->config());
    emit("eliminate", report::to_json(o), o_elim->as_json());
  });

  // run
  auto o_run = std::make_shared<CommonOpts>();
  auto run_s = std::make_shared<std::vector<i64>>();
  auto run_target = std::make_shared<std::string>();
  CLI::App* run = app.add_subcommand("run", "full elimination pipeline");
  add_common(run, *o_run, true);
  run->add_option("--split-at", *run_s, "primes whose residue degree is to drop")
      ->delimiter(',')
      ->required();
  run->add_option("--target", *run_target, "tower group of the base (C1, C2, C4, ..., V4)")
      ->required();
  run->callback([o_run, run_s, run_target] {
    i64 m = o_run->base_m();
    field_guard(m);
    pipeline::PipelineReport r = pipeline::run(m, *run_s, *run_target, o_run->config());
    emit("run", report::to_json(r), o_run->as_json());
  });

  // classgroup
  auto o_cg = std::make_shared<CommonOpts>();
  CLI::App* cg = app.add_subcommand("classgroup", "class group of a quadratic field");
  add_common(cg, *o_cg);
  cg->callback([o_cg] {
    i64 m = o_cg->base_m();
    if (m == 0) throw domain_error("the class group of Q is trivial; give a quadratic field");
    quad::QuadField K = make_field(m);
    quad::ClassGroup cl = quad::class_group(K);
    json body;
    body["d"] = K.d;
    body["disc"] = K.D;
    body["h_narrow"] = cl.h_narrow();
    body["h_wide"] = cl.h_wide();
    body["narrow_divisors"] = cl.divisors;
    body["wide_divisors"] = cl.wide_divisors;
    body["narrow_equals_wide"] = cl.h_narrow() == cl.h_wide();
    if (cl.h_narrow() <= 64) {
      json forms = json::array();
      for (const auto& f : cl.classes) forms.push_back(quad::form_str(f));
      body["classes"] = std::move(forms);
    }
    emit("classgroup", std::move(body), o_cg->as_json());
  });

  // unit
  auto o_unit = std::make_shared<CommonOpts>();
  CLI::App* un = app.add_subcommand("unit", "unit group of a quadratic field");
  add_common(un, *o_unit);
  un->callback([o_unit] {
    i64 m = o_unit->base_m();
    if (m == 0) throw domain_error("the units of Q are {1, -1}; give a quadratic field");
    quad::QuadField K = make_field(m);
    quad::UnitGroup U = quad::unit_group(K);
    json body;
    body["d"] = K.d;
    body["rank"] = U.rank;
    body["torsion_order"] = U.w;
    if (U.rank == 1) {
      body["eps"] = qi_str(K, U.eps);
      body["eps_norm"] = U.eps_norm;
    }
    emit("unit", std::move(body), o_unit->as_json());
  });

  // kuroda
  auto o_kur = std::make_shared<CommonOpts>();
  auto kur_with = std::make_shared<i64>(0);
  CLI::App* kur = app.add_subcommand("kuroda", "class number of a biquadratic field");
  add_common(kur, *o_kur);
  kur->add_option("--with", *kur_with, "second kernel: the field is Q(sqrt(m), sqrt(with))")
      ->required();
  kur->callback([o_kur, kur_with] {
    i64 m = o_kur->base_m();
    if (m == 0) throw domain_error("give two quadratic kernels: --field m --with n");
    biquad::BiquadField B(m, *kur_with);
    check_disc(B.d1);
    check_disc(B.d2);
    check_disc(B.d3);
    biquad::KubotaResult ku = biquad::kubota_unit_index(B);
    json body;
    body["kernels"] = std::vector<i64>{B.m1, B.m2, B.m3};
    body["subfield_discs"] = std::vector<i64>{B.d1, B.d2, B.d3};
    body["real"] = B.real();
    body["kubota_q"] = ku.q_index;
    body["torsion_order"] = ku.torsion_order;
    body["h"] = biquad::kuroda_class_number(B).get_str();
    emit("kuroda", std::move(body), o_kur->as_json());
  });

  // chevalley
  auto o_che = std::make_shared<CommonOpts>();
  auto che_with = std::make_shared<i64>(0);
  CLI::App* che = app.add_subcommand(
      "chevalley", "ambiguous class count of a quadratic step, with the unramified verdict");
  add_common(che, *o_che);
  che->add_option("--with", *che_with,
                  "relative step: ambiguous classes of Q(sqrt(m))(sqrt(with)) over Q(sqrt(m))");
  che->callback([o_che, che_with] {
    i64 m = o_che->base_m();
    json body;
    if (*che_with == 0) {
      if (m == 0) throw domain_error("give a field: --field m for Q(sqrt(m))/Q");
      make_field(m);
      body = chevalley_json(biquad::relquad_over_rationals(m));
    } else {
      if (m == 0) {
        body = chevalley_json(biquad::relquad_over_rationals(*che_with));
      } else {
        quad::QuadField K = make_field(m);
        body = chevalley_json(biquad::relquad(K, quad::qi_from_int(*che_with)));
      }
    }
    emit("chevalley", std::move(body), o_che->as_json());
  });

  // cs-check
  auto o_cs = std::make_shared<CommonOpts>();
  auto cs_primes = std::make_shared<std::vector<i64>>();
  auto cs_comp = std::make_shared<bool>(false);
  CLI::App* cs = app.add_subcommand("cs-check", "does the class-group 2-rank survive localizing at S");
  add_common(cs, *o_cs);
  cs->add_option("--primes", *cs_primes, "prime set S")->delimiter(',')->required();
  cs->add_flag("--compositum", *cs_comp, "also certify the compositum rank law (needs agreement)");
  cs->callback([o_cs, cs_primes, cs_comp] {
    i64 m = o_cs->base_m();
    field_guard(m);
    bool ok = pipeline::check_cs(m, *cs_primes);
    json body;
    body["base_m"] = m;
    body["s"] = *cs_primes;
    body["agrees"] = ok;
    if (*cs_comp) body["compositum"] = report::to_json(pipeline::cs_compositum_rank(m, *cs_primes));
    emit("cs-check", std::move(body), o_cs->as_json());
  });

  // seq-check
  auto o_seq = std::make_shared<CommonOpts>();
  auto seq_t = std::make_shared<std::vector<i64>>();
  auto seq_sigma = std::make_shared<std::vector<i64>>();
  CLI::App* seq = app.add_subcommand("seq-check", "five-term localization sequence rank bookkeeping");
  add_common(seq, *o_seq);
  seq->add_option("--ramified", *seq_t, "tame set T (characters unramified outside T)")
      ->delimiter(',');
  seq->add_option("--split-at", *seq_sigma, "localization set Sigma")->delimiter(',');
  seq->callback([o_seq, seq_t, seq_sigma] {
    i64 m = o_seq->base_m();
    field_guard(m);
    pipeline::SeqCheckReport r = pipeline::cohomology_rank_check(m, *seq_t, *seq_sigma);
    json body;
    body["base_m"] = m;
    body["t"] = *seq_t;
    body["sigma"] = *seq_sigma;
    body["ranks"] = report::to_json(r);
    emit("seq-check", std::move(body), o_seq->as_json());
  });

  // diagnose
  auto o_diag = std::make_shared<CommonOpts>();
  auto diag_primes = std::make_shared<std::vector<i64>>();
  auto diag_d = std::make_shared<int>(-1);
  auto diag_r = std::make_shared<int>(-1);
  auto diag_s = std::make_shared<int>(0);
  auto diag_r1 = std::make_shared<int>(0);
  auto diag_r2 = std::make_shared<int>(0);
  CLI::App* diag = app.add_subcommand(
      "diagnose", "free-rank evidence and Golod-Shafarevich / Shafarevich-Koch verdicts");
  add_common(diag, *o_diag);
  diag->add_option("--primes", *diag_primes, "prime set S entering the presentation bound")
      ->delimiter(',');
  diag->add_option("--d", *diag_d, "synthetic profile: generator rank d = h1");
  diag->add_option("--r", *diag_r, "synthetic profile: relation rank r = h2");
  diag->add_option("--s", *diag_s, "synthetic profile: ramified-set size");
  diag->add_option("--r1", *diag_r1, "synthetic profile: real places");
  diag->add_option("--r2", *diag_r2, "synthetic profile: complex places");
  diag->add_option("--assume-lambda", o_diag->assume_lambda,
                   "assert the unit-module free rank instead of deriving it");
  diag->callback([o_diag, diag_primes, diag_d, diag_r, diag_s, diag_r1, diag_r2] {
    bool synthetic = *diag_d >= 0 || *diag_r >= 0;
    json body;
    if (synthetic) {
      if (*diag_d < 0 || *diag_r < 0)
        throw domain_error("a synthetic profile needs both --d and --r");
      gmodule::TowerProfile p;
      p.h1 = *diag_d;
      p.h2 = *diag_r;
      p.r1 = *diag_r1;
      p.r2 = *diag_r2;
      body["profile"] = {{"h1", p.h1}, {"h2", p.h2}, {"r1", p.r1}, {"r2", p.r2}};
      body["gs"] = gs_json(gmodule::gs_diagnostics(p, *diag_s));
    } else {
      i64 m = o_diag->base_m();
      field_guard(m);
      pipeline::HypothesisReport h =
          pipeline::describe_hypothesis(m, o_diag->assume_lambda);
      body["base_m"] = m;
      body["tower_group"] = h.tower_name;
      body["profile"] = {{"h1", h.profile.h1},
                         {"h2", h.profile.h2},
                         {"exponent_log", h.profile.exponent_log},
                         {"r1", h.profile.r1},
                         {"r2", h.profile.r2}};
      body["a_k"] = h.a_k;
      body["a_next"] = h.a_next;
      body["lambda"] = h.lambda;
      body["lambda_assumed"] = h.assumed;
      body["hypothesis_holds"] = h.lambda >= h.profile.h1;
      body["gs"] = gs_json(gmodule::gs_diagnostics(h.profile, static_cast<int>(diag_primes->size())));
    }
    emit("diagnose", std::move(body), o_diag->as_json());
  });

  // select-tame
  auto o_tame = std::make_shared<CommonOpts>();
  auto tame_n = std::make_shared<int>(0);
  CLI::App* tame = app.add_subcommand("select-tame", "tame primes hitting a free governing basis");
  add_common(tame, *o_tame, true);
  tame->add_option("--n", *tame_n, "number of primes to select")->required();
  tame->callback([o_tame, tame_n] {
    i64 m = o_tame->base_m();
    field_guard(m);
    pipeline::TameSelection t = pipeline::select_tame_set(m, *tame_n, o_tame->config());
    emit("select-tame", report::to_json(t), o_tame->as_json());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const hypothesis_error& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 2;
  } catch (const resource_error& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return 3;
  } catch (const search_error& e) {
    std::cerr << "search failed: " << e.what() << "\n";
    return 3;
  } catch (const inconsistency_error& e) {
    std::cerr << "internal inconsistency: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
