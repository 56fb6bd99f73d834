// bk-lab: command-line front end. JSON on stdout, diagnostics on stderr.
// Exit status: 0 all requested checks pass, 1 a check failed, 2 malformed input or usage.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bklab/bklab.hpp"

using namespace bklab;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kMalformed = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json load(const std::string& path) { return parse_json_text(read_input(path)); }

void emit(const Json& j) { std::cout << j.dump(2) << '\n'; }

ContextPtr load_context(const std::string& arg) {
  if (arg == "C1" || arg == "c1") return context_c1();
  if (arg == "C2" || arg == "c2") return context_c2();
  if (arg == "C3" || arg == "c3") return context_c3();
  return context_from_json(load(arg));
}

BKModule load_module(const Json& j, int precision) {
  BKModule M = module_from_json(j);
  if (precision > 0) M = detail::at_precision(M, precision);
  return M;
}

bool has(const Json& j, const char* key) { return j.is_object() && j.contains(key); }

LocalModelPair load_pair(const Json& j, int precision) {
  if (has(j, "phi")) {
    BKModule M = load_module(j, precision);
    ValidationReport vr = validate(M);
    if (!vr.pass) throw BKError("module fails " + vr.first_failure()->name);
    return psi(M);
  }
  return pair_from_json(j);
}

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> all) {
  for (E e : all)
    if (to_string(e) == s) return e;
  throw UsageError("unknown pattern " + s);
}

struct GridArgs {
  std::string ctx = "C1";
  std::uint64_t seed = 0;
  int precision = 0;
  int height = 1;
  int rank = 2;
  long long samples = 0;
  bool sampled = false;
  bool exhaustive = false;
  int exp_lo = 0;
  int exp_hi = -1;
  int perturbation = -1;
  long long cap = 1000000;
  std::vector<std::string> phi, descent;

  void attach(CLI::App* cmd) {
    cmd->add_option("--ctx", ctx, "context JSON file, or C1/C2/C3");
    cmd->add_option("--seed", seed, "sampler seed");
    cmd->add_option("--precision", precision, "u-adic precision (0: context default)");
    cmd->add_option("--height", height);
    cmd->add_option("--rank", rank);
    cmd->add_option("--samples", samples, "valid modules wanted from the sampler");
    cmd->add_flag("--sampled", sampled, "force the random sampler");
    cmd->add_flag("--exhaustive", exhaustive, "force exhaustive enumeration");
    cmd->add_option("--exp-lo", exp_lo);
    cmd->add_option("--exp-hi", exp_hi, "-1: h e'");
    cmd->add_option("--perturbation-degree", perturbation, "-1: h e'");
    cmd->add_option("--cap", cap, "candidate cap");
    cmd->add_option("--phi", phi, "diagonal, antidiagonal, perturbed");
    cmd->add_option("--descent", descent, "diagonal, antidiagonal, general");
  }

  EnumerationGrid build() const {
    EnumerationGrid g = default_grid(load_context(ctx));
    if (sampled && exhaustive) throw UsageError("--sampled and --exhaustive are exclusive");
    if (sampled) g.sampled = true;
    if (exhaustive) g.sampled = false;
    g.seed = seed;
    g.precision = precision;
    g.height = height;
    g.rank = rank;
    if (samples > 0) g.samples = samples;
    g.exp_lo = exp_lo;
    g.exp_hi = exp_hi;
    g.perturbation_degree = perturbation;
    g.cap = cap;
    if (!phi.empty()) {
      g.phi_patterns.clear();
      for (const auto& s : phi)
        g.phi_patterns.push_back(
            parse_enum(s, {PhiPattern::diagonal, PhiPattern::antidiagonal, PhiPattern::perturbed}));
    }
    if (!descent.empty()) {
      g.descent_patterns.clear();
      for (const auto& s : descent)
        g.descent_patterns.push_back(
            parse_enum(s, {DescentPattern::diagonal, DescentPattern::antidiagonal, DescentPattern::general}));
    }
    return g;
  }
};

Json stats_json(const EnumerationStats& s) {
  return Json{{"candidates", s.candidates}, {"valid", s.valid}, {"discarded", s.discarded}};
}

Json properties_json(const std::vector<PropertyVerdict>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) {
    Json j = to_json(v);
    if (is_tally_only(v.name)) j["tally_only"] = true;
    a.push_back(j);
  }
  return a;
}

// ---------------------------------------------------------------------------------------------

struct CheckArgs {
  std::string file;
  int height = 1;
  int precision = 0;
  bool strong_det = false;
  bool properties = false;
  bool dieudonne = false;
  bool psi = false;
  bool generic = false;
};

int run_check(const CheckArgs& a) {
  const BKModule M = load_module(load(a.file), a.precision);
  const auto& ctx = *M.ctx;
  Json out;
  const ValidationReport vr = validate(M, a.height);
  out["validation"] = to_json(ctx, vr);
  bool pass = vr.pass;
  out["type"] = vr.pass ? to_json(type_of(M)) : Json(nullptr);
  if (a.strong_det) {
    if (M.rank != 2 || a.height != 1) throw UsageError("--strong-det needs rank 2 and height 1");
    if (vr.pass) {
      StrongDetReport sd = strong_det_check(M, a.height);
      out["strong_det"] = to_json(sd);
      pass = pass && sd.pass;
    } else {
      out["strong_det"] = nullptr;
    }
  }
  if (a.properties) {
    auto vs = module_properties(M, PropertyOptions{a.height, a.generic, true});
    for (const auto& v : vs) pass = pass && v.pass;
    out["properties"] = properties_json(vs);
  }
  if (vr.pass && a.dieudonne) out["dieudonne"] = to_json(dieudonne_of(M));
  if (vr.pass && a.psi) out["pair"] = to_json(bklab::psi(M));
  out["pass"] = pass;
  emit(out);
  if (const CheckResult* f = vr.first_failure()) {
    std::cerr << "check failed: " << f->name;
    if (f->component >= 0) std::cerr << " on component " << f->component;
    std::cerr << '\n';
  }
  return pass ? kPass : kFail;
}

int run_psi(const std::string& file, int precision) {
  const BKModule M = load_module(load(file), precision);
  const ValidationReport vr = validate(M);
  if (!vr.pass) {
    emit(Json{{"pass", false}, {"validation", to_json(*M.ctx, vr)}});
    std::cerr << "psi: module fails " << vr.first_failure()->name << '\n';
    return kFail;
  }
  emit(to_json(psi(M)));
  return kPass;
}

int run_dieudonne(const std::string& file, std::optional<long long> eta, int precision) {
  const Json j = load(file);
  const DieudonneModule D = has(j, "phi") ? dieudonne_of(load_module(j, precision)) : dieudonne_from_json(j);
  const bool rel = dieudonne_relations(D);
  Json out{{"module", to_json(D)}, {"relations", rel}, {"rank_profile", to_json(rank_profile(D))}};
  out["type"] = to_json(dieudonne_type(D));
  if (eta) out["coordinates"] = to_json(D.ctx->F(), eta_coordinates(D, *eta));
  out["pass"] = rel;
  emit(out);
  return rel ? kPass : kFail;
}

int run_locmodel_check(const std::string& file, bool strong_det, int precision) {
  const LocalModelPair P = load_pair(load(file), precision);
  const auto problems = pair_problems(P);
  Json out{{"problems", problems}};
  bool pass = problems.empty();
  if (pass) {
    out["type"] = to_json(pair_type(P));
    const PairStrongDetReport sd = pair_strong_det(P);
    out["strong_det"] = to_json(sd);
    const bool kdims = pair_kottwitz(P, KottwitzMode::dims);
    out["kottwitz"] = Json{{"dims", kdims}, {"symbolic", pair_kottwitz(P, KottwitzMode::symbolic)}};
    if (kdims && P.rank == 2) out["wedge_zero"] = wedge_zero(P);
    if (strong_det) pass = sd.pass;
  }
  out["pass"] = pass;
  emit(out);
  return pass ? kPass : kFail;
}

int run_locmodel_convert(const std::string& file, const std::string& target, std::optional<long long> eta,
                         bool second_lift, int precision) {
  const Json j = load(file);
  auto need_eta = [&] {
    if (!eta) throw UsageError("--eta is required for target " + target);
    return *eta;
  };
  if (target == "pair") {
    if (has(j, "block")) {
      emit(to_json(cuspidal_from_iwahori(cuspidal_iwahori_from_json(j))));
    } else if (has(j, "l1plus")) {
      emit(to_json(from_iwahori(iwahori_from_json(j))));
    } else if (has(j, "lplus") && has(j, "eta") && !has(j, "gamma")) {
      auto [H, e] = hyperspecial_from_json(j);
      emit(to_json(from_hyperspecial(H, e)));
    } else {
      emit(to_json(load_pair(j, precision)));
    }
    return kPass;
  }
  const LocalModelPair P = load_pair(j, precision);
  const auto problems = pair_problems(P);
  if (!problems.empty()) {
    emit(Json{{"pass", false}, {"problems", problems}});
    return kFail;
  }
  if (target == "hyp") {
    const long long e = need_eta();
    emit(to_json(to_hyperspecial(P, e), mod_norm(e, P.ctx->eK)));
  } else if (target == "iw") {
    emit(to_json(to_iwahori(P, need_eta())));
  } else if (target == "cusp-iw") {
    emit(to_json(cuspidal_to_iwahori(P, eta, second_lift)));
  } else {
    throw UsageError("unknown target " + target);
  }
  return kPass;
}

int run_enumerate(const GridArgs& ga, bool rank_one, bool count_only) {
  Json modules = Json::array();
  EnumerationStats stats;
  auto sink = [&](const BKModule& M) {
    if (!count_only) modules.push_back(to_json(M));
  };
  if (rank_one) {
    stats = enumerate_rank_one(load_context(ga.ctx), ga.height, sink);
  } else {
    stats = enumerate(ga.build(), sink);
  }
  Json out{{"stats", stats_json(stats)}};
  if (!count_only) out["modules"] = modules;
  emit(out);
  return kPass;
}

struct CensusArgs {
  long long budget = 20000;
  bool no_classify = false;
  bool no_stability = false;
  bool generic = false;
  bool keep_going = false;
  bool representatives = false;
};

int run_census(const GridArgs& ga, const CensusArgs& ca) {
  const EnumerationGrid g = ga.build();
  CensusOptions opt;
  opt.iso_budget = ca.budget;
  opt.classify = !ca.no_classify;
  opt.precision_stability = !ca.no_stability;
  opt.generic_kottwitz = ca.generic;
  opt.abort_on_failure = !ca.keep_going;
  const CensusReport rep = census(g, opt);
  emit(census_to_json(g, rep, ca.representatives));
  if (rep.failure) std::cerr << "census failed: " << rep.failure->property << ": " << rep.failure->detail << '\n';
  return rep.pass() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Breuil-Kisin module laboratory", "bk-lab"};
  app.require_subcommand(1);

  CheckArgs ca;
  auto* check = app.add_subcommand("check", "validate a module and report type and strong determinant");
  check->add_option("file", ca.file, "module JSON, or - for stdin")->required();
  check->add_option("--height", ca.height);
  check->add_option("--precision", ca.precision, "resize to this precision first");
  check->add_flag("--strong-det", ca.strong_det);
  check->add_flag("--properties", ca.properties, "run the census property suite on this module");
  check->add_flag("--generic-kottwitz", ca.generic, "include the generic Kottwitz determinant in --properties");
  check->add_flag("--dieudonne", ca.dieudonne);
  check->add_flag("--psi", ca.psi);

  std::string file;
  int precision = 0;
  std::optional<long long> eta;

  auto* psi_cmd = app.add_subcommand("psi", "local model pair of a module");
  psi_cmd->add_option("file", file)->required();
  psi_cmd->add_option("--precision", precision);

  auto* dieu = app.add_subcommand("dieudonne", "Dieudonne module, rank profile and coordinates");
  dieu->add_option("file", file, "module or Dieudonne module JSON")->required();
  dieu->add_option("--eta", eta, "character exponent for coordinates");
  dieu->add_option("--precision", precision);

  auto* loc = app.add_subcommand("locmodel", "local model pairs");
  loc->require_subcommand(1);
  bool loc_sd = false;
  auto* loc_check = loc->add_subcommand("check", "validate a pair (or the pair of a module)");
  loc_check->add_option("file", file)->required();
  loc_check->add_flag("--strong-det", loc_sd);
  loc_check->add_option("--precision", precision);
  std::string target;
  bool second_lift = false;
  auto* loc_conv = loc->add_subcommand("convert", "convert between local model descriptions");
  loc_conv->add_option("file", file)->required();
  loc_conv->add_option("--target", target)->required()->check(CLI::IsMember({"hyp", "iw", "cusp-iw", "pair"}));
  loc_conv->add_option("--eta", eta);
  loc_conv->add_flag("--second-lift", second_lift);
  loc_conv->add_option("--precision", precision);

  GridArgs ga;
  bool rank_one = false, count_only = false;
  auto* en = app.add_subcommand("enumerate", "stream the valid modules of a grid");
  ga.attach(en);
  en->add_flag("--rank-one", rank_one, "rank-one monomial grid");
  en->add_flag("--count-only", count_only);

  CensusArgs cs;
  auto* cen = app.add_subcommand("census", "run the property suite and classification over a grid");
  ga.attach(cen);
  cen->add_option("--budget", cs.budget, "node budget per isomorphism search");
  cen->add_flag("--no-classify", cs.no_classify);
  cen->add_flag("--no-stability", cs.no_stability);
  cen->add_flag("--generic-kottwitz", cs.generic);
  cen->add_flag("--keep-going", cs.keep_going, "tally failures instead of aborting");
  cen->add_flag("--representatives", cs.representatives, "include class representatives");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kMalformed;
  }

  try {
    if (*check) return run_check(ca);
    if (*psi_cmd) return run_psi(file, precision);
    if (*dieu) return run_dieudonne(file, eta, precision);
    if (*loc_check) return run_locmodel_check(file, loc_sd, precision);
    if (*loc_conv) return run_locmodel_convert(file, target, eta, second_lift, precision);
    if (*en) return run_enumerate(ga, rank_one, count_only);
    if (*cen) return run_census(ga, cs);
  } catch (const InputError& e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return kMalformed;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return kMalformed;
  } catch (const ContextError& e) {
    std::cerr << "bad context: " << e.what() << '\n';
    return kMalformed;
  } catch (const GridError& e) {
    std::cerr << "bad grid: " << e.what() << '\n';
    return kMalformed;
  } catch (const std::exception& e) {
    emit(Json{{"pass", false}, {"error", e.what()}});
    std::cerr << "failed: " << e.what() << '\n';
    return kFail;
  }
  return kMalformed;
}
