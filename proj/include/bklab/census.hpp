#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bklab/bk.hpp"
#include "bklab/dieudonne.hpp"
#include "bklab/grid.hpp"
#include "bklab/io.hpp"
#include "bklab/iso.hpp"
#include "bklab/locmodel.hpp"

namespace bklab {

struct PropertyVerdict {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct PropertyOptions {
  int height = 1;
  bool generic_kottwitz = false;
  bool precision_stability = true;
};

/// Property names in report order.
inline const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names{
      "types_unmixed",        "valuation_law",          "dieudonne_relations",    "dieudonne_nondegenerate",
      "rank_sum",             "kottwitz_modes",         "kottwitz_generic",       "strong_det_implies_kottwitz",
      "wedge_zero",           "lemma_equivalence",      "iwahori_bt_matches",     "iwahori_roundtrip",
      "hyperspecial_bt_matches", "hyperspecial_roundtrip", "cuspidal_bt_matches", "cuspidal_roundtrip",
      "type_consistency",     "dieudonne_consistency",  "strong_det_consistency", "precision_stability"};
  return names;
}

/// Tallied by the census but not part of its pass/fail suite; both fail when e' > 1 (see README).
inline bool is_tally_only(const std::string& name) {
  return name == "dieudonne_nondegenerate" || name == "rank_sum";
}

namespace detail {

inline BKModule at_precision(const BKModule& M, int n) {
  BKModule out{M.ctx, M.rank, n, {}, {}, std::nullopt};
  for (const auto& m : M.phi) out.phi.push_back(smat_resize(m, n));
  for (const auto& m : M.gamma) out.gamma.push_back(smat_resize(m, n));
  if (M.c) {
    std::vector<SeriesMatrix> c;
    for (const auto& m : *M.c) c.push_back(smat_resize(m, n));
    out.c = c;
  }
  return out;
}

inline std::string describe_type(const TameType& t) { return "type " + t.key(); }

}  // namespace detail

/// Every applicable property of the suite, evaluated on one module.
inline std::vector<PropertyVerdict> module_properties(const BKModule& M, const PropertyOptions& opt = {}) {
  std::vector<PropertyVerdict> out;
  auto add = [&](const std::string& name, bool pass, std::string detail = "") {
    out.push_back(PropertyVerdict{name, pass, pass ? "" : std::move(detail)});
  };
  const auto& ctx = *M.ctx;
  const int h = opt.height;
  ValidationReport vr = validate(M, h);
  if (!vr.pass) {
    add("valid", false, "module fails " + vr.first_failure()->name);
    return out;
  }
  const bool rank2 = M.rank == 2 && h == 1;
  const TameType t = type_of(M);
  const bool nonscalar = t.unmixed() && t.tau.front().size() == 2 && t.tau.front()[0] != t.tau.front()[1];
  const bool scalar = t.scalar();
  std::optional<StrongDetReport> sd;
  if (rank2) sd = strong_det_check(M);
  const bool bt = sd && sd->pass;

  if (bt) {
    add("types_unmixed", t.unmixed(), detail::describe_type(t));
    bool law = true;
    for (std::size_t i = 0; i < sd->det_valuation.size(); ++i)
      law = law && sd->det_valuation[i] == ctx.e_prime * h && sd->exact_divisibility[i];
    add("valuation_law", law, "determinant valuation differs from e'");
  }

  const DieudonneModule D = dieudonne_of(M);
  add("dieudonne_relations", dieudonne_relations(D), "F V or V F is nonzero");
  if (rank2 && nonscalar) {
    const long long a = t.tau.front()[0], b = t.tau.front()[1];
    const bool coords_defined =
        ctx.flavor != Flavor::cuspidal || mod_norm(a * ipow(ctx.p, ctx.f), ctx.eK) == b;
    if (coords_defined) {
      bool zero = true, nondeg = true;
      for (long long eta : {a, b}) {
        DieudonneCoordinates co = eta_coordinates(D, eta);
        for (std::size_t j = 0; j < co.X.size(); ++j) {
          if (ctx.F().mul(co.X[j], co.Y[j])) zero = false;
          if (!co.X[j] && !co.Y[j]) nondeg = false;
        }
      }
      if (!zero) add("dieudonne_relations", false, "X_j Y_j != 0");
      if (bt) add("dieudonne_nondegenerate", nondeg, "(X_j, Y_j) = (0, 0)");
    }
  }
  if (bt) {
    RankProfile rp = rank_profile(D);
    bool ok = true;
    for (std::size_t j = 0; j < rp.f_ranks.size(); ++j) ok = ok && rp.f_ranks[j] + rp.v_ranks[j] == 2;
    add("rank_sum", ok, "rank F_j + rank V_j != 2");
  }

  const LocalModelPair P = psi(M);
  const bool kdims = pair_kottwitz(P, KottwitzMode::dims);
  const bool ksym = pair_kottwitz(P, KottwitzMode::symbolic);
  add("kottwitz_modes", kdims == ksym, "dims mode and symbolic mode disagree");
  if (opt.generic_kottwitz) add("kottwitz_generic", pair_kottwitz(P, KottwitzMode::generic) == ksym, "generic determinant disagrees");
  const PairStrongDetReport psd = pair_strong_det(P);
  if (bt) add("strong_det_implies_kottwitz", kdims, "strong determinant pair is not Kottwitz");
  if (kdims && P.rank == 2) add("wedge_zero", wedge_zero(P), "a 2x2 minor of L+ is nonzero");
  if (nonscalar) {
    const long long a = t.tau.front()[0], b = t.tau.front()[1];
    bool parts = true;
    for (const auto& dims : psd.dims) parts = parts && dims[a] == ctx.e && dims[b] == ctx.e;
    add("lemma_equivalence", psd.pass == (parts && condition_two(P, a, b)),
        "strong determinant differs from eta-part dims plus condition two");
  }

  if (ctx.flavor == Flavor::principal_series && rank2) {
    if (nonscalar) {
      bool bt_match = true, rt = true;
      for (long long eta : t.tau.front()) {
        IwahoriDatum I = to_iwahori(P, eta);
        bt_match = bt_match && iwahori_bt(I) == psd.pass;
        if (psd.pass) {
          rt = rt && iwahori_problems(I).empty() && iwahori_roundtrip_from_to(P, eta) &&
               iwahori_roundtrip_to_from(I) && to_iwahori(from_iwahori(I), eta) == I;
        }
      }
      add("iwahori_bt_matches", bt_match, "iwahori_bt differs from the strong determinant of the pair");
      if (psd.pass) add("iwahori_roundtrip", rt, "Iwahori conversion does not round-trip");
    }
    if (scalar) {
      const long long eta = t.tau.front()[0];
      HyperspecialPair H = to_hyperspecial(P, eta);
      add("hyperspecial_bt_matches", hyperspecial_bt(H) == psd.pass, "hyperspecial_bt differs from the pair");
      if (psd.pass)
        add("hyperspecial_roundtrip",
            hyperspecial_roundtrip_from_to(P, eta) && to_hyperspecial(from_hyperspecial(H, eta), eta) == H,
            "hyperspecial conversion does not round-trip");
    }
  }
  if (ctx.flavor == Flavor::cuspidal && rank2 && nonscalar) {
    const long long a = t.tau.front()[0], b = t.tau.front()[1];
    if (mod_norm(a * ipow(ctx.p, ctx.f), ctx.eK) == b) {
      bool bt_match = true, rt = true;
      for (long long eta : {a, b}) {
        CuspidalIwahori CI = cuspidal_to_iwahori(P, eta);
        bt_match = bt_match && iwahori_bt(CI.block) == psd.pass;
        rt = rt && cuspidal_reassemble(CI) == detail::iwahori_all_components(P, eta).datum;
        if (psd.pass) {
          LocalModelPair Q = cuspidal_from_iwahori(CI);
          rt = rt && pair_problems(Q).empty() && cuspidal_to_iwahori(Q, eta) == CI;
        }
      }
      add("cuspidal_bt_matches", bt_match, "iwahori_bt of the extraction differs from the pair");
      add("cuspidal_roundtrip", rt, "cuspidal extraction does not round-trip");
    }
  }

  add("type_consistency", pair_type(P) == t, "pair_type(psi(M)) != type_of(M)");
  add("dieudonne_consistency", dieudonne_consistency(D, P), "D(M) disagrees with psi(M) mod u");
  if (sd) add("strong_det_consistency", psd.pass == sd->pass, "pair_strong_det(psi(M)) != strong_det_check(M)");

  if (opt.precision_stability) {
    BKModule M2 = detail::at_precision(M, 2 * M.precision);
    ValidationReport v2 = validate(M2, h);
    bool stable = v2.pass && type_of(M2) == t && v2.divisors == vr.divisors;
    if (sd) {
      StrongDetReport s2 = strong_det_check(M2);
      stable = stable && s2.pass == sd->pass && s2.dims == sd->dims;
    }
    add("precision_stability", stable, "verdicts change at doubled precision");
  }
  return out;
}

struct PropertyTally {
  long long checked = 0;
  long long violations = 0;
};

struct CensusOptions {
  long long iso_budget = 20000;
  bool classify = true;
  bool precision_stability = true;
  bool generic_kottwitz = false;
  bool abort_on_failure = true;
};

struct ClassSummary {
  long long classified = 0;  // modules entering the classification (the strong-determinant subset)
  long long representatives = 0;
  long long lower_bound = 0;
  long long upper_bound = 0;
  long long searches = 0;
  long long unknown_pairs = 0;
  long long unstable_verdicts = 0;
  std::map<std::string, long long> class_sizes_by_type;
  std::vector<BKModule> representative_modules;
};

struct CensusFailure {
  std::string property;
  std::string detail;
  BKModule witness;
};

struct CensusReport {
  EnumerationStats stats;
  long long strong_det = 0;
  std::map<std::string, long long> type_tally;
  std::map<std::string, long long> strong_det_type_tally;
  std::map<std::string, long long> dieudonne_profiles;
  std::map<std::string, PropertyTally> properties;
  ClassSummary classes;
  std::optional<CensusFailure> failure;
  bool pass() const { return !failure; }
};

namespace detail {

inline std::string profile_key(const RankProfile& r) {
  return "F" + join_ints(r.f_ranks) + " V" + join_ints(r.v_ranks);
}

struct CensusAborted {};

}  // namespace detail

inline CensusReport census(const EnumerationGrid& grid, const CensusOptions& opt = {}) {
  CensusReport rep;
  PropertyOptions popt{grid.height, opt.generic_kottwitz, opt.precision_stability};
  for (const auto& name : property_names()) rep.properties[name];
  struct Rep {
    BKModule module;
    std::string key;
    bool flagged;
  };
  std::vector<Rep> reps;
  auto classify = [&](const BKModule& M) {
    ++rep.classes.classified;
    const std::string key = iso_invariant_key(M, grid.height);
    bool merged = false, unknown = false;
    for (const auto& r : reps) {
      if (r.key != key) continue;
      IsoResult res = is_isomorphic(r.module, M, opt.iso_budget, grid.height, 0, true);
      ++rep.classes.searches;
      if (opt.precision_stability) {
        const int n2 = 2 * M.precision;
        IsoResult res2 = is_isomorphic(detail::at_precision(r.module, n2), detail::at_precision(M, n2), opt.iso_budget,
                                       grid.height, 0, true);
        if (res2.verdict != res.verdict) {
          ++rep.classes.unstable_verdicts;
          if (!rep.failure)
            rep.failure = CensusFailure{"precision_stability", "an isomorphism verdict changes at doubled precision", M};
          if (opt.abort_on_failure) throw detail::CensusAborted{};
        }
      }
      if (res.verdict == IsoVerdict::iso) {
        merged = true;
        break;
      }
      if (res.verdict == IsoVerdict::unknown) {
        unknown = true;
        ++rep.classes.unknown_pairs;
      }
    }
    if (!merged) {
      reps.push_back(Rep{M, key, unknown});
      ++rep.classes.class_sizes_by_type[type_of(M).key()];
    }
  };
  try {
    enumerate_into(grid, rep.stats, [&](const BKModule& M) {
      const TameType t = type_of(M);
      ++rep.type_tally[t.key()];
      if (M.rank == 2 && grid.height == 1)
        ++rep.dieudonne_profiles[detail::profile_key(rank_profile(dieudonne_of(M)))];
      bool bt = false;
      if (M.rank == 2 && grid.height == 1 && strong_det_check(M).pass) {
        bt = true;
        ++rep.strong_det;
        ++rep.strong_det_type_tally[t.key()];
      }
      for (const auto& v : module_properties(M, popt)) {
        auto& tally = rep.properties[v.name];
        ++tally.checked;
        if (!v.pass) {
          ++tally.violations;
          if (is_tally_only(v.name)) continue;
          if (!rep.failure) rep.failure = CensusFailure{v.name, v.detail, M};
          if (opt.abort_on_failure) throw detail::CensusAborted{};
        }
      }
      if (opt.classify && bt) classify(M);
    });
  } catch (const detail::CensusAborted&) {
  }
  rep.classes.representatives = static_cast<long long>(reps.size());
  rep.classes.upper_bound = rep.classes.representatives;
  for (const auto& r : reps) {
    if (!r.flagged) ++rep.classes.lower_bound;
    rep.classes.representative_modules.push_back(r.module);
  }
  return rep;
}

inline Json to_json(const PropertyVerdict& v) {
  Json j{{"name", v.name}, {"pass", v.pass}};
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

inline Json census_to_json(const EnumerationGrid& grid, const CensusReport& rep, bool include_representatives = false) {
  Json g{{"context", to_json(*grid.ctx)}, {"rank", grid.rank}, {"height", grid.height},
         {"precision", grid.effective_precision()}, {"exponents", Json::array({grid.exp_lo, grid.effective_hi()})},
         {"sampled", grid.sampled}};
  if (grid.sampled) {
    g["seed"] = grid.seed;
    g["samples"] = grid.samples;
  }
  Json phi = Json::array(), desc = Json::array();
  for (auto p : grid.phi_patterns) phi.push_back(to_string(p));
  for (auto p : grid.descent_patterns) desc.push_back(to_string(p));
  g["phi_patterns"] = phi;
  g["descent_patterns"] = desc;
  Json props = Json::object();
  for (const auto& name : property_names()) {
    const auto& t = rep.properties.at(name);
    props[name] = Json{{"checked", t.checked}, {"violations", t.violations}};
    if (is_tally_only(name)) props[name]["tally_only"] = true;
  }
  Json classes{{"classified", rep.classes.classified},
               {"representatives", rep.classes.representatives},
               {"lower_bound", rep.classes.lower_bound},
               {"upper_bound", rep.classes.upper_bound},
               {"searches", rep.classes.searches},
               {"unknown_pairs", rep.classes.unknown_pairs},
               {"unstable_verdicts", rep.classes.unstable_verdicts},
               {"by_type", rep.classes.class_sizes_by_type}};
  if (include_representatives) {
    Json reps = Json::array();
    for (const auto& M : rep.classes.representative_modules) reps.push_back(to_json(M));
    classes["modules"] = reps;
  }
  Json j{{"grid", g},
         {"candidates", rep.stats.candidates},
         {"valid", rep.stats.valid},
         {"discarded", rep.stats.discarded},
         {"strong_det", rep.strong_det},
         {"types", rep.type_tally},
         {"strong_det_types", rep.strong_det_type_tally},
         {"dieudonne_profiles", rep.dieudonne_profiles},
         {"properties", props},
         {"classes", classes},
         {"pass", rep.pass()}};
  if (rep.failure)
    j["failure"] = Json{{"property", rep.failure->property}, {"detail", rep.failure->detail},
                        {"witness", to_json(rep.failure->witness)}};
  return j;
}

}  // namespace bklab
