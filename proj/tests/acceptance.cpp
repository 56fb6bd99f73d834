// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
#include <bklab/bklab.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace bklab;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr long long kSampled = 1000;
constexpr long long kIsoBudget = 20000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Grid {
  std::string name;
  std::vector<BKModule> modules;
  std::vector<bool> strong;
};

struct Counter {
  long long checked = 0, violations = 0;
  std::string first;
  void check(bool ok, const std::string& where) {
    ++checked;
    if (!ok && violations++ == 0) first = where;
  }
  std::string summary() const {
    std::string s = std::to_string(violations) + " violations / " + std::to_string(checked) + " checks";
    if (violations) s += " (first: " + first + ")";
    return s;
  }
};

int failures = 0;

void report(int n, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %d %-28s %s  %s\n", n, name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string timing(double s, double limit) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f s (limit %.0f s)", s, limit);
  return buf;
}

std::string where(const Grid& g, std::size_t i) { return g.name + "#" + std::to_string(i); }

bool nonscalar(const TameType& t) {
  return t.unmixed() && t.tau.front().size() == 2 && t.tau.front()[0] != t.tau.front()[1];
}

// eta-coordinates exist for non-scalar types, and in the cuspidal case only for eta' = eta^{p^f}.
bool coordinates_defined(const ArithmeticContext& ctx, const TameType& t) {
  if (!nonscalar(t)) return false;
  const long long a = t.tau.front()[0], b = t.tau.front()[1];
  return ctx.flavor != Flavor::cuspidal || mod_norm(a * ipow(ctx.p, ctx.f), ctx.eK) == b;
}

Grid build(const std::string& name, const EnumerationGrid& g) {
  Grid out{name, enumerate_all(g), {}};
  for (const auto& M : out.modules) out.strong.push_back(strong_det_check(M).pass);
  return out;
}

BKModule rank_one(const ContextPtr& ctx, const std::vector<int>& r, const std::vector<long long>& c) {
  const int n = default_precision(*ctx);
  BKModule M{ctx, 1, n, {}, {}, std::nullopt};
  for (int i = 0; i < ctx->f_prime; ++i) {
    SeriesMatrix phi(1, 1, n), gam(1, 1, n);
    phi.at(0, 0)[r[i]] = 1;
    gam.at(0, 0)[0] = ctx->zeta_power(c[i]);
    M.phi.push_back(phi);
    M.gamma.push_back(gam);
  }
  return M;
}

// g_i phi'_i = phi_i g_{i-1}(u^p), g_i gamma'_i = gamma_i g_i(zeta_i u), g_{i+f} c'_i = c_i g_i.
bool witness_identity(const BKModule& A, const BKModule& B, const std::vector<SeriesMatrix>& g) {
  const auto& ctx = *A.ctx;
  const Field& F = ctx.F();
  const int fp = ctx.f_prime;
  if (static_cast<int>(g.size()) != fp) return false;
  for (int i = 0; i < fp; ++i) {
    const int prev = (i - 1 + fp) % fp;
    if (!smat_is_unit(F, g[i])) return false;
    if (!(smat_mul(F, g[i], B.phi[i]) == smat_mul(F, A.phi[i], smat_subst_power(g[prev], ctx.p)))) return false;
    if (!(smat_mul(F, g[i], B.gamma[i]) == smat_mul(F, A.gamma[i], smat_twist(F, g[i], ctx.zeta_i(i))))) return false;
    if (A.c) {
      const int j = (i + ctx.f) % fp;
      if (!(smat_mul(F, g[j], (*B.c)[i]) == smat_mul(F, (*A.c)[i], g[i]))) return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  const auto c1 = context_c1(), c2 = context_c2(), c3 = context_c3();

  // 1. Types are unmixed on strong-determinant modules.
  auto t0 = Clock::now();
  std::vector<Grid> grids;
  grids.push_back(build("C1", default_grid(c1)));
  grids.push_back(build("C2", sampled_grid(c2, kSampled, kSeed)));
  grids.push_back(build("C3", sampled_grid(c3, kSampled, kSeed)));
  {
    Counter k;
    for (const auto& g : grids)
      for (std::size_t i = 0; i < g.modules.size(); ++i)
        if (g.strong[i]) k.check(type_of(g.modules[i]).unmixed(), where(g, i));
    const double s = seconds_since(t0);
    const bool sizes = grids[0].modules.size() >= 1000 && grids[1].modules.size() >= 1000 && grids[2].modules.size() >= 1000;
    report(1, "types_unmixed", sizes && k.violations == 0 && s < 30,
           "grid sizes " + std::to_string(grids[0].modules.size()) + "/" + std::to_string(grids[1].modules.size()) + "/" +
               std::to_string(grids[2].modules.size()) + ", " + k.summary() + ", " + timing(s, 30));
  }

  // 2. Determinant of Phi_i is u^{e'} times a unit on strong-determinant modules.
  {
    Counter k;
    for (const auto& g : grids)
      for (std::size_t i = 0; i < g.modules.size(); ++i) {
        if (!g.strong[i]) continue;
        const BKModule& M = g.modules[i];
        const Field& F = M.ctx->F();
        const StrongDetReport sd = strong_det_check(M);
        bool ok = true;
        for (std::size_t j = 0; j < M.phi.size(); ++j) {
          const Poly det = smat_det(F, M.phi[j]);
          const long long ep = M.ctx->e_prime;
          ok = ok && poly_val(det) == ep && det[ep] != 0;
          ok = ok && sd.det_valuation[j] == ep && sd.exact_divisibility[j];
        }
        k.check(ok, where(g, i));
      }
    report(2, "valuation_law", k.violations == 0, k.summary());
  }

  // 3. Rank-one C2 search finds both kinds of type; (5,1,zeta^3,1) is mixed.
  {
    t0 = Clock::now();
    long long mixed = 0, unmixed = 0;
    enumerate_rank_one(c2, 1, [&](const BKModule& M) { (type_of(M).unmixed() ? unmixed : mixed)++; });
    const BKModule W = rank_one(c2, {5, 1}, {3, 0});
    const bool valid = validate(W).pass, w_mixed = !type_of(W).unmixed();
    const double s = seconds_since(t0);
    report(3, "mixed_type_witness", mixed >= 1 && unmixed >= 1 && valid && w_mixed && s < 5,
           std::to_string(mixed) + " mixed, " + std::to_string(unmixed) + " unmixed, witness " +
               (valid ? "valid" : "invalid") + " type " + type_of(W).key() + ", " + timing(s, 5));
  }

  // 4. Dieudonne relations, and nondegeneracy of the eta-coordinates on strong-determinant modules.
  {
    Counter rel, prod, nondeg;
    for (const auto& g : grids)
      for (std::size_t i = 0; i < g.modules.size(); ++i) {
        const BKModule& M = g.modules[i];
        const DieudonneModule D = dieudonne_of(M);
        rel.check(dieudonne_relations(D), where(g, i));
        const TameType t = type_of(M);
        if (!coordinates_defined(*M.ctx, t)) continue;
        bool zero = true, nd = true;
        for (long long eta : t.tau.front()) {
          const DieudonneCoordinates co = eta_coordinates(D, eta);
          for (std::size_t j = 0; j < co.X.size(); ++j) {
            zero = zero && M.ctx->F().mul(co.X[j], co.Y[j]) == 0;
            nd = nd && (co.X[j] != 0 || co.Y[j] != 0);
          }
        }
        prod.check(zero, where(g, i));
        if (g.strong[i]) nondeg.check(nd, where(g, i));
      }
    report(4, "dieudonne_relations", rel.violations == 0 && prod.violations == 0 && nondeg.violations == 0,
           "FV=VF=0: " + rel.summary() + "; XY=0: " + prod.summary() + "; (X,Y)!=(0,0): " + nondeg.summary());
  }

  // 5. Determinant-condition equivalences on local model pairs.
  {
    Counter modes, implies, wedge, lemma;
    for (const auto& g : grids)
      for (std::size_t i = 0; i < g.modules.size(); ++i) {
        const BKModule& M = g.modules[i];
        const LocalModelPair P = psi(M);
        const bool kd = pair_kottwitz(P, KottwitzMode::dims), ks = pair_kottwitz(P, KottwitzMode::symbolic);
        modes.check(kd == ks, where(g, i));
        if (g.strong[i]) implies.check(kd && ks, where(g, i));
        if (kd && P.rank == 2) wedge.check(wedge_zero(P), where(g, i));
        const TameType t = type_of(M);
        if (nonscalar(t)) {
          const long long a = t.tau.front()[0], b = t.tau.front()[1];
          const PairStrongDetReport psd = pair_strong_det(P);
          bool parts = true;
          for (const auto& dims : psd.dims) parts = parts && dims[a] == M.ctx->e && dims[b] == M.ctx->e;
          const bool via_lemma = parts && condition_two(P, a, b);
          lemma.check(psd.pass == via_lemma && g.strong[i] == via_lemma, where(g, i));
        }
      }
    report(5, "determinant_equivalences",
           modes.violations == 0 && implies.violations == 0 && wedge.violations == 0 && lemma.violations == 0,
           "modes: " + modes.summary() + "; strong=>Kottwitz: " + implies.summary() + "; wedge: " + wedge.summary() +
               "; equivalence: " + lemma.summary());
  }

  // 6. Iwahori and hyperspecial conversions round-trip on the BT pairs of the C1 grid.
  {
    t0 = Clock::now();
    Counter k;
    long long iw = 0, hyp = 0;
    const Grid& g = grids[0];
    for (std::size_t i = 0; i < g.modules.size(); ++i) {
      const BKModule& M = g.modules[i];
      const TameType t = type_of(M);
      const LocalModelPair P = psi(M);
      const bool bt = pair_strong_det(P).pass;
      if (nonscalar(t)) {
        for (long long eta : t.tau.front()) {
          const IwahoriDatum I = to_iwahori(P, eta);
          bool ok = iwahori_bt(I) == bt;
          if (bt) {
            ++iw;
            ok = ok && iwahori_problems(I).empty() && iwahori_roundtrip_from_to(P, eta) &&
                 iwahori_roundtrip_to_from(I) && to_json(to_iwahori(from_iwahori(I), eta)) == to_json(I);
          }
          k.check(ok, where(g, i));
        }
      } else if (t.scalar()) {
        const long long eta = t.tau.front()[0];
        const HyperspecialPair H = to_hyperspecial(P, eta);
        bool ok = hyperspecial_bt(H) == bt;
        if (bt) {
          ++hyp;
          ok = ok && hyperspecial_roundtrip_from_to(P, eta) &&
               to_json(to_hyperspecial(from_hyperspecial(H, eta), eta), eta) == to_json(H, eta);
        }
        k.check(ok, where(g, i));
      }
    }
    const double s = seconds_since(t0);
    report(6, "conversion_roundtrips", k.violations == 0 && iw > 0 && hyp > 0 && s < 30,
           std::to_string(iw) + " Iwahori and " + std::to_string(hyp) + " hyperspecial BT roundtrips, " + k.summary() +
               ", " + timing(s, 30));
  }

  // 7. Inflation to the eK = 8 refinement and descent back.
  {
    Counter k;
    const Grid& g = grids[0];
    for (std::size_t i = 0; i < g.modules.size(); ++i) {
      const BKModule& M = g.modules[i];
      const BKModule I = inflate(M, c3);
      const BKModule back = descend(I, c1);
      const bool sd = g.strong[i];
      k.check(validate(I).pass && back == M && strong_det_check(I).pass == sd && strong_det_check(back).pass == sd &&
                  type_of(I) == inflate_type(type_of(M), *c1, *c3),
              where(g, i));
    }
    report(7, "change_of_extension", k.checked >= 100 && k.violations == 0,
           "eK " + std::to_string(c1->eK) + " -> " + std::to_string(c3->eK) + ", " + k.summary());
  }

  // 8. Isomorphism search soundness and stability.
  {
    t0 = Clock::now();
    std::mt19937_64 rng(kSeed);
    Counter iso;
    for (const auto& g : grids) {
      const std::size_t step = g.modules.size() / 40;
      for (std::size_t i = 0; i < g.modules.size(); i += step) {
        const BKModule& A = g.modules[i];
        const BKModule B = conjugate(A, random_conjugator(*A.ctx, A.rank, A.precision, A.precision, rng));
        const IsoResult r = is_isomorphic(A, B, kIsoBudget);
        iso.check(r.verdict == IsoVerdict::iso && witness_identity(A, B, r.witness), where(g, i));
      }
    }
    Counter non_iso;
    const Grid& g = grids[0];
    std::vector<std::size_t> strong;
    for (std::size_t i = 0; i < g.modules.size(); ++i)
      if (g.strong[i]) strong.push_back(i);
    int doubled = 0;
    for (std::size_t a = 0; a < strong.size() && non_iso.checked < 20; a += 7) {
      const std::size_t b = strong[(a * 13 + 5) % strong.size()];
      const BKModule &A = g.modules[strong[a]], &B = g.modules[b];
      const IsoResult r = is_isomorphic(A, B, kIsoBudget);
      if (r.verdict != IsoVerdict::non_iso || r.invariant == "exhausted_search") continue;
      const IsoResult full = is_isomorphic(A, B, kIsoBudget, 1, 2 * r.degree_bound, true);
      doubled = full.degree_bound;
      non_iso.check(full.verdict == IsoVerdict::non_iso && full.invariant == "exhausted_search",
                    where(g, strong[a]) + " vs " + where(g, b));
    }
    long long unstable = 0, stability_checks = 0, searches = 0;
    bool census_ok = true;
    for (const auto& [ctx, eg] : {std::pair{c1, default_grid(c1)}, std::pair{c2, sampled_grid(c2, kSampled, kSeed)},
                                  std::pair{c3, sampled_grid(c3, kSampled, kSeed)}}) {
      CensusOptions opt;
      opt.abort_on_failure = false;
      const CensusReport rep = census(eg, opt);
      unstable += rep.classes.unstable_verdicts + rep.properties.at("precision_stability").violations;
      stability_checks += rep.properties.at("precision_stability").checked;
      searches += rep.classes.searches;
      census_ok = census_ok && rep.classes.unknown_pairs == 0;
    }
    const double s = seconds_since(t0);
    report(8, "isomorphism_soundness",
           iso.checked >= 100 && iso.violations == 0 && non_iso.checked == 20 && non_iso.violations == 0 &&
               unstable == 0 && census_ok && s < 60,
           "conjugate pairs: " + iso.summary() + "; invariant non-iso rechecked at degree " + std::to_string(doubled) +
               ": " + non_iso.summary() + "; census at 2N: " + std::to_string(unstable) + " changed of " +
               std::to_string(stability_checks) + " module and " + std::to_string(searches) + " search verdicts, " +
               timing(s, 60));
  }

  // 9. Module and local-model invariants agree.
  {
    Counter k;
    for (const auto& g : grids)
      for (std::size_t i = 0; i < g.modules.size(); ++i) {
        const BKModule& M = g.modules[i];
        const LocalModelPair P = psi(M);
        k.check(pair_type(P) == type_of(M) && dieudonne_consistency(M) && pair_strong_det(P).pass == g.strong[i],
                where(g, i));
      }
    report(9, "cross_module_consistency", k.violations == 0, k.summary());
  }

  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
