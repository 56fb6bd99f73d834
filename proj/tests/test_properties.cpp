#include "support.hpp"

#include <map>
#include <sstream>

using namespace bktest;

namespace {

struct Corpus {
  std::vector<BKModule> modules;
  std::vector<const BKModule*> strong;
};

const Corpus& corpus(const std::string& name) {
  static std::map<std::string, Corpus> cache;
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  EnumerationGrid g = name == "C1"   ? default_grid(context_c1())
                      : name == "C2" ? sampled_grid(context_c2(), 600, 11)
                                     : sampled_grid(context_c3(), 300, 11);
  Corpus& c = cache[name];
  c.modules = enumerate_all(g);
  for (const auto& M : c.modules)
    if (strong_det_check(M).pass) c.strong.push_back(&M);
  return c;
}

// Collects violations and reports the count with the first offender.
struct Tally {
  long long checked = 0, violations = 0;
  std::string first;
  void check(bool ok, const BKModule& M) {
    ++checked;
    if (!ok && violations++ == 0) first = to_json(M).dump();
  }
};

std::ostream& operator<<(std::ostream& os, const Tally& t) {
  return os << t.violations << " of " << t.checked << " violate; first: " << t.first;
}

bool nonscalar(const TameType& t) {
  return t.unmixed() && t.tau.front().size() == 2 && t.tau.front()[0] != t.tau.front()[1];
}

class Grid : public ::testing::TestWithParam<std::string> {
 protected:
  const Corpus& C() const { return corpus(GetParam()); }
};

}  // namespace

TEST_P(Grid, CorpusIsNonTrivial) {
  EXPECT_GE(C().modules.size(), 300u);
  EXPECT_GE(C().strong.size(), 100u);
}

TEST_P(Grid, EnumeratedModulesValidate) {
  Tally t;
  for (const auto& M : C().modules) t.check(validate(M).pass, M);
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, StrongDetTypesAreUnmixed) {
  Tally t;
  for (const auto* M : C().strong) t.check(type_of(*M).unmixed(), *M);
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, DeterminantValuationIsHeightTimesRamification) {
  Tally t;
  for (const auto* M : C().strong) {
    const Field& F = M->ctx->F();
    bool ok = true;
    for (const auto& phi : M->phi) {
      const auto dv = divisors_2x2(F, phi);
      ok = ok && dv[0] + dv[1] == M->ctx->e_prime;
    }
    t.check(ok, *M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, FrobeniusAndVerschiebungComposeToZero) {
  Tally t;
  for (const auto& M : C().modules) t.check(dieudonne_relations(dieudonne_of(M)), M);
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, EtaCoordinateProductVanishes) {
  Tally t;
  for (const auto& M : C().modules) {
    const TameType ty = type_of(M);
    if (!nonscalar(ty)) continue;
    const auto& ctx = *M.ctx;
    const long long a = ty.tau.front()[0], b = ty.tau.front()[1];
    if (ctx.flavor == Flavor::cuspidal && mod_norm(a * ipow(ctx.p, ctx.f), ctx.eK) != b) continue;
    const DieudonneModule D = dieudonne_of(M);
    bool ok = true;
    for (long long eta : {a, b}) {
      const auto co = eta_coordinates(D, eta);
      for (std::size_t j = 0; j < co.X.size(); ++j) ok = ok && ctx.F().mul(co.X[j], co.Y[j]) == 0;
    }
    t.check(ok, M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, EtaCoordinatesNondegenerateOnStrongDet) {
  Tally t;
  for (const auto* M : C().strong) {
    const TameType ty = type_of(*M);
    if (!nonscalar(ty)) continue;
    const auto& ctx = *M->ctx;
    const long long a = ty.tau.front()[0], b = ty.tau.front()[1];
    if (ctx.flavor == Flavor::cuspidal && mod_norm(a * ipow(ctx.p, ctx.f), ctx.eK) != b) continue;
    const DieudonneModule D = dieudonne_of(*M);
    bool ok = true;
    for (long long eta : {a, b}) {
      const auto co = eta_coordinates(D, eta);
      for (std::size_t j = 0; j < co.X.size(); ++j) ok = ok && (co.X[j] || co.Y[j]);
    }
    t.check(ok, *M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, FrobeniusAndVerschiebungRanksSumToRankOnStrongDet) {
  Tally t;
  for (const auto* M : C().strong) {
    const RankProfile rp = rank_profile(dieudonne_of(*M));
    bool ok = true;
    for (std::size_t j = 0; j < rp.f_ranks.size(); ++j) ok = ok && rp.f_ranks[j] + rp.v_ranks[j] == M->rank;
    t.check(ok, *M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, KottwitzModesAgree) {
  Tally t;
  for (const auto& M : C().modules) {
    const LocalModelPair P = psi(M);
    t.check(pair_kottwitz(P, KottwitzMode::dims) == pair_kottwitz(P, KottwitzMode::symbolic), M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, GenericKottwitzAgreesOnSample) {
  Tally t;
  const auto& mods = C().modules;
  const std::size_t step = GetParam() == "C1" ? 1 : 10;
  for (std::size_t i = 0; i < mods.size(); i += step) {
    const LocalModelPair P = psi(mods[i]);
    t.check(pair_kottwitz(P, KottwitzMode::generic) == pair_kottwitz(P, KottwitzMode::symbolic), mods[i]);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, StrongDetPairsAreKottwitzWithVanishingWedge) {
  Tally t;
  for (const auto* M : C().strong) {
    const LocalModelPair P = psi(*M);
    t.check(pair_kottwitz(P, KottwitzMode::dims) && wedge_zero(P), *M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, PairInvariantsMatchModule) {
  Tally t;
  for (const auto& M : C().modules) {
    const LocalModelPair P = psi(M);
    t.check(pair_problems(P).empty() && pair_type(P) == type_of(M) &&
                pair_strong_det(P).pass == strong_det_check(M).pass && dieudonne_consistency(M),
            M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, StrongDetEqualsEtaPartsPlusConditionTwo) {
  Tally t;
  for (const auto& M : C().modules) {
    const TameType ty = type_of(M);
    if (!nonscalar(ty)) continue;
    const long long a = ty.tau.front()[0], b = ty.tau.front()[1];
    const LocalModelPair P = psi(M);
    const auto sd = pair_strong_det(P);
    bool parts = true;
    for (const auto& dims : sd.dims) parts = parts && dims[a] == M.ctx->e && dims[b] == M.ctx->e;
    t.check(sd.pass == (parts && condition_two(P, a, b)), M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, LocalModelConversionsPreserveStrongDet) {
  Tally t;
  for (const auto& M : C().modules) {
    const TameType ty = type_of(M);
    const auto& ctx = *M.ctx;
    const LocalModelPair P = psi(M);
    const bool bt = pair_strong_det(P).pass;
    bool ok = true;
    if (ctx.flavor == Flavor::principal_series && nonscalar(ty)) {
      for (long long eta : ty.tau.front()) {
        const IwahoriDatum I = to_iwahori(P, eta);
        ok = ok && iwahori_bt(I) == bt;
        if (bt)
          ok = ok && iwahori_roundtrip_from_to(P, eta) && iwahori_roundtrip_to_from(I) &&
               to_iwahori(from_iwahori(I), eta) == I;
      }
    } else if (ctx.flavor == Flavor::principal_series && ty.scalar()) {
      const long long eta = ty.tau.front()[0];
      const HyperspecialPair H = to_hyperspecial(P, eta);
      ok = hyperspecial_bt(H) == bt;
      if (bt) ok = ok && hyperspecial_roundtrip_from_to(P, eta) && to_hyperspecial(from_hyperspecial(H, eta), eta) == H;
    } else if (ctx.flavor == Flavor::cuspidal && nonscalar(ty)) {
      const long long a = ty.tau.front()[0], b = ty.tau.front()[1];
      if (mod_norm(a * ipow(ctx.p, ctx.f), ctx.eK) != b) continue;
      for (long long eta : {a, b})
        for (bool second : {false, true}) {
          const CuspidalIwahori CI = cuspidal_to_iwahori(P, eta, second);
          ok = ok && iwahori_bt(CI.block) == bt;
          if (bt) ok = ok && cuspidal_to_iwahori(cuspidal_from_iwahori(CI), eta, second) == CI;
        }
    } else {
      continue;
    }
    t.check(ok, M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, VerdictsStableAtDoubledPrecision) {
  Tally t;
  for (const auto& M : C().modules) {
    const BKModule M2 = detail::at_precision(M, 2 * M.precision);
    const auto v1 = validate(M), v2 = validate(M2);
    const auto s1 = strong_det_check(M), s2 = strong_det_check(M2);
    t.check(v2.pass && v1.divisors == v2.divisors && type_of(M2) == type_of(M) && s1.pass == s2.pass &&
                s1.dims == s2.dims,
            M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST_P(Grid, InvariantsSurviveRandomChangeOfBasis) {
  std::mt19937_64 rng(2024);
  Tally t;
  const auto& mods = C().modules;
  for (std::size_t i = 0; i < mods.size(); i += 5) {
    const BKModule& M = mods[i];
    const BKModule N = conjugate(M, random_conjugator(*M.ctx, M.rank, M.precision, 3, rng));
    const auto vm = validate(M), vn = validate(N);
    t.check(vn.pass && vn.divisors == vm.divisors && type_of(N) == type_of(M) &&
                strong_det_check(N).pass == strong_det_check(M).pass &&
                rank_profile(dieudonne_of(N)) == rank_profile(dieudonne_of(M)),
            M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

INSTANTIATE_TEST_SUITE_P(Contexts, Grid, ::testing::Values("C1", "C2", "C3"),
                         [](const auto& info) { return info.param; });

TEST(C1Grid, StrongDetEigenDimsMatchBruteForce) {
  Tally t;
  for (const auto& M : corpus("C1").modules) t.check(strong_det_check(M).dims[0] == brute_eigen_dims(M, 0), M);
  EXPECT_EQ(t.violations, 0) << t;
}

TEST(C1Grid, InflationToCuspidalRefinementPreservesInvariants) {
  const auto c3 = context_c3();
  Tally t;
  for (const auto& M : corpus("C1").modules) {
    const BKModule I = inflate(M, c3);
    t.check(validate(I).pass && type_of(I) == inflate_type(type_of(M), *M.ctx, *c3) &&
                strong_det_check(I).pass == strong_det_check(M).pass && descend(I, M.ctx).ctx == M.ctx,
            M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}

TEST(C1Grid, BaseChangeToF9PreservesInvariants) {
  const auto f9 = context_c2()->field;
  Tally t;
  for (const auto& M : corpus("C1").modules) {
    const BKModule B = base_change(M, f9);
    t.check(validate(B).pass && type_of(B) == type_of(M) && strong_det_check(B).pass == strong_det_check(M).pass &&
                rank_profile(dieudonne_of(B)) == rank_profile(dieudonne_of(M)),
            M);
  }
  EXPECT_EQ(t.violations, 0) << t;
}
