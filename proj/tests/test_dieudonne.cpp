#include "support.hpp"

using namespace bktest;

namespace {

bool coordinates_defined(const BKModule& M, long long& eta) {
  const TameType t = type_of(M);
  if (!t.unmixed() || t.scalar()) return false;
  const auto& ctx = *M.ctx;
  const long long a = t.tau.front()[0], b = t.tau.front()[1];
  if (ctx.flavor != Flavor::cuspidal) {
    eta = a;
    return true;
  }
  for (long long x : {a, b}) {
    const long long y = x == a ? b : a;
    if (mod_norm(x * ipow(ctx.p, ctx.f), ctx.eK) == y) {
      eta = x;
      return true;
    }
  }
  return false;
}

const std::vector<BKModule>& c3_sample() {
  static const std::vector<BKModule> mods = enumerate_all(sampled_grid(context_c3(), 400, 5));
  return mods;
}

}  // namespace

TEST(DieudonneOf, MStar) {
  const BKModule M = mstar();
  const Field& F = M.ctx->F();
  const DieudonneModule D = dieudonne_of(M);
  EXPECT_EQ(D.F[0], diag2(1, 0));
  // X = diag(u^2, 1) solves diag(1, u^2) X = u^2, so V = cbar^{-1} diag(0, 1).
  EXPECT_EQ(D.V[0], diag2(0, F.inv(M.ctx->cbar)));
  EXPECT_EQ(D.V[0], diag2(0, 2));
  EXPECT_TRUE(dieudonne_relations(D));
}

TEST(DieudonneOf, MultiplicationAndEtaleModules) {
  auto ctx = context_c1();
  const Field& F = ctx->F();
  const Fe m1 = F.neg(1);
  BKModule mult = c1_module(smat_diag_monomial({2, 2}, 6), diag2(1, m1));
  DieudonneModule D = dieudonne_of(mult);
  EXPECT_TRUE(D.F[0].is_zero());
  EXPECT_EQ(D.V[0], fmat_scale(F, F.inv(mult.ctx->cbar), identity_fmat(2)));
  BKModule et = c1_module(smat_identity(2, 6), diag2(1, m1));
  D = dieudonne_of(et);
  EXPECT_EQ(D.F[0], identity_fmat(2));
  EXPECT_TRUE(D.V[0].is_zero());
}

TEST(DieudonneOf, CbarOnlyScalesV) {
  auto ctx = build_context(3, 1, 1, Flavor::principal_series, FieldSpec{1, std::nullopt}, std::nullopt, Fe{1});
  BKModule M = mstar();
  BKModule M2{ctx, 2, M.precision, M.phi, M.gamma, std::nullopt};
  DieudonneModule D1 = dieudonne_of(M), D2 = dieudonne_of(M2);
  EXPECT_EQ(D1.F, D2.F);
  EXPECT_EQ(D2.V[0], fmat_scale(ctx->F(), ctx->F().neg(1), D1.V[0]));
}

TEST(EtaCoordinates, MStar) {
  const DieudonneModule D = dieudonne_of(mstar());
  auto c0 = eta_coordinates(D, 0);
  EXPECT_EQ(c0.X, (std::vector<Fe>{1}));
  EXPECT_EQ(c0.Y, (std::vector<Fe>{0}));
  auto c1 = eta_coordinates(D, 1);
  EXPECT_EQ(c1.X, (std::vector<Fe>{0}));
  EXPECT_EQ(c1.Y, (std::vector<Fe>{2}));
  EXPECT_FALSE(c1.alpha);
}

TEST(EtaCoordinates, Errors) {
  DieudonneModule scalar = dieudonne_of(c1_module(smat_diag_monomial({0, 2}, 6), identity_fmat(2)));
  EXPECT_THROW(eta_coordinates(scalar, 0), BKError);
  DieudonneModule mixed = dieudonne_of(rank_one(context_c2(), {5, 1}, {3, 0}));
  EXPECT_THROW(eta_coordinates(mixed, 3), BKError);
  auto c2 = context_c2();
  BKModule two = enumerate_all(sampled_grid(c2, 50, 1)).front();
  long long eta = 0;
  ASSERT_TRUE(coordinates_defined(two, eta));
  const auto tau = type_of(two).tau.front();
  for (long long x = 0; x < c2->eK; ++x) {
    if (x == tau[0] || x == tau[1]) continue;
    EXPECT_THROW(eta_coordinates(dieudonne_of(two), x), BKError);
  }
}

TEST(EtaCoordinates, CuspidalAlpha) {
  int indeterminate = 0, determined = 0;
  for (const auto& M : c3_sample()) {
    long long eta = 0;
    if (!coordinates_defined(M, eta)) continue;
    const DieudonneModule D = dieudonne_of(M);
    const auto co = eta_coordinates(D, eta);
    EXPECT_TRUE(co.cuspidal);
    bool all_zero = true;
    for (std::size_t j = 0; j < D.F.size(); ++j) all_zero = all_zero && D.F[j].is_zero() && D.V[j].is_zero();
    if (all_zero) {
      EXPECT_FALSE(co.alpha);
      ++indeterminate;
    }
    if (co.alpha) {
      EXPECT_NE(*co.alpha, 0u);
    }
    if (co.X[0] != 0 && co.alpha) ++determined;
  }
  EXPECT_GT(indeterminate, 0);
  EXPECT_GT(determined, 0);
}

TEST(DieudonneRelations, HoldOnGrids) {
  auto check = [](const std::vector<BKModule>& mods) {
    for (const auto& M : mods) {
      const DieudonneModule D = dieudonne_of(M);
      ASSERT_TRUE(dieudonne_relations(D));
      long long eta = 0;
      if (!coordinates_defined(M, eta)) continue;
      const Field& F = M.ctx->F();
      const auto co = eta_coordinates(D, eta);
      for (std::size_t j = 0; j < co.X.size(); ++j) ASSERT_EQ(F.mul(co.X[j], co.Y[j]), 0u);
    }
  };
  check(enumerate_all(default_grid(context_c1())));
  check(enumerate_all(sampled_grid(context_c2(), 300, 3)));
  check(c3_sample());
}

TEST(DieudonneRelations, GaloisActionCommutes) {
  for (const auto& M : enumerate_all(default_grid(context_c1()))) {
    const DieudonneModule D = dieudonne_of(M);
    const Field& F = M.ctx->F();
    const int fp = M.ctx->f_prime;
    for (int j = 0; j < fp; ++j) {
      const int nxt = (j + 1) % fp;
      ASSERT_EQ(fmat_mul(F, D.G[nxt], D.F[j]), fmat_mul(F, D.F[j], D.G[j]));
      ASSERT_EQ(fmat_mul(F, D.G[j], D.V[j]), fmat_mul(F, D.V[j], D.G[nxt]));
    }
  }
}

TEST(DieudonneConsistency, Examples) {
  EXPECT_TRUE(dieudonne_consistency(mstar()));
  LocalModelPair P = psi(mstar());
  for (auto& L : P.lplus) L = FMat(0, L.cols);
  EXPECT_FALSE(dieudonne_consistency(dieudonne_of(mstar()), P));
  for (const auto& M : enumerate_all(sampled_grid(context_c2(), 100, 9))) ASSERT_TRUE(dieudonne_consistency(M));
}

TEST(TorusAction, ConjugateModulesAreTorusEquivalent) {
  std::mt19937_64 rng(31);
  int tested = 0;
  auto mods = enumerate_all(default_grid(context_c1()));
  for (std::size_t k = 0; k < mods.size() && tested < 40; k += 7) {
    const BKModule& M = mods[k];
    long long eta = 0;
    if (!coordinates_defined(M, eta)) continue;
    const BKModule C = conjugate(M, random_conjugator(*M.ctx, 2, M.precision, 3, rng));
    auto r = is_isomorphic(M, C, 20000);
    ASSERT_EQ(r.verdict, IsoVerdict::iso);
    EXPECT_TRUE(torus_equivalent(dieudonne_of(M), dieudonne_of(C), eta));
    ++tested;
  }
  EXPECT_GT(tested, 10);
}

TEST(DieudonneJson, Roundtrip) {
  for (const auto& M : {mstar(), c3_sample().front()}) {
    const DieudonneModule D = dieudonne_of(M);
    const DieudonneModule B = dieudonne_from_json(parse_json_text(to_json(D).dump()));
    EXPECT_EQ(B.F, D.F);
    EXPECT_EQ(B.V, D.V);
    EXPECT_EQ(B.G, D.G);
    EXPECT_EQ(B.C, D.C);
  }
}

// Strong-determinant modules on which F and V both vanish mod u.
TEST(RankProfile, VanishingFrobeniusAndVerschiebungExamples) {
  const Field& F = context_c1()->F();
  SeriesMatrix u_2u(2, 2, 6);
  u_2u.at(0, 0)[1] = 1;
  u_2u.at(1, 1)[1] = 2;
  SeriesMatrix u_u(2, 2, 6);
  u_u.at(0, 1)[1] = 1;
  u_u.at(1, 0)[1] = 1;
  for (const BKModule& M : {c1_module(u_2u, antidiag2(1, 1)), c1_module(u_u, diag2(1, F.neg(1)))}) {
    ASSERT_TRUE(validate(M).pass);
    EXPECT_TRUE(strong_det_check(M).pass);
    EXPECT_EQ(type_of(M).tau, (std::vector<std::vector<long long>>{{0, 1}}));
    const DieudonneModule D = dieudonne_of(M);
    EXPECT_EQ(rank_profile(D), (RankProfile{{0}, {0}}));
    for (long long eta : {0, 1}) {
      const auto co = eta_coordinates(D, eta);
      EXPECT_EQ(co.X, (std::vector<Fe>{0}));
      EXPECT_EQ(co.Y, (std::vector<Fe>{0}));
    }
  }
}
