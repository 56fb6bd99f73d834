#include "support.hpp"

using namespace bktest;

TEST(Context, C1Invariants) {
  auto c = context_c1();
  EXPECT_EQ(c->eK, 2);
  EXPECT_EQ(c->f_prime, 1);
  EXPECT_EQ(c->e_prime, 2);
  EXPECT_EQ(c->zeta, c->F().neg(1));
  EXPECT_EQ(c->cbar, c->F().neg(1));
}

TEST(Context, C2AndC3Invariants) {
  auto c2 = context_c2();
  EXPECT_EQ(c2->eK, 8);
  EXPECT_EQ(c2->f_prime, 2);
  EXPECT_EQ(c2->e_prime, 8);
  auto c3 = context_c3();
  EXPECT_EQ(c3->eK, 8);
  EXPECT_EQ(c3->f_prime, 2);
  EXPECT_EQ(c3->e_prime, 8);
  EXPECT_EQ(c3->flavor, Flavor::cuspidal);
}

TEST(Context, ZetaHasExactOrder) {
  for (auto c : {context_c1(), context_c2(), context_c3()}) {
    const Field& F = c->F();
    EXPECT_EQ(F.pow(c->zeta, c->eK), 1u);
    for (long long m = 1; m < c->eK; ++m) EXPECT_NE(F.pow(c->zeta, m), 1u) << m;
  }
}

TEST(Context, Errors) {
  EXPECT_THROW(build_context(4, 1, 1, Flavor::principal_series, 1), ContextError);
  EXPECT_THROW(build_context(3, 2, 1, Flavor::principal_series, 1), ContextError);
  EXPECT_THROW(build_context(3, 1, 1, Flavor::cuspidal, 1), ContextError);
  EXPECT_THROW(build_context(3, 2, 1, Flavor::principal_series, FieldSpec{2, std::nullopt}, Fe{1}), ContextError);
  EXPECT_THROW(build_context(3, 1, 1, Flavor::principal_series, FieldSpec{1, std::nullopt}, std::nullopt, Fe{0}),
               ContextError);
}

TEST(Context, Deterministic) {
  EXPECT_TRUE(context_c2()->same_as(*context_c2()));
  EXPECT_EQ(to_json(*context_c2()).dump(), to_json(*context_c2()).dump());
}

TEST(Chi, Examples) {
  EXPECT_EQ(chi(*context_c1(), 0), 1);
  EXPECT_EQ(chi(*context_c2(), 1), 3);
  EXPECT_EQ(chi(*context_c2(), 2), 1);
  EXPECT_THROW(chi(*context_c2(), -1), ContextError);
}

TEST(Chi, FrobeniusCompatibility) {
  // chi_{i+1}^p = chi_i, checked on the generator by field powers.
  for (auto c : {context_c1(), context_c2(), context_c3()}) {
    const Field& F = c->F();
    for (int i = 0; i < c->f_prime; ++i) {
      Fe next = F.pow(c->zeta, chi(*c, i + 1));
      EXPECT_EQ(F.pow(next, c->p), F.pow(c->zeta, chi(*c, i))) << i;
    }
  }
}

TEST(AbExponents, Examples) {
  auto ab1 = ab_exponents(*context_c1(), 0, 1);
  ASSERT_EQ(ab1.size(), 1u);
  EXPECT_EQ(ab1[0], std::make_pair(1LL, 1LL));
  auto ab2 = ab_exponents(*context_c2(), 0, 2);
  ASSERT_EQ(ab2.size(), 2u);
  EXPECT_EQ(ab2[0], std::make_pair(2LL, 6LL));
  EXPECT_EQ(ab2[1], std::make_pair(6LL, 2LL));
  EXPECT_THROW(ab_exponents(*context_c1(), 1, 1), ContextError);
}

TEST(AbExponents, DefiningIdentityOnGenerator) {
  auto c = context_c2();
  const Field& F = c->F();
  for (long long eta = 0; eta < c->eK; ++eta)
    for (long long eta2 = 0; eta2 < c->eK; ++eta2) {
      if (eta == eta2) continue;
      auto ab = ab_exponents(*c, eta, eta2);
      for (int i = 0; i < c->f_prime; ++i) {
        auto [a, b] = ab[i];
        EXPECT_EQ(a + b, c->eK);
        EXPECT_GT(a, 0);
        EXPECT_GT(b, 0);
        Fe lhs = F.div(F.pow(c->zeta, eta2), F.pow(c->zeta, eta));
        EXPECT_EQ(lhs, F.pow(F.pow(c->zeta, chi(*c, i)), a));
      }
    }
}

TEST(ContextJson, Roundtrip) {
  for (auto c : {context_c1(), context_c2(), context_c3()}) {
    Json j = to_json(*c);
    auto back = context_from_json(parse_json_text(j.dump()));
    EXPECT_TRUE(back->same_as(*c));
  }
}

TEST(ContextJson, RejectsInconsistentDerivedFields) {
  Json j = to_json(*context_c2());
  j["eK"] = 4;
  try {
    context_from_json(j);
    FAIL() << "accepted a wrong eK";
  } catch (const InputError& e) {
    EXPECT_EQ(e.pointer, "/eK");
  }
}
