#include "support.hpp"

using namespace bktest;

namespace {

SeriesElement mono(const ArithmeticContext& ctx, int n, std::vector<int> degs) {
  std::vector<Poly> comps;
  for (int d : degs) comps.push_back(d < 0 ? poly_zero(n) : poly_monomial(n, d));
  return series_from(ctx, n, comps);
}

}  // namespace

TEST(Frobenius, Examples) {
  auto c1 = context_c1();
  EXPECT_EQ(frobenius_twist(*c1, mono(*c1, 6, {1})), mono(*c1, 6, {3}));
  auto c2 = context_c2();
  EXPECT_EQ(frobenius_twist(*c2, mono(*c2, 6, {1, -1})), mono(*c2, 6, {-1, 3}));
  for (auto c : {c1, c2, context_c3()}) {
    auto one = series_from(*c, 5, std::vector<Poly>(c->f_prime, poly_const(5, 1)));
    EXPECT_EQ(frobenius_twist(*c, one), one);
  }
}

TEST(Frobenius, TruncatesAtPrecision) {
  auto c1 = context_c1();
  EXPECT_EQ(frobenius_twist(*c1, mono(*c1, 6, {2})), mono(*c1, 6, {-1}));
}

TEST(GammaTwist, Examples) {
  auto c1 = context_c1();
  const Field& F = c1->F();
  auto minus_u = series_from(*c1, 4, {poly_monomial(4, 1, F.neg(1))});
  EXPECT_EQ(gamma_twist(*c1, mono(*c1, 4, {1})), minus_u);
  EXPECT_EQ(gamma_twist(*c1, mono(*c1, 4, {2})), mono(*c1, 4, {2}));
  auto c3 = context_c3();
  EXPECT_EQ(c_twist(*c3, mono(*c3, 4, {0, -1})), mono(*c3, 4, {-1, 0}));
  EXPECT_THROW(c_twist(*c1, mono(*c1, 4, {0})), SeriesError);
}

TEST(TwistProperties, RingHomomorphisms) {
  std::mt19937_64 rng(11);
  for (auto c : {context_c1(), context_c2(), context_c3()}) {
    for (int t = 0; t < 50; ++t) {
      auto x = random_element(*c, 7, rng), y = random_element(*c, 7, rng);
      auto sum = series_add(*c, x, y), prod = series_mul(*c, x, y);
      EXPECT_EQ(frobenius_twist(*c, prod), series_mul(*c, frobenius_twist(*c, x), frobenius_twist(*c, y)));
      EXPECT_EQ(frobenius_twist(*c, sum), series_add(*c, frobenius_twist(*c, x), frobenius_twist(*c, y)));
      EXPECT_EQ(gamma_twist(*c, prod), series_mul(*c, gamma_twist(*c, x), gamma_twist(*c, y)));
      EXPECT_EQ(gamma_twist(*c, sum), series_add(*c, gamma_twist(*c, x), gamma_twist(*c, y)));
      if (c->flavor == Flavor::cuspidal) {
        EXPECT_EQ(c_twist(*c, prod), series_mul(*c, c_twist(*c, x), c_twist(*c, y)));
        EXPECT_EQ(c_twist(*c, sum), series_add(*c, c_twist(*c, x), c_twist(*c, y)));
      }
    }
  }
}

TEST(TwistProperties, GaloisRelations) {
  std::mt19937_64 rng(12);
  for (auto c : {context_c1(), context_c2(), context_c3()}) {
    for (int t = 0; t < 20; ++t) {
      auto x = random_element(*c, 9, rng);
      auto y = x;
      for (long long k = 0; k < c->eK; ++k) y = gamma_twist(*c, y);
      EXPECT_EQ(y, x);
      if (c->flavor != Flavor::cuspidal) continue;
      EXPECT_EQ(c_twist(*c, c_twist(*c, x)), x);
      auto lhs = c_twist(*c, gamma_twist(*c, c_twist(*c, x)));
      auto rhs = x;
      for (long long k = 0; k < ipow(c->p, c->f); ++k) rhs = gamma_twist(*c, rhs);
      EXPECT_EQ(lhs, rhs);
    }
  }
}

TEST(SeriesRing, AssociativeCommutativeAndUnits) {
  std::mt19937_64 rng(13);
  auto c = context_c2();
  for (int t = 0; t < 50; ++t) {
    auto x = random_element(*c, 6, rng), y = random_element(*c, 6, rng), z = random_element(*c, 6, rng);
    EXPECT_EQ(series_mul(*c, x, y), series_mul(*c, y, x));
    EXPECT_EQ(series_mul(*c, series_mul(*c, x, y), z), series_mul(*c, x, series_mul(*c, y, z)));
    bool constants = true;
    for (const auto& comp : x.components) constants = constants && comp[0] != 0;
    EXPECT_EQ(series_is_unit(x), constants);
    if (constants) {
      std::vector<Poly> inv;
      for (const auto& comp : x.components) inv.push_back(poly_unit_inverse(c->F(), comp));
      auto one = series_mul(*c, x, SeriesElement{6, inv});
      EXPECT_EQ(one, series_from(*c, 6, std::vector<Poly>(2, poly_const(6, 1))));
    }
  }
}

TEST(ElementaryDivisors, Examples) {
  auto c1 = context_c1();
  const Field& F = c1->F();
  auto d1 = elementary_divisors(F, smat_diag_monomial({0, 2}, 4));
  ASSERT_TRUE(d1);
  EXPECT_EQ(*d1, (std::vector<int>{0, 2}));
  SeriesMatrix m(2, 2, 4);
  m.at(0, 0)[1] = 1;
  m.at(0, 1)[0] = 1;
  m.at(1, 1)[1] = 1;
  auto d2 = elementary_divisors(F, m);
  ASSERT_TRUE(d2);
  EXPECT_EQ(*d2, divisors_2x2(F, m));
  EXPECT_EQ(*d2, (std::vector<int>{0, 2}));
  EXPECT_FALSE(elementary_divisors(F, SeriesMatrix(2, 2, 4)));
}

TEST(ElementaryDivisors, MatchBruteForceAndDeterminant) {
  std::mt19937_64 rng(14);
  for (auto c : {context_c1(), context_c2()}) {
    const Field& F = c->F();
    std::uniform_int_distribution<Fe> coeff(0, F.order() - 1);
    std::uniform_int_distribution<int> deg(0, 3);
    for (int t = 0; t < 300; ++t) {
      SeriesMatrix m(2, 2, 8);
      for (auto& e : m.entries) {
        int v = deg(rng);
        for (int k = v; k < 8; ++k) e[k] = coeff(rng);
      }
      auto d = elementary_divisors(F, m);
      Poly det = smat_det(F, m);
      if (poly_is_zero(det)) {
        EXPECT_FALSE(d);
        continue;
      }
      ASSERT_TRUE(d);
      EXPECT_EQ(*d, divisors_2x2(F, m));
      EXPECT_EQ((*d)[0] + (*d)[1], naive_val(det));
    }
  }
}

TEST(SeriesJson, Roundtrip) {
  std::mt19937_64 rng(15);
  auto c = context_c2();
  auto x = random_element(*c, 5, rng);
  Json j = to_json(*c, x);
  EXPECT_EQ(series_element_from_json(*c, j, "", 5), x);
}
