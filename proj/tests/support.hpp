#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bklab/bklab.hpp"

namespace bktest {

using namespace bklab;

inline std::string fixture(const std::string& name) { return std::string(BKLAB_FIXTURE_DIR) + "/" + name; }

inline FMat diag2(Fe a, Fe b) {
  FMat g(2, 2);
  g(0, 0) = a;
  g(1, 1) = b;
  return g;
}

inline FMat antidiag2(Fe a, Fe b) {
  FMat g(2, 2);
  g(0, 1) = a;
  g(1, 0) = b;
  return g;
}

/// Single-component module from phi and a constant gamma.
inline BKModule c1_module(const SeriesMatrix& phi, const FMat& gamma) {
  auto ctx = context_c1();
  const int n = phi.precision;
  return BKModule{ctx, phi.rows, n, {phi}, {smat_from_constant(gamma, n)}, std::nullopt};
}

inline BKModule mstar() {
  auto ctx = context_c1();
  return c1_module(smat_diag_monomial({0, 2}, 6), diag2(1, ctx->F().neg(1)));
}

inline BKModule rank_one(const ContextPtr& ctx, const std::vector<int>& r, const std::vector<long long>& c) {
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

// ---------------------------------------------------------------------------------------------
// Brute-force oracles. These deliberately avoid the library's linear algebra.

inline int naive_val(const Poly& p) {
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k]) return static_cast<int>(k);
  return -1;
}

inline Poly naive_mul(const Field& F, const Poly& a, const Poly& b) {
  Poly out(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; i + j < a.size(); ++j) out[i + j] = F.add(out[i + j], F.mul(a[i], b[j]));
  return out;
}

/// Elementary divisors of a 2x2 matrix: the minimal entry valuation and val(det) minus it.
inline std::vector<int> divisors_2x2(const Field& F, const SeriesMatrix& m) {
  int lo = -1;
  for (const auto& e : m.entries) {
    int v = naive_val(e);
    if (v >= 0 && (lo < 0 || v < lo)) lo = v;
  }
  Poly det = naive_mul(F, m.at(0, 0), m.at(1, 1));
  Poly off = naive_mul(F, m.at(0, 1), m.at(1, 0));
  for (std::size_t k = 0; k < det.size(); ++k) det[k] = F.sub(det[k], off[k]);
  return {lo, naive_val(det) - lo};
}

/// Vectors of (F[u]/u^k)^d, indexed by coefficient [s][m].
using Vec = std::vector<std::vector<Fe>>;

inline std::vector<Vec> all_vectors(const Field& F, int d, int k) {
  std::vector<Vec> out;
  const int len = d * k;
  std::vector<Fe> digits(len, 0);
  while (true) {
    Vec v(d, std::vector<Fe>(k));
    for (int s = 0; s < d; ++s)
      for (int m = 0; m < k; ++m) v[s][m] = digits[s * k + m];
    out.push_back(v);
    int pos = 0;
    while (pos < len && ++digits[pos] == F.order()) digits[pos++] = 0;
    if (pos == len) break;
  }
  return out;
}

/// Image of a matrix acting on (F[u]/u^k)^d, as a set of vectors.
inline std::set<Vec> image_set(const Field& F, const SeriesMatrix& m, int k) {
  std::set<Vec> out;
  const int d = m.rows;
  for (const auto& w : all_vectors(F, d, k)) {
    Vec v(d, std::vector<Fe>(k, 0));
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        for (int a = 0; a < k; ++a)
          for (int b = 0; a + b < k; ++b) v[r][a + b] = F.add(v[r][a + b], F.mul(m.at(r, c)[a], w[c][b]));
    out.insert(v);
  }
  return out;
}

/// The descent operator x(u) -> Gamma(u) x(z u) on (F[u]/u^k)^d.
inline Vec apply_descent(const Field& F, const SeriesMatrix& G, Fe z, const Vec& x, int k) {
  const int d = G.rows;
  Vec tw = x;
  for (int s = 0; s < d; ++s)
    for (int m = 0; m < k; ++m) tw[s][m] = F.mul(x[s][m], F.pow(z, m));
  Vec v(d, std::vector<Fe>(k, 0));
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < k; ++a)
        for (int b = 0; a + b < k; ++b) v[r][a + b] = F.add(v[r][a + b], F.mul(G.at(r, c)[a], tw[c][b]));
  return v;
}

/// For each character n, log_q of the number of image vectors in the zeta^n-eigenspace.
inline std::vector<int> brute_eigen_dims(const BKModule& M, int i) {
  const auto& ctx = *M.ctx;
  const Field& F = ctx.F();
  const int k = static_cast<int>(ctx.e_prime);
  const auto img = image_set(F, M.phi[i], k);
  std::vector<int> dims;
  for (long long n = 0; n < ctx.eK; ++n) {
    const Fe lam = ctx.zeta_power(n);
    long long count = 0;
    for (const auto& v : img) {
      Vec gv = apply_descent(F, M.gamma[i], ctx.zeta_i(i), v, k);
      bool eig = true;
      for (int s = 0; s < M.rank && eig; ++s)
        for (int m = 0; m < k && eig; ++m) eig = gv[s][m] == F.mul(lam, v[s][m]);
      count += eig;
    }
    int dim = 0;
    while (count > 1) {
      count /= F.order();
      ++dim;
    }
    dims.push_back(dim);
  }
  return dims;
}

inline SeriesElement random_element(const ArithmeticContext& ctx, int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<Fe> coeff(0, ctx.F().order() - 1);
  std::vector<Poly> comps(ctx.f_prime, Poly(n));
  for (auto& c : comps)
    for (auto& x : c) x = coeff(rng);
  return SeriesElement{n, comps};
}

}  // namespace bktest
