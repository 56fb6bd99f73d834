#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bklab/field.hpp"

namespace bklab {

/// Sparse multivariate polynomial over a finite field; exponent vectors ordered lexicographically.
struct MPoly {
  std::map<std::vector<int>, Fe> terms;

  bool is_zero() const { return terms.empty(); }
  bool operator==(const MPoly& o) const { return terms == o.terms; }
  bool operator!=(const MPoly& o) const { return !(*this == o); }
};

inline MPoly mpoly_const(int nvars, Fe c) {
  MPoly p;
  if (c) p.terms[std::vector<int>(nvars, 0)] = c;
  return p;
}

inline MPoly mpoly_var(int nvars, int k, Fe c = 1) {
  MPoly p;
  if (!c) return p;
  std::vector<int> e(nvars, 0);
  e[k] = 1;
  p.terms[e] = c;
  return p;
}

inline void mpoly_accumulate(const Field& F, MPoly& p, const std::vector<int>& mono, Fe c) {
  if (!c) return;
  auto it = p.terms.find(mono);
  if (it == p.terms.end()) {
    p.terms.emplace(mono, c);
    return;
  }
  it->second = F.add(it->second, c);
  if (!it->second) p.terms.erase(it);
}

inline MPoly mpoly_add(const Field& F, MPoly a, const MPoly& b) {
  for (const auto& [m, c] : b.terms) mpoly_accumulate(F, a, m, c);
  return a;
}

inline MPoly mpoly_sub(const Field& F, MPoly a, const MPoly& b) {
  for (const auto& [m, c] : b.terms) mpoly_accumulate(F, a, m, F.neg(c));
  return a;
}

inline MPoly mpoly_mul(const Field& F, const MPoly& a, const MPoly& b) {
  MPoly out;
  for (const auto& [ma, ca] : a.terms)
    for (const auto& [mb, cb] : b.terms) {
      std::vector<int> m(ma.size());
      for (std::size_t k = 0; k < m.size(); ++k) m[k] = ma[k] + mb[k];
      mpoly_accumulate(F, out, m, F.mul(ca, cb));
    }
  return out;
}

/// Exact quotient a / b, or nullopt when b does not divide a.
inline std::optional<MPoly> mpoly_exact_div(const Field& F, MPoly a, const MPoly& b) {
  if (b.is_zero()) throw std::invalid_argument("division by the zero polynomial");
  const auto& [lm, lc] = *b.terms.rbegin();
  const Fe lc_inv = F.inv(lc);
  MPoly q;
  while (!a.is_zero()) {
    const auto [am, ac] = *a.terms.rbegin();
    std::vector<int> m(am.size());
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] = am[k] - lm[k];
      if (m[k] < 0) return std::nullopt;
    }
    MPoly t;
    t.terms[m] = F.mul(ac, lc_inv);
    q = mpoly_add(F, q, t);
    a = mpoly_sub(F, a, mpoly_mul(F, t, b));
  }
  return q;
}

/// Fraction-free (Bareiss) determinant.
inline MPoly mpoly_det(const Field& F, std::vector<std::vector<MPoly>> m, int nvars) {
  const int n = static_cast<int>(m.size());
  if (n == 0) return mpoly_const(nvars, 1);
  bool negate = false;
  MPoly prev = mpoly_const(nvars, 1);
  for (int k = 0; k + 1 < n; ++k) {
    if (m[k][k].is_zero()) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (!m[i][k].is_zero()) {
          piv = i;
          break;
        }
      if (piv < 0) return MPoly{};
      std::swap(m[k], m[piv]);
      negate = !negate;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        MPoly num = mpoly_sub(F, mpoly_mul(F, m[i][j], m[k][k]), mpoly_mul(F, m[i][k], m[k][j]));
        auto q = mpoly_exact_div(F, num, prev);
        if (!q) throw std::logic_error("Bareiss step is not exact");
        m[i][j] = *q;
      }
    prev = m[k][k];
  }
  MPoly det = m[n - 1][n - 1];
  if (negate) det = mpoly_sub(F, MPoly{}, det);
  return det;
}

}  // namespace bklab
