#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bklab/context.hpp"
#include "bklab/linalg.hpp"

namespace bklab {

struct SeriesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Truncated power series in u: coefficient vector of length = precision.
using Poly = std::vector<Fe>;

inline Poly poly_zero(int n) { return Poly(n, 0); }
inline Poly poly_const(int n, Fe c) {
  Poly out(n, 0);
  if (n > 0) out[0] = c;
  return out;
}
inline Poly poly_monomial(int n, int deg, Fe c = 1) {
  Poly out(n, 0);
  if (deg < n) out[deg] = c;
  return out;
}

inline Poly poly_add(const Field& F, const Poly& a, const Poly& b) {
  Poly out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = F.add(a[i], b[i]);
  return out;
}
inline Poly poly_sub(const Field& F, const Poly& a, const Poly& b) {
  Poly out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = F.sub(a[i], b[i]);
  return out;
}
inline Poly poly_neg(const Field& F, const Poly& a) {
  Poly out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = F.neg(a[i]);
  return out;
}
inline Poly poly_scale(const Field& F, Fe s, const Poly& a) {
  Poly out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = F.mul(s, a[i]);
  return out;
}
inline Poly poly_mul(const Field& F, const Poly& a, const Poly& b) {
  const std::size_t n = a.size();
  Poly out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!a[i]) continue;
    for (std::size_t j = 0; i + j < n; ++j) {
      if (b[j]) out[i + j] = F.add(out[i + j], F.mul(a[i], b[j]));
    }
  }
  return out;
}
inline bool poly_is_zero(const Poly& a) {
  return std::all_of(a.begin(), a.end(), [](Fe x) { return x == 0; });
}
/// u-adic valuation; returns the precision for the zero series.
inline int poly_val(const Poly& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]) return static_cast<int>(i);
  return static_cast<int>(a.size());
}
/// u -> u^k.
inline Poly poly_subst_power(const Poly& a, int k) {
  Poly out(a.size(), 0);
  for (std::size_t i = 0; i * k < a.size(); ++i) out[i * k] = a[i];
  return out;
}
/// u -> z u.
inline Poly poly_twist(const Field& F, const Poly& a, Fe z) {
  Poly out(a.size(), 0);
  Fe zm = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = F.mul(a[i], zm);
    zm = F.mul(zm, z);
  }
  return out;
}
/// Division by u^v of a series known to have valuation >= v (top coefficients become zero).
inline Poly poly_shift_down(const Poly& a, int v) {
  Poly out(a.size(), 0);
  for (std::size_t i = v; i < a.size(); ++i) out[i - v] = a[i];
  return out;
}
inline Poly poly_shift_up(const Poly& a, int v) {
  Poly out(a.size(), 0);
  for (std::size_t i = 0; i + v < a.size(); ++i) out[i + v] = a[i];
  return out;
}
inline Poly poly_resize(const Poly& a, int n) {
  Poly out(n, 0);
  for (int i = 0; i < n && i < static_cast<int>(a.size()); ++i) out[i] = a[i];
  return out;
}
inline Poly poly_unit_inverse(const Field& F, const Poly& a) {
  if (a.empty()) return a;
  if (!a[0]) throw SeriesError("inverse of a non-unit series");
  const std::size_t n = a.size();
  Poly out(n, 0);
  Fe inv0 = F.inv(a[0]);
  out[0] = inv0;
  for (std::size_t m = 1; m < n; ++m) {
    Fe acc = 0;
    for (std::size_t j = 1; j <= m; ++j)
      if (a[j] && out[m - j]) acc = F.add(acc, F.mul(a[j], out[m - j]));
    out[m] = F.neg(F.mul(inv0, acc));
  }
  return out;
}

/// Matrix of truncated series (one component), rows x cols entries of common precision.
struct SeriesMatrix {
  int rows = 0;
  int cols = 0;
  int precision = 0;
  std::vector<Poly> entries;

  SeriesMatrix() = default;
  SeriesMatrix(int r, int c, int n) : rows(r), cols(c), precision(n), entries(static_cast<std::size_t>(r) * c, Poly(n, 0)) {}

  Poly& at(int r, int c) { return entries[static_cast<std::size_t>(r) * cols + c]; }
  const Poly& at(int r, int c) const { return entries[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const SeriesMatrix& o) const {
    return rows == o.rows && cols == o.cols && precision == o.precision && entries == o.entries;
  }
  bool operator!=(const SeriesMatrix& o) const { return !(*this == o); }
};

inline SeriesMatrix smat_identity(int d, int n, Fe scale = 1) {
  SeriesMatrix m(d, d, n);
  for (int i = 0; i < d; ++i) m.at(i, i) = poly_const(n, scale);
  return m;
}

inline SeriesMatrix smat_from_constant(const FMat& c, int n) {
  SeriesMatrix m(c.rows, c.cols, n);
  for (int i = 0; i < c.rows; ++i)
    for (int j = 0; j < c.cols; ++j) m.at(i, j) = poly_const(n, c(i, j));
  return m;
}

inline SeriesMatrix smat_diag_monomial(const std::vector<int>& exps, int n, const std::vector<Fe>& coeffs = {}) {
  int d = static_cast<int>(exps.size());
  SeriesMatrix m(d, d, n);
  for (int i = 0; i < d; ++i) m.at(i, i) = poly_monomial(n, exps[i], coeffs.empty() ? 1 : coeffs[i]);
  return m;
}

template <class Fn>
SeriesMatrix smat_map(const SeriesMatrix& a, Fn fn) {
  SeriesMatrix out(a.rows, a.cols, a.precision);
  for (std::size_t k = 0; k < a.entries.size(); ++k) out.entries[k] = fn(a.entries[k]);
  return out;
}

inline SeriesMatrix smat_add(const Field& F, const SeriesMatrix& a, const SeriesMatrix& b) {
  SeriesMatrix out(a.rows, a.cols, a.precision);
  for (std::size_t k = 0; k < a.entries.size(); ++k) out.entries[k] = poly_add(F, a.entries[k], b.entries[k]);
  return out;
}
inline SeriesMatrix smat_sub(const Field& F, const SeriesMatrix& a, const SeriesMatrix& b) {
  SeriesMatrix out(a.rows, a.cols, a.precision);
  for (std::size_t k = 0; k < a.entries.size(); ++k) out.entries[k] = poly_sub(F, a.entries[k], b.entries[k]);
  return out;
}
inline SeriesMatrix smat_scale(const Field& F, Fe s, const SeriesMatrix& a) {
  return smat_map(a, [&](const Poly& x) { return poly_scale(F, s, x); });
}
inline SeriesMatrix smat_mul(const Field& F, const SeriesMatrix& a, const SeriesMatrix& b) {
  if (a.cols != b.rows) throw SeriesError("matrix dimension mismatch");
  SeriesMatrix out(a.rows, b.cols, a.precision);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      Poly acc(a.precision, 0);
      for (int k = 0; k < a.cols; ++k) acc = poly_add(F, acc, poly_mul(F, a.at(i, k), b.at(k, j)));
      out.at(i, j) = acc;
    }
  return out;
}
inline SeriesMatrix smat_subst_power(const SeriesMatrix& a, int k) {
  return smat_map(a, [&](const Poly& x) { return poly_subst_power(x, k); });
}
inline SeriesMatrix smat_twist(const Field& F, const SeriesMatrix& a, Fe z) {
  return smat_map(a, [&](const Poly& x) { return poly_twist(F, x, z); });
}
inline SeriesMatrix smat_resize(const SeriesMatrix& a, int n) {
  SeriesMatrix out(a.rows, a.cols, n);
  for (std::size_t k = 0; k < a.entries.size(); ++k) out.entries[k] = poly_resize(a.entries[k], n);
  return out;
}
inline bool smat_is_zero(const SeriesMatrix& a) {
  return std::all_of(a.entries.begin(), a.entries.end(), [](const Poly& x) { return poly_is_zero(x); });
}
inline FMat smat_eval0(const SeriesMatrix& a) {
  FMat out(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(i, j) = a.precision > 0 ? a.at(i, j)[0] : 0;
  return out;
}
inline FMat smat_coeff(const SeriesMatrix& a, int m) {
  FMat out(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(i, j) = m < a.precision ? a.at(i, j)[m] : 0;
  return out;
}
inline bool smat_is_unit(const Field& F, const SeriesMatrix& a) {
  return a.rows == a.cols && fmat_det(F, smat_eval0(a)) != 0;
}

inline Poly smat_det(const Field& F, const SeriesMatrix& a) {
  if (a.rows != a.cols) throw SeriesError("determinant of a non-square matrix");
  int d = a.rows;
  if (d == 0) return poly_const(a.precision, 1);
  if (d == 1) return a.at(0, 0);
  Poly acc(a.precision, 0);
  for (int j = 0; j < d; ++j) {
    SeriesMatrix minor(d - 1, d - 1, a.precision);
    for (int r = 1; r < d; ++r) {
      int cc = 0;
      for (int c = 0; c < d; ++c) {
        if (c == j) continue;
        minor.at(r - 1, cc++) = a.at(r, c);
      }
    }
    Poly term = poly_mul(F, a.at(0, j), smat_det(F, minor));
    acc = (j % 2 == 0) ? poly_add(F, acc, term) : poly_sub(F, acc, term);
  }
  return acc;
}

/// Inverse of a matrix whose constant term is invertible.
inline SeriesMatrix smat_unit_inverse(const Field& F, const SeriesMatrix& a) {
  int d = a.rows, n = a.precision;
  auto inv0 = fmat_inverse(F, smat_eval0(a));
  if (!inv0) throw SeriesError("matrix is not a unit");
  std::vector<FMat> x(n);
  for (int m = 0; m < n; ++m) {
    FMat rhs = m == 0 ? identity_fmat(d) : FMat(d, d);
    for (int j = 1; j <= m; ++j) rhs = fmat_sub(F, rhs, fmat_mul(F, smat_coeff(a, j), x[m - j]));
    x[m] = fmat_mul(F, *inv0, rhs);
  }
  SeriesMatrix out(d, d, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int m = 0; m < n; ++m) out.at(i, j)[m] = x[m](i, j);
  return out;
}

/// Smith form: left * m * right = diag(u^{vals}) over F[u]/u^N.
struct SmithForm {
  SeriesMatrix left, right;
  std::vector<int> vals;
};

inline std::optional<SmithForm> smith_form(const Field& F, const SeriesMatrix& m) {
  if (m.rows != m.cols) throw SeriesError("smith form of a non-square matrix");
  const int d = m.rows, n = m.precision;
  SeriesMatrix a = m, U = smat_identity(d, n), V = smat_identity(d, n);
  std::vector<int> vals;
  for (int t = 0; t < d; ++t) {
    int best = n, bi = -1, bj = -1;
    for (int i = t; i < d; ++i)
      for (int j = t; j < d; ++j) {
        int v = poly_val(a.at(i, j));
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (bi < 0) return std::nullopt;
    if (bi != t) {
      for (int c = 0; c < d; ++c) {
        std::swap(a.at(bi, c), a.at(t, c));
        std::swap(U.at(bi, c), U.at(t, c));
      }
    }
    if (bj != t) {
      for (int r = 0; r < d; ++r) {
        std::swap(a.at(r, bj), a.at(r, t));
        std::swap(V.at(r, bj), V.at(r, t));
      }
    }
    const int v = best;
    Poly w = poly_unit_inverse(F, poly_shift_down(a.at(t, t), v));
    for (int c = 0; c < d; ++c) {
      a.at(t, c) = poly_mul(F, w, a.at(t, c));
      U.at(t, c) = poly_mul(F, w, U.at(t, c));
    }
    for (int i = t + 1; i < d; ++i) {
      Poly q = poly_shift_down(a.at(i, t), v);
      if (poly_is_zero(q)) continue;
      for (int c = 0; c < d; ++c) {
        a.at(i, c) = poly_sub(F, a.at(i, c), poly_mul(F, q, a.at(t, c)));
        U.at(i, c) = poly_sub(F, U.at(i, c), poly_mul(F, q, U.at(t, c)));
      }
    }
    for (int j = t + 1; j < d; ++j) {
      Poly q = poly_shift_down(a.at(t, j), v);
      if (poly_is_zero(q)) continue;
      for (int r = 0; r < d; ++r) {
        a.at(r, j) = poly_sub(F, a.at(r, j), poly_mul(F, q, a.at(r, t)));
        V.at(r, j) = poly_sub(F, V.at(r, j), poly_mul(F, q, V.at(r, t)));
      }
    }
    vals.push_back(v);
  }
  return SmithForm{U, V, vals};
}

/// Sorted u-adic elementary divisors, or nullopt when the determinant vanishes modulo u^N.
inline std::optional<std::vector<int>> elementary_divisors(const Field& F, const SeriesMatrix& m) {
  auto s = smith_form(F, m);
  if (!s) return std::nullopt;
  std::vector<int> v = s->vals;
  if (std::accumulate(v.begin(), v.end(), 0) >= m.precision) return std::nullopt;
  std::sort(v.begin(), v.end());
  return v;
}

/// The unique X with m * X = u^k * Id, when it is pole-free.
inline std::optional<SeriesMatrix> scaled_inverse(const Field& F, const SeriesMatrix& m, int k) {
  auto s = smith_form(F, m);
  if (!s) return std::nullopt;
  const int d = m.rows, n = m.precision;
  SeriesMatrix mid(d, d, n);
  for (int t = 0; t < d; ++t) {
    if (s->vals[t] > k) return std::nullopt;
    mid.at(t, t) = poly_monomial(n, k - s->vals[t]);
  }
  return smat_mul(F, smat_mul(F, s->right, mid), s->left);
}

/// Element of the component-decomposed ring: one truncated series per embedding.
struct SeriesElement {
  int precision = 0;
  std::vector<Poly> components;
  bool operator==(const SeriesElement& o) const { return precision == o.precision && components == o.components; }
};

inline SeriesElement series_from(const ArithmeticContext& ctx, int n, std::vector<Poly> comps) {
  if (static_cast<int>(comps.size()) != ctx.f_prime) throw SeriesError("component count must equal f'");
  for (auto& c : comps) c = poly_resize(c, n);
  return SeriesElement{n, std::move(comps)};
}

inline SeriesElement series_add(const ArithmeticContext& ctx, const SeriesElement& x, const SeriesElement& y) {
  SeriesElement out{x.precision, {}};
  for (int i = 0; i < ctx.f_prime; ++i) out.components.push_back(poly_add(ctx.F(), x.components[i], y.components[i]));
  return out;
}
inline SeriesElement series_mul(const ArithmeticContext& ctx, const SeriesElement& x, const SeriesElement& y) {
  SeriesElement out{x.precision, {}};
  for (int i = 0; i < ctx.f_prime; ++i) out.components.push_back(poly_mul(ctx.F(), x.components[i], y.components[i]));
  return out;
}
inline bool series_is_unit(const SeriesElement& x) {
  return std::all_of(x.components.begin(), x.components.end(), [](const Poly& c) { return !c.empty() && c[0] != 0; });
}

/// Frobenius: component i of the output is component i-1 of the input with u -> u^p.
inline SeriesElement frobenius_twist(const ArithmeticContext& ctx, const SeriesElement& x) {
  SeriesElement out{x.precision, std::vector<Poly>(ctx.f_prime)};
  for (int i = 0; i < ctx.f_prime; ++i)
    out.components[i] = poly_subst_power(x.components[(i - 1 + ctx.f_prime) % ctx.f_prime], ctx.p);
  return out;
}

/// Inertia generator: coefficient of u^m on component i scaled by zeta_i^m.
inline SeriesElement gamma_twist(const ArithmeticContext& ctx, const SeriesElement& x) {
  SeriesElement out{x.precision, std::vector<Poly>(ctx.f_prime)};
  for (int i = 0; i < ctx.f_prime; ++i) out.components[i] = poly_twist(ctx.F(), x.components[i], ctx.zeta_i(i));
  return out;
}

/// Unramified involution of the cuspidal flavor: shifts components by f.
inline SeriesElement c_twist(const ArithmeticContext& ctx, const SeriesElement& x) {
  if (ctx.flavor != Flavor::cuspidal) throw SeriesError("c-twist requires a cuspidal context");
  SeriesElement out{x.precision, std::vector<Poly>(ctx.f_prime)};
  for (int i = 0; i < ctx.f_prime; ++i) out.components[(i + ctx.f) % ctx.f_prime] = x.components[i];
  return out;
}

}  // namespace bklab
