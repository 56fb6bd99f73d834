#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bklab/bk.hpp"
#include "bklab/dieudonne.hpp"

namespace bklab {

enum class IsoVerdict { iso, non_iso, unknown };

inline std::string to_string(IsoVerdict v) {
  switch (v) {
    case IsoVerdict::iso:
      return "iso";
    case IsoVerdict::non_iso:
      return "non_iso";
    case IsoVerdict::unknown:
      return "unknown";
  }
  return "?";
}

struct IsoResult {
  IsoVerdict verdict = IsoVerdict::unknown;
  std::vector<SeriesMatrix> witness;  // g with conjugate(first, g) == second
  std::string invariant;              // distinguishing invariant for non_iso
  std::string first_value, second_value;
  long long nodes = 0;
  int degree_bound = 0;
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

inline std::string divisor_string(const std::vector<std::optional<std::vector<int>>>& d) {
  std::string s;
  for (std::size_t i = 0; i < d.size(); ++i) s += (i ? ";" : "") + (d[i] ? join_ints(*d[i]) : std::string("singular"));
  return s;
}

/// Coefficient layout of the unknown conjugating matrices: g_i[r][c] coefficient of u^m.
struct GLayout {
  int fp, d, deg;
  int index(int i, int r, int c, int m) const { return ((i * d + r) * d + c) * deg + m; }
  int size() const { return fp * d * d * deg; }
};

/// Linear conditions Phi_i phi(g_{i-1}) = g_i Phi'_i, Gamma_i g_i(zeta_i u) = g_i Gamma'_i, C_i g_i = g_{i+f} C'_i
/// modulo u^prec, on g with entries of degree < deg. The etale variant multiplies the Phi'-terms by u^shift and
/// the gamma condition by zeta_i^{-gamma_exp}.
inline FMat conjugacy_system(const BKModule& A, const BKModule& B, int deg, int prec, int shift = 0,
                             long long gamma_exp = 0) {
  const auto& ctx = *A.ctx;
  const Field& F = ctx.F();
  const int fp = ctx.f_prime, d = A.rank;
  GLayout lay{fp, d, deg};
  FMat sys(0, lay.size());
  sys.cols = lay.size();
  auto coeff = [&](const SeriesMatrix& m, int r, int c, int t) -> Fe {
    return t >= 0 && t < m.precision ? m.at(r, c)[t] : Fe{0};
  };
  for (int i = 0; i < fp; ++i) {
    const int prev = (i - 1 + fp) % fp;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        for (int t = 0; t < prec; ++t) {
          std::vector<Fe> row(lay.size(), 0);
          for (int k = 0; k < d; ++k)
            for (int m = 0; m < deg && ctx.p * m <= t; ++m) {
              Fe x = coeff(A.phi[i], r, k, t - ctx.p * m);
              if (x) row[lay.index(prev, k, c, m)] = F.add(row[lay.index(prev, k, c, m)], x);
            }
          for (int k = 0; k < d; ++k)
            for (int m = 0; m < deg && m + shift <= t; ++m) {
              Fe x = coeff(B.phi[i], k, c, t - m - shift);
              if (x) row[lay.index(i, r, k, m)] = F.sub(row[lay.index(i, r, k, m)], x);
            }
          sys.append_row(row);
        }
    const Fe zi = ctx.zeta_i(i);
    const Fe gscale = ctx.zeta_power(-gamma_exp * ctx.chi(i));
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        for (int t = 0; t < prec; ++t) {
          std::vector<Fe> row(lay.size(), 0);
          Fe zm = 1;
          for (int m = 0; m < deg && m <= t; ++m) {
            for (int k = 0; k < d; ++k) {
              Fe x = F.mul(gscale, F.mul(zm, coeff(A.gamma[i], r, k, t - m)));
              if (x) row[lay.index(i, k, c, m)] = F.add(row[lay.index(i, k, c, m)], x);
              Fe y = coeff(B.gamma[i], k, c, t - m);
              if (y) row[lay.index(i, r, k, m)] = F.sub(row[lay.index(i, r, k, m)], y);
            }
            zm = F.mul(zm, zi);
          }
          sys.append_row(row);
        }
    if (A.c && B.c) {
      const int j = (i + ctx.f) % fp;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          for (int t = 0; t < prec; ++t) {
            std::vector<Fe> row(lay.size(), 0);
            for (int m = 0; m < deg && m <= t; ++m)
              for (int k = 0; k < d; ++k) {
                Fe x = coeff((*A.c)[i], r, k, t - m);
                if (x) row[lay.index(i, k, c, m)] = F.add(row[lay.index(i, k, c, m)], x);
                Fe y = coeff((*B.c)[i], k, c, t - m);
                if (y) row[lay.index(j, r, k, m)] = F.sub(row[lay.index(j, r, k, m)], y);
              }
            sys.append_row(row);
          }
    }
  }
  return sys;
}

inline std::vector<SeriesMatrix> unpack_g(const GLayout& lay, const std::vector<Fe>& x, int n) {
  std::vector<SeriesMatrix> g;
  for (int i = 0; i < lay.fp; ++i) {
    SeriesMatrix m(lay.d, lay.d, n);
    for (int r = 0; r < lay.d; ++r)
      for (int c = 0; c < lay.d; ++c)
        for (int k = 0; k < lay.deg && k < n; ++k) m.at(r, c)[k] = x[lay.index(i, r, c, k)];
    g.push_back(m);
  }
  return g;
}

/// Constant-term projection of a solution space (rows), as rows of length fp*d*d.
inline FMat constant_projection(const GLayout& lay, const FMat& sol) {
  const int w = lay.fp * lay.d * lay.d;
  FMat out(sol.rows, w);
  for (int s = 0; s < sol.rows; ++s)
    for (int i = 0; i < lay.fp; ++i)
      for (int r = 0; r < lay.d; ++r)
        for (int c = 0; c < lay.d; ++c) out(s, (i * lay.d + r) * lay.d + c) = sol(s, lay.index(i, r, c, 0));
  return out;
}

/// Enumerates F-combinations of the rows of basis in lexicographic order of coefficient codes.
class SpanEnumerator {
 public:
  SpanEnumerator(const Field& F, FMat basis) : F_(F), basis_(std::move(basis)), code_(basis_.rows, 0) {}
  bool done() const { return done_; }
  std::vector<Fe> current() const {
    std::vector<Fe> v(basis_.cols, 0);
    for (int k = 0; k < basis_.rows; ++k) {
      if (!code_[k]) continue;
      for (int c = 0; c < basis_.cols; ++c) v[c] = F_.add(v[c], F_.mul(code_[k], basis_(k, c)));
    }
    return v;
  }
  void next() {
    int pos = basis_.rows - 1;
    while (pos >= 0 && ++code_[pos] == F_.order()) code_[pos--] = 0;
    if (pos < 0) done_ = true;
  }

 private:
  const Field& F_;
  FMat basis_;
  std::vector<Fe> code_;
  bool done_ = false;
};

inline bool constants_invertible(const Field& F, const GLayout& lay, const std::vector<Fe>& c) {
  for (int i = 0; i < lay.fp; ++i) {
    FMat m(lay.d, lay.d);
    for (int r = 0; r < lay.d; ++r)
      for (int k = 0; k < lay.d; ++k) m(r, k) = c[(i * lay.d + r) * lay.d + k];
    if (!fmat_det(F, m)) return false;
  }
  return true;
}

}  // namespace detail

/// Invariants compared before any search; returns the first mismatch as (name, value1, value2).
inline std::optional<std::array<std::string, 3>> invariant_mismatch(const BKModule& A, const BKModule& B, int h) {
  TameType ta = type_of(A), tb = type_of(B);
  if (ta != tb) return std::array<std::string, 3>{"type", ta.key(), tb.key()};
  ValidationReport va = validate(A, h), vb = validate(B, h);
  auto da = detail::divisor_string(va.divisors), db = detail::divisor_string(vb.divisors);
  if (da != db) return std::array<std::string, 3>{"elementary_divisors", da, db};
  if (A.rank == 2 && h == 1) {
    auto sa = strong_det_check(A), sb = strong_det_check(B);
    if (sa.dims != sb.dims) {
      std::string x, y;
      for (std::size_t i = 0; i < sa.dims.size(); ++i) {
        x += (i ? ";" : "") + detail::join_ints(sa.dims[i]);
        y += (i ? ";" : "") + detail::join_ints(sb.dims[i]);
      }
      return std::array<std::string, 3>{"strong_det_dims", x, y};
    }
  }
  if (h == 1) {
    RankProfile ra = rank_profile(dieudonne_of(A)), rb = rank_profile(dieudonne_of(B));
    if (!(ra == rb))
      return std::array<std::string, 3>{"dieudonne_ranks",
                                        detail::join_ints(ra.f_ranks) + "/" + detail::join_ints(ra.v_ranks),
                                        detail::join_ints(rb.f_ranks) + "/" + detail::join_ints(rb.v_ranks)};
  }
  return std::nullopt;
}

/// Concatenation of the invariants compared by invariant_mismatch; equal keys mean no invariant separates.
inline std::string iso_invariant_key(const BKModule& M, int h) {
  std::string key = type_of(M).key();
  key += "#" + detail::divisor_string(validate(M, h).divisors);
  if (M.rank == 2 && h == 1) {
    auto sd = strong_det_check(M);
    key += "#";
    for (std::size_t i = 0; i < sd.dims.size(); ++i) key += (i ? ";" : "") + detail::join_ints(sd.dims[i]);
  }
  if (h == 1) {
    RankProfile r = rank_profile(dieudonne_of(M));
    key += "#" + detail::join_ints(r.f_ranks) + "/" + detail::join_ints(r.v_ranks);
  }
  return key;
}

/// Search for g with conjugate(A, g) == B; degree_bound overrides n(1)+1 when positive.
inline IsoResult is_isomorphic(const BKModule& A, const BKModule& B, long long budget, int h = 1,
                               int degree_bound = 0, bool skip_invariants = false) {
  check_shape(A);
  check_shape(B);
  if (!A.ctx->same_as(*B.ctx)) throw BKError("modules live over different contexts");
  if (A.rank != B.rank) throw BKError("modules have different ranks");
  if (A.precision != B.precision) throw BKError("modules have different precisions");
  const auto& ctx = *A.ctx;
  const Field& F = ctx.F();
  IsoResult res;
  const int n = A.precision;
  int D = degree_bound > 0 ? degree_bound : conjugacy_bound(ctx, h) + 1;
  if (D > n) D = n;
  res.degree_bound = D;
  if (!skip_invariants) {
    if (auto mm = invariant_mismatch(A, B, h)) {
      res.verdict = IsoVerdict::non_iso;
      res.invariant = (*mm)[0];
      res.first_value = (*mm)[1];
      res.second_value = (*mm)[2];
      return res;
    }
  }
  detail::GLayout lay_d{ctx.f_prime, A.rank, D};
  detail::GLayout lay_n{ctx.f_prime, A.rank, n};
  FMat sol_d = kernel(F, detail::conjugacy_system(A, B, D, D));
  FMat proj_d = span_basis(F, detail::constant_projection(lay_d, sol_d), ctx.f_prime * A.rank * A.rank);
  FMat sol_n = kernel(F, detail::conjugacy_system(A, B, n, n));
  FMat proj_n = detail::constant_projection(lay_n, sol_n);
  detail::SpanEnumerator en(F, proj_d);
  while (!en.done()) {
    if (res.nodes >= budget) {
      res.verdict = IsoVerdict::unknown;
      return res;
    }
    ++res.nodes;
    std::vector<Fe> c = en.current();
    en.next();
    if (!detail::constants_invertible(F, lay_d, c)) continue;
    auto lam = row_coordinates(F, proj_n, c);
    if (!lam) continue;
    std::vector<Fe> x(lay_n.size(), 0);
    for (int s = 0; s < sol_n.rows; ++s) {
      if (!(*lam)[s]) continue;
      for (int t = 0; t < lay_n.size(); ++t) x[t] = F.add(x[t], F.mul((*lam)[s], sol_n(s, t)));
    }
    std::vector<SeriesMatrix> g = detail::unpack_g(lay_n, x, n);
    if (!(conjugate(A, g) == B)) continue;
    res.verdict = IsoVerdict::iso;
    res.witness = g;
    return res;
  }
  res.verdict = IsoVerdict::non_iso;
  res.invariant = "exhausted_search";
  return res;
}

/// Laurent matrix u^{-pole} * m.
struct LaurentMatrix {
  int pole = 0;
  SeriesMatrix m;
  bool operator==(const LaurentMatrix& o) const { return pole == o.pole && m == o.m; }
};

struct EtalePhiModule {
  BKModule lattice;  // the underlying matrices with pole order 0
  std::vector<LaurentMatrix> phi_inverse;
};

inline EtalePhiModule etale_of(const BKModule& M, int h = 1) {
  check_shape(M);
  const auto& ctx = *M.ctx;
  EtalePhiModule E{M, {}};
  const int k = static_cast<int>(ctx.e_prime) * h;
  for (const auto& phi : M.phi) {
    auto X = scaled_inverse(ctx.F(), phi, k);
    if (!X) throw BKError("phi is not invertible after inverting u");
    int minval = M.precision;
    for (const auto& poly : X->entries) minval = std::min(minval, poly_val(poly));
    int shift = std::min(minval, k);
    SeriesMatrix reduced = *X;
    for (auto& poly : reduced.entries) poly = poly_shift_down(poly, shift);
    E.phi_inverse.push_back(LaurentMatrix{k - shift, reduced});
  }
  return E;
}

inline EtalePhiModule etale_base_change(const EtalePhiModule& E, const FieldPtr& target) {
  return etale_of(base_change(E.lattice, target));
}

/// Search for g = u^{-s} h with s <= pole_budget intertwining the etale modules.
inline IsoResult etale_isomorphic(const EtalePhiModule& E1, const EtalePhiModule& E2, int pole_budget,
                                  long long budget) {
  const BKModule& A = E1.lattice;
  const BKModule& B = E2.lattice;
  if (!A.ctx->same_as(*B.ctx) || A.rank != B.rank || A.precision != B.precision)
    throw BKError("etale modules are not comparable");
  const auto& ctx = *A.ctx;
  const Field& F = ctx.F();
  const int n = A.precision, d = A.rank;
  IsoResult res;
  res.degree_bound = n;
  std::vector<int> va, vb;
  for (int i = 0; i < ctx.f_prime; ++i) {
    va.push_back(poly_val(smat_det(F, A.phi[i])));
    vb.push_back(poly_val(smat_det(F, B.phi[i])));
  }
  // det g_i has valuation delta_i with (p delta_{i-1} - delta_i) = vb_i - va_i.
  std::vector<long long> delta(ctx.f_prime, 0);
  {
    const long long denom = ipow(ctx.p, ctx.f_prime) - 1;
    long long weighted = 0;
    for (int i = 0; i < ctx.f_prime; ++i) weighted += (vb[i] - va[i]) * ipow(ctx.p, (ctx.f_prime - 1 - i));
    if (weighted % denom != 0) {
      res.verdict = IsoVerdict::non_iso;
      res.invariant = "determinant_valuation";
      res.first_value = detail::join_ints(va);
      res.second_value = detail::join_ints(vb);
      return res;
    }
    delta[ctx.f_prime - 1] = weighted / denom;
    for (int i = 0; i < ctx.f_prime - 1; ++i) {
      long long prev = i == 0 ? delta[ctx.f_prime - 1] : delta[i - 1];
      delta[i] = ctx.p * prev - (vb[i] - va[i]);
    }
  }
  detail::GLayout lay{ctx.f_prime, d, n};
  for (int s = 0; s <= pole_budget; ++s) {
    FMat sys = detail::conjugacy_system(A, B, n, n, (ctx.p - 1) * s, s);
    FMat sol = kernel(F, sys);
    detail::SpanEnumerator en(F, sol);
    while (!en.done()) {
      if (res.nodes >= budget) {
        res.verdict = IsoVerdict::unknown;
        return res;
      }
      ++res.nodes;
      std::vector<Fe> x = en.current();
      en.next();
      std::vector<SeriesMatrix> g = detail::unpack_g(lay, x, n);
      bool ok = true;
      for (int i = 0; i < ctx.f_prime && ok; ++i) {
        int v = poly_val(smat_det(F, g[i]));
        ok = v < n && v == delta[i] + static_cast<long long>(d) * s;
      }
      if (!ok) continue;
      res.verdict = IsoVerdict::iso;
      res.witness = g;
      res.first_value = "pole " + std::to_string(s);
      return res;
    }
  }
  res.verdict = IsoVerdict::non_iso;
  res.invariant = "exhausted_search";
  res.first_value = "pole budget " + std::to_string(pole_budget);
  return res;
}

}  // namespace bklab
