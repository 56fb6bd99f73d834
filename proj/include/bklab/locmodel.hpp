#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bklab/bk.hpp"
#include "bklab/dieudonne.hpp"
#include "bklab/mpoly.hpp"
#include "bklab/semilinear.hpp"

namespace bklab {

struct LocModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an operation's hypothesis fails, as opposed to a negative verdict.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// (L, L+) with L free over R' = prod_i F[u]/u^{e'}; lplus[i] is an RREF F-basis, index m*rank + s for u^m e_s.
struct LocalModelPair {
  ContextPtr ctx;
  int rank = 2;
  std::vector<SeriesMatrix> gamma;
  std::optional<std::vector<SeriesMatrix>> c;
  std::vector<FMat> lplus;

  int depth() const { return static_cast<int>(ctx->e_prime); }
  int width() const { return rank * depth(); }
  bool operator==(const LocalModelPair& o) const {
    return ctx->same_as(*o.ctx) && rank == o.rank && gamma == o.gamma && c == o.c && lplus == o.lplus;
  }
};

namespace detail {

inline FMat gamma_op(const LocalModelPair& P, int i) {
  return galois_operator(P.ctx->F(), P.gamma[i], P.ctx->zeta_i(i), P.depth());
}

inline FMat mult_op(const Field& F, const SeriesMatrix& T, int k) { return galois_operator(F, T, 1, k); }

inline bool contains(const Field& F, const FMat& space, const FMat& rows) {
  if (rows.rows == 0) return true;
  return fmat_rank(F, stack_rows(space, rows)) == space.rows;
}

inline std::vector<Fe> unit_vector(int n, int k) {
  std::vector<Fe> v(n, 0);
  v[k] = 1;
  return v;
}

/// Coordinates of v in the column basis B; throws when v is outside the span.
inline std::vector<Fe> coords_in(const Field& F, const FMat& B, const std::vector<Fe>& v) {
  auto c = solve(F, B, v);
  if (!c) throw LocModelError("vector is not in the span of the frame");
  return *c;
}

inline FMat columns_to_fmat(const std::vector<std::vector<Fe>>& cols, int rows) {
  FMat m(rows, static_cast<int>(cols.size()));
  for (int c = 0; c < m.cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = cols[c][r];
  return m;
}

/// Series matrix whose column k is the flat vector cols[k] (index m*d + s).
inline SeriesMatrix flat_columns_to_series(const std::vector<std::vector<Fe>>& cols, int d, int n) {
  SeriesMatrix m(d, static_cast<int>(cols.size()), n);
  for (int k = 0; k < m.cols; ++k)
    for (int t = 0; t < n; ++t)
      for (int s = 0; s < d; ++s) m.at(s, k)[t] = cols[k][t * d + s];
  return m;
}

}  // namespace detail

/// Problems with the pair, empty when it is a valid object.
inline std::vector<std::string> pair_problems(const LocalModelPair& P) {
  std::vector<std::string> out;
  if (!P.ctx) return {"pair has no context"};
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  const int k = P.depth(), w = P.width(), fp = ctx.f_prime;
  if (static_cast<int>(P.gamma.size()) != fp || static_cast<int>(P.lplus.size()) != fp)
    return {"pair must have f' components"};
  for (int i = 0; i < fp; ++i) {
    const auto& g = P.gamma[i];
    if (g.rows != P.rank || g.cols != P.rank || g.precision != k) return {"gamma has the wrong shape"};
    if (P.lplus[i].cols != w) return {"lplus has the wrong width"};
  }
  if (P.c && (ctx.flavor != Flavor::cuspidal || static_cast<int>(P.c->size()) != fp))
    return {"c data does not match the flavor"};
  for (int i = 0; i < fp; ++i) {
    const std::string tag = "component " + std::to_string(i) + ": ";
    if (!smat_is_unit(F, P.gamma[i])) out.push_back(tag + "gamma is not a unit");
    if (!smat_is_zero(smat_sub(F, semilinear_power(F, P.gamma[i], ctx.zeta_i(i), ctx.eK), smat_identity(P.rank, k))))
      out.push_back(tag + "gamma does not have order dividing eK");
    const FMat& L = P.lplus[i];
    if (fmat_rank(F, L) != L.rows) out.push_back(tag + "lplus basis is not independent");
    if (!detail::contains(F, L, map_rows(F, u_power_operator(P.rank, k, 1), L)))
      out.push_back(tag + "lplus is not stable under u");
    if (!detail::contains(F, L, map_rows(F, detail::gamma_op(P, i), L)))
      out.push_back(tag + "lplus is not stable under gamma");
    if (P.c) {
      const int j = (i + ctx.f) % fp;
      if (!detail::contains(F, P.lplus[j], map_rows(F, detail::mult_op(F, (*P.c)[i], k), L)))
        out.push_back(tag + "c does not map lplus into lplus");
    }
  }
  return out;
}

inline LocalModelPair psi(const BKModule& M) {
  check_shape(M);
  const auto& ctx = *M.ctx;
  const int k = static_cast<int>(ctx.e_prime);
  if (M.precision < k) throw LocModelError("precision below e'");
  LocalModelPair P{M.ctx, M.rank, {}, std::nullopt, {}};
  for (int i = 0; i < ctx.f_prime; ++i) {
    P.gamma.push_back(smat_resize(M.gamma[i], k));
    P.lplus.push_back(column_span_mod(ctx.F(), M.phi[i], k));
  }
  if (M.c) {
    std::vector<SeriesMatrix> c;
    for (const auto& m : *M.c) c.push_back(smat_resize(m, k));
    P.c = c;
  }
  return P;
}

struct PairStrongDetReport {
  std::vector<std::vector<int>> dims;
  bool pass = true;
};

inline PairStrongDetReport pair_strong_det(const LocalModelPair& P) {
  PairStrongDetReport rep;
  for (int i = 0; i < P.ctx->f_prime; ++i) {
    auto dims = eigen_dims(*P.ctx, detail::gamma_op(P, i), P.lplus[i]);
    for (int x : dims)
      if (x != P.ctx->e) rep.pass = false;
    rep.dims.push_back(dims);
  }
  return rep;
}

inline TameType pair_type(const LocalModelPair& P) {
  TameType t;
  for (const auto& g : P.gamma) t.tau.push_back(character_multiset(*P.ctx, smat_eval0(g)));
  return t;
}

enum class KottwitzMode { dims, symbolic, generic };

namespace detail {

/// Matrices of u^j (j < k) restricted to the span of the rows of W, in that basis (columns are images).
inline std::vector<FMat> u_power_matrices(const Field& F, const FMat& W, int d, int k) {
  std::vector<FMat> out;
  FMat basis_t = transpose(W);
  FMat cur = W;
  const FMat u = u_power_operator(d, k, 1);
  for (int j = 0; j < k; ++j) {
    FMat A(W.rows, W.rows);
    for (int c = 0; c < W.rows; ++c) {
      auto coords = solve(F, basis_t, cur.row(c));
      if (!coords) throw LocModelError("lplus is not stable under u");
      for (int r = 0; r < W.rows; ++r) A(r, c) = (*coords)[r];
    }
    out.push_back(A);
    cur = map_rows(F, u, cur);
  }
  return out;
}

/// Basis of the span of W ordered along the flag W > uW > u^2W > ..., as rows.
inline FMat u_adapted_basis(const Field& F, const FMat& W, int d, int k) {
  std::vector<FMat> layers;
  FMat cur = span_basis(F, W, W.cols);
  const FMat u = u_power_operator(d, k, 1);
  while (cur.rows > 0) {
    layers.push_back(cur);
    cur = span_basis(F, map_rows(F, u, cur), W.cols);
  }
  layers.push_back(FMat(0, W.cols));
  // Later layers come last; complete each deeper span to the shallower one.
  std::vector<std::vector<Fe>> rows_rev;
  FMat acc(0, W.cols);
  acc.cols = W.cols;
  for (int t = static_cast<int>(layers.size()) - 2; t >= 0; --t) {
    std::vector<std::vector<Fe>> added;
    for (int r = 0; r < layers[t].rows; ++r) {
      FMat trial = acc;
      trial.append_row(layers[t].row(r));
      if (fmat_rank(F, trial) > acc.rows) {
        acc = trial;
        added.push_back(layers[t].row(r));
      }
    }
    rows_rev.insert(rows_rev.begin(), added.begin(), added.end());
  }
  FMat out(0, W.cols);
  out.cols = W.cols;
  for (const auto& r : rows_rev) out.append_row(r);
  return out;
}

}  // namespace detail

/// Determinant of the generic element sum_{i,j} e_i u^j X_{j,i} on lplus; variable index i*e' + j.
inline MPoly kottwitz_determinant(const LocalModelPair& P, bool generic) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  const int k = P.depth(), fp = ctx.f_prime, nv = fp * k;
  MPoly total = mpoly_const(nv, 1);
  for (int i = 0; i < fp; ++i) {
    if (P.lplus[i].rows == 0) continue;
    FMat W = generic ? P.lplus[i] : detail::u_adapted_basis(F, P.lplus[i], P.rank, k);
    std::vector<FMat> A = detail::u_power_matrices(F, W, P.rank, k);
    const int r = W.rows;
    auto entry = [&](int row, int col) {
      MPoly e;
      for (int j = 0; j < k; ++j) e = mpoly_add(F, e, mpoly_var(nv, i * k + j, A[j](row, col)));
      return e;
    };
    if (generic) {
      std::vector<std::vector<MPoly>> m(r, std::vector<MPoly>(r));
      for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) m[a][b] = entry(a, b);
      total = mpoly_mul(F, total, mpoly_det(F, m, nv));
    } else {
      for (int j = 1; j < k; ++j)
        for (int a = 0; a < r; ++a)
          for (int b = a; b < r; ++b)
            if (A[j](a, b)) throw std::logic_error("u-adapted basis does not triangularize u");
      for (int a = 0; a < r; ++a) total = mpoly_mul(F, total, entry(a, a));
    }
  }
  return total;
}

/// prod_i X_{0,i}^{e'}, the reduction of the norm form.
inline MPoly kottwitz_target(const LocalModelPair& P) {
  const int k = P.depth(), fp = P.ctx->f_prime;
  std::vector<int> mono(fp * k, 0);
  for (int i = 0; i < fp; ++i) mono[i * k] = k;
  MPoly t;
  t.terms[mono] = 1;
  return t;
}

inline bool pair_kottwitz(const LocalModelPair& P, KottwitzMode mode = KottwitzMode::symbolic) {
  if (mode == KottwitzMode::dims) {
    for (const auto& L : P.lplus)
      if (L.rows != P.depth()) return false;
    return true;
  }
  return kottwitz_determinant(P, mode == KottwitzMode::generic) == kottwitz_target(P);
}

/// Whether every 2x2 minor of pairs of lplus basis vectors vanishes over R'.
inline bool wedge_zero(const LocalModelPair& P) {
  if (P.rank != 2) throw PreconditionError("wedge test requires rank 2");
  if (!pair_kottwitz(P, KottwitzMode::dims)) throw PreconditionError("pair does not satisfy the Kottwitz condition");
  const Field& F = P.ctx->F();
  const int k = P.depth();
  for (const auto& L : P.lplus) {
    for (int a = 0; a < L.rows; ++a) {
      auto x = vector_to_series(L.row(a), 2, k, k);
      for (int b = a + 1; b < L.rows; ++b) {
        auto y = vector_to_series(L.row(b), 2, k, k);
        Poly minor = poly_sub(F, poly_mul(F, x[0], y[1]), poly_mul(F, x[1], y[0]));
        if (!poly_is_zero(minor)) return false;
      }
    }
  }
  return true;
}

/// (L+/uL+)_xi = 0 for every xi outside {eta, eta'}.
inline bool condition_two(const LocalModelPair& P, long long eta, long long eta_prime) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  eta = mod_norm(eta, ctx.eK);
  eta_prime = mod_norm(eta_prime, ctx.eK);
  const FMat u = u_power_operator(P.rank, P.depth(), 1);
  for (int i = 0; i < ctx.f_prime; ++i) {
    FMat op = detail::gamma_op(P, i);
    FMat uW = span_basis(F, map_rows(F, u, P.lplus[i]), P.width());
    auto dw = eigen_dims(ctx, op, P.lplus[i]);
    auto du = eigen_dims(ctx, op, uW);
    for (long long xi = 0; xi < ctx.eK; ++xi) {
      if (xi == eta || xi == eta_prime) continue;
      if (dw[xi] != du[xi]) return false;
    }
  }
  return true;
}

/// D(M) agrees with the reduction mod u of psi(M): same inertia and c action, im F = image of L+ in L/uL.
inline bool dieudonne_consistency(const DieudonneModule& D, const LocalModelPair& P) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  const int fp = ctx.f_prime, d = P.rank;
  if (!dieudonne_relations(D)) return false;
  for (int j = 0; j < fp; ++j) {
    if (D.G[j] != smat_eval0(P.gamma[j])) return false;
    if (D.C.has_value() != P.c.has_value()) return false;
    if (D.C && (*D.C)[j] != smat_eval0((*P.c)[j])) return false;
    const int nxt = (j + 1) % fp;
    FMat reduced(0, d);
    reduced.cols = d;
    for (int r = 0; r < P.lplus[nxt].rows; ++r) {
      std::vector<Fe> v(d);
      for (int s = 0; s < d; ++s) v[s] = P.lplus[nxt](r, s);
      reduced.append_row(v);
    }
    FMat imF = span_basis(F, transpose(D.F[j]), d);
    if (span_basis(F, reduced, d) != imF) return false;
  }
  return true;
}

inline bool dieudonne_consistency(const BKModule& M) { return dieudonne_consistency(dieudonne_of(M), psi(M)); }

/// T: Q -> P componentwise is an isomorphism of pairs.
inline bool pair_iso_via(const LocalModelPair& Q, const LocalModelPair& P, const std::vector<SeriesMatrix>& T) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  const int k = P.depth(), fp = ctx.f_prime;
  if (!Q.ctx->same_as(ctx) || Q.rank != P.rank || static_cast<int>(T.size()) != fp) return false;
  for (int i = 0; i < fp; ++i) {
    if (!smat_is_unit(F, T[i])) return false;
    SeriesMatrix lhs = smat_mul(F, P.gamma[i], smat_twist(F, T[i], ctx.zeta_i(i)));
    SeriesMatrix rhs = smat_mul(F, T[i], Q.gamma[i]);
    if (!(lhs == rhs)) return false;
    FMat img = span_basis(F, map_rows(F, detail::mult_op(F, T[i], k), Q.lplus[i]), P.width());
    if (img != P.lplus[i]) return false;
    if (P.c.has_value() != Q.c.has_value()) return false;
    if (P.c) {
      const int j = (i + ctx.f) % fp;
      if (!(smat_mul(F, (*P.c)[i], T[i]) == smat_mul(F, T[j], (*Q.c)[i]))) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------------------------
// Hyperspecial level

/// (L_eta, L+_eta) over R = prod_sigma F[v]/v^e with v = u^{eK}; lplus index m*rank + s for v^m e_s.
struct HyperspecialPair {
  ContextPtr ctx;
  int rank = 2;
  std::vector<FMat> lplus;
  bool operator==(const HyperspecialPair& o) const {
    return ctx->same_as(*o.ctx) && rank == o.rank && lplus == o.lplus;
  }
};

namespace detail {

inline void require_totally_ramified(const ArithmeticContext& ctx) {
  if (ctx.flavor == Flavor::cuspidal) throw LocModelError("conversion requires K'/K totally ramified");
}

/// Columns u^{m eK} v_k (m < e) for the frame vectors v_k, index m*rank + k.
inline FMat frame_matrix(const ArithmeticContext& ctx, const std::vector<std::vector<Fe>>& frame, int d) {
  const Field& F = ctx.F();
  const int k = static_cast<int>(ctx.e_prime);
  const FMat v = u_power_operator(d, k, static_cast<int>(ctx.eK));
  const int r = static_cast<int>(frame.size());
  std::vector<std::vector<Fe>> cols(static_cast<std::size_t>(ctx.e) * r);
  for (int s = 0; s < r; ++s) {
    std::vector<Fe> cur = frame[s];
    for (int m = 0; m < ctx.e; ++m) {
      cols[m * r + s] = cur;
      cur = apply(F, v, cur);
    }
  }
  return columns_to_fmat(cols, d * k);
}

inline FMat coords_of_rows(const Field& F, const FMat& B, const FMat& rows) {
  FMat out(0, B.cols);
  out.cols = B.cols;
  for (int r = 0; r < rows.rows; ++r) out.append_row(coords_in(F, B, rows.row(r)));
  return span_basis(F, out, B.cols);
}

}  // namespace detail

/// Frame vectors P_eta(e_s) per component, as series matrices (column s).
inline std::vector<SeriesMatrix> hyperspecial_frame(const LocalModelPair& P, long long eta) {
  const auto& ctx = *P.ctx;
  std::vector<SeriesMatrix> out;
  for (int i = 0; i < ctx.f_prime; ++i) {
    FMat proj = eigen_projector(ctx, detail::gamma_op(P, i), eta);
    std::vector<std::vector<Fe>> cols;
    for (int s = 0; s < P.rank; ++s) cols.push_back(apply(ctx.F(), proj, detail::unit_vector(P.width(), s)));
    out.push_back(detail::flat_columns_to_series(cols, P.rank, P.depth()));
  }
  return out;
}

inline HyperspecialPair to_hyperspecial(const LocalModelPair& P, long long eta) {
  const auto& ctx = *P.ctx;
  detail::require_totally_ramified(ctx);
  eta = mod_norm(eta, ctx.eK);
  TameType t = pair_type(P);
  for (const auto& tau : t.tau)
    for (long long x : tau)
      if (x != eta) throw LocModelError("type is not the scalar type eta + eta");
  const Field& F = ctx.F();
  HyperspecialPair H{P.ctx, P.rank, {}};
  for (int i = 0; i < ctx.f_prime; ++i) {
    FMat proj = eigen_projector(ctx, detail::gamma_op(P, i), eta);
    std::vector<std::vector<Fe>> frame;
    for (int s = 0; s < P.rank; ++s) frame.push_back(apply(F, proj, detail::unit_vector(P.width(), s)));
    FMat B = detail::frame_matrix(ctx, frame, P.rank);
    H.lplus.push_back(detail::coords_of_rows(F, B, map_rows(F, proj, P.lplus[i])));
  }
  return H;
}

inline LocalModelPair from_hyperspecial(const HyperspecialPair& H, long long eta) {
  const auto& ctx = *H.ctx;
  detail::require_totally_ramified(ctx);
  const Field& F = ctx.F();
  const int k = static_cast<int>(ctx.e_prime), d = H.rank;
  LocalModelPair P{H.ctx, d, {}, std::nullopt, {}};
  for (int i = 0; i < ctx.f_prime; ++i) {
    P.gamma.push_back(smat_identity(d, k, ctx.zeta_power(eta)));
    FMat rows(0, d * k);
    rows.cols = d * k;
    const FMat& L = H.lplus[i];
    for (int r = 0; r < L.rows; ++r)
      for (long long j = 0; j < ctx.eK; ++j) {
        std::vector<Fe> v(d * k, 0);
        for (int m = 0; m < ctx.e; ++m)
          for (int s = 0; s < d; ++s) v[(m * ctx.eK + j) * d + s] = L(r, m * d + s);
        rows.append_row(v);
      }
    P.lplus.push_back(span_basis(F, rows, d * k));
  }
  return P;
}

inline bool hyperspecial_bt(const HyperspecialPair& H) {
  for (const auto& L : H.lplus)
    if (L.rows != H.ctx->e) return false;
  return true;
}

// ---------------------------------------------------------------------------------------------
// Iwahori level

/// (L1, L1+, L2, L2+, f1, f2) per embedding; L1, L2 are R-free with fixed frames, lplus index m*2 + s.
struct IwahoriDatum {
  ContextPtr ctx;
  long long eta = 0, eta_prime = 0;
  std::vector<std::pair<long long, long long>> ab;
  std::vector<FMat> l1plus, l2plus;
  std::vector<SeriesMatrix> f1, f2;  // 2x2 over F[v]/v^e

  int components() const { return static_cast<int>(ab.size()); }
  bool operator==(const IwahoriDatum& o) const {
    return ctx->same_as(*o.ctx) && eta == o.eta && eta_prime == o.eta_prime && ab == o.ab && l1plus == o.l1plus &&
           l2plus == o.l2plus && f1 == o.f1 && f2 == o.f2;
  }
};

inline std::vector<std::string> iwahori_problems(const IwahoriDatum& I) {
  const auto& ctx = *I.ctx;
  const Field& F = ctx.F();
  const int e = ctx.e;
  std::vector<std::string> out;
  SeriesMatrix v = smat_identity(2, e);
  for (auto& poly : v.entries) poly = poly_shift_up(poly, 1);
  const FMat vop = u_power_operator(2, e, 1);
  for (int i = 0; i < I.components(); ++i) {
    const std::string tag = "embedding " + std::to_string(i) + ": ";
    if (!(smat_mul(F, I.f1[i], I.f2[i]) == v) || !(smat_mul(F, I.f2[i], I.f1[i]) == v))
      out.push_back(tag + "f1 f2 != v");
    FMat op1 = detail::mult_op(F, I.f1[i], e), op2 = detail::mult_op(F, I.f2[i], e);
    if (2 * e - fmat_rank(F, op1) != 1) out.push_back(tag + "coker f1 is not one-dimensional");
    if (2 * e - fmat_rank(F, op2) != 1) out.push_back(tag + "coker f2 is not one-dimensional");
    if (!detail::contains(F, I.l1plus[i], map_rows(F, vop, I.l1plus[i]))) out.push_back(tag + "L1+ not v-stable");
    if (!detail::contains(F, I.l2plus[i], map_rows(F, vop, I.l2plus[i]))) out.push_back(tag + "L2+ not v-stable");
    if (!detail::contains(F, I.l2plus[i], map_rows(F, op1, I.l1plus[i]))) out.push_back(tag + "f1(L1+) not in L2+");
    if (!detail::contains(F, I.l1plus[i], map_rows(F, op2, I.l2plus[i]))) out.push_back(tag + "f2(L2+) not in L1+");
  }
  return out;
}

inline bool iwahori_bt(const IwahoriDatum& I) {
  for (int i = 0; i < I.components(); ++i)
    if (I.l1plus[i].rows != I.ctx->e || I.l2plus[i].rows != I.ctx->e) return false;
  return true;
}

/// Iwahori datum together with the frames (flat vectors in L_i) it was read in.
struct IwahoriConversion {
  IwahoriDatum datum;
  std::vector<FMat> frame1, frame2;  // frame matrices, columns v^m b_k
};

namespace detail {

/// The distinct characters (eta, eta') of an unmixed non-scalar type; eta must occur.
inline long long other_character(const TameType& t, long long eta) {
  if (!t.unmixed()) throw LocModelError("type is mixed");
  const auto& tau = t.tau.front();
  if (tau.size() != 2) throw LocModelError("Iwahori conversion requires rank 2");
  if (tau[0] == tau[1]) throw LocModelError("type is scalar");
  if (tau[0] != eta && tau[1] != eta) throw LocModelError("eta is not a summand of the type");
  return tau[0] == eta ? tau[1] : tau[0];
}

inline IwahoriConversion iwahori_all_components(const LocalModelPair& P, long long eta) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  eta = mod_norm(eta, ctx.eK);
  const long long eta_p = other_character(pair_type(P), eta);
  IwahoriConversion out;
  out.datum = IwahoriDatum{P.ctx, eta, eta_p, ab_exponents(ctx, eta, eta_p), {}, {}, {}, {}};
  const int w = P.width(), e = ctx.e;
  for (int i = 0; i < ctx.f_prime; ++i) {
    const auto [a, b] = out.datum.ab[i];
    FMat op = gamma_op(P, i);
    FMat p1 = eigen_projector(ctx, op, eta), p2 = eigen_projector(ctx, op, eta_p);
    FMat g0 = smat_eval0(P.gamma[i]);
    auto lift = [&](long long ch) {
      std::vector<Fe> line = eigenline(ctx, g0, ch);
      std::vector<Fe> v(w, 0);
      for (int s = 0; s < P.rank; ++s) v[s] = line[s];
      return v;
    };
    std::vector<Fe> b1 = apply(F, p1, lift(eta)), b2 = apply(F, p2, lift(eta_p));
    const FMat ua = u_power_operator(P.rank, P.depth(), static_cast<int>(a));
    const FMat ub = u_power_operator(P.rank, P.depth(), static_cast<int>(b));
    FMat B1 = frame_matrix(ctx, {b1, apply(F, ub, b2)}, P.rank);
    FMat B2 = frame_matrix(ctx, {b2, apply(F, ua, b1)}, P.rank);
    out.datum.l1plus.push_back(coords_of_rows(F, B1, map_rows(F, p1, P.lplus[i])));
    out.datum.l2plus.push_back(coords_of_rows(F, B2, map_rows(F, p2, P.lplus[i])));
    SeriesMatrix f1(2, 2, e), f2(2, 2, e);
    for (int col = 0; col < 2; ++col) {
      std::vector<Fe> c1 = coords_in(F, B2, apply(F, ua, transpose(B1).row(col)));
      std::vector<Fe> c2 = coords_in(F, B1, apply(F, ub, transpose(B2).row(col)));
      for (int m = 0; m < e; ++m)
        for (int s = 0; s < 2; ++s) {
          f1.at(s, col)[m] = c1[m * 2 + s];
          f2.at(s, col)[m] = c2[m * 2 + s];
        }
    }
    out.datum.f1.push_back(f1);
    out.datum.f2.push_back(f2);
    out.frame1.push_back(B1);
    out.frame2.push_back(B2);
  }
  return out;
}

}  // namespace detail

inline IwahoriConversion to_iwahori_detailed(const LocalModelPair& P, long long eta) {
  if (P.ctx->flavor != Flavor::principal_series) throw LocModelError("Iwahori conversion requires the principal-series flavor");
  return detail::iwahori_all_components(P, eta);
}

inline IwahoriDatum to_iwahori(const LocalModelPair& P, long long eta) { return to_iwahori_detailed(P, eta).datum; }

/// Pair rebuilt from an Iwahori datum, with the change of basis from the chain of copies to L.
struct IwahoriAssembly {
  LocalModelPair pair;
  std::vector<FMat> basis;          // columns u^n x, u^n y (index n*2 + k) in copy coordinates
  std::vector<FMat> basis_inverse;  // copy coordinates -> L coordinates
  std::vector<std::vector<Fe>> x, y;  // generators, flat in L1 resp. L2
};

inline IwahoriAssembly from_iwahori_detailed(const IwahoriDatum& I) {
  const auto& ctx = *I.ctx;
  const Field& F = ctx.F();
  if (I.components() != ctx.f_prime) throw LocModelError("datum does not cover every component of K'");
  const int e = ctx.e, k = static_cast<int>(ctx.e_prime), blk = 2 * e, w = 2 * k;
  IwahoriAssembly out;
  out.pair = LocalModelPair{I.ctx, 2, {}, std::nullopt, {}};
  for (int i = 0; i < I.components(); ++i) {
    const int a = static_cast<int>(I.ab[i].first), b = static_cast<int>(I.ab[i].second);
    if (a + b != ctx.eK) throw LocModelError("exponents do not sum to eK");
    FMat op1 = detail::mult_op(F, I.f1[i], e), op2 = detail::mult_op(F, I.f2[i], e);
    FMat U(w, w);
    for (int c = 0; c < a + b; ++c) {
      const int target = (c + 1) % (a + b);
      const FMat* m = nullptr;
      if (c == a - 1) m = &op1;
      if (c == a + b - 1) m = &op2;
      for (int r = 0; r < blk; ++r)
        for (int s = 0; s < blk; ++s) {
          Fe val = m ? (*m)(r, s) : Fe(r == s ? 1 : 0);
          U(target * blk + r, c * blk + s) = val;
        }
    }
    auto generator = [&](const FMat& image_op) {
      FMat im = span_basis(F, transpose(image_op), blk);
      for (int t = 0; t < blk; ++t) {
        FMat trial = stack_rows(im, FMat(0, blk));
        trial.append_row(detail::unit_vector(blk, t));
        if (fmat_rank(F, trial) > im.rows) return detail::unit_vector(blk, t);
      }
      throw LocModelError("f is surjective; cokernel is zero");
    };
    std::vector<Fe> x = generator(op2), y = generator(op1);
    std::vector<Fe> xs(w, 0), ys(w, 0);
    for (int t = 0; t < blk; ++t) {
      xs[t] = x[t];
      ys[a * blk + t] = y[t];
    }
    std::vector<std::vector<Fe>> cols(w);
    for (int n = 0; n < k; ++n) {
      cols[n * 2] = xs;
      cols[n * 2 + 1] = ys;
      xs = apply(F, U, xs);
      ys = apply(F, U, ys);
    }
    FMat B = detail::columns_to_fmat(cols, w);
    auto Binv = fmat_inverse(F, B);
    if (!Binv) throw LocModelError("generators do not span the chain");
    FMat plus(0, w);
    plus.cols = w;
    for (int c = 0; c < a + b; ++c) {
      const FMat& src = c < a ? I.l1plus[i] : I.l2plus[i];
      for (int r = 0; r < src.rows; ++r) {
        std::vector<Fe> v(w, 0);
        for (int t = 0; t < blk; ++t) v[c * blk + t] = src(r, t);
        plus.append_row(apply(F, *Binv, v));
      }
    }
    SeriesMatrix G(2, 2, k);
    G.at(0, 0)[0] = ctx.zeta_power(I.eta);
    G.at(1, 1)[0] = ctx.zeta_power(I.eta_prime);
    out.pair.gamma.push_back(G);
    out.pair.lplus.push_back(span_basis(F, plus, w));
    out.basis.push_back(B);
    out.basis_inverse.push_back(*Binv);
    out.x.push_back(x);
    out.y.push_back(y);
  }
  return out;
}

inline LocalModelPair from_iwahori(const IwahoriDatum& I) { return from_iwahori_detailed(I).pair; }

/// to_iwahori(from_iwahori(I)) is identified with I through the generators x, y.
inline bool iwahori_roundtrip_to_from(const IwahoriDatum& I) {
  const auto& ctx = *I.ctx;
  const Field& F = ctx.F();
  IwahoriAssembly A = from_iwahori_detailed(I);
  IwahoriConversion C = detail::iwahori_all_components(A.pair, I.eta);
  if (C.datum.ab != I.ab || C.datum.eta_prime != I.eta_prime) return false;
  const int e = ctx.e, blk = 2 * e, w = 2 * static_cast<int>(ctx.e_prime);
  for (int i = 0; i < I.components(); ++i) {
    const int a = static_cast<int>(I.ab[i].first);
    // S1: L1 -> L1', S2: L2 -> L2' as F-linear maps in the frames.
    FMat S1(blk, blk), S2(blk, blk);
    for (int t = 0; t < blk; ++t) {
      std::vector<Fe> z1(w, 0), z2(w, 0);
      z1[t] = 1;
      z2[a * blk + t] = 1;
      auto c1 = solve(F, C.frame1[i], apply(F, A.basis_inverse[i], z1));
      auto c2 = solve(F, C.frame2[i], apply(F, A.basis_inverse[i], z2));
      if (!c1 || !c2) return false;
      for (int r = 0; r < blk; ++r) {
        S1(r, t) = (*c1)[r];
        S2(r, t) = (*c2)[r];
      }
    }
    if (!fmat_inverse(F, S1) || !fmat_inverse(F, S2)) return false;
    FMat f1 = detail::mult_op(F, I.f1[i], e), f2 = detail::mult_op(F, I.f2[i], e);
    FMat f1p = detail::mult_op(F, C.datum.f1[i], e), f2p = detail::mult_op(F, C.datum.f2[i], e);
    if (fmat_mul(F, f1p, S1) != fmat_mul(F, S2, f1)) return false;
    if (fmat_mul(F, f2p, S2) != fmat_mul(F, S1, f2)) return false;
    if (span_basis(F, map_rows(F, S1, I.l1plus[i]), blk) != C.datum.l1plus[i]) return false;
    if (span_basis(F, map_rows(F, S2, I.l2plus[i]), blk) != C.datum.l2plus[i]) return false;
  }
  return true;
}

/// from_iwahori(to_iwahori(P)) is isomorphic to P through the frames.
inline bool iwahori_roundtrip_from_to(const LocalModelPair& P, long long eta) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  IwahoriConversion C = to_iwahori_detailed(P, eta);
  IwahoriAssembly A = from_iwahori_detailed(C.datum);
  std::vector<SeriesMatrix> T;
  for (int i = 0; i < ctx.f_prime; ++i) {
    std::vector<Fe> xp = apply(F, C.frame1[i], A.x[i]);
    std::vector<Fe> yp = apply(F, C.frame2[i], A.y[i]);
    T.push_back(detail::flat_columns_to_series({xp, yp}, 2, P.depth()));
  }
  return pair_iso_via(A.pair, P, T);
}

inline bool hyperspecial_roundtrip_from_to(const LocalModelPair& P, long long eta) {
  return pair_iso_via(from_hyperspecial(to_hyperspecial(P, eta), eta), P, hyperspecial_frame(P, eta));
}

// ---------------------------------------------------------------------------------------------
// Cuspidal level

/// The e1-block of the Iwahori datum of a cuspidal pair, plus the matrices of c between frames.
struct CuspidalIwahori {
  IwahoriDatum block;
  std::vector<SeriesMatrix> theta11;  // c: L1_j -> L2_{j+f}
  std::vector<SeriesMatrix> theta21;  // c: L2_j -> L1_{j+f}
  bool second_lift = false;
  bool operator==(const CuspidalIwahori& o) const {
    return block == o.block && theta11 == o.theta11 && theta21 == o.theta21 && second_lift == o.second_lift;
  }
};

namespace detail {

inline SeriesMatrix coords_matrix(const Field& F, const FMat& target_frame, const std::vector<std::vector<Fe>>& vecs,
                                  int e) {
  SeriesMatrix m(2, static_cast<int>(vecs.size()), e);
  for (int col = 0; col < m.cols; ++col) {
    std::vector<Fe> c = coords_in(F, target_frame, vecs[col]);
    for (int t = 0; t < e; ++t)
      for (int s = 0; s < 2; ++s) m.at(s, col)[t] = c[t * 2 + s];
  }
  return m;
}

}  // namespace detail

inline CuspidalIwahori cuspidal_to_iwahori(const LocalModelPair& P, std::optional<long long> eta_opt = std::nullopt,
                                           bool second_lift = false) {
  const auto& ctx = *P.ctx;
  const Field& F = ctx.F();
  if (ctx.flavor != Flavor::cuspidal) throw LocModelError("cuspidal conversion requires the cuspidal flavor");
  if (!P.c) throw LocModelError("pair carries no c data");
  TameType t = pair_type(P);
  if (!t.unmixed() || t.tau.front().size() != 2 || t.tau.front()[0] == t.tau.front()[1])
    throw LocModelError("type is not eta + eta' with eta != eta'");
  const long long eta = mod_norm(eta_opt.value_or(t.tau.front()[0]), ctx.eK);
  const long long eta_p = detail::other_character(t, eta);
  if (mod_norm(eta * ipow(ctx.p, ctx.f), ctx.eK) != eta_p) throw LocModelError("eta' is not eta^{p^f}");
  IwahoriConversion full = detail::iwahori_all_components(P, eta);
  const int f = ctx.f, e = ctx.e, k = P.depth();
  CuspidalIwahori out;
  out.second_lift = second_lift;
  out.block = IwahoriDatum{P.ctx, eta, eta_p, {}, {}, {}, {}, {}};
  for (int j0 = 0; j0 < f; ++j0) {
    const int j = second_lift ? j0 + f : j0;
    const int tgt = (j + f) % ctx.f_prime;
    out.block.ab.push_back(full.datum.ab[j]);
    out.block.l1plus.push_back(full.datum.l1plus[j]);
    out.block.l2plus.push_back(full.datum.l2plus[j]);
    out.block.f1.push_back(full.datum.f1[j]);
    out.block.f2.push_back(full.datum.f2[j]);
    FMat cop = detail::mult_op(F, (*P.c)[j], k);
    FMat B1t = transpose(full.frame1[j]), B2t = transpose(full.frame2[j]);
    out.theta11.push_back(
        detail::coords_matrix(F, full.frame2[tgt], {apply(F, cop, B1t.row(0)), apply(F, cop, B1t.row(1))}, e));
    out.theta21.push_back(
        detail::coords_matrix(F, full.frame1[tgt], {apply(F, cop, B2t.row(0)), apply(F, cop, B2t.row(1))}, e));
  }
  return out;
}

/// The full 2f-component datum recovered from the block and the c-matrices.
inline IwahoriDatum cuspidal_reassemble(const CuspidalIwahori& CI) {
  const auto& ctx = *CI.block.ctx;
  const Field& F = ctx.F();
  const int f = ctx.f, e = ctx.e;
  IwahoriDatum out{CI.block.ctx, CI.block.eta, CI.block.eta_prime, {}, {}, {}, {}, {}};
  out.ab.resize(2 * f);
  out.l1plus.resize(2 * f);
  out.l2plus.resize(2 * f);
  out.f1.resize(2 * f);
  out.f2.resize(2 * f);
  for (int j0 = 0; j0 < f; ++j0) {
    const int j = CI.second_lift ? j0 + f : j0;
    const int o = (j + f) % (2 * f);
    const auto& th11 = CI.theta11[j0];
    const auto& th21 = CI.theta21[j0];
    SeriesMatrix inv11 = smat_unit_inverse(F, th11), inv21 = smat_unit_inverse(F, th21);
    out.ab[j] = CI.block.ab[j0];
    out.l1plus[j] = CI.block.l1plus[j0];
    out.l2plus[j] = CI.block.l2plus[j0];
    out.f1[j] = CI.block.f1[j0];
    out.f2[j] = CI.block.f2[j0];
    out.ab[o] = {CI.block.ab[j0].second, CI.block.ab[j0].first};
    out.l1plus[o] = span_basis(F, map_rows(F, detail::mult_op(F, th21, e), CI.block.l2plus[j0]), 2 * e);
    out.l2plus[o] = span_basis(F, map_rows(F, detail::mult_op(F, th11, e), CI.block.l1plus[j0]), 2 * e);
    out.f1[o] = smat_mul(F, smat_mul(F, th11, CI.block.f2[j0]), inv21);
    out.f2[o] = smat_mul(F, smat_mul(F, th21, CI.block.f1[j0]), inv11);
  }
  return out;
}

/// Cuspidal pair assembled from a block and c-matrices: the chain construction on every component plus c.
inline LocalModelPair cuspidal_from_iwahori(const CuspidalIwahori& CI) {
  const auto& ctx = *CI.block.ctx;
  const Field& F = ctx.F();
  if (ctx.flavor != Flavor::cuspidal) throw LocModelError("cuspidal assembly requires the cuspidal flavor");
  IwahoriDatum full = cuspidal_reassemble(CI);
  IwahoriAssembly A = from_iwahori_detailed(full);
  const int f = ctx.f, e = ctx.e, blk = 2 * e, k = static_cast<int>(ctx.e_prime), w = 2 * k;
  std::vector<SeriesMatrix> th11(2 * f), th21(2 * f);
  for (int j0 = 0; j0 < f; ++j0) {
    const int j = CI.second_lift ? j0 + f : j0;
    const int o = (j + f) % (2 * f);
    th11[j] = CI.theta11[j0];
    th21[j] = CI.theta21[j0];
    th11[o] = smat_unit_inverse(F, CI.theta21[j0]);
    th21[o] = smat_unit_inverse(F, CI.theta11[j0]);
  }
  std::vector<SeriesMatrix> C;
  for (int j = 0; j < 2 * f; ++j) {
    const int o = (j + f) % (2 * f);
    const int a_o = static_cast<int>(full.ab[o].first);
    std::vector<Fe> cx = apply(F, detail::mult_op(F, th11[j], e), A.x[j]);
    std::vector<Fe> cy = apply(F, detail::mult_op(F, th21[j], e), A.y[j]);
    std::vector<Fe> vx(w, 0), vy(w, 0);
    for (int t = 0; t < blk; ++t) {
      vx[a_o * blk + t] = cx[t];
      vy[t] = cy[t];
    }
    C.push_back(detail::flat_columns_to_series({apply(F, A.basis_inverse[o], vx), apply(F, A.basis_inverse[o], vy)}, 2, k));
  }
  A.pair.c = C;
  return A.pair;
}

}  // namespace bklab
