#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bklab/bk.hpp"

namespace bklab {

/// D = M/uM with F_j: D_j -> D_{j+1}, V_j: D_{j+1} -> D_j, the inertia action G_j and optional C_j: D_j -> D_{j+f}.
struct DieudonneModule {
  ContextPtr ctx;
  int rank = 0;
  std::vector<FMat> F, V, G;
  std::optional<std::vector<FMat>> C;
};

inline DieudonneModule dieudonne_of(const BKModule& M) {
  check_shape(M);
  const auto& ctx = *M.ctx;
  const Field& F = ctx.F();
  const int fp = ctx.f_prime;
  const int k = static_cast<int>(ctx.e_prime);
  if (M.precision < k + 1) throw BKError("precision too small to extract V");
  DieudonneModule D{M.ctx, M.rank, {}, {}, {}, std::nullopt};
  const Fe cinv = F.inv(ctx.cbar);
  for (int j = 0; j < fp; ++j) {
    const SeriesMatrix& phi = M.phi[(j + 1) % fp];
    D.F.push_back(smat_eval0(phi));
    auto X = scaled_inverse(F, phi, k);
    if (!X) throw BKError("multiplication by u^e' does not factor through phi on component " + std::to_string(j + 1));
    D.V.push_back(fmat_scale(F, cinv, smat_eval0(*X)));
    D.G.push_back(smat_eval0(M.gamma[j]));
  }
  if (M.c) {
    std::vector<FMat> C;
    for (const auto& c : *M.c) C.push_back(smat_eval0(c));
    D.C = C;
  }
  return D;
}

/// F V = V F = 0 on every component.
inline bool dieudonne_relations(const DieudonneModule& D) {
  const Field& F = D.ctx->F();
  for (std::size_t j = 0; j < D.F.size(); ++j) {
    if (!fmat_mul(F, D.F[j], D.V[j]).is_zero()) return false;
    if (!fmat_mul(F, D.V[j], D.F[j]).is_zero()) return false;
  }
  return true;
}

struct DieudonneCoordinates {
  std::vector<Fe> X, Y;
  std::optional<Fe> alpha;  // cuspidal only; nullopt means indeterminate
  bool cuspidal = false;
  bool operator==(const DieudonneCoordinates& o) const {
    return X == o.X && Y == o.Y && alpha == o.alpha && cuspidal == o.cuspidal;
  }
};

namespace detail {

/// Basis vector of a one-dimensional eigenspace, first nonzero coordinate equal to 1.
inline std::vector<Fe> eigenline(const ArithmeticContext& ctx, const FMat& g, long long n) {
  const Field& F = ctx.F();
  FMat shifted = g;
  for (int k = 0; k < g.rows; ++k) shifted(k, k) = F.sub(shifted(k, k), ctx.zeta_power(n));
  FMat ker = kernel(F, shifted);
  if (ker.rows != 1) throw BKError("eigenspace is not a line");
  return ker.row(0);
}

/// s with v = s * b, for b nonzero; throws when v is not on the line.
inline Fe line_scalar(const Field& F, const std::vector<Fe>& v, const std::vector<Fe>& b) {
  int lead = -1;
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k]) {
      lead = static_cast<int>(k);
      break;
    }
  Fe s = F.div(v[lead], b[lead]);
  for (std::size_t k = 0; k < b.size(); ++k)
    if (v[k] != F.mul(s, b[k])) throw BKError("map does not preserve the eigenlines");
  return s;
}

inline std::vector<Fe> scale_vec(const Field& F, Fe s, std::vector<Fe> v) {
  for (Fe& x : v) x = F.mul(s, x);
  return v;
}

}  // namespace detail

/// Type of D as read from the constant inertia action.
inline TameType dieudonne_type(const DieudonneModule& D) {
  TameType t;
  for (const auto& g : D.G) t.tau.push_back(character_multiset(*D.ctx, g));
  return t;
}

/// Coordinates in the canonical eigenbases rescaled by gauge[j] (one scalar per canonical line).
inline DieudonneCoordinates eta_coordinates(const DieudonneModule& D, long long eta,
                                            const std::vector<Fe>& gauge = {}) {
  const auto& ctx = *D.ctx;
  const Field& F = ctx.F();
  if (D.rank != 2) throw BKError("eta coordinates require rank 2");
  eta = mod_norm(eta, ctx.eK);
  TameType t = dieudonne_type(D);
  if (!t.unmixed()) throw BKError("type is mixed");
  const auto& tau = t.tau.front();
  if (tau[0] == tau[1]) throw BKError("type is scalar");
  if (tau[0] != eta && tau[1] != eta) throw BKError("eta does not occur in the type");
  const long long eta_prime = tau[0] == eta ? tau[1] : tau[0];
  const bool cusp = ctx.flavor == Flavor::cuspidal;
  if (cusp) {
    if (!D.C) throw BKError("cuspidal Dieudonne module without c data");
    if (mod_norm(eta * ipow(ctx.p, ctx.f), ctx.eK) != eta_prime) throw BKError("eta' is not eta^{p^f}");
  }
  const int f = ctx.f;
  const int canonical = cusp ? f + 1 : f;
  auto scale_of = [&](int j) -> Fe { return j < static_cast<int>(gauge.size()) ? gauge[j] : Fe{1}; };
  std::vector<std::vector<Fe>> b(ctx.f_prime);
  for (int j = 0; j < canonical; ++j) b[j] = detail::scale_vec(F, scale_of(j), detail::eigenline(ctx, D.G[j], eta));
  DieudonneCoordinates out;
  out.cuspidal = cusp;
  for (int j = 0; j < f; ++j) {
    const int nxt = (j + 1) % ctx.f_prime;
    out.X.push_back(detail::line_scalar(F, apply(F, D.F[j], b[j]), b[nxt]));
    out.Y.push_back(detail::line_scalar(F, apply(F, D.V[j], b[nxt]), b[j]));
  }
  if (!cusp) return out;
  bool determined = true;
  for (int j = 0; j + 1 < f && determined; ++j) {
    const int cur = f + j, nxt = f + j + 1;
    if (out.Y[j]) {
      b[nxt] = detail::scale_vec(F, F.inv(out.Y[j]), apply(F, D.F[cur], b[cur]));
    } else if (out.X[j]) {
      std::vector<Fe> c = detail::eigenline(ctx, D.G[nxt], eta);
      Fe s = detail::line_scalar(F, apply(F, D.V[cur], c), b[cur]);
      if (!s) {
        determined = false;
        break;
      }
      b[nxt] = detail::scale_vec(F, F.div(out.X[j], s), c);
    } else {
      determined = false;
    }
  }
  if (determined) {
    const int last = 2 * f - 1;
    if (out.Y[f - 1]) {
      Fe s = detail::line_scalar(F, apply(F, D.F[last], b[last]), b[0]);
      if (s) out.alpha = F.div(s, out.Y[f - 1]);
    } else if (out.X[f - 1]) {
      Fe s = detail::line_scalar(F, apply(F, D.V[last], b[0]), b[last]);
      if (s) out.alpha = F.div(out.X[f - 1], s);
    }
  }
  return out;
}

/// Whether some rescaling of the canonical lines of D1 reproduces the coordinates of D2.
inline bool torus_equivalent(const DieudonneModule& D1, const DieudonneModule& D2, long long eta) {
  const auto& ctx = *D1.ctx;
  const Field& F = ctx.F();
  DieudonneCoordinates target = eta_coordinates(D2, eta);
  const int lines = ctx.flavor == Flavor::cuspidal ? ctx.f + 1 : ctx.f;
  const Fe units = F.order() - 1;
  std::vector<Fe> gauge(lines, 1);
  std::vector<Fe> idx(lines, 0);
  while (true) {
    for (int j = 0; j < lines; ++j) gauge[j] = F.exp(idx[j]);
    if (eta_coordinates(D1, eta, gauge) == target) return true;
    int pos = 1;  // the first scale stays 1; overall scaling acts trivially
    while (pos < lines && ++idx[pos] == units) idx[pos++] = 0;
    if (pos >= lines) return false;
  }
}

struct RankProfile {
  std::vector<int> f_ranks, v_ranks;
  bool operator==(const RankProfile& o) const { return f_ranks == o.f_ranks && v_ranks == o.v_ranks; }
};

inline RankProfile rank_profile(const DieudonneModule& D) {
  RankProfile r;
  for (std::size_t j = 0; j < D.F.size(); ++j) {
    r.f_ranks.push_back(fmat_rank(D.ctx->F(), D.F[j]));
    r.v_ranks.push_back(fmat_rank(D.ctx->F(), D.V[j]));
  }
  return r;
}

}  // namespace bklab
