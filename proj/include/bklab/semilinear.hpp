#pragma once

#include <vector>

#include "bklab/context.hpp"
#include "bklab/linalg.hpp"
#include "bklab/series.hpp"

namespace bklab {

/// F-linear matrix of x(u) -> G(u) x(z u) on (F[u]/u^k)^d, basis index m*d + s for u^m e_s.
inline FMat galois_operator(const Field& F, const SeriesMatrix& G, Fe z, int k) {
  const int d = G.rows;
  FMat op(d * k, d * k);
  Fe zm = 1;
  for (int m = 0; m < k; ++m) {
    for (int r = 0; r < d; ++r) {
      const int col = m * d + r;
      for (int s = 0; s < d; ++s) {
        const Poly& g = G.at(s, r);
        for (int j = 0; m + j < k && j < G.precision; ++j) {
          if (!g[j]) continue;
          op((m + j) * d + s, col) = F.add(op((m + j) * d + s, col), F.mul(zm, g[j]));
        }
      }
    }
    zm = F.mul(zm, z);
  }
  return op;
}

/// F-linear matrix of multiplication by u^j on (F[u]/u^k)^d.
inline FMat u_power_operator(int d, int k, int j) {
  FMat op(d * k, d * k);
  for (int m = 0; m + j < k; ++m)
    for (int s = 0; s < d; ++s) op((m + j) * d + s, m * d + s) = 1;
  return op;
}

/// Projector onto the zeta^n-eigenspace of an operator of order dividing eK.
inline FMat eigen_projector(const ArithmeticContext& ctx, const FMat& op, long long n) {
  const Field& F = ctx.F();
  FMat acc(op.rows, op.cols), power = identity_fmat(op.rows);
  for (long long k = 0; k < ctx.eK; ++k) {
    acc = fmat_add(F, acc, fmat_scale(F, ctx.zeta_power(-n * k), power));
    power = fmat_mul(F, op, power);
  }
  return fmat_scale(F, F.inv(F.from_int(ctx.eK)), acc);
}

/// Dimension of each zeta^n-eigenspace (n in [0, eK)) of an op-stable subspace given by rows.
inline std::vector<int> eigen_dims(const ArithmeticContext& ctx, const FMat& op, const FMat& rows) {
  const Field& F = ctx.F();
  std::vector<int> dims(ctx.eK, 0);
  if (rows.rows == 0) return dims;
  std::vector<FMat> images;
  images.reserve(ctx.eK);
  FMat cur = rows;
  for (long long k = 0; k < ctx.eK; ++k) {
    images.push_back(cur);
    cur = map_rows(F, op, cur);
  }
  Fe inv = F.inv(F.from_int(ctx.eK));
  for (long long n = 0; n < ctx.eK; ++n) {
    FMat acc(rows.rows, rows.cols);
    for (long long k = 0; k < ctx.eK; ++k) acc = fmat_add(F, acc, fmat_scale(F, ctx.zeta_power(-n * k), images[k]));
    dims[n] = fmat_rank(F, fmat_scale(F, inv, acc));
  }
  return dims;
}

/// Row vector (flat index m*d + s) of a column of series, truncated to k.
inline std::vector<Fe> column_vector(const SeriesMatrix& m, int col, int k, int shift = 0) {
  const int d = m.rows;
  std::vector<Fe> v(static_cast<std::size_t>(d) * k, 0);
  for (int s = 0; s < d; ++s) {
    const Poly& x = m.at(s, col);
    for (int j = 0; j + shift < k && j < m.precision; ++j) v[(j + shift) * d + s] = x[j];
  }
  return v;
}

/// F-basis (RREF) of the u-span of the columns of m, modulo u^k.
inline FMat column_span_mod(const Field& F, const SeriesMatrix& m, int k) {
  FMat rows(0, m.rows * k);
  rows.cols = m.rows * k;
  for (int c = 0; c < m.cols; ++c)
    for (int shift = 0; shift < k; ++shift) rows.append_row(column_vector(m, c, k, shift));
  return span_basis(F, rows, m.rows * k);
}

/// Column vectors of a flat vector as series (inverse of column_vector for one column).
inline std::vector<Poly> vector_to_series(const std::vector<Fe>& v, int d, int k, int n) {
  std::vector<Poly> out(d, Poly(n, 0));
  for (int m = 0; m < k && m < n; ++m)
    for (int s = 0; s < d; ++s) out[s][m] = v[m * d + s];
  return out;
}

}  // namespace bklab
