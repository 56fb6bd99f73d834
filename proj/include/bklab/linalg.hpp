#pragma once

#include <optional>
#include <vector>

#include "bklab/field.hpp"

namespace bklab {

/// Dense matrix over a finite field, row-major.
struct FMat {
  int rows = 0;
  int cols = 0;
  std::vector<Fe> a;

  FMat() = default;
  FMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0) {}

  Fe& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  Fe operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const FMat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
  bool operator!=(const FMat& o) const { return !(*this == o); }

  std::vector<Fe> row(int r) const {
    return std::vector<Fe>(a.begin() + static_cast<std::ptrdiff_t>(r) * cols,
                           a.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols);
  }
  void append_row(const std::vector<Fe>& v) {
    if (rows == 0 && cols == 0) cols = static_cast<int>(v.size());
    a.insert(a.end(), v.begin(), v.end());
    ++rows;
  }
  bool is_zero() const {
    for (Fe x : a)
      if (x) return false;
    return true;
  }
};

inline FMat identity_fmat(int n) {
  FMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

inline FMat fmat_mul(const Field& F, const FMat& x, const FMat& y) {
  FMat out(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      Fe v = x(i, k);
      if (!v) continue;
      for (int j = 0; j < y.cols; ++j) out(i, j) = F.add(out(i, j), F.mul(v, y(k, j)));
    }
  return out;
}

inline FMat fmat_add(const Field& F, const FMat& x, const FMat& y) {
  FMat out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = F.add(x.a[i], y.a[i]);
  return out;
}

inline FMat fmat_sub(const Field& F, const FMat& x, const FMat& y) {
  FMat out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = F.sub(x.a[i], y.a[i]);
  return out;
}

inline FMat fmat_scale(const Field& F, Fe s, const FMat& x) {
  FMat out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.a.size(); ++i) out.a[i] = F.mul(s, x.a[i]);
  return out;
}

inline FMat transpose(const FMat& x) {
  FMat out(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
  return out;
}

/// Applies op to a column vector.
inline std::vector<Fe> apply(const Field& F, const FMat& op, const std::vector<Fe>& v) {
  std::vector<Fe> out(op.rows, 0);
  for (int i = 0; i < op.rows; ++i) {
    Fe acc = 0;
    for (int j = 0; j < op.cols; ++j) {
      if (v[j] && op(i, j)) acc = F.add(acc, F.mul(op(i, j), v[j]));
    }
    out[i] = acc;
  }
  return out;
}

struct Echelon {
  FMat rref;
  std::vector<int> pivots;
};

/// Reduced row echelon form with zero rows removed.
inline Echelon row_reduce(const Field& F, FMat m) {
  std::vector<int> pivots;
  int r = 0;
  for (int c = 0; c < m.cols && r < m.rows; ++c) {
    int piv = -1;
    for (int i = r; i < m.rows; ++i)
      if (m(i, c)) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    if (piv != r)
      for (int j = 0; j < m.cols; ++j) std::swap(m(piv, j), m(r, j));
    Fe inv = F.inv(m(r, c));
    for (int j = c; j < m.cols; ++j) m(r, j) = F.mul(inv, m(r, j));
    for (int i = 0; i < m.rows; ++i) {
      if (i == r || !m(i, c)) continue;
      Fe s = m(i, c);
      for (int j = c; j < m.cols; ++j) m(i, j) = F.sub(m(i, j), F.mul(s, m(r, j)));
    }
    pivots.push_back(c);
    ++r;
  }
  FMat out(r, m.cols);
  std::copy(m.a.begin(), m.a.begin() + static_cast<std::ptrdiff_t>(r) * m.cols, out.a.begin());
  return {out, pivots};
}

inline int fmat_rank(const Field& F, const FMat& m) { return static_cast<int>(row_reduce(F, m).pivots.size()); }

/// Canonical basis (RREF rows) of the row span.
inline FMat span_basis(const Field& F, const FMat& rows, int cols) {
  if (rows.rows == 0) return FMat(0, cols);
  return row_reduce(F, rows).rref;
}

/// Right kernel {x : m x = 0}, rows form an RREF basis.
inline FMat kernel(const Field& F, const FMat& m) {
  Echelon e = row_reduce(F, m);
  std::vector<bool> is_pivot(m.cols, false);
  for (int c : e.pivots) is_pivot[c] = true;
  FMat out(0, m.cols);
  out.cols = m.cols;
  for (int free = 0; free < m.cols; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Fe> v(m.cols, 0);
    v[free] = 1;
    for (std::size_t r = 0; r < e.pivots.size(); ++r) v[e.pivots[r]] = F.neg(e.rref(static_cast<int>(r), free));
    out.append_row(v);
  }
  return span_basis(F, out, m.cols);
}

/// Solves m x = b with free variables set to zero.
inline std::optional<std::vector<Fe>> solve(const Field& F, const FMat& m, const std::vector<Fe>& b) {
  FMat aug(m.rows, m.cols + 1);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) aug(i, j) = m(i, j);
    aug(i, m.cols) = b[i];
  }
  Echelon e = row_reduce(F, aug);
  std::vector<Fe> x(m.cols, 0);
  for (std::size_t r = 0; r < e.pivots.size(); ++r) {
    int c = e.pivots[r];
    if (c == m.cols) return std::nullopt;
    x[c] = e.rref(static_cast<int>(r), m.cols);
  }
  return x;
}

inline std::optional<FMat> fmat_inverse(const Field& F, const FMat& m) {
  if (m.rows != m.cols) return std::nullopt;
  int n = m.rows;
  FMat aug(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug(i, j) = m(i, j);
    aug(i, n + i) = 1;
  }
  Echelon e = row_reduce(F, aug);
  if (static_cast<int>(e.pivots.size()) < n || e.pivots[n - 1] >= n) return std::nullopt;
  FMat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = e.rref(i, n + j);
  return out;
}

inline Fe fmat_det(const Field& F, FMat m) {
  int n = m.rows;
  Fe det = 1;
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int i = c; i < n; ++i)
      if (m(i, c)) {
        piv = i;
        break;
      }
    if (piv < 0) return 0;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
      det = F.neg(det);
    }
    det = F.mul(det, m(c, c));
    Fe inv = F.inv(m(c, c));
    for (int i = c + 1; i < n; ++i) {
      if (!m(i, c)) continue;
      Fe s = F.mul(m(i, c), inv);
      for (int j = c; j < n; ++j) m(i, j) = F.sub(m(i, j), F.mul(s, m(c, j)));
    }
  }
  return det;
}

/// Coordinates c with v = sum_k c_k * basis.row(k), if v lies in the row span.
inline std::optional<std::vector<Fe>> row_coordinates(const Field& F, const FMat& basis, const std::vector<Fe>& v) {
  return solve(F, transpose(basis), v);
}

/// Images of the rows under a linear operator (acting on column vectors).
inline FMat map_rows(const Field& F, const FMat& op, const FMat& rows) {
  FMat out(0, op.rows);
  out.cols = op.rows;
  for (int r = 0; r < rows.rows; ++r) out.append_row(apply(F, op, rows.row(r)));
  return out;
}

inline FMat stack_rows(const FMat& x, const FMat& y) {
  FMat out = x;
  if (out.rows == 0) out.cols = y.cols;
  for (int r = 0; r < y.rows; ++r) out.append_row(y.row(r));
  return out;
}

inline bool same_row_span(const Field& F, const FMat& x, const FMat& y, int cols) {
  return span_basis(F, x, cols) == span_basis(F, y, cols);
}

}  // namespace bklab
