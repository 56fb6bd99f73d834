#pragma once

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bklab/context.hpp"
#include "bklab/linalg.hpp"
#include "bklab/semilinear.hpp"
#include "bklab/series.hpp"

namespace bklab {

struct BKError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Breuil-Kisin module with descent data, in a fixed basis on every component.
struct BKModule {
  ContextPtr ctx;
  int rank = 0;
  int precision = 0;
  std::vector<SeriesMatrix> phi;    // phi[i]: phi^*(M_{i-1}) -> M_i
  std::vector<SeriesMatrix> gamma;  // gamma[i]: action of the inertia generator on M_i
  std::optional<std::vector<SeriesMatrix>> c;  // c[i]: M_i -> M_{i+f}, cuspidal only

  const ArithmeticContext& context() const { return *ctx; }
  bool operator==(const BKModule& o) const {
    return ctx->same_as(*o.ctx) && rank == o.rank && precision == o.precision && phi == o.phi && gamma == o.gamma &&
           c == o.c;
  }
};

inline int default_precision(const ArithmeticContext& ctx) { return static_cast<int>(2 * ctx.e_prime + 2); }

/// Bound n(1) used by the isomorphism search.
inline int conjugacy_bound(const ArithmeticContext& ctx, int h) {
  return static_cast<int>(ctx.e_prime * h / (ctx.p - 1)) + 1;
}

/// Throws unless all matrices have the declared shape and precision.
inline void check_shape(const BKModule& M) {
  if (!M.ctx) throw BKError("module has no context");
  const auto& ctx = *M.ctx;
  if (M.rank < 1) throw BKError("rank must be positive");
  if (M.precision < 1) throw BKError("precision must be positive");
  auto check_list = [&](const std::vector<SeriesMatrix>& list, const std::string& name) {
    if (static_cast<int>(list.size()) != ctx.f_prime)
      throw BKError(name + " must have f' = " + std::to_string(ctx.f_prime) + " components");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& m = list[i];
      if (m.rows != M.rank || m.cols != M.rank)
        throw BKError(name + "[" + std::to_string(i) + "] is not " + std::to_string(M.rank) + "x" +
                      std::to_string(M.rank));
      if (m.precision != M.precision) throw BKError(name + "[" + std::to_string(i) + "] has the wrong precision");
      for (const auto& poly : m.entries) {
        if (static_cast<int>(poly.size()) != M.precision)
          throw BKError(name + "[" + std::to_string(i) + "] has an entry of the wrong length");
        for (Fe x : poly)
          if (x >= ctx.F().order()) throw BKError(name + "[" + std::to_string(i) + "] has a non-field coefficient");
      }
    }
  };
  check_list(M.phi, "phi");
  check_list(M.gamma, "gamma");
  if (M.c) {
    if (ctx.flavor != Flavor::cuspidal) throw BKError("c data is only allowed for the cuspidal flavor");
    check_list(*M.c, "c");
  }
}

struct CheckResult {
  std::string name;
  bool pass = true;
  int component = -1;
  std::optional<SeriesMatrix> residual;
  std::string detail;
};

struct ValidationReport {
  bool pass = true;
  int height = 1;
  std::vector<CheckResult> checks;
  std::vector<std::optional<std::vector<int>>> divisors;

  const CheckResult* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }
};

/// The n-fold semilinear composite G(u) G(z u) ... G(z^{n-1} u).
inline SeriesMatrix semilinear_power(const Field& F, const SeriesMatrix& G, Fe z, long long n) {
  SeriesMatrix acc = smat_identity(G.rows, G.precision);
  Fe zk = 1;
  for (long long k = 0; k < n; ++k) {
    acc = smat_mul(F, acc, smat_twist(F, G, zk));
    zk = F.mul(zk, z);
  }
  return acc;
}

inline ValidationReport validate(const BKModule& M, int h = 1) {
  check_shape(M);
  const auto& ctx = *M.ctx;
  const Field& F = ctx.F();
  if (h < 1) throw BKError("height must be positive");
  if (M.precision < ctx.e_prime * h + 1)
    throw BKError("precision " + std::to_string(M.precision) + " is below e'h + 1 = " +
                  std::to_string(ctx.e_prime * h + 1));
  ValidationReport rep;
  rep.height = h;
  auto add = [&](CheckResult r) {
    if (!r.pass) rep.pass = false;
    rep.checks.push_back(std::move(r));
  };
  const int fp = ctx.f_prime;
  for (int i = 0; i < fp; ++i) {
    auto div = elementary_divisors(F, M.phi[i]);
    rep.divisors.push_back(div);
    CheckResult r{"height", true, i, std::nullopt, ""};
    if (!div) {
      r.pass = false;
      r.detail = "phi is singular modulo u^N";
    } else if (div->back() > h * ctx.e_prime) {
      r.pass = false;
      r.detail = "elementary divisor " + std::to_string(div->back()) + " exceeds h*e' = " +
                 std::to_string(h * ctx.e_prime);
    }
    add(r);
  }
  for (int i = 0; i < fp; ++i) {
    CheckResult r{"gamma_unit", smat_is_unit(F, M.gamma[i]), i, std::nullopt, ""};
    if (!r.pass) r.detail = "gamma is not invertible at u = 0";
    add(r);
  }
  for (int i = 0; i < fp; ++i) {
    const int prev = (i - 1 + fp) % fp;
    SeriesMatrix lhs = smat_mul(F, M.gamma[i], smat_twist(F, M.phi[i], ctx.zeta_i(i)));
    SeriesMatrix rhs = smat_mul(F, M.phi[i], smat_subst_power(M.gamma[prev], ctx.p));
    SeriesMatrix res = smat_sub(F, lhs, rhs);
    CheckResult r{"commutation", smat_is_zero(res), i, std::nullopt, ""};
    if (!r.pass) {
      r.residual = res;
      r.detail = "gamma_i(u) phi_i(zeta_i u) != phi_i(u) gamma_{i-1}(u^p)";
    }
    add(r);
  }
  for (int i = 0; i < fp; ++i) {
    SeriesMatrix pw = semilinear_power(F, M.gamma[i], ctx.zeta_i(i), ctx.eK);
    SeriesMatrix res = smat_sub(F, pw, smat_identity(M.rank, M.precision));
    CheckResult r{"gamma_order", smat_is_zero(res), i, std::nullopt, ""};
    if (!r.pass) {
      r.residual = res;
      r.detail = "eK-fold composite of gamma is not the identity";
    }
    add(r);
  }
  if (ctx.flavor == Flavor::cuspidal) {
    if (!M.c) {
      add(CheckResult{"c_present", false, -1, std::nullopt, "cuspidal module without c data"});
    } else {
      const auto& C = *M.c;
      const long long pf = ipow(ctx.p, ctx.f);
      for (int i = 0; i < fp; ++i) {
        const int j = (i + ctx.f) % fp;
        CheckResult unit{"c_unit", smat_is_unit(F, C[i]), i, std::nullopt, ""};
        if (!unit.pass) unit.detail = "c is not invertible at u = 0";
        add(unit);
        SeriesMatrix inv = smat_sub(F, smat_mul(F, C[j], C[i]), smat_identity(M.rank, M.precision));
        CheckResult r1{"c_involution", smat_is_zero(inv), i, std::nullopt, ""};
        if (!r1.pass) {
          r1.residual = inv;
          r1.detail = "c_{i+f} c_i != 1";
        }
        add(r1);
        SeriesMatrix lhs = smat_mul(F, C[i], M.gamma[i]);
        SeriesMatrix rhs =
            smat_mul(F, semilinear_power(F, M.gamma[j], ctx.zeta_i(j), pf), smat_twist(F, C[i], ctx.zeta_i(i)));
        SeriesMatrix res = smat_sub(F, lhs, rhs);
        CheckResult r2{"c_gamma", smat_is_zero(res), i, std::nullopt, ""};
        if (!r2.pass) {
          r2.residual = res;
          r2.detail = "c gamma c^{-1} != gamma^{p^f}";
        }
        add(r2);
        const int prev = (i - 1 + fp) % fp;
        SeriesMatrix lhs3 = smat_mul(F, C[i], M.phi[i]);
        SeriesMatrix rhs3 = smat_mul(F, M.phi[j], smat_subst_power(C[prev], ctx.p));
        SeriesMatrix res3 = smat_sub(F, lhs3, rhs3);
        CheckResult r3{"c_phi", smat_is_zero(res3), i, std::nullopt, ""};
        if (!r3.pass) {
          r3.residual = res3;
          r3.detail = "c does not commute with phi";
        }
        add(r3);
      }
    }
  }
  return rep;
}

/// Per character exponent n in [0, eK), the dimension of the zeta^n-eigenspace of a constant matrix.
inline std::vector<int> eigen_multiplicities(const ArithmeticContext& ctx, const FMat& g) {
  const Field& F = ctx.F();
  std::vector<int> out(ctx.eK, 0);
  for (long long n = 0; n < ctx.eK; ++n) {
    FMat shifted = g;
    for (int k = 0; k < g.rows; ++k) shifted(k, k) = F.sub(shifted(k, k), ctx.zeta_power(n));
    out[n] = g.rows - fmat_rank(F, shifted);
  }
  return out;
}

/// Multiset of characters of a semisimple constant matrix of order dividing eK.
inline std::vector<long long> character_multiset(const ArithmeticContext& ctx, const FMat& g) {
  std::vector<int> mult = eigen_multiplicities(ctx, g);
  std::vector<long long> out;
  for (long long n = 0; n < ctx.eK; ++n)
    for (int k = 0; k < mult[n]; ++k) out.push_back(n);
  if (static_cast<int>(out.size()) != g.rows)
    throw BKError("constant descent matrix is not diagonalizable with eigenvalues in mu_eK");
  return out;
}

inline TameType type_of(const BKModule& M) {
  check_shape(M);
  TameType t;
  for (int i = 0; i < M.ctx->f_prime; ++i) t.tau.push_back(character_multiset(*M.ctx, smat_eval0(M.gamma[i])));
  return t;
}

struct StrongDetReport {
  std::vector<std::vector<int>> dims;  // [i][n]
  std::vector<int> det_valuation;
  std::vector<bool> exact_divisibility;
  bool pass = true;
};

/// Eigen-dimensions of the image of phi_i modulo u^{e'} under the twisted gamma action.
inline std::vector<int> image_eigen_dims(const BKModule& M, int i) {
  const auto& ctx = *M.ctx;
  const int k = static_cast<int>(ctx.e_prime);
  FMat span = column_span_mod(ctx.F(), M.phi[i], k);
  FMat op = galois_operator(ctx.F(), smat_resize(M.gamma[i], k), ctx.zeta_i(i), k);
  return eigen_dims(ctx, op, span);
}

inline StrongDetReport strong_det_check(const BKModule& M, int h = 1) {
  check_shape(M);
  if (M.rank != 2) throw BKError("strong determinant check requires rank 2");
  if (h != 1) throw BKError("strong determinant check requires height 1");
  const auto& ctx = *M.ctx;
  StrongDetReport rep;
  for (int i = 0; i < ctx.f_prime; ++i) {
    auto dims = image_eigen_dims(M, i);
    for (int x : dims)
      if (x != ctx.e) rep.pass = false;
    rep.dims.push_back(dims);
    int v = poly_val(smat_det(ctx.F(), M.phi[i]));
    rep.det_valuation.push_back(v);
    rep.exact_divisibility.push_back(v == ctx.e_prime);
  }
  return rep;
}

/// Same context over a larger coefficient field, with zeta and cbar transported.
inline ContextPtr base_change_context(const ArithmeticContext& ctx, const FieldPtr& target) {
  try {
    FieldEmbedding emb = make_embedding(ctx.field, target);
    FieldSpec spec{target->degree(), target->modulus()};
    return build_context(ctx.p, ctx.f, ctx.e, ctx.flavor, spec, emb(ctx.zeta), emb(ctx.cbar));
  } catch (const FieldError& e) {
    throw BKError(std::string("incompatible field extension: ") + e.what());
  } catch (const ContextError& e) {
    throw BKError(std::string("incompatible field extension: ") + e.what());
  }
}

inline SeriesMatrix smat_embed(const FieldEmbedding& emb, const SeriesMatrix& m) {
  SeriesMatrix out = m;
  for (auto& poly : out.entries)
    for (Fe& x : poly) x = emb(x);
  return out;
}

inline std::vector<SeriesMatrix> embed_list(const FieldEmbedding& emb, const std::vector<SeriesMatrix>& list) {
  std::vector<SeriesMatrix> out;
  for (const auto& m : list) out.push_back(smat_embed(emb, m));
  return out;
}

inline BKModule base_change(const BKModule& M, const FieldPtr& target) {
  check_shape(M);
  ContextPtr ctx2 = base_change_context(*M.ctx, target);
  FieldEmbedding emb = make_embedding(M.ctx->field, target);
  BKModule out{ctx2, M.rank, M.precision, embed_list(emb, M.phi), embed_list(emb, M.gamma), std::nullopt};
  if (M.c) out.c = embed_list(emb, *M.c);
  return out;
}

/// Change of basis by g = (g_i): phi'_i = g_i^{-1} phi_i phi(g_{i-1}), and likewise for the descent data.
inline BKModule conjugate(const BKModule& M, const std::vector<SeriesMatrix>& g) {
  check_shape(M);
  const auto& ctx = *M.ctx;
  const Field& F = ctx.F();
  const int fp = ctx.f_prime;
  if (static_cast<int>(g.size()) != fp) throw BKError("conjugating data must have f' components");
  std::vector<SeriesMatrix> ginv;
  for (const auto& gi : g) {
    if (gi.rows != M.rank || gi.precision != M.precision) throw BKError("conjugating matrix has the wrong shape");
    if (!smat_is_unit(F, gi)) throw BKError("conjugating matrix is not invertible");
    ginv.push_back(smat_unit_inverse(F, gi));
  }
  BKModule out = M;
  for (int i = 0; i < fp; ++i) {
    const int prev = (i - 1 + fp) % fp;
    out.phi[i] = smat_mul(F, smat_mul(F, ginv[i], M.phi[i]), smat_subst_power(g[prev], ctx.p));
    out.gamma[i] = smat_mul(F, smat_mul(F, ginv[i], M.gamma[i]), smat_twist(F, g[i], ctx.zeta_i(i)));
  }
  if (M.c) {
    for (int i = 0; i < fp; ++i) {
      const int j = (i + ctx.f) % fp;
      (*out.c)[i] = smat_mul(F, smat_mul(F, ginv[j], (*M.c)[i]), g[i]);
    }
  }
  return out;
}

/// Random invertible change of basis with entries of degree < max_degree.
inline std::vector<SeriesMatrix> random_conjugator(const ArithmeticContext& ctx, int d, int n, int max_degree,
                                                   std::mt19937_64& rng) {
  const Field& F = ctx.F();
  std::uniform_int_distribution<Fe> coeff(0, F.order() - 1);
  std::vector<SeriesMatrix> g;
  for (int i = 0; i < ctx.f_prime; ++i) {
    SeriesMatrix m(d, d, n);
    do {
      for (auto& poly : m.entries)
        for (int k = 0; k < n; ++k) poly[k] = k < max_degree ? coeff(rng) : 0;
    } while (!smat_is_unit(F, m));
    g.push_back(m);
  }
  return g;
}

/// Relationship between a context and a tame refinement of it.
struct Refinement {
  int ratio = 1;  // e(L'/K')
  FieldEmbedding embedding;
  bool needs_c_identity = false;  // refinement is cuspidal while the base is not
};

inline Refinement check_refinement(const ArithmeticContext& small, const ArithmeticContext& large) {
  if (small.p != large.p || small.f != large.f || small.e != large.e)
    throw BKError("refinement must be over the same base field K");
  if (large.eK % small.eK != 0) throw BKError("eK of the refinement is not a multiple");
  if (large.f_prime % small.f_prime != 0) throw BKError("f' of the refinement is not a multiple");
  if (small.flavor == Flavor::cuspidal && large.flavor != Flavor::cuspidal)
    throw BKError("a cuspidal context only refines to a cuspidal context");
  Refinement r{static_cast<int>(large.eK / small.eK), FieldEmbedding{}, false};
  try {
    r.embedding = make_embedding(small.field, large.field);
  } catch (const FieldError& e) {
    throw BKError(std::string("coefficient fields are incompatible: ") + e.what());
  }
  const Field& F = large.F();
  if (r.embedding(small.zeta) != F.pow(large.zeta, r.ratio))
    throw BKError("zeta of the base is not the e(L'/K')-th power of the refinement's zeta");
  if (r.embedding(small.cbar) != large.cbar) throw BKError("uniformizer constants differ");
  r.needs_c_identity = large.flavor == Flavor::cuspidal && small.flavor != Flavor::cuspidal;
  return r;
}

inline BKModule inflate(const BKModule& M, const ContextPtr& ctxL) {
  check_shape(M);
  const auto& K = *M.ctx;
  const auto& L = *ctxL;
  Refinement ref = check_refinement(K, L);
  const int r = ref.ratio;
  const int n = M.precision * r;
  BKModule out{ctxL, M.rank, n, {}, {}, std::nullopt};
  auto lift = [&](const SeriesMatrix& m) { return smat_subst_power(smat_resize(smat_embed(ref.embedding, m), n), r); };
  for (int i = 0; i < L.f_prime; ++i) {
    out.phi.push_back(lift(M.phi[i % K.f_prime]));
    out.gamma.push_back(lift(M.gamma[i % K.f_prime]));
  }
  if (L.flavor == Flavor::cuspidal) {
    std::vector<SeriesMatrix> c;
    for (int i = 0; i < L.f_prime; ++i) {
      if (ref.needs_c_identity) {
        c.push_back(smat_identity(M.rank, n));
      } else {
        if (!M.c) throw BKError("cuspidal module without c data");
        c.push_back(lift((*M.c)[i % K.f_prime]));
      }
    }
    out.c = c;
  }
  return out;
}

inline TameType inflate_type(const TameType& t, const ArithmeticContext& small, const ArithmeticContext& large) {
  Refinement ref = check_refinement(small, large);
  TameType out;
  for (int i = 0; i < large.f_prime; ++i) {
    std::vector<long long> tau;
    for (long long n : t.tau[i % small.f_prime]) tau.push_back(mod_norm(n * ref.ratio, large.eK));
    std::sort(tau.begin(), tau.end());
    out.tau.push_back(tau);
  }
  return out;
}

namespace detail {

using Section = std::vector<std::vector<Poly>>;  // [component][coordinate]

inline std::vector<Poly> mat_vec(const Field& F, const SeriesMatrix& m, const std::vector<Poly>& v) {
  std::vector<Poly> out(m.rows, Poly(m.precision, 0));
  for (int r = 0; r < m.rows; ++r)
    for (int k = 0; k < m.cols; ++k) out[r] = poly_add(F, out[r], poly_mul(F, m.at(r, k), v[k]));
  return out;
}

inline Section act_gamma(const ArithmeticContext& L, const BKModule& M, const Section& x) {
  const Field& F = L.F();
  Section out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<Poly> tw;
    for (const auto& poly : x[i]) tw.push_back(poly_twist(F, poly, L.zeta_i(static_cast<int>(i))));
    out[i] = mat_vec(F, M.gamma[i], tw);
  }
  return out;
}

inline Section act_c(const ArithmeticContext& L, const BKModule& M, const Section& x) {
  Section out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[(i + L.f) % x.size()] = mat_vec(L.F(), (*M.c)[i], x[i]);
  return out;
}

inline Section section_add(const Field& F, const Section& a, const Section& b) {
  Section out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t s = 0; s < a[i].size(); ++s) out[i][s] = poly_add(F, a[i][s], b[i][s]);
  return out;
}

inline Section section_scale(const Field& F, Fe c, const Section& a) {
  Section out = a;
  for (auto& comp : out)
    for (auto& poly : comp) poly = poly_scale(F, c, poly);
  return out;
}

}  // namespace detail

/// Invariants under Gal(L'/K'), returned as a module over the smaller context.
inline BKModule descend(const BKModule& Mp, const ContextPtr& ctxK) {
  check_shape(Mp);
  const auto& L = *Mp.ctx;
  const auto& K = *ctxK;
  Refinement ref = check_refinement(K, L);
  const Field& F = L.F();
  const int r = ref.ratio;
  const int d = Mp.rank;
  const int n = Mp.precision;
  const int fpL = L.f_prime, fpK = K.f_prime;
  const bool c_in_kernel = L.flavor == Flavor::cuspidal && K.flavor != Flavor::cuspidal;
  if (L.flavor == Flavor::cuspidal && !Mp.c) throw BKError("cuspidal module without c data");
  const long long order = static_cast<long long>(r) * (c_in_kernel ? 2 : 1);
  if (order % L.p == 0) throw BKError("kernel of Gal(L'/K) -> Gal(K'/K) has order divisible by p");
  const Fe inv_order = F.inv(F.from_int(order));

  auto gamma_power = [&](detail::Section x, long long k) {
    for (long long t = 0; t < k; ++t) x = detail::act_gamma(L, Mp, x);
    return x;
  };
  auto average = [&](const detail::Section& x) {
    detail::Section acc(fpL, std::vector<Poly>(d, Poly(n, 0)));
    detail::Section cur = x;
    for (int t = 0; t < r; ++t) {
      acc = detail::section_add(F, acc, cur);
      if (c_in_kernel) acc = detail::section_add(F, acc, detail::act_c(L, Mp, cur));
      cur = gamma_power(cur, K.eK);
    }
    return detail::section_scale(F, inv_order, acc);
  };

  std::vector<std::vector<detail::Section>> basis(fpK);  // basis[j][k]
  for (int j = 0; j < fpK; ++j) {
    std::vector<int> blocks;
    for (int i = j; i < fpL; i += fpK) blocks.push_back(i);
    const int width = static_cast<int>(blocks.size()) * d;
    FMat fibre(0, width);
    fibre.cols = width;
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
      for (int s = 0; s < d; ++s) {
        detail::Section e(fpL, std::vector<Poly>(d, Poly(n, 0)));
        e[blocks[b]][s][0] = 1;
        detail::Section pe = average(e);
        std::vector<Fe> row(width, 0);
        for (int b2 = 0; b2 < static_cast<int>(blocks.size()); ++b2)
          for (int s2 = 0; s2 < d; ++s2) row[b2 * d + s2] = pe[blocks[b2]][s2][0];
        fibre.append_row(row);
      }
    FMat U = span_basis(F, fibre, width);
    if (U.rows != d)
      throw BKError("invariants on component " + std::to_string(j) + " have rank " + std::to_string(U.rows) +
                    " instead of " + std::to_string(d) + "; the type is not inflated");
    FMat head(d, d);
    for (int t = 0; t < d; ++t)
      for (int s = 0; s < d; ++s) head(t, s) = U(t, s);
    auto head_inv = fmat_inverse(F, head);
    if (!head_inv) throw BKError("invariants do not project isomorphically onto component " + std::to_string(j));
    for (int k = 0; k < d; ++k) {
      detail::Section y0(fpL, std::vector<Poly>(d, Poly(n, 0)));
      for (int t = 0; t < d; ++t) {
        Fe lam = (*head_inv)(k, t);
        if (!lam) continue;
        for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
          for (int s = 0; s < d; ++s) y0[blocks[b]][s][0] = F.add(y0[blocks[b]][s][0], F.mul(lam, U(t, b * d + s)));
      }
      basis[j].push_back(average(y0));
    }
  }

  auto block_matrix = [&](const std::vector<detail::Section>& cols, int comp) {
    SeriesMatrix m(d, d, n);
    for (int k = 0; k < d; ++k)
      for (int s = 0; s < d; ++s) m.at(s, k) = cols[k][comp][s];
    return m;
  };
  const int nK = (n + r - 1) / r;
  auto to_small = [&](const SeriesMatrix& m, const std::string& what) {
    SeriesMatrix out(m.rows, m.cols, nK);
    for (std::size_t idx = 0; idx < m.entries.size(); ++idx) {
      for (int t = 0; t < n; ++t) {
        Fe x = m.entries[idx][t];
        if (!x) continue;
        if (t % r != 0) throw BKError(what + " is not defined over the smaller extension");
        out.entries[idx][t / r] = x;
      }
    }
    return out;
  };
  std::vector<SeriesMatrix> Yinv(fpK);
  for (int j = 0; j < fpK; ++j) Yinv[j] = smat_unit_inverse(F, block_matrix(basis[j], j));

  BKModule out{ctxK, d, nK, {}, {}, std::nullopt};
  for (int j = 0; j < fpK; ++j) {
    const int prevL = (j - 1 + fpL) % fpL;
    const int prevK = (j - 1 + fpK) % fpK;
    SeriesMatrix prev_cols = smat_subst_power(block_matrix(basis[prevK], prevL), L.p);
    SeriesMatrix phi_img = smat_mul(F, Mp.phi[j], prev_cols);
    out.phi.push_back(to_small(smat_mul(F, Yinv[j], phi_img), "phi"));
    SeriesMatrix gam_img = smat_mul(F, Mp.gamma[j], smat_twist(F, block_matrix(basis[j], j), L.zeta_i(j)));
    out.gamma.push_back(to_small(smat_mul(F, Yinv[j], gam_img), "gamma"));
  }
  if (K.flavor == Flavor::cuspidal) {
    std::vector<SeriesMatrix> c;
    for (int j = 0; j < fpK; ++j) {
      const int tgt = (j + K.f) % fpK;
      SeriesMatrix img = smat_mul(F, (*Mp.c)[j], block_matrix(basis[j], j));
      c.push_back(to_small(smat_mul(F, Yinv[tgt], img), "c"));
    }
    out.c = c;
  }
  // Coefficients were computed in the larger field; pull them back along the embedding.
  std::vector<Fe> back(L.F().order(), 0);
  std::vector<bool> hit(L.F().order(), false);
  for (Fe a = 0; a < K.F().order(); ++a) {
    back[ref.embedding(a)] = a;
    hit[ref.embedding(a)] = true;
  }
  auto pull = [&](std::vector<SeriesMatrix>& list) {
    for (auto& m : list)
      for (auto& poly : m.entries)
        for (Fe& x : poly) {
          if (!hit[x]) throw BKError("descended matrices are not defined over the smaller coefficient field");
          x = back[x];
        }
  };
  pull(out.phi);
  pull(out.gamma);
  if (out.c) pull(*out.c);
  return out;
}

}  // namespace bklab
