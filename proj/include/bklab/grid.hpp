#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bklab/bk.hpp"

namespace bklab {

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PhiPattern { diagonal, antidiagonal, perturbed };
enum class DescentPattern { diagonal, antidiagonal, general };

inline std::string to_string(PhiPattern p) {
  switch (p) {
    case PhiPattern::diagonal: return "diagonal";
    case PhiPattern::antidiagonal: return "antidiagonal";
    case PhiPattern::perturbed: return "perturbed";
  }
  return "?";
}

inline std::string to_string(DescentPattern p) {
  switch (p) {
    case DescentPattern::diagonal: return "diagonal";
    case DescentPattern::antidiagonal: return "antidiagonal";
    case DescentPattern::general: return "general";
  }
  return "?";
}

struct EnumerationGrid {
  ContextPtr ctx;
  int rank = 2;
  int height = 1;
  int precision = 0;  // 0: default for the context
  std::vector<PhiPattern> phi_patterns{PhiPattern::diagonal, PhiPattern::antidiagonal, PhiPattern::perturbed};
  int exp_lo = 0;
  int exp_hi = -1;               // -1: h e'
  int perturbation_degree = -1;  // -1: h e'
  std::vector<DescentPattern> descent_patterns{DescentPattern::diagonal, DescentPattern::antidiagonal,
                                               DescentPattern::general};
  bool sampled = false;
  long long samples = 1000;  // valid modules wanted from the sampler
  std::uint64_t seed = 0;
  long long cap = 1000000;

  int effective_precision() const {
    if (precision > 0) return precision;
    return std::max(default_precision(*ctx), rank * height * static_cast<int>(ctx->e_prime) + 1);
  }
  int effective_hi() const { return exp_hi >= 0 ? exp_hi : height * static_cast<int>(ctx->e_prime); }
  int effective_perturbation() const {
    return perturbation_degree >= 0 ? perturbation_degree : height * static_cast<int>(ctx->e_prime);
  }
};

struct EnumerationStats {
  long long candidates = 0;
  long long valid = 0;
  std::map<std::string, long long> discarded;  // keyed by the first failing check
};

namespace detail {

inline std::vector<Fe> units(const Field& F) {
  std::vector<Fe> out;
  for (Fe a = 1; a < F.order(); ++a) out.push_back(a);
  return out;
}

inline std::vector<std::vector<int>> permutations_of(int d, bool diagonal) {
  std::vector<int> perm(d);
  for (int k = 0; k < d; ++k) perm[k] = diagonal ? k : d - 1 - k;
  return {perm};
}

/// Monomial matrices sum_r coeff_r u^{exp_r} E_{r, perm(r)}, exponents in [lo, hi], coefficients in F^x.
inline std::vector<SeriesMatrix> monomial_matrices(const Field& F, int d, int n, int lo, int hi,
                                                   const std::vector<int>& perm) {
  std::vector<SeriesMatrix> out;
  if (hi < lo) return out;
  const std::vector<Fe> us = units(F);
  const int ne = hi - lo + 1, nc = static_cast<int>(us.size());
  std::vector<int> idx(2 * d, 0);  // exponents then coefficients
  while (true) {
    SeriesMatrix m(d, d, n);
    for (int r = 0; r < d; ++r) m.at(r, perm[r])[lo + idx[r]] = us[idx[d + r]];
    out.push_back(m);
    int pos = 2 * d - 1;
    while (pos >= 0) {
      const int lim = pos < d ? ne : nc;
      if (++idx[pos] < lim) break;
      idx[pos--] = 0;
    }
    if (pos < 0) break;
  }
  return out;
}

inline std::vector<SeriesMatrix> phi_candidates(const EnumerationGrid& g) {
  const Field& F = g.ctx->F();
  const int d = g.rank, n = g.effective_precision(), lo = g.exp_lo, hi = g.effective_hi();
  if (hi >= n) throw GridError("exponent range exceeds the precision");
  std::vector<SeriesMatrix> out;
  std::set<std::vector<Poly>> seen;
  auto push = [&](const SeriesMatrix& m) {
    if (seen.insert(m.entries).second) out.push_back(m);
  };
  std::vector<SeriesMatrix> bases;
  for (PhiPattern p : g.phi_patterns) {
    if (p == PhiPattern::perturbed) continue;
    auto ms = monomial_matrices(F, d, n, lo, hi, permutations_of(d, p == PhiPattern::diagonal).front());
    bases.insert(bases.end(), ms.begin(), ms.end());
    for (const auto& m : ms) push(m);
  }
  bool perturb = false;
  for (PhiPattern p : g.phi_patterns) perturb = perturb || p == PhiPattern::perturbed;
  if (perturb) {
    if (bases.empty()) {
      for (bool diag : {true, false}) {
        auto ms = monomial_matrices(F, d, n, lo, hi, permutations_of(d, diag).front());
        bases.insert(bases.end(), ms.begin(), ms.end());
      }
    }
    const int pd = std::min(g.effective_perturbation(), n - 1);
    const std::vector<Fe> us = units(F);
    for (const auto& base : bases)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          for (int t = 0; t <= pd; ++t) {
            if (base.at(r, c)[t]) continue;
            for (Fe a : us) {
              SeriesMatrix m = base;
              m.at(r, c)[t] = a;
              push(m);
            }
          }
  }
  return out;
}

/// Constant matrices of order dividing eK, grouped by pattern class, first occurrence kept.
inline std::vector<FMat> descent_candidates(const EnumerationGrid& g) {
  const auto& ctx = *g.ctx;
  const Field& F = ctx.F();
  const int d = g.rank;
  std::vector<FMat> out;
  std::set<std::vector<Fe>> seen;
  auto order_ok = [&](const FMat& m) {
    FMat acc = identity_fmat(d);
    for (long long k = 0; k < ctx.eK; ++k) acc = fmat_mul(F, acc, m);
    return acc == identity_fmat(d) && fmat_rank(F, m) == d;
  };
  auto push = [&](const FMat& m) {
    if (order_ok(m) && seen.insert(m.a).second) out.push_back(m);
  };
  for (DescentPattern p : g.descent_patterns) {
    if (p == DescentPattern::general) {
      const long long q = F.order();
      long long total = 1;
      for (int k = 0; k < d * d; ++k) total *= q;
      if (total > g.cap) throw GridError("general descent class too large for this field");
      for (long long code = 0; code < total; ++code) {
        FMat m(d, d);
        long long c = code;
        for (int k = d * d - 1; k >= 0; --k) {
          m.a[k] = static_cast<Fe>(c % q);
          c /= q;
        }
        push(m);
      }
      continue;
    }
    const auto perm = permutations_of(d, p == DescentPattern::diagonal).front();
    std::vector<int> idx(d, 0);
    while (true) {
      FMat m(d, d);
      for (int r = 0; r < d; ++r) m(r, perm[r]) = static_cast<Fe>(idx[r] + 1);
      push(m);
      int pos = d - 1;
      while (pos >= 0 && ++idx[pos] == static_cast<int>(F.order()) - 1) idx[pos--] = 0;
      if (pos < 0) break;
    }
  }
  return out;
}

inline void emit(const EnumerationGrid& g, EnumerationStats& stats, const BKModule& M,
                 const std::function<void(const BKModule&)>& sink) {
  ++stats.candidates;
  ValidationReport rep = validate(M, g.height);
  if (rep.pass) {
    ++stats.valid;
    sink(M);
  } else {
    ++stats.discarded[rep.first_failure()->name];
  }
}

inline void enumerate_exhaustive(const EnumerationGrid& g, EnumerationStats& stats,
                                 const std::function<void(const BKModule&)>& sink) {
  const auto& ctx = *g.ctx;
  const int fp = ctx.f_prime, n = g.effective_precision();
  auto phis = phi_candidates(g);
  auto gammas = descent_candidates(g);
  std::vector<FMat> cs;
  if (ctx.flavor == Flavor::cuspidal) {
    // c_i only needs to be invertible: constant diagonal and antidiagonal matrices.
    const Field& F = ctx.F();
    for (bool diag : {true, false}) {
      const auto perm = permutations_of(g.rank, diag).front();
      std::vector<int> idx(g.rank, 0);
      while (true) {
        FMat m(g.rank, g.rank);
        for (int r = 0; r < g.rank; ++r) m(r, perm[r]) = static_cast<Fe>(idx[r] + 1);
        cs.push_back(m);
        int pos = g.rank - 1;
        while (pos >= 0 && ++idx[pos] == static_cast<int>(F.order()) - 1) idx[pos--] = 0;
        if (pos < 0) break;
      }
    }
  }
  // Free choices: (phi_i, gamma_i) for every i, plus c_i for i < f.
  const int free_c = ctx.flavor == Flavor::cuspidal ? ctx.f : 0;
  std::vector<long long> radix;
  for (int i = 0; i < fp; ++i) {
    radix.push_back(static_cast<long long>(phis.size()));
    radix.push_back(static_cast<long long>(gammas.size()));
  }
  for (int i = 0; i < free_c; ++i) radix.push_back(static_cast<long long>(cs.size()));
  long double total = 1;
  for (long long r : radix) total *= static_cast<long double>(r);
  if (total > static_cast<long double>(g.cap))
    throw GridError("grid has more candidates than the cap (" + std::to_string(g.cap) + "); narrow the grid");
  if (total == 0) return;
  std::vector<long long> idx(radix.size(), 0);
  const Field& F = ctx.F();
  while (true) {
    BKModule M{g.ctx, g.rank, n, {}, {}, std::nullopt};
    for (int i = 0; i < fp; ++i) {
      M.phi.push_back(phis[idx[2 * i]]);
      M.gamma.push_back(smat_from_constant(gammas[idx[2 * i + 1]], n));
    }
    if (free_c) {
      std::vector<SeriesMatrix> C(fp);
      for (int i = 0; i < ctx.f; ++i) {
        const FMat& c = cs[idx[2 * fp + i]];
        C[i] = smat_from_constant(c, n);
        C[i + ctx.f] = smat_from_constant(*fmat_inverse(F, c), n);
      }
      M.c = C;
    }
    emit(g, stats, M, sink);
    int pos = static_cast<int>(radix.size()) - 1;
    while (pos >= 0 && ++idx[pos] == radix[pos]) idx[pos--] = 0;
    if (pos < 0) break;
  }
}

/// Exponent in [lo, hi] congruent to target mod eK, drawn uniformly; -1 when none exists.
inline int draw_exponent(std::mt19937_64& rng, long long eK, long long target, int lo, int hi) {
  std::vector<int> options;
  for (int t = lo; t <= hi; ++t)
    if (mod_norm(t - target, eK) == 0) options.push_back(t);
  if (options.empty()) return -1;
  return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
}

inline long long inverse_mod(long long a, long long m) {
  a = mod_norm(a, m);
  for (long long x = 0; x < m; ++x)
    if (mod_norm(a * x, m) == 1 % m) return x;
  throw GridError("no inverse modulo eK");
}

/// One sampler draw: diagonal inertia exponents first, then phi exponents in the residue classes that commute.
inline BKModule sample_candidate(const EnumerationGrid& g, std::mt19937_64& rng) {
  const auto& ctx = *g.ctx;
  const Field& F = ctx.F();
  const int d = g.rank, fp = ctx.f_prime, n = g.effective_precision();
  const int lo = g.exp_lo, hi = g.effective_hi();
  const long long eK = ctx.eK;
  const bool cusp = ctx.flavor == Flavor::cuspidal;
  auto uni = [&](long long a, long long b) { return std::uniform_int_distribution<long long>(a, b)(rng); };
  const std::vector<Fe> us = units(F);
  auto unit = [&]() { return us[uni(0, static_cast<long long>(us.size()) - 1)]; };

  // exps[i][r]: gamma_i = diag(zeta^{exps[i][r]}).
  std::vector<std::vector<long long>> exps(fp, std::vector<long long>(d));
  const int free_components = cusp ? ctx.f : fp;
  const bool biased = uni(0, 1) == 0;
  for (int i = 0; i < free_components; ++i)
    for (int r = 0; r < d; ++r) exps[i][r] = uni(0, eK - 1);
  if (biased && !cusp) {
    // Same multiset on every component, possibly permuted.
    for (int i = 1; i < fp; ++i) {
      exps[i] = exps[0];
      if (uni(0, 1)) std::reverse(exps[i].begin(), exps[i].end());
    }
  }
  std::vector<FMat> Cconst;
  if (cusp) {
    if (biased && d == 2) exps[0][1] = mod_norm(exps[0][0] * ipow(ctx.p, ctx.f), eK);
    Cconst.resize(fp);
    const long long pf_inv = inverse_mod(ipow(ctx.p, ctx.f), eK);
    for (int i = 0; i < ctx.f; ++i) {
      const bool swap = d == 2 && uni(0, 3) != 0;
      FMat c(d, d);
      for (int r = 0; r < d; ++r) c(r, swap ? d - 1 - r : r) = unit();
      Cconst[i] = c;
      Cconst[i + ctx.f] = *fmat_inverse(F, c);
      // gamma_{i+f}^{p^f} = c gamma_i c^{-1}
      for (int r = 0; r < d; ++r) exps[i + ctx.f][swap ? d - 1 - r : r] = mod_norm(exps[i][r] * pf_inv, eK);
    }
  }
  std::vector<FMat> gam(fp);
  for (int i = 0; i < fp; ++i) {
    gam[i] = FMat(d, d);
    for (int r = 0; r < d; ++r) gam[i](r, r) = ctx.zeta_power(exps[i][r]);
  }
  // phi_i entry (r, c) commutes iff exps[i][r] + chi(i) t = exps[i-1][c] mod eK.
  auto target = [&](int i, int r, int c) {
    const int prev = (i - 1 + fp) % fp;
    return mod_norm((exps[prev][c] - exps[i][r]) * inverse_mod(ctx.chi(i), eK), eK);
  };
  std::vector<SeriesMatrix> phi(fp, SeriesMatrix(d, d, n));
  const int phi_free = cusp ? ctx.f : fp;
  for (int i = 0; i < phi_free; ++i) {
    const PhiPattern pat = g.phi_patterns[uni(0, static_cast<long long>(g.phi_patterns.size()) - 1)];
    const bool diag = pat == PhiPattern::diagonal || (pat == PhiPattern::perturbed && uni(0, 1) == 0);
    const auto perm = permutations_of(d, diag).front();
    for (int r = 0; r < d; ++r) {
      int t = draw_exponent(rng, eK, target(i, r, perm[r]), lo, hi);
      if (t < 0) t = static_cast<int>(uni(lo, hi));
      phi[i].at(r, perm[r])[t] = unit();
    }
    if (pat == PhiPattern::perturbed) {
      const int r = static_cast<int>(uni(0, d - 1)), c = static_cast<int>(uni(0, d - 1));
      int t = draw_exponent(rng, eK, target(i, r, c), 0, std::min(g.effective_perturbation(), n - 1));
      if (t >= 0) phi[i].at(r, c)[t] = F.add(phi[i].at(r, c)[t], unit());
    }
  }
  BKModule M{g.ctx, d, n, {}, {}, std::nullopt};
  if (cusp) {
    // c_i phi_i = phi_{i+f} c_{i-1}
    for (int i = 0; i < ctx.f; ++i) {
      const int prev = (i - 1 + fp) % fp;
      phi[i + ctx.f] = smat_mul(F, smat_mul(F, smat_from_constant(Cconst[i], n), phi[i]),
                                smat_from_constant(*fmat_inverse(F, Cconst[prev]), n));
    }
    std::vector<SeriesMatrix> C;
    for (const auto& c : Cconst) C.push_back(smat_from_constant(c, n));
    M.c = C;
  }
  M.phi = phi;
  for (const auto& gm : gam) M.gamma.push_back(smat_from_constant(gm, n));
  return M;
}

}  // namespace detail

/// Streams every valid module of the grid in a fixed order, counting candidates and discards into stats.
inline void enumerate_into(const EnumerationGrid& g, EnumerationStats& stats,
                           const std::function<void(const BKModule&)>& sink) {
  if (!g.ctx) throw GridError("grid has no context");
  if (g.rank < 1 || g.height < 1) throw GridError("rank and height must be positive");
  if (g.phi_patterns.empty()) throw GridError("grid has no phi pattern");
  if (g.effective_hi() < g.exp_lo) return;
  if (!g.sampled) {
    detail::enumerate_exhaustive(g, stats, sink);
    return;
  }
  std::mt19937_64 rng(g.seed);
  while (stats.valid < g.samples) {
    if (stats.candidates >= g.cap) throw GridError("sampler reached the candidate cap before collecting enough modules");
    detail::emit(g, stats, detail::sample_candidate(g, rng), sink);
  }
}

inline EnumerationStats enumerate(const EnumerationGrid& g, const std::function<void(const BKModule&)>& sink) {
  EnumerationStats stats;
  enumerate_into(g, stats, sink);
  return stats;
}

inline std::vector<BKModule> enumerate_all(const EnumerationGrid& g, EnumerationStats* stats = nullptr) {
  std::vector<BKModule> out;
  EnumerationStats s = enumerate(g, [&](const BKModule& M) { out.push_back(M); });
  if (stats) *stats = s;
  return out;
}

/// The exhaustive C1 grid: exponents 0..h e', every pattern class.
inline EnumerationGrid default_grid(ContextPtr ctx) {
  EnumerationGrid g;
  g.ctx = std::move(ctx);
  g.sampled = g.ctx->F().order() > 3 || g.ctx->f_prime > 1;
  return g;
}

inline EnumerationGrid sampled_grid(ContextPtr ctx, long long samples, std::uint64_t seed) {
  EnumerationGrid g;
  g.ctx = std::move(ctx);
  g.sampled = true;
  g.samples = samples;
  g.seed = seed;
  return g;
}

/// Rank-one modules phi_i = u^{r_i}, gamma_i = c_i constant, r_i in [0, h e'], c_i an eK-th root of unity.
inline EnumerationStats enumerate_rank_one(ContextPtr ctx, int h, const std::function<void(const BKModule&)>& sink) {
  const auto& C = *ctx;
  const int fp = C.f_prime, n = default_precision(C), hi = h * static_cast<int>(C.e_prime);
  EnumerationGrid g;
  g.ctx = ctx;
  g.rank = 1;
  g.height = h;
  EnumerationStats stats;
  std::vector<long long> idx(2 * fp, 0), radix(2 * fp);
  for (int i = 0; i < fp; ++i) {
    radix[i] = hi + 1;
    radix[fp + i] = C.eK;
  }
  while (true) {
    BKModule M{ctx, 1, n, {}, {}, std::nullopt};
    for (int i = 0; i < fp; ++i) {
      SeriesMatrix phi(1, 1, n), gam(1, 1, n);
      phi.at(0, 0)[idx[i]] = 1;
      gam.at(0, 0)[0] = C.zeta_power(idx[fp + i]);
      M.phi.push_back(phi);
      M.gamma.push_back(gam);
    }
    detail::emit(g, stats, M, sink);
    int pos = 2 * fp - 1;
    while (pos >= 0 && ++idx[pos] == radix[pos]) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return stats;
}

}  // namespace bklab
