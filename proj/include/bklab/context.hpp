#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bklab/field.hpp"

namespace bklab {

struct ContextError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Flavor { trivial, principal_series, cuspidal };

inline std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::trivial:
      return "trivial";
    case Flavor::principal_series:
      return "principal-series";
    case Flavor::cuspidal:
      return "cuspidal";
  }
  return "?";
}

inline Flavor parse_flavor(const std::string& s) {
  if (s == "trivial") return Flavor::trivial;
  if (s == "principal-series") return Flavor::principal_series;
  if (s == "cuspidal") return Flavor::cuspidal;
  throw ContextError("unknown flavor '" + s + "'");
}

/// Coefficient field request: degree over F_p and an optional explicit modulus.
struct FieldSpec {
  int degree = 1;
  std::optional<std::vector<int>> modulus;
};

inline long long ipow(long long b, int n) {
  long long r = 1;
  for (int i = 0; i < n; ++i) r *= b;
  return r;
}

inline long long pow_mod(long long b, long long n, long long m) {
  if (m == 1) return 0;
  long long r = 1 % m;
  b %= m;
  if (b < 0) b += m;
  while (n > 0) {
    if (n & 1) r = r * b % m;
    b = b * b % m;
    n >>= 1;
  }
  return r;
}

inline long long mod_norm(long long a, long long m) { return ((a % m) + m) % m; }

/// The arithmetic data every other object is built over. Immutable after construction.
struct ArithmeticContext {
  int p = 0;
  int f = 0;
  int e = 0;
  Flavor flavor = Flavor::trivial;
  long long eK = 1;
  int f_prime = 0;
  long long e_prime = 0;
  FieldPtr field;
  Fe zeta = 1;
  Fe cbar = 0;
  std::vector<Fe> zeta_powers;

  const Field& F() const { return *field; }

  /// Exponent of chi_i as a power of chi_0; indices wrap modulo f'.
  long long chi(int i) const {
    int r = ((i % f_prime) + f_prime) % f_prime;
    return pow_mod(p, f_prime - r, eK);
  }
  /// zeta_i = zeta^{chi(i)}, the factor by which inertia scales u on component i.
  Fe zeta_i(int i) const { return zeta_power(chi(i)); }
  Fe zeta_power(long long n) const { return zeta_powers[mod_norm(n, eK)]; }
  /// Exponent n with zeta^n = x, or nullopt when x is not an eK-th root of unity.
  std::optional<long long> dlog(Fe x) const {
    for (long long n = 0; n < eK; ++n)
      if (zeta_powers[n] == x) return n;
    return std::nullopt;
  }
  /// Characters are exponents of chi_0 in [0, eK).
  long long char_mul(long long a, long long b) const { return mod_norm(a + b, eK); }

  bool same_as(const ArithmeticContext& o) const {
    return p == o.p && f == o.f && e == o.e && flavor == o.flavor && eK == o.eK && f_prime == o.f_prime &&
           *field == *o.field && zeta == o.zeta && cbar == o.cbar;
  }
};

using ContextPtr = std::shared_ptr<const ArithmeticContext>;

/// Builds a context; zeta defaults to generator^((q-1)/eK), cbar to -1.
inline ContextPtr build_context(int p, int f, int e, Flavor flavor, const FieldSpec& spec,
                                std::optional<Fe> zeta = std::nullopt, std::optional<Fe> cbar = std::nullopt) {
  if (!is_prime(p)) throw ContextError("p = " + std::to_string(p) + " is not prime");
  if (f < 1 || e < 1) throw ContextError("f and e must be positive");
  auto ctx = std::make_shared<ArithmeticContext>();
  ctx->p = p;
  ctx->f = f;
  ctx->e = e;
  ctx->flavor = flavor;
  switch (flavor) {
    case Flavor::trivial:
      ctx->eK = 1;
      ctx->f_prime = f;
      break;
    case Flavor::principal_series:
      ctx->eK = ipow(p, f) - 1;
      ctx->f_prime = f;
      break;
    case Flavor::cuspidal:
      ctx->eK = ipow(p, 2 * f) - 1;
      ctx->f_prime = 2 * f;
      break;
  }
  ctx->e_prime = static_cast<long long>(e) * ctx->eK;
  try {
    if (spec.modulus) {
      if (static_cast<int>(spec.modulus->size()) != spec.degree + 1)
        throw ContextError("modulus length does not match field degree");
      ctx->field = std::make_shared<const Field>(p, *spec.modulus);
    } else {
      ctx->field = Field::make(p, spec.degree);
    }
  } catch (const FieldError& err) {
    throw ContextError(std::string("coefficient field: ") + err.what());
  }
  const Field& F = *ctx->field;
  if (F.degree() % ctx->f_prime != 0)
    throw ContextError("coefficient field does not contain the residue field of K' (f' = " +
                       std::to_string(ctx->f_prime) + ")");
  long long q1 = static_cast<long long>(F.order()) - 1;
  if (q1 % ctx->eK != 0) throw ContextError("coefficient field does not contain the eK-th roots of unity");
  if ((ipow(p, ctx->f_prime) - 1) % ctx->eK != 0) throw ContextError("eK does not divide p^f' - 1");
  if (zeta) {
    if (*zeta >= F.order()) throw ContextError("zeta is not a field element");
    if (*zeta == 0 || F.element_order(*zeta) != ctx->eK)
      throw ContextError("zeta does not have multiplicative order eK = " + std::to_string(ctx->eK));
    ctx->zeta = *zeta;
  } else {
    ctx->zeta = F.exp(q1 / ctx->eK);
  }
  if (cbar) {
    if (*cbar >= F.order() || *cbar == 0) throw ContextError("cbar must be a nonzero field element");
    ctx->cbar = *cbar;
  } else {
    ctx->cbar = F.neg(1);
  }
  ctx->zeta_powers.resize(ctx->eK);
  Fe z = 1;
  for (long long n = 0; n < ctx->eK; ++n) {
    ctx->zeta_powers[n] = z;
    z = F.mul(z, ctx->zeta);
  }
  return ctx;
}

inline ContextPtr build_context(int p, int f, int e, Flavor flavor, int field_degree) {
  return build_context(p, f, e, flavor, FieldSpec{field_degree, std::nullopt});
}

/// The three reference contexts used throughout the test suite and the CLI presets.
inline ContextPtr context_c1() { return build_context(3, 1, 1, Flavor::principal_series, 1); }
inline ContextPtr context_c2() { return build_context(3, 2, 1, Flavor::principal_series, 2); }
inline ContextPtr context_c3() { return build_context(3, 1, 1, Flavor::cuspidal, 2); }

/// Exponent of chi_i as a power of chi_0.
inline long long chi(const ArithmeticContext& ctx, int i) {
  if (i < 0) throw ContextError("embedding index out of range");
  return ctx.chi(i);
}

/// For eta != eta', the exponents with eta'/eta = chi_i^{a_i} and a_i + b_i = eK, per embedding.
inline std::vector<std::pair<long long, long long>> ab_exponents(const ArithmeticContext& ctx, long long eta,
                                                                 long long eta_prime) {
  eta = mod_norm(eta, ctx.eK);
  eta_prime = mod_norm(eta_prime, ctx.eK);
  if (eta == eta_prime) throw ContextError("ab_exponents requires distinct characters");
  long long target = mod_norm(eta_prime - eta, ctx.eK);
  std::vector<std::pair<long long, long long>> out;
  for (int i = 0; i < ctx.f_prime; ++i) {
    long long c = ctx.chi(i);
    long long a = -1;
    for (long long t = 1; t < ctx.eK; ++t) {
      if (mod_norm(t * c, ctx.eK) == target) {
        a = t;
        break;
      }
    }
    if (a < 0) throw ContextError("character quotient is not a power of chi_i");
    out.emplace_back(a, ctx.eK - a);
  }
  return out;
}

struct InertialCharacter {
  long long n = 0;
  bool operator==(const InertialCharacter& o) const { return n == o.n; }
  bool operator<(const InertialCharacter& o) const { return n < o.n; }
};

/// Per component, the sorted multiset of character exponents.
struct TameType {
  std::vector<std::vector<long long>> tau;

  bool unmixed() const {
    for (const auto& t : tau)
      if (t != tau.front()) return false;
    return true;
  }
  bool scalar() const {
    if (!unmixed() || tau.empty()) return false;
    const auto& t = tau.front();
    return std::all_of(t.begin(), t.end(), [&](long long x) { return x == t.front(); });
  }
  bool operator==(const TameType& o) const { return tau == o.tau; }
  bool operator!=(const TameType& o) const { return !(*this == o); }
  std::string key() const {
    std::string s;
    for (std::size_t i = 0; i < tau.size(); ++i) {
      if (i) s += "|";
      for (std::size_t k = 0; k < tau[i].size(); ++k) {
        if (k) s += ",";
        s += std::to_string(tau[i][k]);
      }
    }
    return s;
  }
};

}  // namespace bklab
