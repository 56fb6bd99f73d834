#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bklab/moduli.hpp"

namespace bklab {

/// Field element: little-endian base-p digits packed into one integer.
using Fe = std::uint32_t;

struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool is_prime(long long n) {
  if (n < 2) return false;
  for (long long d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

/// Finite field F_p[x]/(modulus) with log/exp tables.
class Field {
 public:
  Field(int p, std::vector<int> modulus) : p_(p), modulus_(std::move(modulus)) {
    if (!is_prime(p_)) throw FieldError("characteristic " + std::to_string(p_) + " is not prime");
    if (modulus_.size() < 2 || modulus_.back() != 1) throw FieldError("modulus must be monic of degree >= 1");
    for (int& c : modulus_) {
      if (c < 0 || c >= p_) throw FieldError("modulus coefficient out of range");
    }
    degree_ = static_cast<int>(modulus_.size()) - 1;
    long long q = 1;
    for (int i = 0; i < degree_; ++i) {
      q *= p_;
      if (q > (1 << 20)) throw FieldError("field too large");
    }
    q_ = static_cast<Fe>(q);
    build_tables();
  }

  static std::shared_ptr<const Field> make(int p, int degree) {
    auto mod = lookup_modulus(p, degree);
    if (!mod) throw FieldError("no shipped modulus for p=" + std::to_string(p) + " degree=" + std::to_string(degree));
    return std::make_shared<const Field>(p, *mod);
  }

  int p() const { return p_; }
  int degree() const { return degree_; }
  Fe order() const { return q_; }
  const std::vector<int>& modulus() const { return modulus_; }
  Fe generator() const { return generator_; }

  bool operator==(const Field& o) const { return p_ == o.p_ && modulus_ == o.modulus_; }
  bool operator!=(const Field& o) const { return !(*this == o); }

  Fe add(Fe a, Fe b) const {
    if (!add_table_.empty()) return add_table_[static_cast<std::size_t>(a) * q_ + b];
    return add_digits(a, b);
  }
  Fe sub(Fe a, Fe b) const { return add(a, neg(b)); }
  Fe neg(Fe a) const { return neg_table_[a]; }
  Fe mul(Fe a, Fe b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
  }
  Fe inv(Fe a) const {
    if (a == 0) throw FieldError("inverse of zero");
    return exp_[(q_ - 1 - log_[a]) % (q_ - 1)];
  }
  Fe div(Fe a, Fe b) const { return mul(a, inv(b)); }
  Fe pow(Fe a, long long n) const {
    if (a == 0) return n == 0 ? 1 : 0;
    long long m = static_cast<long long>(q_) - 1;
    long long k = (static_cast<long long>(log_[a]) * (((n % m) + m) % m)) % m;
    return exp_[k];
  }
  /// Discrete log base the field generator; requires a != 0.
  long long log(Fe a) const {
    if (a == 0) throw FieldError("log of zero");
    return log_[a];
  }
  Fe exp(long long k) const {
    long long m = static_cast<long long>(q_) - 1;
    return exp_[((k % m) + m) % m];
  }
  Fe from_int(long long n) const {
    long long r = ((n % p_) + p_) % p_;
    return static_cast<Fe>(r);
  }
  std::vector<int> digits(Fe a) const {
    std::vector<int> out(degree_);
    for (int i = 0; i < degree_; ++i) {
      out[i] = static_cast<int>(a % p_);
      a /= p_;
    }
    return out;
  }
  Fe from_digits(const std::vector<int>& ds) const {
    if (static_cast<int>(ds.size()) > degree_) throw FieldError("too many digits for field element");
    Fe out = 0;
    for (int i = static_cast<int>(ds.size()) - 1; i >= 0; --i) {
      if (ds[i] < 0 || ds[i] >= p_) throw FieldError("digit out of range");
      out = out * p_ + static_cast<Fe>(ds[i]);
    }
    return out;
  }
  /// Multiplicative order of a nonzero element.
  long long element_order(Fe a) const {
    long long m = static_cast<long long>(q_) - 1;
    long long l = log(a);
    long long g = gcd_ll(l, m);
    return m / g;
  }

 private:
  static long long gcd_ll(long long a, long long b) {
    while (b) {
      long long t = a % b;
      a = b;
      b = t;
    }
    return a < 0 ? -a : a;
  }

  Fe add_digits(Fe a, Fe b) const {
    Fe out = 0, scale = 1;
    for (int i = 0; i < degree_; ++i) {
      Fe s = (a % p_ + b % p_) % p_;
      out += s * scale;
      scale *= p_;
      a /= p_;
      b /= p_;
    }
    return out;
  }

  Fe raw_mul(Fe a, Fe b) const {
    std::vector<int> x = digits(a), y = digits(b);
    std::vector<long long> prod(2 * degree_, 0);
    for (int i = 0; i < degree_; ++i)
      for (int j = 0; j < degree_; ++j) prod[i + j] += static_cast<long long>(x[i]) * y[j];
    for (int k = 2 * degree_ - 1; k >= degree_; --k) {
      long long c = prod[k] % p_;
      prod[k] = 0;
      if (c == 0) continue;
      for (int j = 0; j < degree_; ++j) prod[k - degree_ + j] -= c * modulus_[j];
    }
    std::vector<int> r(degree_);
    for (int i = 0; i < degree_; ++i) r[i] = static_cast<int>(((prod[i] % p_) + p_) % p_);
    return from_digits(r);
  }

  void build_tables() {
    neg_table_.resize(q_);
    for (Fe a = 0; a < q_; ++a) {
      std::vector<int> ds = digits(a);
      for (int& d : ds) d = (p_ - d) % p_;
      neg_table_[a] = from_digits(ds);
    }
    if (q_ <= 729) {
      add_table_.resize(static_cast<std::size_t>(q_) * q_);
      for (Fe a = 0; a < q_; ++a)
        for (Fe b = 0; b < q_; ++b) add_table_[static_cast<std::size_t>(a) * q_ + b] = add_digits(a, b);
    }
    const Fe m = q_ - 1;
    for (Fe g = 1; g < q_; ++g) {
      std::vector<Fe> powers;
      powers.reserve(m);
      Fe x = 1;
      bool ok = true;
      for (Fe k = 0; k < m; ++k) {
        powers.push_back(x);
        x = raw_mul(x, g);
        if (x == 1 && k + 1 < m) {
          ok = false;
          break;
        }
        if (x == 0) {
          ok = false;
          break;
        }
      }
      if (!ok || x != 1) continue;
      generator_ = g;
      exp_.assign(2 * static_cast<std::size_t>(m), 0);
      log_.assign(q_, 0);
      for (Fe k = 0; k < m; ++k) {
        exp_[k] = powers[k];
        exp_[k + m] = powers[k];
        log_[powers[k]] = k;
      }
      return;
    }
    throw FieldError("modulus is not irreducible");
  }

  int p_;
  std::vector<int> modulus_;
  int degree_ = 1;
  Fe q_ = 0;
  Fe generator_ = 1;
  std::vector<Fe> exp_, log_, neg_table_, add_table_;
};

using FieldPtr = std::shared_ptr<const Field>;

/// Ring embedding of one finite field into another, determined by the image of the root x.
struct FieldEmbedding {
  FieldPtr source, target;
  Fe root_image = 0;
  std::vector<Fe> table;

  Fe operator()(Fe a) const { return table.at(a); }
};

/// Finds the least root (by code) of the source modulus in the target field.
inline FieldEmbedding make_embedding(const FieldPtr& source, const FieldPtr& target) {
  if (source->p() != target->p()) throw FieldError("embedding between different characteristics");
  if (target->degree() % source->degree() != 0) throw FieldError("target degree is not a multiple of source degree");
  const auto& mod = source->modulus();
  const Field& T = *target;
  auto eval = [&](Fe y) {
    Fe acc = 0;
    for (int k = static_cast<int>(mod.size()) - 1; k >= 0; --k) acc = T.add(T.mul(acc, y), T.from_int(mod[k]));
    return acc;
  };
  for (Fe y = 0; y < T.order(); ++y) {
    if (eval(y) != 0) continue;
    FieldEmbedding emb{source, target, y, {}};
    emb.table.resize(source->order());
    for (Fe a = 0; a < source->order(); ++a) {
      std::vector<int> ds = source->digits(a);
      Fe acc = 0;
      for (int k = static_cast<int>(ds.size()) - 1; k >= 0; --k) acc = T.add(T.mul(acc, y), T.from_int(ds[k]));
      emb.table[a] = acc;
    }
    return emb;
  }
  throw FieldError("target field contains no root of the source modulus");
}

}  // namespace bklab
