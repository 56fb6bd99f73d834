#pragma once

#include <optional>
#include <vector>

namespace bklab {

/// Irreducible moduli (Conway polynomials) for small fields, little-endian and monic.
struct ModulusEntry {
  int p;
  int degree;
  std::vector<int> coefficients;
};

inline const std::vector<ModulusEntry>& modulus_table() {
  static const std::vector<ModulusEntry> table = {
      {2, 1, {1, 1}},
      {2, 2, {1, 1, 1}},
      {2, 3, {1, 1, 0, 1}},
      {2, 4, {1, 1, 0, 0, 1}},
      {2, 5, {1, 0, 1, 0, 0, 1}},
      {2, 6, {1, 1, 0, 1, 1, 0, 1}},
      {3, 1, {1, 1}},
      {3, 2, {2, 2, 1}},
      {3, 3, {1, 2, 0, 1}},
      {3, 4, {2, 0, 0, 2, 1}},
      {3, 5, {1, 2, 0, 0, 0, 1}},
      {3, 6, {2, 2, 1, 0, 2, 0, 1}},
      {5, 1, {3, 1}},
      {5, 2, {2, 4, 1}},
      {5, 3, {3, 3, 0, 1}},
      {5, 4, {2, 4, 4, 0, 1}},
      {7, 1, {4, 1}},
      {7, 2, {3, 6, 1}},
      {7, 3, {4, 0, 6, 1}},
      {7, 4, {3, 4, 5, 0, 1}},
      {11, 1, {9, 1}},
      {11, 2, {2, 7, 1}},
      {13, 1, {11, 1}},
      {13, 2, {2, 12, 1}},
  };
  return table;
}

inline std::optional<std::vector<int>> lookup_modulus(int p, int degree) {
  for (const auto& entry : modulus_table()) {
    if (entry.p == p && entry.degree == degree) return entry.coefficients;
  }
  return std::nullopt;
}

}  // namespace bklab
