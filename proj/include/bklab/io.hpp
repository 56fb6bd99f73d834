#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bklab/bk.hpp"
#include "bklab/dieudonne.hpp"
#include "bklab/iso.hpp"
#include "bklab/locmodel.hpp"

namespace bklab {

using Json = nlohmann::ordered_json;

/// Input that cannot be turned into an object; pointer locates the offending value.
struct InputError : std::runtime_error {
  std::string pointer;
  InputError(std::string ptr, const std::string& msg)
      : std::runtime_error((ptr.empty() ? std::string("/") : ptr) + ": " + msg), pointer(std::move(ptr)) {}
};

inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    throw InputError("", std::string("malformed JSON: ") + err.what());
  }
}

namespace io {

inline std::string child(const std::string& ptr, const std::string& key) {
  std::string k;
  for (char ch : key) {
    if (ch == '~') k += "~0";
    else if (ch == '/') k += "~1";
    else k += ch;
  }
  return ptr + "/" + k;
}
inline std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

inline const Json& member(const Json& j, const std::string& ptr, const std::string& key) {
  if (!j.is_object()) throw InputError(ptr, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(child(ptr, key), "missing required key");
  return *it;
}

inline const Json* optional_member(const Json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

inline long long as_int(const Json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw InputError(ptr, "expected an integer");
  return j.get<long long>();
}

inline const Json& as_array(const Json& j, const std::string& ptr, std::optional<std::size_t> size = std::nullopt) {
  if (!j.is_array()) throw InputError(ptr, "expected an array");
  if (size && j.size() != *size)
    throw InputError(ptr, "expected " + std::to_string(*size) + " entries, found " + std::to_string(j.size()));
  return j;
}

inline std::string as_string(const Json& j, const std::string& ptr) {
  if (!j.is_string()) throw InputError(ptr, "expected a string");
  return j.get<std::string>();
}

inline bool as_bool(const Json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw InputError(ptr, "expected a boolean");
  return j.get<bool>();
}

// Field elements: little-endian base-p digit arrays.
inline Json elem_to_json(const Field& F, Fe a) { return F.digits(a); }

inline Fe elem_from_json(const Field& F, const Json& j, const std::string& ptr) {
  as_array(j, ptr);
  std::vector<int> ds;
  for (std::size_t k = 0; k < j.size(); ++k) ds.push_back(static_cast<int>(as_int(j[k], child(ptr, k))));
  try {
    return F.from_digits(ds);
  } catch (const FieldError& err) {
    throw InputError(ptr, err.what());
  }
}

inline Json fmat_to_json(const Field& F, const FMat& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows; ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(elem_to_json(F, m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline FMat fmat_from_json(const Field& F, const Json& j, const std::string& ptr, int rows, int cols) {
  as_array(j, ptr, rows);
  FMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const std::string pr = child(ptr, r);
    as_array(j[r], pr, cols);
    for (int c = 0; c < cols; ++c) m(r, c) = elem_from_json(F, j[r][c], child(pr, c));
  }
  return m;
}

inline Json poly_to_json(const Field& F, const Poly& p) {
  Json out = Json::array();
  for (Fe c : p) out.push_back(elem_to_json(F, c));
  return out;
}

/// Coefficient list, zero-padded to n; longer lists are rejected.
inline Poly poly_from_json(const Field& F, const Json& j, const std::string& ptr, int n) {
  as_array(j, ptr);
  if (static_cast<int>(j.size()) > n) throw InputError(ptr, "more coefficients than the precision " + std::to_string(n));
  Poly p(n, 0);
  for (std::size_t k = 0; k < j.size(); ++k) p[k] = elem_from_json(F, j[k], child(ptr, k));
  return p;
}

/// A vector of (F[u]/u^k)^d as d coefficient lists.
inline Json flat_vector_to_json(const Field& F, const std::vector<Fe>& v, int d, int k) {
  Json out = Json::array();
  for (int s = 0; s < d; ++s) {
    Poly p(k);
    for (int m = 0; m < k; ++m) p[m] = v[m * d + s];
    out.push_back(poly_to_json(F, p));
  }
  return out;
}

inline std::vector<Fe> flat_vector_from_json(const Field& F, const Json& j, const std::string& ptr, int d, int k) {
  as_array(j, ptr, d);
  std::vector<Fe> v(d * k, 0);
  for (int s = 0; s < d; ++s) {
    Poly p = poly_from_json(F, j[s], child(ptr, s), k);
    for (int m = 0; m < k; ++m) v[m * d + s] = p[m];
  }
  return v;
}

inline Json submodules_to_json(const Field& F, const std::vector<FMat>& subs, int d, int k) {
  Json out = Json::array();
  for (const auto& L : subs) {
    Json comp = Json::array();
    for (int r = 0; r < L.rows; ++r) comp.push_back(flat_vector_to_json(F, L.row(r), d, k));
    out.push_back(comp);
  }
  return out;
}

/// Generators per component; stored as the RREF basis of their F-span.
inline std::vector<FMat> submodules_from_json(const Field& F, const Json& j, const std::string& ptr, int comps, int d,
                                              int k) {
  as_array(j, ptr, comps);
  std::vector<FMat> out;
  for (int i = 0; i < comps; ++i) {
    const std::string pi = child(ptr, i);
    as_array(j[i], pi);
    FMat rows(0, d * k);
    rows.cols = d * k;
    for (std::size_t r = 0; r < j[i].size(); ++r) rows.append_row(flat_vector_from_json(F, j[i][r], child(pi, r), d, k));
    out.push_back(span_basis(F, rows, d * k));
  }
  return out;
}

inline Json poly_matrix_to_json(const Field& F, const SeriesMatrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows; ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(poly_to_json(F, m.at(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline SeriesMatrix poly_matrix_from_json(const Field& F, const Json& j, const std::string& ptr, int d, int n) {
  as_array(j, ptr, d);
  SeriesMatrix m(d, d, n);
  for (int r = 0; r < d; ++r) {
    const std::string pr = child(ptr, r);
    as_array(j[r], pr, d);
    for (int c = 0; c < d; ++c) m.at(r, c) = poly_from_json(F, j[r][c], child(pr, c), n);
  }
  return m;
}

inline Json poly_matrices_to_json(const Field& F, const std::vector<SeriesMatrix>& ms) {
  Json out = Json::array();
  for (const auto& m : ms) out.push_back(poly_matrix_to_json(F, m));
  return out;
}

inline std::vector<SeriesMatrix> poly_matrices_from_json(const Field& F, const Json& j, const std::string& ptr,
                                                         int comps, int d, int n) {
  as_array(j, ptr, comps);
  std::vector<SeriesMatrix> out;
  for (int i = 0; i < comps; ++i) out.push_back(poly_matrix_from_json(F, j[i], child(ptr, i), d, n));
  return out;
}

}  // namespace io

// ---------------------------------------------------------------------------------------------
// Context

inline Json to_json(const ArithmeticContext& ctx) {
  const Field& F = ctx.F();
  return Json{{"p", ctx.p},
              {"f", ctx.f},
              {"e", ctx.e},
              {"flavor", to_string(ctx.flavor)},
              {"eK", ctx.eK},
              {"f_prime", ctx.f_prime},
              {"e_prime", ctx.e_prime},
              {"field", Json{{"degree", F.degree()}, {"modulus", F.modulus()}}},
              {"zeta", io::elem_to_json(F, ctx.zeta)},
              {"cbar", io::elem_to_json(F, ctx.cbar)}};
}

inline ContextPtr context_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  const int p = static_cast<int>(as_int(member(j, ptr, "p"), child(ptr, "p")));
  const int f = static_cast<int>(as_int(member(j, ptr, "f"), child(ptr, "f")));
  const int e = static_cast<int>(as_int(member(j, ptr, "e"), child(ptr, "e")));
  Flavor flavor;
  try {
    flavor = parse_flavor(as_string(member(j, ptr, "flavor"), child(ptr, "flavor")));
  } catch (const ContextError& err) {
    throw InputError(child(ptr, "flavor"), err.what());
  }
  const std::string fptr = child(ptr, "field");
  const Json& field = member(j, ptr, "field");
  FieldSpec spec;
  spec.degree = static_cast<int>(as_int(member(field, fptr, "degree"), child(fptr, "degree")));
  if (const Json* mod = optional_member(field, "modulus")) {
    const std::string mptr = child(fptr, "modulus");
    as_array(*mod, mptr);
    std::vector<int> m;
    for (std::size_t k = 0; k < mod->size(); ++k) m.push_back(static_cast<int>(as_int((*mod)[k], child(mptr, k))));
    spec.modulus = m;
  }
  ContextPtr base;
  try {
    base = build_context(p, f, e, flavor, spec);
  } catch (const ContextError& err) {
    throw InputError(ptr, err.what());
  }
  std::optional<Fe> zeta, cbar;
  if (const Json* z = optional_member(j, "zeta")) zeta = elem_from_json(base->F(), *z, child(ptr, "zeta"));
  if (const Json* c = optional_member(j, "cbar")) cbar = elem_from_json(base->F(), *c, child(ptr, "cbar"));
  ContextPtr ctx;
  try {
    ctx = build_context(p, f, e, flavor, spec, zeta, cbar);
  } catch (const ContextError& err) {
    throw InputError(zeta ? child(ptr, "zeta") : ptr, err.what());
  }
  auto derived = [&](const char* key, long long value) {
    if (const Json* v = optional_member(j, key))
      if (as_int(*v, child(ptr, key)) != value)
        throw InputError(child(ptr, key), "inconsistent with p, f, e and flavor (expected " + std::to_string(value) + ")");
  };
  derived("eK", ctx->eK);
  derived("f_prime", ctx->f_prime);
  derived("e_prime", ctx->e_prime);
  return ctx;
}

// ---------------------------------------------------------------------------------------------
// Series

inline Json to_json(const ArithmeticContext& ctx, const SeriesElement& x) {
  Json comps = Json::array();
  for (const auto& c : x.components) comps.push_back(io::poly_to_json(ctx.F(), c));
  return Json{{"precision", x.precision}, {"components", comps}};
}

inline SeriesElement series_element_from_json(const ArithmeticContext& ctx, const Json& j, const std::string& ptr,
                                              std::optional<int> expected_precision = std::nullopt) {
  using namespace io;
  const int n = static_cast<int>(as_int(member(j, ptr, "precision"), child(ptr, "precision")));
  if (n < 0) throw InputError(child(ptr, "precision"), "precision must be non-negative");
  if (expected_precision && n != *expected_precision)
    throw InputError(child(ptr, "precision"), "expected precision " + std::to_string(*expected_precision));
  const std::string cptr = child(ptr, "components");
  const Json& comps = as_array(member(j, ptr, "components"), cptr, static_cast<std::size_t>(ctx.f_prime));
  std::vector<Poly> polys;
  for (int i = 0; i < ctx.f_prime; ++i) polys.push_back(poly_from_json(ctx.F(), comps[i], child(cptr, i), n));
  return SeriesElement{n, polys};
}

/// Matrix over S_F as rows of series elements; entry (r, c) carries all f' components.
inline Json series_matrices_to_json(const ArithmeticContext& ctx, const std::vector<SeriesMatrix>& per_component) {
  const SeriesMatrix& m0 = per_component.front();
  Json rows = Json::array();
  for (int r = 0; r < m0.rows; ++r) {
    Json row = Json::array();
    for (int c = 0; c < m0.cols; ++c) {
      SeriesElement x{m0.precision, {}};
      for (const auto& m : per_component) x.components.push_back(m.at(r, c));
      row.push_back(to_json(ctx, x));
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<SeriesMatrix> series_matrices_from_json(const ArithmeticContext& ctx, const Json& j,
                                                           const std::string& ptr, int d, int n) {
  using namespace io;
  as_array(j, ptr, d);
  std::vector<SeriesMatrix> out(ctx.f_prime, SeriesMatrix(d, d, n));
  for (int r = 0; r < d; ++r) {
    const std::string pr = child(ptr, r);
    as_array(j[r], pr, d);
    for (int c = 0; c < d; ++c) {
      SeriesElement x = series_element_from_json(ctx, j[r][c], child(pr, c), n);
      for (int i = 0; i < ctx.f_prime; ++i) out[i].at(r, c) = x.components[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// BK modules and reports

inline Json to_json(const BKModule& M) {
  const auto& ctx = *M.ctx;
  Json j{{"context", to_json(ctx)},
         {"rank", M.rank},
         {"precision", M.precision},
         {"phi", series_matrices_to_json(ctx, M.phi)},
         {"gamma", series_matrices_to_json(ctx, M.gamma)}};
  if (M.c) j["c"] = series_matrices_to_json(ctx, *M.c);
  return j;
}

inline BKModule module_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  ContextPtr ctx = context_from_json(member(j, ptr, "context"), child(ptr, "context"));
  const int d = static_cast<int>(as_int(member(j, ptr, "rank"), child(ptr, "rank")));
  if (d < 1) throw InputError(child(ptr, "rank"), "rank must be positive");
  const int n = static_cast<int>(as_int(member(j, ptr, "precision"), child(ptr, "precision")));
  if (n < 1) throw InputError(child(ptr, "precision"), "precision must be positive");
  BKModule M{ctx, d, n, {}, {}, std::nullopt};
  M.phi = series_matrices_from_json(*ctx, member(j, ptr, "phi"), child(ptr, "phi"), d, n);
  M.gamma = series_matrices_from_json(*ctx, member(j, ptr, "gamma"), child(ptr, "gamma"), d, n);
  if (const Json* c = optional_member(j, "c")) {
    if (ctx->flavor != Flavor::cuspidal) throw InputError(child(ptr, "c"), "c data requires the cuspidal flavor");
    M.c = series_matrices_from_json(*ctx, *c, child(ptr, "c"), d, n);
  } else if (ctx->flavor == Flavor::cuspidal) {
    throw InputError(child(ptr, "c"), "cuspidal module requires c data");
  }
  return M;
}

inline Json to_json(const TameType& t) {
  Json out = Json::array();
  for (const auto& tau : t.tau) out.push_back(tau);
  return out;
}

inline Json divisors_to_json(const std::optional<std::vector<int>>& d) {
  return d ? Json(*d) : Json(nullptr);
}

inline Json to_json(const ArithmeticContext& ctx, const ValidationReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json cj{{"name", c.name}, {"pass", c.pass}};
    if (c.component >= 0) cj["component"] = c.component;
    if (!c.detail.empty()) cj["detail"] = c.detail;
    if (c.residual) cj["residual"] = io::poly_matrix_to_json(ctx.F(), *c.residual);
    checks.push_back(cj);
  }
  Json divs = Json::array();
  for (const auto& d : r.divisors) divs.push_back(divisors_to_json(d));
  Json out{{"pass", r.pass}, {"height", r.height}, {"checks", checks}, {"elementary_divisors", divs}};
  if (const CheckResult* f = r.first_failure()) {
    out["first_failure"] = Json{{"name", f->name}};
    if (f->component >= 0) out["first_failure"]["component"] = f->component;
  }
  return out;
}

inline Json to_json(const StrongDetReport& r) {
  Json exact = Json::array();
  for (bool b : r.exact_divisibility) exact.push_back(b);
  return Json{{"pass", r.pass}, {"eigen_dims", r.dims}, {"det_valuation", r.det_valuation}, {"exact_divisibility", exact}};
}

// ---------------------------------------------------------------------------------------------
// Dieudonne

inline Json to_json(const DieudonneModule& D) {
  const Field& F = D.ctx->F();
  auto list = [&](const std::vector<FMat>& ms) {
    Json a = Json::array();
    for (const auto& m : ms) a.push_back(io::fmat_to_json(F, m));
    return a;
  };
  Json j{{"context", to_json(*D.ctx)}, {"rank", D.rank}, {"F", list(D.F)}, {"V", list(D.V)}, {"G", list(D.G)}};
  if (D.C) j["C"] = list(*D.C);
  return j;
}

inline DieudonneModule dieudonne_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  ContextPtr ctx = context_from_json(member(j, ptr, "context"), child(ptr, "context"));
  const int d = static_cast<int>(as_int(member(j, ptr, "rank"), child(ptr, "rank")));
  auto list = [&](const Json& a, const std::string& p) {
    as_array(a, p, static_cast<std::size_t>(ctx->f_prime));
    std::vector<FMat> out;
    for (int i = 0; i < ctx->f_prime; ++i) out.push_back(fmat_from_json(ctx->F(), a[i], child(p, i), d, d));
    return out;
  };
  DieudonneModule D{ctx, d, {}, {}, {}, std::nullopt};
  D.F = list(member(j, ptr, "F"), child(ptr, "F"));
  D.V = list(member(j, ptr, "V"), child(ptr, "V"));
  D.G = list(member(j, ptr, "G"), child(ptr, "G"));
  if (const Json* c = optional_member(j, "C")) D.C = list(*c, child(ptr, "C"));
  return D;
}

inline Json to_json(const Field& F, const DieudonneCoordinates& c) {
  Json X = Json::array(), Y = Json::array();
  for (Fe x : c.X) X.push_back(io::elem_to_json(F, x));
  for (Fe y : c.Y) Y.push_back(io::elem_to_json(F, y));
  Json j{{"X", X}, {"Y", Y}, {"cuspidal", c.cuspidal}};
  if (c.cuspidal) j["alpha"] = c.alpha ? io::elem_to_json(F, *c.alpha) : Json(nullptr);
  return j;
}

inline Json to_json(const RankProfile& r) { return Json{{"F", r.f_ranks}, {"V", r.v_ranks}}; }

// ---------------------------------------------------------------------------------------------
// Local models

inline Json to_json(const LocalModelPair& P) {
  const auto& ctx = *P.ctx;
  Json j{{"context", to_json(ctx)},
         {"rank", P.rank},
         {"gamma", io::poly_matrices_to_json(ctx.F(), P.gamma)},
         {"lplus", io::submodules_to_json(ctx.F(), P.lplus, P.rank, P.depth())}};
  if (P.c) j["c"] = io::poly_matrices_to_json(ctx.F(), *P.c);
  return j;
}

inline LocalModelPair pair_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  ContextPtr ctx = context_from_json(member(j, ptr, "context"), child(ptr, "context"));
  const int d = static_cast<int>(as_int(member(j, ptr, "rank"), child(ptr, "rank")));
  if (d < 1) throw InputError(child(ptr, "rank"), "rank must be positive");
  const int k = static_cast<int>(ctx->e_prime), fp = ctx->f_prime;
  LocalModelPair P{ctx, d, {}, std::nullopt, {}};
  P.gamma = poly_matrices_from_json(ctx->F(), member(j, ptr, "gamma"), child(ptr, "gamma"), fp, d, k);
  if (const Json* c = optional_member(j, "c")) P.c = poly_matrices_from_json(ctx->F(), *c, child(ptr, "c"), fp, d, k);
  P.lplus = submodules_from_json(ctx->F(), member(j, ptr, "lplus"), child(ptr, "lplus"), fp, d, k);
  return P;
}

inline Json to_json(const PairStrongDetReport& r) { return Json{{"pass", r.pass}, {"eigen_dims", r.dims}}; }

inline Json to_json(const HyperspecialPair& H, long long eta) {
  return Json{{"context", to_json(*H.ctx)},
              {"eta", eta},
              {"rank", H.rank},
              {"lplus", io::submodules_to_json(H.ctx->F(), H.lplus, H.rank, H.ctx->e)}};
}

/// Returns the pair and its eta.
inline std::pair<HyperspecialPair, long long> hyperspecial_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  ContextPtr ctx = context_from_json(member(j, ptr, "context"), child(ptr, "context"));
  const long long eta = mod_norm(as_int(member(j, ptr, "eta"), child(ptr, "eta")), ctx->eK);
  const int d = static_cast<int>(as_int(member(j, ptr, "rank"), child(ptr, "rank")));
  if (d < 1) throw InputError(child(ptr, "rank"), "rank must be positive");
  HyperspecialPair H{ctx, d,
                     submodules_from_json(ctx->F(), member(j, ptr, "lplus"), child(ptr, "lplus"), ctx->f_prime, d,
                                          ctx->e)};
  return {H, eta};
}

inline Json to_json(const IwahoriDatum& I) {
  const Field& F = I.ctx->F();
  const int e = I.ctx->e;
  Json ab = Json::array();
  for (const auto& [a, b] : I.ab) ab.push_back(Json::array({a, b}));
  return Json{{"context", to_json(*I.ctx)},
              {"eta", I.eta},
              {"eta_prime", I.eta_prime},
              {"ab", ab},
              {"l1plus", io::submodules_to_json(F, I.l1plus, 2, e)},
              {"l2plus", io::submodules_to_json(F, I.l2plus, 2, e)},
              {"f1", io::poly_matrices_to_json(F, I.f1)},
              {"f2", io::poly_matrices_to_json(F, I.f2)}};
}

inline IwahoriDatum iwahori_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  ContextPtr ctx = context_from_json(member(j, ptr, "context"), child(ptr, "context"));
  const Field& F = ctx->F();
  const int e = ctx->e;
  IwahoriDatum I;
  I.ctx = ctx;
  I.eta = mod_norm(as_int(member(j, ptr, "eta"), child(ptr, "eta")), ctx->eK);
  I.eta_prime = mod_norm(as_int(member(j, ptr, "eta_prime"), child(ptr, "eta_prime")), ctx->eK);
  const std::string abp = child(ptr, "ab");
  const Json& ab = as_array(member(j, ptr, "ab"), abp);
  const int comps = static_cast<int>(ab.size());
  for (int i = 0; i < comps; ++i) {
    const std::string pi = child(abp, i);
    as_array(ab[i], pi, 2);
    I.ab.emplace_back(as_int(ab[i][0], child(pi, 0)), as_int(ab[i][1], child(pi, 1)));
  }
  I.l1plus = submodules_from_json(F, member(j, ptr, "l1plus"), child(ptr, "l1plus"), comps, 2, e);
  I.l2plus = submodules_from_json(F, member(j, ptr, "l2plus"), child(ptr, "l2plus"), comps, 2, e);
  I.f1 = poly_matrices_from_json(F, member(j, ptr, "f1"), child(ptr, "f1"), comps, 2, e);
  I.f2 = poly_matrices_from_json(F, member(j, ptr, "f2"), child(ptr, "f2"), comps, 2, e);
  return I;
}

inline Json to_json(const CuspidalIwahori& CI) {
  const Field& F = CI.block.ctx->F();
  return Json{{"block", to_json(CI.block)},
              {"theta11", io::poly_matrices_to_json(F, CI.theta11)},
              {"theta21", io::poly_matrices_to_json(F, CI.theta21)},
              {"second_lift", CI.second_lift}};
}

inline CuspidalIwahori cuspidal_iwahori_from_json(const Json& j, const std::string& ptr = "") {
  using namespace io;
  CuspidalIwahori CI;
  CI.block = iwahori_from_json(member(j, ptr, "block"), child(ptr, "block"));
  const Field& F = CI.block.ctx->F();
  const int comps = CI.block.components(), e = CI.block.ctx->e;
  CI.theta11 = poly_matrices_from_json(F, member(j, ptr, "theta11"), child(ptr, "theta11"), comps, 2, e);
  CI.theta21 = poly_matrices_from_json(F, member(j, ptr, "theta21"), child(ptr, "theta21"), comps, 2, e);
  if (const Json* s = optional_member(j, "second_lift")) CI.second_lift = as_bool(*s, child(ptr, "second_lift"));
  return CI;
}

inline Json to_json(const IsoResult& r) {
  Json j{{"verdict", to_string(r.verdict)}, {"nodes", r.nodes}, {"degree_bound", r.degree_bound}};
  if (!r.invariant.empty()) {
    j["invariant"] = r.invariant;
    j["first_value"] = r.first_value;
    j["second_value"] = r.second_value;
  }
  return j;
}

}  // namespace bklab
