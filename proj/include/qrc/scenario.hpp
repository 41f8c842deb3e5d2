#pragma once

// Declarative scenarios: a JSON document naming a form, maps, metrics, a grid
// and a task list. Everything is validated up front (all problems reported
// with their JSON paths), then tasks run in order and produce one report with
// stable key order.

#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qrc/decomposition.hpp"
#include "qrc/distortion.hpp"
#include "qrc/functionals.hpp"
#include "qrc/limit_lab.hpp"
#include "qrc/parallel.hpp"

#ifndef QRC_VERSION
#define QRC_VERSION "0.1.0"
#endif

namespace qrc {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = QRC_VERSION;

// ---------------------------------------------------------------------------
// Catalog

struct CatalogEntry {
  const char* category;
  const char* name;
  const char* params;
  const char* summary;
};

inline const std::vector<CatalogEntry>& builtin_catalog() {
  static const std::vector<CatalogEntry> c{
      {"form", "volume", "n, m", "dx1 ^ .. ^ dxn on R^m"},
      {"form", "symplectic", "k", "sum dx_{2i-1} ^ dx_{2i} on R^{2k}, comass 1"},
      {"form", "simple", "m, axes, coeff=1", "coeff dx_axes on R^m"},
      {"form", "product_volume", "n", "pi_1^* vol + pi_2^* vol on R^n x R^n"},
      {"form", "heisenberg_star", "", "dx^dy + (x/2) dx^dt + (y/2) dy^dt on R^3, analytic potential"},
      {"form", "hyperbolic_volume", "n, m", "x_m^{-n} dx_1..dx_{n-1} ^ dx_m on x_m > 0, metric 1/x_m"},
      {"form", "coefficients", "dim, degree, coefficients{\"i,j\": expr}", "user form by coefficient expressions"},
      {"map", "identity", "n", "x -> x"},
      {"map", "constant", "n, value", "x -> value"},
      {"map", "affine", "n, m, A (row-major m x n), b", "x -> A x + b"},
      {"map", "moment_curve", "k", "z -> (z, z^2, .., z^k)"},
      {"map", "winding", "p", "z -> z^p"},
      {"map", "conjugate", "", "z -> conj(z)"},
      {"map", "holomorphic_curve", "polys: [[[re, im], ..], ..]", "z -> (p_1(z), .., p_k(z)), increasing degree"},
      {"map", "graph", "p, h: [expr]", "z -> (z^p, h(z))"},
      {"map", "radial_stretch", "n, a", "x -> |x|^{a-1} x, K = max(a^{n-1}, 1/a)"},
      {"map", "sine_graph", "", "(x, y) -> (sin x sin y, cos x cos y), bounded"},
      {"map", "embed", "of, m", "pad the target of a declared map with zeros"},
      {"map", "product", "of: [a, b]", "x -> (a(x), b(x))"},
      {"map", "compose", "outer, inner", "outer o inner"},
      {"map", "bump_competitor", "of, lo, hi, direction, amplitude", "of + amplitude * direction * sin^2 bump on the box"},
      {"map", "expression", "source_dim, expression: [expr]", "user map by coordinate expressions"},
      {"metric", "euclidean", "dim", "lambda = 1"},
      {"metric", "hyperbolic", "dim, axis", "lambda = 1/x_axis"},
      {"metric", "exponential", "dim, axis", "lambda = exp(x_axis)"},
      {"cutoff", "smooth_bump", "center, r, R, profile=exp|poly", "radial bump, 1 inside r, 0 outside R"},
      {"cutoff", "log_capacity", "center, r, R, mollify=0", "log(R/|x|)/log(R/r) on the annulus"},
      {"family", "poly_perturb", "", "z^2 + z/j -> z^2"},
      {"family", "oscillation", "", "(x, y + sin(jx)/j) -> identity"},
      {"family", "bump_perturb", "of, lo, hi, direction", "of + bump/j -> of"},
      {"family", "graph_family", "h", "(x, y, (1 + 1/j) h) -> (x, y, h)"},
      {"family", "constant", "of", "of, of, .. -> of"},
      {"task", "verify_qrc", "map, K, tol=1e-6", "grid check of |omega| |Df|^n <= K star f^* omega"},
      {"task", "decompose", "map, x, K=1, K_prime=2, eps=0.1, radius=0.5, resolution=64", "graph decomposition at x"},
      {"task", "caccioppoli", "map, cutoff, K=1, residual_tol=1e-3", "Caccioppoli inequality and parts identity"},
      {"task", "liouville", "map, r, R: [..], K=1, resolution=128", "capacity bound decay curve"},
      {"task", "quasiminimality", "map, competitor, K, tol=0.02", "n-area comparison with a competitor"},
      {"task", "limit", "family, indices, cutoff, K=1, tol=1e-6", "convergence, LSC and limit distortion"},
      {"task", "positivity", "map", "sign of star f^* omega on the grid"},
      {"task", "bounded_ratio", "region", "sup / inf of the comass on a target region"},
  };
  return c;
}

inline std::string list_builtins(bool machine) {
  if (machine) {
    Json out = Json::object();
    out["tool_version"] = kToolVersion;
    out["schema_version"] = kSchemaVersion;
    Json items = Json::array();
    for (const auto& e : builtin_catalog())
      items.push_back(Json{{"category", e.category}, {"name", e.name}, {"params", e.params}, {"summary", e.summary}});
    out["builtins"] = std::move(items);
    return out.dump(2) + "\n";
  }
  std::ostringstream os;
  std::string last;
  for (const auto& e : builtin_catalog()) {
    if (last != e.category) {
      os << (last.empty() ? "" : "\n") << e.category << "s:\n";
      last = e.category;
    }
    os << "  " << e.name << "(" << e.params << ")  " << e.summary << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation helpers

class Issues {
 public:
  void add(const std::string& path, const std::string& msg) { list_.push_back(path + ": " + msg); }
  bool empty() const { return list_.empty(); }
  const std::vector<std::string>& list() const { return list_; }

 private:
  std::vector<std::string> list_;
};

/// Typed field access on one JSON object; every problem is recorded, nothing throws.
class Fields {
 public:
  Fields(const Json& j, std::string path, Issues& is, std::vector<std::string> allowed)
      : j_(j), path_(std::move(path)), is_(is) {
    if (!j.is_object()) {
      fail("", "expected an object");
      return;
    }
    for (const auto& [k, v] : j.items())
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(k, "unknown key");
  }

  bool ok() const { return ok_; }
  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  const Json* raw(const std::string& key, bool required = true) {
    if (has(key)) return &j_.at(key);
    if (required) fail(key, "missing required key");
    return nullptr;
  }

  std::optional<double> number(const std::string& key, std::optional<double> def = std::nullopt) {
    const Json* v = raw(key, !def);
    if (!v) return def;
    if (!v->is_number()) return fail(key, "expected a number"), std::nullopt;
    return v->get<double>();
  }
  std::optional<int> integer(const std::string& key, std::optional<int> def = std::nullopt) {
    const Json* v = raw(key, !def);
    if (!v) return def;
    if (!v->is_number_integer()) return fail(key, "expected an integer"), std::nullopt;
    return v->get<int>();
  }
  std::optional<bool> boolean(const std::string& key, std::optional<bool> def = std::nullopt) {
    const Json* v = raw(key, !def);
    if (!v) return def;
    if (!v->is_boolean()) return fail(key, "expected true or false"), std::nullopt;
    return v->get<bool>();
  }
  std::optional<std::string> string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const Json* v = raw(key, !def);
    if (!v) return def;
    if (!v->is_string()) return fail(key, "expected a string"), std::nullopt;
    return v->get<std::string>();
  }
  std::optional<std::vector<double>> numbers(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) {
    const Json* v = raw(key, !def);
    if (!v) return def;
    if (!v->is_array()) return fail(key, "expected an array of numbers"), std::nullopt;
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) return fail(key, "expected an array of numbers"), std::nullopt;
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::optional<std::vector<int>> integers(const std::string& key, std::optional<std::vector<int>> def = std::nullopt) {
    const Json* v = raw(key, !def);
    if (!v) return def;
    if (!v->is_array()) return fail(key, "expected an array of integers"), std::nullopt;
    std::vector<int> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) return fail(key, "expected an array of integers"), std::nullopt;
      out.push_back(e.get<int>());
    }
    return out;
  }
  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const Json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) return fail(key, "expected an array of strings"), std::nullopt;
    std::vector<std::string> out;
    for (const auto& e : *v) {
      if (!e.is_string()) return fail(key, "expected an array of strings"), std::nullopt;
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void fail(const std::string& key, const std::string& msg) {
    ok_ = false;
    is_.add(key.empty() ? path_ : at(key), msg);
  }

 private:
  const Json& j_;
  std::string path_;
  Issues& is_;
  bool ok_ = true;
};

namespace detail {

template <class F>
auto guarded(Issues& is, const std::string& path, F&& f) -> std::optional<decltype(f())> {
  try {
    return f();
  } catch (const std::exception& e) {
    is.add(path, e.what());
    return std::nullopt;
  }
}

inline std::optional<std::vector<int>> parse_axes(const std::string& key) {
  std::vector<int> axes;
  std::stringstream ss(key);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used != tok.size()) return std::nullopt;
      axes.push_back(v);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (axes.empty()) return std::nullopt;
  return axes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Builders

inline std::optional<FormField> build_form(const Json& j, const std::string& path, Issues& is) {
  if (j.is_object() && j.contains("builtin")) {
    Fields fl(j, path, is, {"builtin", "params"});
    auto name = fl.string("builtin");
    static const Json empty = Json::object();
    const Json* pp = fl.raw("params", false);
    Fields p(pp ? *pp : empty, fl.at("params"), is, {"n", "m", "k", "axes", "coeff"});
    if (!name) return std::nullopt;
    const std::string& b = *name;
    if (b == "volume") {
      auto n = p.integer("n"), m = p.integer("m");
      if (!n || !m) return std::nullopt;
      return detail::guarded(is, path, [&] { return forms::volume(*n, *m); });
    }
    if (b == "symplectic") {
      auto k = p.integer("k");
      if (!k) return std::nullopt;
      return detail::guarded(is, path, [&] { return forms::symplectic(*k); });
    }
    if (b == "simple") {
      auto m = p.integer("m");
      auto axes = p.integers("axes");
      auto c = p.number("coeff", 1.0);
      if (!m || !axes || !c) return std::nullopt;
      return detail::guarded(is, path, [&] { return forms::simple(*m, *axes, *c); });
    }
    if (b == "product_volume") {
      auto n = p.integer("n");
      if (!n) return std::nullopt;
      return detail::guarded(is, path, [&] { return forms::product_volume(*n); });
    }
    if (b == "heisenberg_star") return forms::heisenberg_star();
    if (b == "hyperbolic_volume") {
      auto n = p.integer("n"), m = p.integer("m");
      if (!n || !m) return std::nullopt;
      return detail::guarded(is, path, [&] { return forms::hyperbolic_volume(*n, *m); });
    }
    fl.fail("builtin", "unknown form '" + b + "' (see list-builtins)");
    return std::nullopt;
  }
  Fields fl(j, path, is, {"dim", "degree", "coefficients", "potential", "name"});
  auto m = fl.integer("dim"), n = fl.integer("degree");
  auto name = fl.string("name", std::string("coefficients"));
  const Json* coeffs = fl.raw("coefficients");
  if (!m || !n || !coeffs || !name) return std::nullopt;
  auto read_table = [&](const Json& t, const std::string& tpath) -> std::optional<std::map<std::vector<int>, std::string>> {
    if (!t.is_object()) {
      is.add(tpath, "expected an object mapping \"i,j,..\" to expressions");
      return std::nullopt;
    }
    std::map<std::vector<int>, std::string> out;
    bool ok = true;
    for (const auto& [k, v] : t.items()) {
      auto axes = detail::parse_axes(k);
      if (!axes) {
        is.add(tpath + "." + k, "multi-index must be comma-separated integers");
        ok = false;
      } else if (v.is_string()) {
        out[*axes] = v.get<std::string>();
      } else if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        out[*axes] = os.str();
      } else {
        is.add(tpath + "." + k, "coefficient must be a string expression or a number");
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return out;
  };
  auto table = read_table(*coeffs, fl.at("coefficients"));
  if (!table) return std::nullopt;
  auto F = detail::guarded(is, fl.at("coefficients"), [&] { return forms::expression(*m, *n, *table, *name); });
  if (!F) return std::nullopt;
  if (const Json* pot = fl.raw("potential", false)) {
    auto pt = read_table(*pot, fl.at("potential"));
    if (!pt) return std::nullopt;
    bool ok = detail::guarded(is, fl.at("potential"), [&] {
                std::vector<Expr> c(binomial(*m, *n - 1), Expr(0.0));
                for (const auto& [axes, src] : *pt) c[MultiIndex(*m, axes).rank()] = parse_expr(src, *m);
                F->set_potential(TensorField(*m, *n - 1, std::move(c)));
                return true;
              }).has_value();
    if (!ok) return std::nullopt;
  }
  return F;
}

inline std::optional<MapSpec> build_map(const Json& j, const std::string& path, Issues& is,
                                        const std::map<std::string, MapSpec>& earlier) {
  if (j.is_object() && j.contains("expression")) {
    Fields fl(j, path, is, {"expression", "source_dim"});
    auto n = fl.integer("source_dim");
    auto comps = fl.strings("expression");
    if (!n || !comps) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::expression(*n, *comps); });
  }
  Fields fl(j, path, is, {"builtin", "params"});
  auto name = fl.string("builtin");
  static const Json empty = Json::object();
  const Json* pp = fl.raw("params", false);
  Fields p(pp ? *pp : empty, fl.at("params"), is,
           {"n", "m", "k", "p", "a", "value", "A", "b", "polys", "h", "of", "outer", "inner", "lo", "hi", "direction",
            "amplitude"});
  if (!name) return std::nullopt;
  auto ref = [&](const std::string& key) -> std::optional<MapSpec> {
    auto s = p.string(key);
    if (!s) return std::nullopt;
    auto it = earlier.find(*s);
    if (it == earlier.end()) {
      p.fail(key, "unknown map '" + *s + "' (maps may only refer to maps declared before them)");
      return std::nullopt;
    }
    return it->second;
  };
  const std::string& b = *name;
  if (b == "identity") {
    auto n = p.integer("n");
    if (!n) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::identity(*n); });
  }
  if (b == "constant") {
    auto n = p.integer("n");
    auto v = p.numbers("value");
    if (!n || !v) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::constant(*n, *v); });
  }
  if (b == "affine") {
    auto n = p.integer("n"), m = p.integer("m");
    auto A = p.numbers("A"), bb = p.numbers("b");
    if (!n || !m || !A || !bb) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::affine(*n, *m, *A, *bb); });
  }
  if (b == "moment_curve") {
    auto k = p.integer("k");
    if (!k) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::moment_curve(*k); });
  }
  if (b == "winding") {
    auto k = p.integer("p");
    if (!k) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::winding(*k); });
  }
  if (b == "conjugate") return maps::conjugate();
  if (b == "sine_graph") return maps::sine_graph();
  if (b == "holomorphic_curve") {
    const Json* polys = p.raw("polys");
    if (!polys) return std::nullopt;
    std::vector<std::vector<std::complex<double>>> P;
    bool ok = polys->is_array() && !polys->empty();
    if (ok)
      for (const auto& poly : *polys) {
        if (!poly.is_array()) {
          ok = false;
          break;
        }
        std::vector<std::complex<double>> c;
        for (const auto& z : poly) {
          if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
            ok = false;
            break;
          }
          c.emplace_back(z[0].get<double>(), z[1].get<double>());
        }
        P.push_back(std::move(c));
      }
    if (!ok) {
      p.fail("polys", "expected [[[re, im], ..], ..]");
      return std::nullopt;
    }
    return detail::guarded(is, path, [&] { return maps::holomorphic_curve(P); });
  }
  if (b == "graph") {
    auto k = p.integer("p");
    auto h = p.strings("h");
    if (!k || !h) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::graph(*k, *h); });
  }
  if (b == "radial_stretch") {
    auto n = p.integer("n");
    auto a = p.number("a");
    if (!n || !a) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::radial_stretch(*n, *a); });
  }
  if (b == "embed") {
    auto f = ref("of");
    auto m = p.integer("m");
    if (!f || !m) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::embed(*f, *m); });
  }
  if (b == "product") {
    const Json* of = p.raw("of");
    if (!of) return std::nullopt;
    if (!of->is_array() || of->size() != 2 || !(*of)[0].is_string() || !(*of)[1].is_string()) {
      p.fail("of", "expected two map names");
      return std::nullopt;
    }
    auto a = earlier.find((*of)[0].get<std::string>()), c = earlier.find((*of)[1].get<std::string>());
    if (a == earlier.end() || c == earlier.end()) {
      p.fail("of", "unknown map name");
      return std::nullopt;
    }
    return detail::guarded(is, path, [&] { return maps::product(a->second, c->second); });
  }
  if (b == "compose") {
    auto g = ref("outer"), f = ref("inner");
    if (!g || !f) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::compose(*g, *f); });
  }
  if (b == "bump_competitor") {
    auto f = ref("of");
    auto lo = p.numbers("lo"), hi = p.numbers("hi"), v = p.numbers("direction");
    auto amp = p.number("amplitude");
    if (!f || !lo || !hi || !v || !amp) return std::nullopt;
    return detail::guarded(is, path, [&] { return maps::bump_competitor(*f, *lo, *hi, *v, *amp); });
  }
  fl.fail("builtin", "unknown map '" + b + "' (see list-builtins)");
  return std::nullopt;
}

inline std::optional<ConformalMetric> build_metric(const Json& j, const std::string& path, Issues& is) {
  Fields fl(j, path, is, {"builtin", "params"});
  auto name = fl.string("builtin");
  static const Json empty = Json::object();
  const Json* pp = fl.raw("params", false);
  Fields p(pp ? *pp : empty, fl.at("params"), is, {"dim", "axis"});
  auto dim = p.integer("dim");
  if (!name || !dim) return std::nullopt;
  if (*name == "euclidean") return ConformalMetric::euclidean(*dim);
  if (*name == "hyperbolic" || *name == "exponential") {
    auto axis = p.integer("axis");
    if (!axis) return std::nullopt;
    if (*axis < 1 || *axis > *dim) {
      p.fail("axis", "axis must lie in [1, dim]");
      return std::nullopt;
    }
    return *name == "hyperbolic" ? ConformalMetric::hyperbolic(*dim, *axis) : ConformalMetric::exponential(*dim, *axis);
  }
  fl.fail("builtin", "unknown metric '" + *name + "'");
  return std::nullopt;
}

inline std::optional<GridDomain> build_grid(const Json& j, const std::string& path, Issues& is) {
  Fields fl(j, path, is, {"kind", "lo", "hi", "center", "radius", "r_inner", "r_outer", "resolution"});
  auto kind = fl.string("kind");
  auto res = fl.integer("resolution");
  if (!kind || !res) return std::nullopt;
  if (*res < 2 || *res > 8192) {
    fl.fail("resolution", "resolution must lie in [2, 8192]");
    return std::nullopt;
  }
  if (*kind == "box") {
    auto lo = fl.numbers("lo"), hi = fl.numbers("hi");
    if (!lo || !hi) return std::nullopt;
    return detail::guarded(is, path, [&] { return GridDomain::box(*lo, *hi, *res); });
  }
  if (*kind == "ball") {
    auto c = fl.numbers("center");
    auto r = fl.number("radius");
    if (!c || !r) return std::nullopt;
    return detail::guarded(is, path, [&] { return GridDomain::ball(*c, *r, *res); });
  }
  if (*kind == "annulus") {
    auto c = fl.numbers("center");
    auto a = fl.number("r_inner"), b = fl.number("r_outer");
    if (!c || !a || !b) return std::nullopt;
    return detail::guarded(is, path, [&] { return GridDomain::annulus(*c, *a, *b, *res); });
  }
  fl.fail("kind", "grid kind must be box, ball or annulus");
  return std::nullopt;
}

inline std::optional<CutoffSpec> build_cutoff(const Json& j, const std::string& path, Issues& is) {
  Fields fl(j, path, is, {"kind", "center", "r", "R", "profile", "mollify"});
  auto kind = fl.string("kind");
  auto c = fl.numbers("center");
  auto r = fl.number("r"), R = fl.number("R");
  if (!kind || !c || !r || !R) return std::nullopt;
  if (*kind == "smooth_bump") {
    auto prof = fl.string("profile", std::string("exp"));
    if (!prof) return std::nullopt;
    if (*prof != "exp" && *prof != "poly") {
      fl.fail("profile", "profile must be exp or poly");
      return std::nullopt;
    }
    return detail::guarded(is, path, [&] {
      return CutoffSpec::smooth_bump(*c, *r, *R, *prof == "poly" ? BumpProfile::Poly : BumpProfile::Exp);
    });
  }
  if (*kind == "log_capacity") {
    auto mol = fl.number("mollify", 0.0);
    if (!mol) return std::nullopt;
    return detail::guarded(is, path, [&] { return CutoffSpec::log_capacity(*c, *r, *R, *mol); });
  }
  fl.fail("kind", "cutoff kind must be smooth_bump or log_capacity");
  return std::nullopt;
}

inline std::optional<SequenceSpec> build_family(const Json& j, const std::string& path, Issues& is,
                                                const std::map<std::string, MapSpec>& declared,
                                                std::vector<int> indices) {
  Fields fl(j, path, is, {"builtin", "params"});
  auto name = fl.string("builtin");
  static const Json empty = Json::object();
  const Json* pp = fl.raw("params", false);
  Fields p(pp ? *pp : empty, fl.at("params"), is, {"of", "lo", "hi", "direction", "h"});
  if (!name) return std::nullopt;
  auto ref = [&]() -> std::optional<MapSpec> {
    auto s = p.string("of");
    if (!s) return std::nullopt;
    auto it = declared.find(*s);
    if (it == declared.end()) {
      p.fail("of", "unknown map '" + *s + "'");
      return std::nullopt;
    }
    return it->second;
  };
  if (*name == "poly_perturb") return families::poly_perturb(indices);
  if (*name == "oscillation") return families::oscillation(indices);
  if (*name == "graph_family") {
    auto h = p.string("h");
    if (!h) return std::nullopt;
    return detail::guarded(is, path, [&] { return families::graph_family(*h, indices); });
  }
  if (*name == "constant") {
    auto f = ref();
    if (!f) return std::nullopt;
    return families::constant_sequence(*f, indices);
  }
  if (*name == "bump_perturb") {
    auto f = ref();
    auto lo = p.numbers("lo"), hi = p.numbers("hi"), v = p.numbers("direction");
    if (!f || !lo || !hi || !v) return std::nullopt;
    auto seq = families::bump_perturb(*f, *lo, *hi, *v, indices);
    if (!detail::guarded(is, path, [&] { return seq.member(1); })) return std::nullopt;
    return seq;
  }
  fl.fail("builtin", "unknown family '" + *name + "'");
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline Json point_json(std::span<const double> p) { return Json(std::vector<double>(p.begin(), p.end())); }

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json distortion_json(const DistortionReport& r) {
  Json m = Json::object();
  m["grid"] = r.grid_descriptor;
  m["grid_hash"] = r.grid_hash;
  m["target_K"] = r.target_K;
  m["tol"] = r.tol;
  m["sup_K"] = number_or_null(r.sup_K);
  m["q50"] = r.q50;
  m["q90"] = r.q90;
  m["q99"] = r.q99;
  m["coarse_sup_K"] = r.coarse_sup_K ? Json(*r.coarse_sup_K) : Json(nullptr);
  m["n_samples"] = r.n_samples;
  m["n_degenerate"] = r.n_degenerate;
  m["n_violations"] = r.n_violations;
  m["vacuous"] = r.vacuous;
  m["worst_margin"] = number_or_null(r.worst_margin);
  m["worst_point"] = point_json(r.worst_point);
  Json v = Json::array();
  for (const auto& s : r.violations) v.push_back(Json{{"x", point_json(s.x)}, {"jacobian", s.jac}, {"opnorm", s.opnorm}});
  m["violations"] = std::move(v);
  return m;
}

inline Json matrix_json(const Eigen::MatrixXd& A) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(A.cols()));
    for (Eigen::Index c = 0; c < A.cols(); ++c) r[static_cast<std::size_t>(c)] = A(i, c);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::filesystem::path out_dir;      // empty: no files
  bool csv = false;
};

struct TaskOutcome {
  std::string name;
  std::string type;
  bool verified = false;
  Json metrics = Json::object();
};

struct RunResult {
  int exit_code = 1;
  std::vector<std::string> errors;
  Json report;
  std::vector<std::filesystem::path> written;
};

struct TaskContext {
  const RunOptions& opt;
  std::vector<std::filesystem::path>& written;
  bool csv = false;

  void write_csv(const std::string& task_name, const std::function<void(std::ostream&)>& body) {
    if (!csv || opt.out_dir.empty()) return;
    std::filesystem::create_directories(opt.out_dir);
    auto p = opt.out_dir / (task_name + ".csv");
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    body(os);
    written.push_back(p);
  }
};

struct PlannedTask {
  std::string name;
  std::string type;
  std::function<TaskOutcome(TaskContext&)> run;
};

struct Scenario {
  Json source;
  std::uint64_t seed = 0;
  FormField form;
  std::map<std::string, MapSpec> maps;
  std::string first_map;
  MetricPair metrics;
  GridDomain grid;
  std::vector<PlannedTask> tasks;
  std::string report_name = "report.json";
  bool csv = false;
};

namespace detail {

inline bool check_dims(Issues& is, const std::string& path, const MapSpec& f, const FormField& F, const GridDomain& g,
                       bool need_volume_degree = true) {
  bool ok = true;
  if (f.target_dim() != F.dim()) {
    is.add(path, "map '" + f.name() + "' lands in R^" + std::to_string(f.target_dim()) + " but the form lives on R^" +
                     std::to_string(F.dim()));
    ok = false;
  }
  if (need_volume_degree && F.degree() != f.source_dim()) {
    is.add(path, "form degree " + std::to_string(F.degree()) + " differs from the source dimension " +
                     std::to_string(f.source_dim()) + " of map '" + f.name() + "'");
    ok = false;
  }
  if (g.dim() != f.source_dim()) {
    is.add(path, "grid dimension " + std::to_string(g.dim()) + " differs from the source dimension " +
                     std::to_string(f.source_dim()) + " of map '" + f.name() + "'");
    ok = false;
  }
  return ok;
}

inline std::optional<double> K_field(Fields& t, const std::string& key, std::optional<double> def) {
  auto K = t.number(key, def);
  if (K && !(*K >= 1.0)) {
    t.fail(key, "K must be >= 1");
    return std::nullopt;
  }
  return K;
}

}  // namespace detail

/// Validates and builds everything; on failure returns nullopt with every issue recorded.
inline std::optional<Scenario> load_scenario(const Json& j, Issues& is, std::optional<std::uint64_t> seed_override = {}) {
  Fields top(j, "$", is, {"schema_version", "seed", "form", "maps", "metrics", "grid", "tasks", "output", "description"});
  if (!j.is_object()) return std::nullopt;
  Scenario sc;
  sc.source = j;
  auto ver = top.integer("schema_version");
  if (ver && *ver != kSchemaVersion)
    top.fail("schema_version", "unsupported schema version " + std::to_string(*ver) + " (expected " +
                                   std::to_string(kSchemaVersion) + ")");
  if (const Json* s = top.raw("seed", false)) {
    if (!s->is_number_unsigned()) top.fail("seed", "seed must be a non-negative integer");
    else sc.seed = s->get<std::uint64_t>();
  }
  if (seed_override) sc.seed = *seed_override;
  top.string("description", std::string());

  std::optional<FormField> form;
  if (const Json* fj = top.raw("form")) form = build_form(*fj, "$.form", is);
  if (form) {
    ComassOptions co = form->comass_options();
    co.seed = sc.seed;
    form->set_comass_options(co);
    sc.form = *form;
  }

  if (const Json* mj = top.raw("maps")) {
    if (!mj->is_object() || mj->empty()) {
      top.fail("maps", "expected a non-empty object of named maps");
    } else {
      for (const auto& [name, spec] : mj->items()) {
        auto f = build_map(spec, "$.maps." + name, is, sc.maps);
        if (f) {
          MapSpec named(name, f->source_dim(), f->components());
          sc.maps.emplace(name, named);
          if (sc.first_map.empty()) sc.first_map = name;
        }
      }
    }
  }

  if (const Json* gj = top.raw("metrics", false)) {
    Fields mf(*gj, "$.metrics", is, {"domain", "target"});
    if (const Json* d = mf.raw("domain", false)) {
      auto g = build_metric(*d, "$.metrics.domain", is);
      if (g) sc.metrics.domain = g;
    }
    if (const Json* t = mf.raw("target", false)) {
      auto g = build_metric(*t, "$.metrics.target", is);
      if (g) sc.metrics.target = g;
    }
    if (form && sc.metrics.target && sc.metrics.target->dim() != form->dim())
      is.add("$.metrics.target", "metric dimension differs from the form's ambient dimension");
  }

  std::optional<GridDomain> grid;
  if (const Json* gj = top.raw("grid")) grid = build_grid(*gj, "$.grid", is);
  if (grid) sc.grid = *grid;

  if (const Json* oj = top.raw("output", false)) {
    Fields of(*oj, "$.output", is, {"report", "csv"});
    auto rn = of.string("report", std::string("report.json"));
    auto csv = of.boolean("csv", false);
    if (rn) sc.report_name = *rn;
    if (csv) sc.csv = *csv;
  }

  const Json* tj = top.raw("tasks");
  if (tj && (!tj->is_array() || tj->empty())) top.fail("tasks", "expected a non-empty array");
  if (!tj || !tj->is_array()) return std::nullopt;

  std::set<std::string> names;
  for (std::size_t i = 0; i < tj->size(); ++i) {
    const std::string path = "$.tasks[" + std::to_string(i) + "]";
    const Json& task = (*tj)[i];
    if (!task.is_object()) {
      is.add(path, "expected an object");
      continue;
    }
    std::string type = task.contains("type") && task["type"].is_string() ? task["type"].get<std::string>() : "";
    static const std::map<std::string, std::vector<std::string>> allowed{
        {"verify_qrc", {"K", "tol"}},
        {"decompose", {"x", "K", "K_prime", "eps", "radius", "resolution"}},
        {"caccioppoli", {"cutoff", "K", "residual_tol"}},
        {"liouville", {"r", "R", "K", "resolution"}},
        {"quasiminimality", {"competitor", "K", "tol"}},
        {"limit", {"family", "indices", "cutoff", "cutoff_grid", "K", "tol"}},
        {"positivity", {}},
        {"bounded_ratio", {"region"}},
    };
    auto at = allowed.find(type);
    if (at == allowed.end()) {
      is.add(path + ".type", type.empty() ? "missing task type" : "unknown task type '" + type + "'");
      continue;
    }
    std::vector<std::string> keys{"type", "name", "map", "grid"};
    keys.insert(keys.end(), at->second.begin(), at->second.end());
    Fields t(task, path, is, keys);
    auto name = t.string("name", type + "_" + std::to_string(i));
    if (name && !names.insert(*name).second) t.fail("name", "duplicate task name '" + *name + "'");
    auto map_name = t.string("map", sc.first_map);
    std::optional<MapSpec> f;
    if (map_name) {
      auto it = sc.maps.find(*map_name);
      if (it != sc.maps.end()) f = it->second;
      else if (!sc.maps.empty()) t.fail("map", "unknown map '" + *map_name + "'");
    }
    std::optional<GridDomain> g = grid;
    if (const Json* go = t.raw("grid", false)) g = build_grid(*go, t.at("grid"), is);
    if (!name || !form) continue;

    PlannedTask pt;
    pt.name = *name;
    pt.type = type;
    const FormField F = *form;
    const MetricPair metrics = sc.metrics;

    if (type == "bounded_ratio") {
      const Json* rj = t.raw("region");
      if (!rj) continue;
      auto region = build_grid(*rj, t.at("region"), is);
      if (!region) continue;
      if (region->dim() != F.dim()) {
        t.fail("region", "region dimension differs from the form's ambient dimension");
        continue;
      }
      GridDomain R = *region;
      pt.run = [F, R](TaskContext&) {
        TaskOutcome o;
        auto br = bounded_ratio(F, R);
        o.metrics["sup_comass"] = br.sup;
        o.metrics["inf_comass"] = br.inf;
        o.metrics["ratio"] = br.ratio;
        o.metrics["grid_hash"] = R.hash();
        o.verified = std::isfinite(br.ratio);
        return o;
      };
      sc.tasks.push_back(std::move(pt));
      continue;
    }

    if (!f || !g) {
      // still report missing parameters so one pass lists every problem
      static const std::map<std::string, std::vector<std::string>> required{
          {"verify_qrc", {"K"}},       {"decompose", {"x"}},         {"caccioppoli", {"cutoff"}},
          {"liouville", {"r", "R"}},   {"quasiminimality", {"competitor", "K"}},
          {"limit", {"family", "cutoff"}}};
      if (auto rq = required.find(type); rq != required.end())
        for (const auto& key : rq->second) t.raw(key);
      continue;
    }
    if (!detail::check_dims(is, path, *f, F, *g)) continue;
    const MapSpec fm = *f;
    const GridDomain G = *g;

    if (type == "verify_qrc") {
      auto K = detail::K_field(t, "K", std::nullopt);
      auto tol = t.number("tol", 1e-6);
      if (!K || !tol) continue;
      if (*tol < 0.0) {
        t.fail("tol", "tol must be >= 0");
        continue;
      }
      double Kv = *K, tv = *tol;
      pt.run = [=](TaskContext&) {
        VerifyOptions vo;
        vo.tol = tv;
        vo.metrics = metrics;
        auto r = verify_qrc(fm, F, G, Kv, vo);
        return TaskOutcome{"", "", r.verified, detail::distortion_json(r)};
      };
    } else if (type == "decompose") {
      auto x = t.numbers("x");
      auto K = detail::K_field(t, "K", 1.0);
      auto Kp = t.number("K_prime", 2.0), eps = t.number("eps", 0.1), rad = t.number("radius", 0.5);
      auto res = t.integer("resolution", 64);
      if (!x || !K || !Kp || !eps || !rad || !res) continue;
      if (static_cast<int>(x->size()) != fm.source_dim()) {
        t.fail("x", "point dimension differs from the map source");
        continue;
      }
      if (!(*Kp > *K)) {
        t.fail("K_prime", "K_prime must exceed K");
        continue;
      }
      if (!(*eps > 0.0) || !(*rad > 0.0) || *res < 2) {
        t.fail("", "eps and radius must be positive and resolution >= 2");
        continue;
      }
      DecompositionOptions d;
      d.K = *K;
      d.Kp = *Kp;
      d.eps = *eps;
      d.radius = *rad;
      d.resolution = *res;
      d.diameter = G.diameter();
      std::vector<double> xv = *x;
      pt.run = [=](TaskContext&) {
        auto r = graph_decompose(fm, F, xv, d);
        TaskOutcome o;
        o.verified = r.verified;
        Json& m = o.metrics;
        m["x"] = xv;
        m["image"] = r.image;
        m["inconclusive"] = r.inconclusive;
        m["diagnostics"] = r.diagnostics;
        m["isometry"] = r.L.A.size() ? detail::matrix_json(r.L.A) : Json::array();
        m["isometry_det"] = r.L.det;
        m["comass_at_image"] = r.comass_at_image;
        m["c"] = r.c;
        m["rho"] = detail::number_or_null(r.rho);
        m["radius"] = r.radius;
        m["grid_hash"] = r.grid_hash;
        m["n_samples"] = r.n_samples;
        m["n_degenerate"] = r.n_degenerate;
        m["margin_min"] = detail::number_or_null(r.margin_min);
        m["margin_max"] = r.margin_max;
        m["margin_lower_bound"] = r.lower_bound;
        m["margin_upper_bound"] = r.upper_bound;
        m["fhat_sup_K"] = r.fhat_sup_K;
        m["fhat_verified"] = r.fhat_verified;
        m["sandwich_ok"] = r.sandwich_ok;
        return o;
      };
    } else if (type == "caccioppoli") {
      const Json* cj = t.raw("cutoff");
      auto K = detail::K_field(t, "K", 1.0);
      auto rt = t.number("residual_tol", 1e-3);
      if (!cj || !K || !rt) continue;
      auto psi = build_cutoff(*cj, t.at("cutoff"), is);
      if (!psi) continue;
      if (psi->dim() != G.dim()) {
        t.fail("cutoff", "cutoff dimension differs from the grid");
        continue;
      }
      if (!F.potential()) {
        t.fail("", "form '" + F.name() + "' has no potential");
        continue;
      }
      CutoffSpec P = *psi;
      double Kv = *K, rtol = *rt;
      pt.run = [=](TaskContext&) {
        CaccioppoliOptions co;
        co.K = Kv;
        auto r = caccioppoli_check(fm, F, P, G, co);
        TaskOutcome o;
        o.verified = r.inequality_holds && r.parts_residual <= rtol;
        Json& m = o.metrics;
        m["lhs"] = r.lhs;
        m["parts_integral"] = r.parts;
        m["parts_residual"] = r.parts_residual;
        m["coarse_parts_residual"] = r.coarse_parts_residual ? Json(*r.coarse_parts_residual) : Json(nullptr);
        m["kernel"] = r.kernel;
        m["K"] = r.K;
        m["C0"] = r.C0;
        m["empirical_C"] = r.empirical_C;
        m["inequality_holds"] = r.inequality_holds;
        m["potential_residual"] = r.potential_residual;
        m["grid_hash"] = G.hash();
        return o;
      };
    } else if (type == "liouville") {
      auto r = t.number("r");
      auto Rs = t.numbers("R");
      auto K = detail::K_field(t, "K", 1.0);
      auto res = t.integer("resolution", 128);
      if (!r || !Rs || !K || !res) continue;
      bool ok = !Rs->empty();
      for (double R : *Rs) ok = ok && R > *r;
      if (!(*r > 0.0) || !ok) {
        t.fail("R", "need 0 < r < R for every listed R");
        continue;
      }
      if (!F.potential()) {
        t.fail("", "form '" + F.name() + "' has no potential");
        continue;
      }
      double rv = *r;
      std::vector<double> Rv = *Rs;
      LiouvilleOptions lo;
      lo.K = *K;
      lo.resolution = *res;
      std::string tname = *name;
      pt.run = [=](TaskContext& ctx) {
        auto rows = liouville_decay(fm, F, rv, Rv, lo);
        TaskOutcome o;
        bool decreasing = true;
        Json arr = Json::array();
        for (std::size_t k = 0; k < rows.size(); ++k) {
          if (k > 0 && !(rows[k].bound < rows[k - 1].bound)) decreasing = false;
          arr.push_back(Json{{"R", rows[k].R},
                             {"capacity_energy", rows[k].capacity_energy},
                             {"capacity_quadrature", rows[k].capacity_quadrature},
                             {"sup_kernel", rows[k].sup_kernel},
                             {"liouville_bound", rows[k].bound},
                             {"direct_integral", rows[k].direct_integral}});
        }
        o.verified = decreasing;
        o.metrics["C0"] = caccioppoli_constant(fm.source_dim());
        o.metrics["bound_decreasing"] = decreasing;
        o.metrics["decay"] = std::move(arr);
        ctx.write_csv(tname, [&](std::ostream& os) { write_decay_csv(os, rows); });
        return o;
      };
    } else if (type == "quasiminimality") {
      auto comp = t.string("competitor");
      auto K = detail::K_field(t, "K", std::nullopt);
      auto tol = t.number("tol", 0.02);
      if (!comp || !K || !tol) continue;
      auto it = sc.maps.find(*comp);
      if (it == sc.maps.end()) {
        t.fail("competitor", "unknown map '" + *comp + "'");
        continue;
      }
      if (!detail::check_dims(is, t.at("competitor"), it->second, F, G)) continue;
      if (!F.potential()) {
        t.fail("", "form '" + F.name() + "' is not known to be exact");
        continue;
      }
      MapSpec h = it->second;
      double Kv = *K;
      QuasiminOptions qo;
      qo.tol = *tol;
      pt.run = [=](TaskContext&) {
        auto r = quasiminimality_compare(fm, h, G, F, Kv, qo);
        TaskOutcome o;
        o.verified = r.verified;
        Json& m = o.metrics;
        m["competitor"] = h.name();
        m["pullback_f"] = r.pullback_f;
        m["pullback_h"] = r.pullback_h;
        m["stokes_residual"] = r.stokes_residual;
        m["quadrature_tol"] = r.quadrature_tol;
        m["stokes_ok"] = r.stokes_ok;
        m["area_f"] = r.area_f;
        m["area_h"] = r.area_h;
        m["ratio"] = r.ratio;
        m["R_omega"] = r.R;
        m["bound"] = r.bound;
        m["boundary_mismatch"] = r.boundary_mismatch;
        return o;
      };
    } else if (type == "limit") {
      const Json* fam = t.raw("family");
      auto idx = t.integers("indices", std::vector<int>{1, 2, 4, 8, 16, 32});
      const Json* cj = t.raw("cutoff");
      auto K = detail::K_field(t, "K", 1.0);
      auto tol = t.number("tol", 1e-6);
      if (!fam || !idx || !cj || !K || !tol) continue;
      if (idx->empty() || std::any_of(idx->begin(), idx->end(), [](int v) { return v < 1; })) {
        t.fail("indices", "indices must be a non-empty list of positive integers");
        continue;
      }
      auto seq = build_family(*fam, t.at("family"), is, sc.maps, *idx);
      auto zeta = build_cutoff(*cj, t.at("cutoff"), is);
      std::optional<GridDomain> cg = G;
      if (const Json* cgj = t.raw("cutoff_grid", false)) cg = build_grid(*cgj, t.at("cutoff_grid"), is);
      if (!seq || !zeta || !cg) continue;
      if (!detail::check_dims(is, t.at("family"), seq->limit, F, G)) continue;
      if (zeta->dim() != cg->dim()) {
        t.fail("cutoff", "cutoff dimension differs from the cutoff grid");
        continue;
      }
      SequenceSpec S = *seq;
      CutoffSpec Z = *zeta;
      GridDomain CG = *cg;
      double Kv = *K, tv = *tol;
      std::string tname = *name;
      pt.run = [=](TaskContext& ctx) {
        auto conv = convergence(S, F, Z, CG);
        auto lsc = energy_lsc_check(S, G);
        VerifyOptions vo;
        vo.tol = tv;
        vo.metrics = metrics;
        auto lim = limit_distortion(S, F, G, Kv, vo);
        TaskOutcome o;
        o.verified = lim.verified && lsc.lsc_holds;
        Json rows = Json::array();
        for (const auto& r : conv.rows)
          rows.push_back(Json{{"j", r.j},
                              {"uniform_distance", r.uniform_distance},
                              {"weak_residual", r.weak_residual},
                              {"n_energy", lsc.energies[&r - conv.rows.data()]}});
        o.metrics["family"] = S.name;
        o.metrics["rows"] = std::move(rows);
        o.metrics["fitted_rate_constant"] = conv.fitted_rate_constant;
        o.metrics["limit_energy"] = lsc.limit_energy;
        o.metrics["finite_tail_liminf_estimate"] = lsc.tail_min;
        o.metrics["lsc_gap"] = lsc.gap;
        o.metrics["lsc_holds"] = lsc.lsc_holds;
        o.metrics["limit_distortion"] = detail::distortion_json(lim);
        ctx.write_csv(tname, [&](std::ostream& os) {
          ConvergenceReport c = conv;
          for (std::size_t k = 0; k < c.rows.size(); ++k) c.rows[k].n_energy = lsc.energies[k];
          write_convergence_csv(os, c);
        });
        return o;
      };
    } else if (type == "positivity") {
      pt.run = [=](TaskContext&) {
        auto r = jacobian_positivity(fm, F, G);
        TaskOutcome o;
        o.verified = r.positive_fraction == 1.0 && r.violations.empty();
        o.metrics["n_samples"] = r.n_samples;
        o.metrics["n_positive"] = r.n_positive;
        o.metrics["positive_fraction"] = r.positive_fraction;
        o.metrics["n_violations"] = r.violations.size();
        Json v = Json::array();
        for (std::size_t k = 0; k < r.violations.size() && k < 32; ++k) v.push_back(r.violations[k]);
        o.metrics["violations"] = std::move(v);
        o.metrics["grid_hash"] = G.hash();
        return o;
      };
    }
    if (pt.run) sc.tasks.push_back(std::move(pt));
  }
  if (!is.empty()) return std::nullopt;
  return sc;
}

inline std::string scenario_hash(const Json& source, std::uint64_t seed) {
  return fnv1a_hex(source.dump() + "#seed=" + std::to_string(seed));
}

/// Runs a parsed scenario; the report is also written to out_dir when set.
inline RunResult run_scenario(const Json& j, const RunOptions& opt = {}) {
  RunResult res;
  Issues is;
  auto sc = load_scenario(j, is, opt.seed);
  if (!sc) {
    res.errors = is.list();
    res.exit_code = 1;
    return res;
  }
  Json rep = Json::object();
  rep["tool_version"] = kToolVersion;
  rep["schema_version"] = kSchemaVersion;
  rep["scenario_hash"] = scenario_hash(sc->source, sc->seed);
  rep["seed"] = sc->seed;
  rep["form"] = sc->form.name();
  rep["grid"] = sc->grid.descriptor();
  rep["tasks"] = Json::array();
  TaskContext ctx{opt, res.written, opt.csv || sc->csv};
  bool all = true;
  res.exit_code = 0;
  for (const auto& t : sc->tasks) {
    Json tj = Json::object();
    tj["name"] = t.name;
    tj["type"] = t.type;
    try {
      TaskOutcome o = t.run(ctx);
      tj["verified"] = o.verified;
      tj["metrics"] = std::move(o.metrics);
      all = all && o.verified;
    } catch (const std::exception& e) {
      tj["verified"] = false;
      tj["error"] = e.what();
      res.errors.push_back("task '" + t.name + "': " + e.what());
      res.exit_code = 1;
    }
    rep["tasks"].push_back(std::move(tj));
    if (res.exit_code == 1) break;
  }
  if (res.exit_code == 0 && !all) res.exit_code = 2;
  Json failed = Json::array();
  for (const auto& t : rep["tasks"])
    if (!t["verified"].get<bool>()) failed.push_back(t["name"]);
  rep["summary"] = Json{{"tasks", rep["tasks"].size()}, {"failed", failed}, {"exit_code", res.exit_code}};
  res.report = std::move(rep);
  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    auto p = opt.out_dir / sc->report_name;
    std::ofstream os(p);
    if (!os) {
      res.errors.push_back("cannot write " + p.string());
      res.exit_code = 1;
    } else {
      os << res.report.dump(2) << '\n';
      res.written.push_back(p);
    }
  }
  return res;
}

inline RunResult run_scenario_file(const std::filesystem::path& path, const RunOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) {
    RunResult r;
    r.errors.push_back("cannot read scenario file " + path.string());
    return r;
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    RunResult r;
    r.errors.push_back(path.string() + ": invalid JSON: " + e.what());
    return r;
  }
  return run_scenario(j, opt);
}

}  // namespace qrc
