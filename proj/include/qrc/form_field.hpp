#pragma once

// Smooth k-form fields on R^m whose coefficients are closed-form expressions.
// First derivatives come from forward-mode dual numbers (one pass per axis).

#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/comass.hpp"
#include "qrc/dual.hpp"
#include "qrc/expr.hpp"
#include "qrc/exterior.hpp"
#include "qrc/grid.hpp"

namespace qrc {

struct NoPotentialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string point_string(std::span<const double> p) {
  std::ostringstream os;
  os << std::setprecision(17) << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  os << ')';
  return os.str();
}
}  // namespace detail

/// Open half-space constraint x_axis > bound (axis 0-based).
struct HalfSpace {
  int axis = 0;
  double bound = 0.0;
};

/// A degree-k field on R^m with one expression per basis multi-index.
class TensorField {
 public:
  TensorField() = default;
  TensorField(int dim, int degree, std::vector<Expr> coeffs)
      : dim_(dim), degree_(degree), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != basis_masks(dim, degree).size())
      throw std::invalid_argument("field needs " + std::to_string(binomial(dim, degree)) + " coefficients, got " +
                                  std::to_string(coeffs_.size()));
    tape_ = std::make_shared<Tape>(std::span<const Expr>(coeffs_), dim);
    constant_ = true;
    for (const auto& c : coeffs_) constant_ = constant_ && c.is_const();
  }
  static TensorField constant(const AltTensor& a) {
    std::vector<Expr> c;
    for (double v : a.coeffs()) c.emplace_back(v);
    return TensorField(a.dim(), a.degree(), std::move(c));
  }

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  bool is_constant() const { return constant_; }
  const std::vector<Expr>& coeffs() const { return coeffs_; }

  AltTensor eval(std::span<const double> p) const {
    AltTensor out(dim_, degree_);
    tape_->eval<double>(p, out.coeffs());
    return out;
  }

  /// Partial derivatives d/dx_j of every coefficient, j = 0..m-1.
  std::vector<AltTensor> partials(std::span<const double> p) const {
    std::vector<AltTensor> out;
    std::vector<Dual<double>> in(dim_), res(coeffs_.size());
    for (int j = 0; j < dim_; ++j) {
      for (int i = 0; i < dim_; ++i) in[i] = Dual<double>(p[i], i == j ? 1.0 : 0.0);
      tape_->eval<Dual<double>>(in, res);
      AltTensor t(dim_, degree_);
      for (std::size_t i = 0; i < res.size(); ++i) t[i] = res[i].d;
      out.push_back(std::move(t));
    }
    return out;
  }

  /// d(field) at p: sum_j dx_j ^ d_j(field). Zero tensor of degree k+1 when k = m.
  AltTensor exterior_derivative(std::span<const double> p) const {
    if (degree_ == dim_) return AltTensor(dim_, degree_);
    AltTensor d(dim_, degree_ + 1);
    auto parts = partials(p);
    for (int j = 0; j < dim_; ++j) {
      AltTensor e(dim_, 1);
      e[j] = 1.0;
      d += wedge(e, parts[j]);
    }
    return d;
  }

  TensorField scaled(double c) const {
    std::vector<Expr> out;
    for (const auto& e : coeffs_) out.push_back(Expr(c) * e);
    return TensorField(dim_, degree_, std::move(out));
  }

 private:
  int dim_ = 0;
  int degree_ = 0;
  std::vector<Expr> coeffs_;
  std::shared_ptr<const Tape> tape_;
  bool constant_ = true;
};

/// Conformal factor lambda > 0 of the metric lambda^2 * Euclidean.
class ConformalMetric {
 public:
  ConformalMetric() : ConformalMetric(1, Expr(1.0), "euclidean") {}
  ConformalMetric(int dim, Expr factor, std::string name)
      : dim_(dim), factor_(std::move(factor)), name_(std::move(name)) {
    tape_ = std::make_shared<Tape>(std::span<const Expr>(&factor_, 1), dim);
  }
  static ConformalMetric euclidean(int dim) { return ConformalMetric(dim, Expr(1.0), "euclidean"); }
  /// Upper half-space model: lambda = 1 / x_axis.
  static ConformalMetric hyperbolic(int dim, int axis) {
    return ConformalMetric(dim, Expr(1.0) / Expr::var(axis - 1), "hyperbolic");
  }
  static ConformalMetric exponential(int dim, int axis) {
    return ConformalMetric(dim, exp(Expr::var(axis - 1)), "exponential");
  }

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const Expr& factor() const { return factor_; }
  bool is_euclidean() const { return factor_.is_const() && factor_.const_value() == 1.0; }

  double operator()(std::span<const double> p) const {
    double v = 0.0;
    tape_->eval<double>(p, std::span<double>(&v, 1));
    if (!(v > 0.0)) throw DomainError("conformal factor " + name_ + " is not positive at " + detail::point_string(p));
    return v;
  }

 private:
  int dim_;
  Expr factor_;
  std::string name_;
  std::shared_ptr<const Tape> tape_;
};

enum class PotentialProvenance { Analytic, Poincare };

struct PotentialField {
  TensorField tau;
  PotentialProvenance provenance = PotentialProvenance::Analytic;
};

/// A degree-n form field on R^m with the attributes the analyses need.
class FormField {
 public:
  FormField() = default;
  FormField(std::string name, TensorField omega) : name_(std::move(name)), omega_(std::move(omega)) {
    if (omega_.degree() < 1) throw std::invalid_argument("form field must have degree >= 1");
    if (omega_.is_constant()) {
      AltTensor a = omega_.eval(std::vector<double>(omega_.dim(), 0.0));
      analytically_closed_ = true;
      simple_everywhere_ = a.is_zero() || is_simple(a);
      if (!a.is_zero()) cached_comass_ = comass_report(a, comass_opt_).value;
      // exact potential (1/n) y -| omega, linear in y
      const int m = omega_.dim();
      std::vector<Expr> coeffs(binomial(m, omega_.degree() - 1), Expr(0.0));
      for (int i = 0; i < m; ++i) {
        std::vector<double> e(m, 0.0);
        e[i] = 1.0;
        AltTensor c = interior_product(e, a);
        for (std::size_t j = 0; j < c.size(); ++j)
          if (c[j] != 0.0) coeffs[j] = coeffs[j] + Expr(c[j] / omega_.degree()) * Expr::var(i);
      }
      potential_ = PotentialField{TensorField(m, omega_.degree() - 1, std::move(coeffs)), PotentialProvenance::Poincare};
    }
  }

  const std::string& name() const { return name_; }
  int degree() const { return omega_.degree(); }
  int dim() const { return omega_.dim(); }
  const TensorField& field() const { return omega_; }
  bool is_constant() const { return omega_.is_constant(); }
  bool is_simple_everywhere() const { return simple_everywhere_; }
  bool analytically_closed() const { return analytically_closed_; }
  const std::optional<PotentialField>& potential() const { return potential_; }
  const std::optional<ConformalMetric>& metric() const { return metric_; }
  const std::vector<HalfSpace>& domain() const { return domain_; }
  const ComassOptions& comass_options() const { return comass_opt_; }

  FormField& set_simple_everywhere(bool v) { simple_everywhere_ = v; return *this; }
  FormField& set_analytically_closed(bool v) { analytically_closed_ = v; return *this; }
  FormField& set_potential(TensorField tau) {
    if (tau.dim() != dim() || tau.degree() != degree() - 1)
      throw std::invalid_argument("potential must have degree n-1 on the same space");
    potential_ = PotentialField{std::move(tau), PotentialProvenance::Analytic};
    return *this;
  }
  FormField& set_metric(ConformalMetric g) {
    if (g.dim() != dim()) throw std::invalid_argument("metric dimension does not match the form");
    metric_ = std::move(g);
    return *this;
  }
  FormField& add_domain_constraint(HalfSpace h) { domain_.push_back(h); return *this; }
  FormField& set_comass_options(ComassOptions o) {
    comass_opt_ = o;
    if (cached_comass_) cached_comass_ = comass_report(omega_.eval(std::vector<double>(dim(), 0.0)), o).value;
    return *this;
  }

  void check_domain(std::span<const double> p) const {
    if (static_cast<int>(p.size()) != dim())
      throw std::invalid_argument("point of dimension " + std::to_string(p.size()) + " for a form on R^" +
                                  std::to_string(dim()));
    for (const auto& h : domain_)
      if (!(p[h.axis] > h.bound))
        throw DomainError("point " + detail::point_string(p) + " outside the domain of " + name_ + " (x" +
                          std::to_string(h.axis + 1) + " must exceed " + std::to_string(h.bound) + ")");
  }

  AltTensor eval(std::span<const double> p) const {
    check_domain(p);
    return omega_.eval(p);
  }

  /// Euclidean comass at p.
  double comass_at(std::span<const double> p) const {
    if (cached_comass_) {
      check_domain(p);
      return *cached_comass_;
    }
    AltTensor a = eval(p);
    if (a.is_zero()) return 0.0;
    return comass_report(a, comass_opt_).value;
  }

  /// Comass measured in the form's own conformal metric (Euclidean if none).
  double metric_comass_at(std::span<const double> p) const {
    double c = comass_at(p);
    if (!metric_) return c;
    return std::pow((*metric_)(p), -degree()) * c;
  }

  FormField scaled(double c) const {
    FormField out(*this);
    out.omega_ = omega_.scaled(c);
    if (cached_comass_) out.cached_comass_ = std::abs(c) * *cached_comass_;
    if (potential_) out.potential_ = PotentialField{potential_->tau.scaled(c), potential_->provenance};
    return out;
  }

 private:
  std::string name_;
  TensorField omega_;
  bool simple_everywhere_ = false;
  bool analytically_closed_ = false;
  std::optional<double> cached_comass_;
  std::optional<PotentialField> potential_;
  std::optional<ConformalMetric> metric_;
  std::vector<HalfSpace> domain_;
  ComassOptions comass_opt_{};
};

inline AltTensor eval_form(const FormField& F, std::span<const double> p) { return F.eval(p); }

/// Mass of d(omega) at p.
inline double closedness_residual(const FormField& F, std::span<const double> p) {
  F.check_domain(p);
  return F.field().exterior_derivative(p).mass();
}

/// lambda(p)^(-n) times the Euclidean comass.
inline double conformal_comass(const FormField& F, const ConformalMetric& g, std::span<const double> p) {
  double lam = g(p);
  return std::pow(lam, -F.degree()) * F.comass_at(p);
}

/// Value of the registered potential at p (analytic, or (1/n) y -| omega for constant forms).
inline AltTensor poincare_potential(const FormField& F, std::span<const double> p) {
  if (!F.potential()) throw NoPotentialError("no potential available for form '" + F.name() + "'");
  F.check_domain(p);
  return F.potential()->tau.eval(p);
}

/// Max over sample points of mass(d tau - omega); throws NoPotentialError.
inline double potential_residual(const FormField& F, std::span<const std::vector<double>> points) {
  if (!F.potential()) throw NoPotentialError("no potential available for form '" + F.name() + "'");
  double worst = 0.0;
  for (const auto& p : points) {
    AltTensor diff = F.potential()->tau.exterior_derivative(p) - F.eval(p);
    worst = std::max(worst, diff.mass());
  }
  return worst;
}

struct BoundedRatio {
  double sup = 0.0;
  double inf = 0.0;
  double ratio = 0.0;
};

/// Sup and inf of the metric-aware comass over the grid cell centers.
inline BoundedRatio bounded_ratio(const FormField& F, const GridDomain& region, double vanish_tol = 1e-12) {
  if (region.dim() != F.dim()) throw std::invalid_argument("bounded_ratio: region dimension does not match the form");
  struct Acc {
    double sup = 0.0, inf = std::numeric_limits<double>::infinity();
  };
  Acc r = grid_reduce(
      region, Acc{},
      [&](std::span<const double> p, Acc& a) {
        double c = F.metric_comass_at(p);
        a.sup = std::max(a.sup, c);
        a.inf = std::min(a.inf, c);
      },
      [](Acc a, const Acc& b) { return Acc{std::max(a.sup, b.sup), std::min(a.inf, b.inf)}; });
  if (!(r.inf > vanish_tol)) throw std::domain_error("bounded_ratio: vanishing form on the region (inf comass " +
                                                     std::to_string(r.inf) + ")");
  return {r.sup, r.inf, r.sup / r.inf};
}

// ---------------------------------------------------------------------------
// Built-in catalog

namespace forms {

inline FormField volume(int n, int m) {
  if (n < 1 || n > m) throw std::invalid_argument("volume: need 1 <= n <= m");
  std::vector<int> axes;
  for (int i = 1; i <= n; ++i) axes.push_back(i);
  AltTensor a = AltTensor::basis(MultiIndex(m, axes));
  return FormField("volume", TensorField::constant(a));
}

/// sum_i dx_{2i-1} ^ dx_{2i} on R^{2k}.
inline FormField symplectic(int k) {
  if (k < 1 || 2 * k > kMaxDim) throw std::invalid_argument("symplectic: need 1 <= k <= 6");
  AltTensor a(2 * k, 2);
  for (int i = 0; i < k; ++i) a += AltTensor::basis(MultiIndex(2 * k, {2 * i + 1, 2 * i + 2}));
  return FormField("symplectic", TensorField::constant(a));
}

inline FormField simple(int m, std::vector<int> axes, double coeff = 1.0) {
  return FormField("simple", TensorField::constant(AltTensor::basis(MultiIndex(m, std::move(axes)), coeff)));
}

/// pi_1^* vol + pi_2^* vol on R^n x R^n.
inline FormField product_volume(int n) {
  std::vector<int> a, b;
  for (int i = 1; i <= n; ++i) {
    a.push_back(i);
    b.push_back(n + i);
  }
  AltTensor t = AltTensor::basis(MultiIndex(2 * n, a)) + AltTensor::basis(MultiIndex(2 * n, b));
  return FormField("product_volume", TensorField::constant(t));
}

inline FormField constant(const AltTensor& a, std::string name = "constant") {
  return FormField(std::move(name), TensorField::constant(a));
}

/// Coefficient expressions keyed by multi-index, unlisted indices are zero.
inline FormField expression(int m, int n, const std::map<std::vector<int>, std::string>& coeffs,
                            std::string name = "expression") {
  std::vector<Expr> c(binomial(m, n), Expr(0.0));
  for (const auto& [axes, src] : coeffs) c[MultiIndex(m, axes).rank()] = parse_expr(src, m);
  return FormField(std::move(name), TensorField(m, n, std::move(c)));
}

/// Hodge dual of the Heisenberg contact form dt - (x dy - y dx)/2 on R^3 = (x, y, t).
inline FormField heisenberg_star() {
  Expr xv = Expr::var(0), yv = Expr::var(1);
  FormField F("heisenberg_star", TensorField(3, 2, {Expr(1.0), Expr(0.5) * xv, Expr(0.5) * yv}));
  F.set_analytically_closed(true);
  F.set_simple_everywhere(true);
  F.set_potential(TensorField(3, 1, {Expr(-0.5) * yv, Expr(0.5) * xv, Expr(0.25) * (xv * xv + yv * yv)}));
  return F;
}

/// x_m^{-n} dx_1 ^ .. ^ dx_{n-1} ^ dx_m on the upper half-space, with lambda = 1/x_m
/// and potential (-1)^n (n-1)^{-1} x_m^{1-n} dx_1 ^ .. ^ dx_{n-1}.
inline FormField hyperbolic_volume(int n, int m) {
  if (n < 2 || n > m) throw std::invalid_argument("hyperbolic_volume: need 2 <= n <= m");
  Expr xm = Expr::var(m - 1);
  std::vector<int> axes;
  for (int i = 1; i < n; ++i) axes.push_back(i);
  std::vector<int> full = axes;
  full.push_back(m);
  std::vector<Expr> w(binomial(m, n), Expr(0.0));
  w[MultiIndex(m, full).rank()] = pow(xm, Expr(-static_cast<double>(n)));
  std::vector<Expr> t(binomial(m, n - 1), Expr(0.0));
  double s = (n % 2 ? -1.0 : 1.0) / (n - 1);
  t[MultiIndex(m, axes).rank()] = Expr(s) * pow(xm, Expr(1.0 - n));
  FormField F("hyperbolic_volume", TensorField(m, n, std::move(w)));
  F.set_analytically_closed(true);
  F.set_simple_everywhere(true);
  F.set_potential(TensorField(m, n - 1, std::move(t)));
  F.set_metric(ConformalMetric::hyperbolic(m, m));
  F.add_domain_constraint({m - 1, 0.0});
  return F;
}

}  // namespace forms

}  // namespace qrc
