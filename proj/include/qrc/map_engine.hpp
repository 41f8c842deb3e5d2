#pragma once

// Maps f: R^n -> R^m given by coordinate expressions, with exact jets from
// forward-mode AD, plus the linear algebra of their differentials.

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/dual.hpp"
#include "qrc/expr.hpp"
#include "qrc/exterior.hpp"
#include "qrc/form_field.hpp"

namespace qrc {

struct Jet {
  std::vector<double> x;
  std::vector<double> value;
  Eigen::MatrixXd D;  // m x n
};

class MapSpec {
 public:
  MapSpec() = default;
  MapSpec(std::string name, int source_dim, std::vector<Expr> components)
      : name_(std::move(name)), n_(source_dim), comps_(std::move(components)) {
    if (n_ < 1 || n_ > kMaxDim) throw std::invalid_argument("map: source dimension must be in [1, 12]");
    if (comps_.empty() || static_cast<int>(comps_.size()) > kMaxDim)
      throw std::invalid_argument("map: target dimension must be in [1, 12]");
    if (static_cast<int>(comps_.size()) < n_)
      throw std::invalid_argument("map '" + name_ + "': target dimension " + std::to_string(comps_.size()) +
                                  " is below the source dimension " + std::to_string(n_));
    tape_ = std::make_shared<Tape>(std::span<const Expr>(comps_), n_);
  }

  const std::string& name() const { return name_; }
  int source_dim() const { return n_; }
  int target_dim() const { return static_cast<int>(comps_.size()); }
  const std::vector<Expr>& components() const { return comps_; }

  std::vector<double> operator()(std::span<const double> x) const {
    check_point(x);
    std::vector<double> out(comps_.size());
    try {
      tape_->eval<double>(x, out);
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " evaluating " + name_ + " at x = " + detail::point_string(x));
    }
    return out;
  }

  /// Value and exact differential: one dual-number pass per source axis.
  Jet jet(std::span<const double> x) const {
    check_point(x);
    const int m = target_dim();
    Jet j{{x.begin(), x.end()}, std::vector<double>(m), Eigen::MatrixXd(m, n_)};
    std::vector<Dual<double>> in(n_), out(m);
    try {
      for (int a = 0; a < n_; ++a) {
        for (int i = 0; i < n_; ++i) in[i] = Dual<double>(x[i], i == a ? 1.0 : 0.0);
        tape_->eval<Dual<double>>(in, out);
        for (int r = 0; r < m; ++r) j.D(r, a) = out[r].d;
      }
    } catch (const DomainError& e) {
      throw DomainError(std::string(e.what()) + " evaluating " + name_ + " at x = " + detail::point_string(x));
    }
    for (int r = 0; r < m; ++r) j.value[r] = out[r].v;
    return j;
  }

 private:
  void check_point(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_)
      throw std::invalid_argument("map '" + name_ + "' expects a point in R^" + std::to_string(n_));
  }

  std::string name_;
  int n_ = 0;
  std::vector<Expr> comps_;
  std::shared_ptr<const Tape> tape_;
};

// ---------------------------------------------------------------------------
// Differential norms and pullbacks

/// Largest singular value of D via the n x n Gram matrix.
inline double operator_norm(const Eigen::MatrixXd& D) {
  if (D.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D.transpose() * D, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}
inline double operator_norm(const Jet& j) { return operator_norm(j.D); }

/// |wedge^n Df| = sqrt(det(Df^T Df)) (Cauchy-Binet).
inline double top_minor_norm(const Eigen::MatrixXd& D) {
  Eigen::MatrixXd G = D.transpose() * D;
  return std::sqrt(std::max(0.0, G.determinant()));
}
inline double top_minor_norm(const Jet& j) { return top_minor_norm(j.D); }

namespace detail {
inline double minor_det(const Eigen::MatrixXd& D, Mask rows, Mask cols, int k) {
  if (k == 0) return 1.0;
  Eigen::MatrixXd M(k, k);
  int r = 0;
  for (int i = 0; i < D.rows(); ++i) {
    if (!(rows >> i & 1u)) continue;
    int c = 0;
    for (int a = 0; a < D.cols(); ++a)
      if (cols >> a & 1u) M(r, c++) = D(i, a);
    ++r;
  }
  return M.determinant();
}
}  // namespace detail

/// Pullback of a k-covector on R^m by the linear map D: R^n -> R^m.
/// (D^* a)_S = sum_J a_J det(D[J, S]).
inline AltTensor pullback(const AltTensor& a, const Eigen::MatrixXd& D) {
  const int m = static_cast<int>(D.rows()), n = static_cast<int>(D.cols()), k = a.degree();
  if (a.dim() != m) throw std::invalid_argument("pullback: covector lives on R^" + std::to_string(a.dim()) +
                                                ", differential targets R^" + std::to_string(m));
  if (k > n) throw std::invalid_argument("pullback: degree " + std::to_string(k) + " exceeds source dimension " +
                                         std::to_string(n));
  AltTensor out(n, k);
  const auto& src = basis_masks(n, k);
  for (std::size_t J = 0; J < a.size(); ++J) {
    if (a[J] == 0.0) continue;
    for (std::size_t S = 0; S < src.size(); ++S) out[S] += a[J] * detail::minor_det(D, a.mask_at(J), src[S], k);
  }
  return out;
}

/// The density of f^* omega at the jet point.
inline double star_pullback(const Jet& j, const FormField& F) {
  if (F.dim() != static_cast<int>(j.D.rows()))
    throw std::invalid_argument("star_pullback: form on R^" + std::to_string(F.dim()) + " vs map target R^" +
                                std::to_string(j.D.rows()));
  if (F.degree() != static_cast<int>(j.D.cols()))
    throw std::invalid_argument("star_pullback: form degree " + std::to_string(F.degree()) +
                                " differs from the source dimension " + std::to_string(j.D.cols()));
  return pullback(F.eval(j.value), j.D)[0];
}

/// f^* tau at the jet point, tau the registered potential of F.
inline AltTensor pullback_potential(const Jet& j, const FormField& F) {
  if (F.degree() != static_cast<int>(j.D.cols()))
    throw std::invalid_argument("pullback_potential: potential degree does not match n - 1");
  return pullback(poincare_potential(F, j.value), j.D);
}

/// CSV: x_1..x_n, f_1..f_m, then Df row-major.
inline void write_jets_csv(std::ostream& os, std::span<const Jet> jets) {
  if (jets.empty()) return;
  const auto n = jets[0].x.size(), m = jets[0].value.size();
  for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << "x" << i + 1;
  for (std::size_t i = 0; i < m; ++i) os << ",f" << i + 1;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) os << ",D" << r + 1 << '_' << c + 1;
  os << '\n' << std::setprecision(17);
  for (const auto& j : jets) {
    for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << j.x[i];
    for (double v : j.value) os << ',' << v;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) os << ',' << j.D(r, c);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Built-in map families

namespace maps {

inline MapSpec identity(int n) {
  std::vector<Expr> c;
  for (int i = 0; i < n; ++i) c.push_back(Expr::var(i));
  return MapSpec("identity", n, std::move(c));
}

inline MapSpec constant(int n, std::vector<double> value) {
  std::vector<Expr> c(value.begin(), value.end());
  return MapSpec("constant", n, std::move(c));
}

/// x -> A x + b with A given row-major (m x n).
inline MapSpec affine(int n, int m, std::span<const double> A, std::span<const double> b) {
  if (A.size() != static_cast<std::size_t>(m * n) || b.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("affine: matrix must be m x n and offset of length m");
  std::vector<Expr> c;
  for (int r = 0; r < m; ++r) {
    Expr e(b[r]);
    for (int a = 0; a < n; ++a)
      if (A[r * n + a] != 0.0) e = e + Expr(A[r * n + a]) * Expr::var(a);
    c.push_back(e);
  }
  return MapSpec("affine", n, std::move(c));
}

inline MapSpec expression(int n, const std::vector<std::string>& comps, std::string name = "expression") {
  std::vector<Expr> c;
  for (const auto& s : comps) c.push_back(parse_expr(s, n));
  return MapSpec(std::move(name), n, std::move(c));
}

/// g o f.
inline MapSpec compose(const MapSpec& g, const MapSpec& f) {
  if (g.source_dim() != f.target_dim())
    throw std::invalid_argument("compose: " + g.name() + " expects R^" + std::to_string(g.source_dim()) + ", " +
                                f.name() + " lands in R^" + std::to_string(f.target_dim()));
  std::vector<Expr> c;
  for (const auto& e : g.components()) c.push_back(e.substitute(f.components()));
  return MapSpec(g.name() + "∘" + f.name(), f.source_dim(), std::move(c));
}

/// x -> (f1(x), f2(x)).
inline MapSpec product(const MapSpec& f1, const MapSpec& f2) {
  if (f1.source_dim() != f2.source_dim()) throw std::invalid_argument("product: source dimensions differ");
  std::vector<Expr> c = f1.components();
  c.insert(c.end(), f2.components().begin(), f2.components().end());
  return MapSpec("(" + f1.name() + "," + f2.name() + ")", f1.source_dim(), std::move(c));
}

/// Pads the target with zero coordinates up to dimension m.
inline MapSpec embed(const MapSpec& f, int m) {
  std::vector<Expr> c = f.components();
  if (m < static_cast<int>(c.size())) throw std::invalid_argument("embed: target dimension too small");
  c.resize(m, Expr(0.0));
  return MapSpec(f.name(), f.source_dim(), std::move(c));
}

namespace detail {
struct ComplexExpr {
  Expr re, im;
};
inline ComplexExpr mul(const ComplexExpr& a, const ComplexExpr& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
/// Horner evaluation of sum_k c_k z^k with z = x1 + i x2.
inline ComplexExpr polynomial(std::span<const std::complex<double>> c) {
  ComplexExpr z{Expr::var(0), Expr::var(1)};
  ComplexExpr acc{Expr(0.0), Expr(0.0)};
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc = mul(acc, z);
    acc = {acc.re + Expr(it->real()), acc.im + Expr(it->imag())};
  }
  return acc;
}
inline ComplexExpr power(int p) {
  std::vector<std::complex<double>> c(p + 1, 0.0);
  c[p] = 1.0;
  return polynomial(c);
}
}  // namespace detail

/// z -> (p_1(z), .., p_k(z)) into C^k = R^{2k}; coefficients in increasing degree.
inline MapSpec holomorphic_curve(const std::vector<std::vector<std::complex<double>>>& polys) {
  std::vector<Expr> c;
  for (const auto& p : polys) {
    auto e = detail::polynomial(p);
    c.push_back(e.re);
    c.push_back(e.im);
  }
  return MapSpec("holomorphic_curve", 2, std::move(c));
}

/// (z, z^2, .., z^k).
inline MapSpec moment_curve(int k) {
  std::vector<Expr> c;
  for (int p = 1; p <= k; ++p) {
    auto e = detail::power(p);
    c.push_back(e.re);
    c.push_back(e.im);
  }
  return MapSpec("moment_curve", 2, std::move(c));
}

inline MapSpec winding(int p) {
  if (p < 1) throw std::invalid_argument("winding: p must be >= 1");
  auto e = detail::power(p);
  return MapSpec("winding", 2, {e.re, e.im});
}

inline MapSpec conjugate() { return MapSpec("conjugate", 2, {Expr::var(0), -Expr::var(1)}); }

/// z -> (z^p, h(z)) with h given by coordinate expressions in x1, x2.
inline MapSpec graph(int p, const std::vector<std::string>& h) {
  auto e = detail::power(p);
  std::vector<Expr> c{e.re, e.im};
  for (const auto& s : h) c.push_back(parse_expr(s, 2));
  return MapSpec("graph", 2, std::move(c));
}

/// x -> |x|^{a-1} x on R^n; K-quasiregular with K = max(a^{n-1}, 1/a) for the volume form.
inline MapSpec radial_stretch(int n, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("radial_stretch: exponent must be positive");
  Expr r2(0.0);
  for (int i = 0; i < n; ++i) r2 = r2 + Expr::var(i) * Expr::var(i);
  Expr s = a == 1.0 ? Expr(1.0) : pow(r2, Expr(0.5 * (a - 1.0)));
  std::vector<Expr> c;
  for (int i = 0; i < n; ++i) c.push_back(s * Expr::var(i));
  return MapSpec("radial_stretch", n, std::move(c));
}

inline MapSpec sine_graph() {
  Expr xv = Expr::var(0), yv = Expr::var(1);
  return MapSpec("sine_graph", 2, {sin(xv) * sin(yv), cos(xv) * cos(yv)});
}

}  // namespace maps

}  // namespace qrc
