#pragma once

// Local structure of curves against simple forms: support planes, the
// rotation isometry, constant-coefficient localization, the graph
// decomposition L o f = (f_hat, h) and the dominant simple term for C^1 curves.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/distortion.hpp"
#include "qrc/form_field.hpp"
#include "qrc/grid.hpp"
#include "qrc/map_engine.hpp"

namespace qrc {

namespace detail {

// Orthonormal basis of span(P e_i), chosen by pivoting on the largest residual
// and then orthonormalized in increasing axis order, so simple inputs give
// recognizable answers (e.g. span{e2, e3} comes back as [e2, e3]).
inline Eigen::MatrixXd canonical_basis(const Eigen::MatrixXd& P, int rank) {
  const int m = static_cast<int>(P.rows());
  std::vector<int> chosen;
  Eigen::MatrixXd Q(m, 0);
  for (int step = 0; step < rank; ++step) {
    int best = -1;
    double best_norm = 0.0;
    for (int i = 0; i < m; ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      Eigen::VectorXd r = P.col(i) - Q * (Q.transpose() * P.col(i));
      if (r.norm() > best_norm + 1e-12) {
        best_norm = r.norm();
        best = i;
      }
    }
    chosen.push_back(best);
    Eigen::VectorXd r = P.col(best) - Q * (Q.transpose() * P.col(best));
    Q.conservativeResize(m, Q.cols() + 1);
    Q.col(Q.cols() - 1) = r.normalized();
  }
  std::sort(chosen.begin(), chosen.end());
  Eigen::MatrixXd B(m, rank);
  for (int c = 0; c < rank; ++c) {
    Eigen::VectorXd v = P.col(chosen[c]);
    for (int d = 0; d < c; ++d) v -= B.col(d).dot(v) * B.col(d);
    for (int d = 0; d < c; ++d) v -= B.col(d).dot(v) * B.col(d);  // second pass for orthogonality
    B.col(c) = v.normalized();
  }
  return B;
}

}  // namespace detail

/// The n-plane on which the simple covector a restricts to a volume form:
/// the orthogonal complement of the kernel of v -> v -| a. Columns orthonormal.
inline Eigen::MatrixXd support_plane(const AltTensor& a, double tol = kSimpleTol) {
  const int m = a.dim(), k = a.degree();
  if (k < 1) throw std::invalid_argument("support_plane: degree must be >= 1");
  if (a.is_zero()) throw std::invalid_argument("support_plane: zero covector has no support plane");
  if (!is_simple(a, tol)) throw std::invalid_argument("support_plane: covector is not simple");
  Eigen::MatrixXd M(binomial(m, k - 1), m);
  for (int i = 0; i < m; ++i) {
    AltTensor c = interior_product_basis(Mask{1} << i, a);
    for (std::size_t r = 0; r < c.size(); ++r) M(static_cast<Eigen::Index>(r), i) = c[r];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const double cutoff = 1e-9 * a.mass();
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > cutoff) ++rank;
  if (rank != k) throw std::invalid_argument("support_plane: interior-product rank " + std::to_string(rank) +
                                             " differs from the degree " + std::to_string(k));
  Eigen::MatrixXd V = svd.matrixV().leftCols(k);
  return detail::canonical_basis(V * V.transpose(), k);
}

/// Affine isometry L(y) = A (y - anchor).
struct Isometry {
  Eigen::MatrixXd A;
  std::vector<double> anchor;
  double det = 1.0;

  std::vector<double> operator()(std::span<const double> y) const {
    Eigen::VectorXd d(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) d(static_cast<Eigen::Index>(i)) = y[i] - anchor[i];
    Eigen::VectorXd r = A * d;
    return {r.data(), r.data() + r.size()};
  }
};

struct RotationResult {
  Isometry L;
  AltTensor transformed;  // (L^{-1})^* omega_p in the new coordinates
  double comass = 0.0;
};

/// Normalizing rotation: L(p) = 0 and (L^{-1})^* omega_p = |omega_p| dx_1 ^ .. ^ dx_n.
inline RotationResult rotation_isometry(const AltTensor& a, std::span<const double> p) {
  const int m = a.dim(), n = a.degree();
  if (!is_simple(a)) throw std::invalid_argument(
      "rotation_isometry: form is not simple at this point; use dominant_simple_part to extract a simple term");
  Eigen::MatrixXd U = support_plane(a);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(m, m) - U * U.transpose();
  Eigen::MatrixXd Q(m, m);
  Q.leftCols(n) = U;
  if (m > n) Q.rightCols(m - n) = detail::canonical_basis(P, m - n);
  AltTensor t = pullback(a, Q);
  if (t[0] < 0.0) {
    Q.col(n - 1) *= -1.0;
    t = pullback(a, Q);
  }
  RotationResult r;
  r.L.A = Q.transpose();
  r.L.anchor.assign(p.begin(), p.end());
  r.L.det = r.L.A.determinant() > 0.0 ? 1.0 : -1.0;
  r.transformed = t;
  r.comass = a.mass();
  return r;
}

inline RotationResult rotation_isometry(const FormField& F, std::span<const double> p) {
  return rotation_isometry(F.eval(p), p);
}

struct Localization {
  double c = 0.0;
  double rho = 0.0;  // +inf for constant forms
  bool unbounded = false;
};

/// Smallest c >= 2K with c / (c - 1 - K) <= K'/K.
inline double localization_constant(double K, double Kp) {
  if (!(K >= 1.0) || !(Kp > K)) throw std::invalid_argument("localization: need K' > K >= 1");
  return std::max(2.0 * K, Kp * (1.0 + K) / (Kp - K));
}

namespace detail {

// Cell centers of a ball grid plus sphere points; resolution adapts to the dimension.
inline std::vector<std::vector<double>> ball_samples(std::span<const double> center, double r, int budget = 20000) {
  const int m = static_cast<int>(center.size());
  int res = std::max(3, static_cast<int>(std::floor(std::pow(static_cast<double>(budget), 1.0 / m))));
  std::vector<double> c(center.begin(), center.end());
  GridDomain g = GridDomain::ball(c, r, res);
  std::vector<std::vector<double>> pts;
  std::vector<double> p(m);
  for (std::size_t i = 0; i < g.cell_count(); ++i)
    if (g.cell_center(i, p)) pts.push_back(p);
  auto bd = g.boundary_points(std::max(4, res));
  pts.insert(pts.end(), bd.begin(), bd.end());
  pts.push_back(c);
  return pts;
}

// Largest r in (0, hi] with ok(r) by bisection; nullopt if ok fails down to the floor.
template <class Ok>
std::optional<double> bisect_radius(double hi, double floor, Ok&& ok, int max_steps = 40) {
  if (ok(hi)) return hi;
  double lo = 0.0;
  for (int s = 0; s < max_steps; ++s) {
    double mid = 0.5 * (lo + hi);
    if (ok(mid))
      lo = mid;
    else
      hi = mid;
  }
  if (lo < floor) return std::nullopt;
  return lo;
}

}  // namespace detail

/// Comass of omega(y) - omega(p) stays below |omega(p)|/c on B(p, rho); rho carries the 0.9 safety factor.
inline Localization localization(const FormField& F, std::span<const double> p, double K, double Kp,
                                 double rho_max = 1e3) {
  Localization out;
  out.c = localization_constant(K, Kp);
  if (F.is_constant()) {
    out.rho = std::numeric_limits<double>::infinity();
    out.unbounded = true;
    return out;
  }
  AltTensor w0 = F.eval(p);
  const double bound = comass(w0) / out.c;
  auto ok = [&](double r) {
    for (const auto& y : detail::ball_samples(p, r)) {
      try {
        if (comass(F.eval(y) - w0) > bound) return false;
      } catch (const DomainError&) {
        return false;
      }
    }
    return true;
  };
  // grow until the condition fails, then bisect below that radius
  double hi = 1.0;
  while (hi < rho_max && ok(hi)) hi *= 2.0;
  if (hi >= rho_max) {
    out.rho = 0.9 * rho_max;
    return out;
  }
  auto r = detail::bisect_radius(hi, 1e-12, ok, 60);
  if (!r) throw std::runtime_error("localization: no positive radius found above the resolution floor");
  out.rho = 0.9 * *r;
  return out;
}

struct DecompositionOptions {
  double K = 1.0;
  double Kp = 2.0;
  double eps = 0.1;
  double radius = 0.5;     // initial source radius of D
  int resolution = 64;     // verification grid per axis
  double diameter = 1.0;   // domain diameter for the bisection floor
  double tol = 1e-6;
};

struct DecompositionResult {
  std::vector<double> x;
  std::vector<double> image;
  Isometry L;
  AltTensor transformed;
  double comass_at_image = 0.0;
  double c = 0.0;
  double rho = 0.0;
  double K = 1.0, Kp = 2.0, eps = 0.1;
  double radius = 0.0;  // radius of the source ball D
  std::string grid_hash;
  std::size_t n_samples = 0, n_degenerate = 0;
  double margin_min = std::numeric_limits<double>::infinity();
  double margin_max = 0.0;
  double lower_bound = 0.0, upper_bound = 0.0;
  double fhat_sup_K = 0.0;
  bool fhat_verified = false;
  bool sandwich_ok = false;
  bool verified = false;
  bool inconclusive = false;
  bool radius_floor_hit = false;
  std::string diagnostics;
};

/// L o f = (f_hat, h) on a ball D around x, with the Jacobian sandwich checked on a grid.
inline DecompositionResult graph_decompose(const MapSpec& f, const FormField& F, std::span<const double> x,
                                           const DecompositionOptions& opt = {}) {
  const int n = f.source_dim(), m = f.target_dim();
  if (F.degree() != n || F.dim() != m) throw std::invalid_argument("graph_decompose: form and map dimensions differ");
  DecompositionResult R;
  R.x.assign(x.begin(), x.end());
  R.K = opt.K;
  R.Kp = opt.Kp;
  R.eps = opt.eps;
  R.lower_bound = 1.0 / ((1.0 + opt.eps) * opt.Kp);
  R.upper_bound = (1.0 + opt.eps) * opt.K;
  Jet j0 = f.jet(x);
  R.image = j0.value;
  if (operator_norm(j0) <= kDegenerateTol) {
    R.inconclusive = true;
    R.diagnostics = "Df vanishes at x; no quasiregular behavior to decompose";
    return R;
  }
  auto rot = rotation_isometry(F, j0.value);
  R.L = rot.L;
  R.transformed = rot.transformed;
  R.comass_at_image = rot.comass;
  auto loc = localization(F, j0.value, opt.K, opt.Kp);
  R.c = loc.c;
  R.rho = loc.rho;

  const double w0 = rot.comass;
  auto ok = [&](double r) {
    for (const auto& y : detail::ball_samples(x, r, 4096)) {
      try {
        auto v = f(y);
        double d2 = 0.0;
        for (int i = 0; i < m; ++i) d2 += (v[i] - j0.value[i]) * (v[i] - j0.value[i]);
        if (!loc.unbounded && !(std::sqrt(d2) < loc.rho)) return false;
        double s = F.comass_at(v) / w0;
        if (s > 1.0 + opt.eps || s < 1.0 / (1.0 + opt.eps)) return false;
      } catch (const DomainError&) {
        return false;
      }
    }
    return true;
  };
  auto r = detail::bisect_radius(opt.radius, 1e-6 * opt.diameter, ok);
  if (!r) {
    R.radius_floor_hit = true;
    R.inconclusive = true;
    R.diagnostics = "neighborhood radius fell below the floor";
    return R;
  }
  R.radius = *r;

  GridDomain D = GridDomain::ball(R.x, R.radius, opt.resolution);
  R.grid_hash = D.hash();
  struct Acc {
    std::size_t n = 0, degenerate = 0, bad_sign = 0;
    double mmin = std::numeric_limits<double>::infinity(), mmax = 0.0, ksup = 0.0;
  };
  Eigen::MatrixXd An = R.L.A.topRows(n);
  Acc acc = grid_reduce(
      D, Acc{},
      [&](std::span<const double> y, Acc& a) {
        Jet j = f.jet(y);
        ++a.n;
        if (operator_norm(j) <= kDegenerateTol) {
          ++a.degenerate;
          return;
        }
        Eigen::MatrixXd Dh = An * j.D;
        double Jh = Dh.determinant();
        double jac = star_pullback(j, F);
        if (!(jac > 0.0) || !(Jh > 0.0)) {
          ++a.bad_sign;
          return;
        }
        double margin = w0 * Jh / jac;
        a.mmin = std::min(a.mmin, margin);
        a.mmax = std::max(a.mmax, margin);
        a.ksup = std::max(a.ksup, std::pow(operator_norm(Dh), n) / Jh);
      },
      [](Acc a, const Acc& b) {
        a.n += b.n;
        a.degenerate += b.degenerate;
        a.bad_sign += b.bad_sign;
        a.mmin = std::min(a.mmin, b.mmin);
        a.mmax = std::max(a.mmax, b.mmax);
        a.ksup = std::max(a.ksup, b.ksup);
        return a;
      });
  R.n_samples = acc.n;
  R.n_degenerate = acc.degenerate;
  R.margin_min = acc.mmin;
  R.margin_max = acc.mmax;
  R.fhat_sup_K = acc.ksup;
  R.fhat_verified = acc.bad_sign == 0 && acc.ksup <= opt.Kp * (1.0 + opt.tol);
  R.sandwich_ok = acc.bad_sign == 0 && acc.mmin >= R.lower_bound - opt.tol && acc.mmax <= R.upper_bound + opt.tol;
  if (acc.n == acc.degenerate) {
    R.inconclusive = true;
    R.diagnostics = "every sample of D is degenerate";
  } else if (acc.bad_sign > 0) {
    R.diagnostics = std::to_string(acc.bad_sign) + " samples with non-positive Jacobian";
  }
  R.verified = !R.inconclusive && R.fhat_verified && R.sandwich_ok;
  return R;
}

struct DominantPart {
  MultiIndex J;
  std::vector<double> terms;  // (u_I o f)(star f^* dx_I) at x, lexicographic in I
  double radius = 0.0;        // +inf: whole domain
  bool whole_domain = false;
  double constant = 0.0;      // 2 C(m, n) K
  FormField simple_form;      // u_J dx_J
};

/// Selects the largest term of star f^* omega = sum_I (u_I o f) star f^*(dx_I) at x and
/// shrinks a ball U around x until star f^* omega <= 2 C(m,n) (u_J o f) star f^*(dx_J) on U.
inline DominantPart dominant_simple_part(const MapSpec& f, const FormField& F, std::span<const double> x, double K,
                                         double radius = 0.5, double diameter = 1.0) {
  const int n = f.source_dim(), m = f.target_dim();
  if (F.degree() != n || F.dim() != m) throw std::invalid_argument("dominant_simple_part: dimension mismatch");
  auto terms_at = [&](std::span<const double> y) {
    Jet j = f.jet(y);
    AltTensor u = F.eval(j.value);
    std::vector<double> t(u.size());
    for (std::size_t I = 0; I < u.size(); ++I)
      t[I] = u[I] * detail::minor_det(j.D, u.mask_at(I), (Mask{1} << n) - 1, n);
    return t;
  };
  DominantPart out;
  out.terms = terms_at(x);
  std::size_t best = 0;
  for (std::size_t I = 1; I < out.terms.size(); ++I)
    if (out.terms[I] > out.terms[best]) best = I;
  if (!(out.terms[best] > 0.0))
    throw std::domain_error("dominant_simple_part: no positive term at x (star f^* omega must be positive)");
  const Mask jm = basis_masks(m, n)[best];
  out.J = MultiIndex::from_mask(m, jm);
  out.constant = 2.0 * static_cast<double>(binomial(m, n)) * K;
  std::vector<Expr> coeffs(binomial(m, n), Expr(0.0));
  coeffs[best] = F.field().coeffs()[best];
  out.simple_form = FormField("dominant_" + out.J.to_string(), TensorField(m, n, std::move(coeffs)));
  out.simple_form.set_simple_everywhere(true);
  if (n == m) {
    out.whole_domain = true;
    out.radius = std::numeric_limits<double>::infinity();
    return out;
  }
  auto ok = [&](double r) {
    for (const auto& y : detail::ball_samples(x, r, 4096)) {
      auto t = terms_at(y);
      double total = 0.0;
      for (double v : t) total += v;
      if (total > out.constant / K * t[best]) return false;
    }
    return true;
  };
  auto r = detail::bisect_radius(radius, 1e-6 * diameter, ok);
  if (!r) throw std::runtime_error("dominant_simple_part: neighborhood radius fell below the floor");
  out.radius = *r;
  return out;
}

struct PositivityReport {
  std::size_t n_samples = 0;
  std::size_t n_positive = 0;
  double positive_fraction = 0.0;
  std::vector<std::vector<double>> violations;  // non-positive samples with Df != 0
};

inline PositivityReport jacobian_positivity(const MapSpec& f, const FormField& F, const GridDomain& grid) {
  struct Acc {
    std::size_t n = 0, pos = 0;
    std::vector<std::vector<double>> bad;
  };
  Acc a = grid_reduce(
      grid, Acc{},
      [&](std::span<const double> x, Acc& acc) {
        Jet j = f.jet(x);
        ++acc.n;
        double jac = star_pullback(j, F);
        if (jac > 0.0)
          ++acc.pos;
        else if (operator_norm(j) > kDegenerateTol)
          acc.bad.emplace_back(x.begin(), x.end());
      },
      [](Acc x, const Acc& y) {
        x.n += y.n;
        x.pos += y.pos;
        x.bad.insert(x.bad.end(), y.bad.begin(), y.bad.end());
        return x;
      });
  PositivityReport r;
  r.n_samples = a.n;
  r.n_positive = a.pos;
  r.positive_fraction = a.n ? static_cast<double>(a.pos) / static_cast<double>(a.n) : 0.0;
  r.violations = std::move(a.bad);
  return r;
}

}  // namespace qrc
