#pragma once

// Integral functionals over grids: n-area and n-energy, the quasiminimality
// comparison, the Caccioppoli inequality with its integration-by-parts
// identity, logarithmic capacity cutoffs and the Liouville bound chain.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/comass.hpp"
#include "qrc/distortion.hpp"
#include "qrc/form_field.hpp"
#include "qrc/grid.hpp"
#include "qrc/map_engine.hpp"

namespace qrc {

/// A caller-supplied input violates an operation's precondition.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Cutoffs

enum class CutoffKind { SmoothBump, LogCapacity };

/// Transition profile of a smooth bump: Exp is C^infinity (e^{-1/t} gluing),
/// Poly is the C^2 quintic smoothstep.
enum class BumpProfile { Exp, Poly };

/// Radial cutoff psi(x) = phi(|x - center|): 1 inside r, 0 outside R.
struct CutoffSpec {
  CutoffKind kind = CutoffKind::SmoothBump;
  std::vector<double> center;
  double r = 1.0;
  double R = 2.0;
  BumpProfile profile = BumpProfile::Exp;
  double mollify = 0.0;  // radial box-average half-width, log cutoff only

  static CutoffSpec smooth_bump(std::vector<double> center, double r, double R, BumpProfile p = BumpProfile::Exp) {
    CutoffSpec c{CutoffKind::SmoothBump, std::move(center), r, R, p, 0.0};
    c.validate();
    return c;
  }
  static CutoffSpec log_capacity(std::vector<double> center, double r, double R, double mollify = 0.0) {
    CutoffSpec c{CutoffKind::LogCapacity, std::move(center), r, R, BumpProfile::Exp, mollify};
    c.validate();
    return c;
  }

  void validate() const {
    if (center.empty()) throw std::invalid_argument("cutoff: empty center");
    if (!(r > 0.0) || !(R > r)) throw std::invalid_argument("cutoff: need 0 < r < R");
    if (mollify < 0.0 || mollify >= r || (mollify > 0.0 && kind != CutoffKind::LogCapacity))
      throw std::invalid_argument("cutoff: mollification radius must lie in [0, r) and needs a log cutoff");
  }

  int dim() const { return static_cast<int>(center.size()); }
  std::vector<double> support_lo() const {
    std::vector<double> v(center);
    for (auto& x : v) x -= R + mollify;
    return v;
  }
  std::vector<double> support_hi() const {
    std::vector<double> v(center);
    for (auto& x : v) x += R + mollify;
    return v;
  }

  double radial(double rho) const {
    if (mollify > 0.0) return (antiderivative(rho + mollify) - antiderivative(rho - mollify)) / (2.0 * mollify);
    return raw(rho);
  }
  double radial_derivative(double rho) const {
    if (mollify > 0.0) return (raw(std::abs(rho + mollify)) - raw(std::abs(rho - mollify))) / (2.0 * mollify);
    return raw_derivative(rho);
  }

  double psi(std::span<const double> x) const { return radial(distance(x)); }
  /// Gradient; zero at the center and wherever the profile is flat.
  void grad(std::span<const double> x, std::span<double> out) const {
    double rho = distance(x);
    double d = rho > 0.0 ? radial_derivative(rho) / rho : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = d * (x[i] - center[i]);
  }
  double grad_norm(std::span<const double> x) const { return std::abs(radial_derivative(distance(x))); }

 private:
  double distance(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
    return std::sqrt(s);
  }
  static double g(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
  static double step(double t, BumpProfile p) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    if (p == BumpProfile::Poly) return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    return g(t) / (g(t) + g(1.0 - t));
  }
  static double step_derivative(double t, BumpProfile p) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    if (p == BumpProfile::Poly) return 30.0 * t * t * (1.0 - t) * (1.0 - t);
    double a = g(t), b = g(1.0 - t);
    return (a / (t * t) * b + a * b / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b));
  }
  double raw(double rho) const {
    if (kind == CutoffKind::SmoothBump) return step((R - rho) / (R - r), profile);
    if (rho <= r) return 1.0;
    if (rho >= R) return 0.0;
    return std::log(R / rho) / std::log(R / r);
  }
  double raw_derivative(double rho) const {
    if (kind == CutoffKind::SmoothBump) return -step_derivative((R - rho) / (R - r), profile) / (R - r);
    if (rho <= r || rho >= R) return 0.0;
    return -1.0 / (rho * std::log(R / r));
  }
  // odd antiderivative of the log profile, valid for |s| <= R + r
  double antiderivative(double s) const {
    if (s < 0.0) return -antiderivative(-s);
    const double L = std::log(R / r);
    auto Phi = [&](double u) { return r + (u * std::log(R / u) + u - r * std::log(R / r) - r) / L; };
    if (s <= r) return s;
    if (s <= R) return Phi(s);
    return Phi(R);
  }
};

/// Surface area of the unit sphere S^{n-1}.
inline double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Tracked Caccioppoli constant C0 = n^n n^{(n-1)/2}.
inline double caccioppoli_constant(int n) {
  return std::pow(static_cast<double>(n), n) * std::pow(static_cast<double>(n), 0.5 * (n - 1));
}

struct CapacityCutoff {
  CutoffSpec cutoff;
  double analytic_energy = 0.0;  // omega_{n-1} log(R/r)^{1-n}
};

inline CapacityCutoff capacity_cutoff(double r, double R, int n, std::vector<double> center = {}, double mollify = 0.0) {
  if (n < 1) throw std::invalid_argument("capacity_cutoff: n must be >= 1");
  if (!(r > 0.0) || !(r < R)) throw std::invalid_argument("capacity_cutoff: need 0 < r < R");
  if (center.empty()) center.assign(n, 0.0);
  CapacityCutoff c{CutoffSpec::log_capacity(std::move(center), r, R, mollify), 0.0};
  c.analytic_energy = sphere_area(n) * std::pow(std::log(R / r), 1.0 - n);
  return c;
}

/// Quadrature of int |grad psi|^n on a log-polar midpoint grid around the cutoff center;
/// the Cartesian gradient is evaluated at each node. Angular grids for n = 2, 3; a
/// radial ray times the sphere area beyond.
inline double capacity_energy_quadrature(const CutoffSpec& c, int res) {
  if (res < 2) throw std::invalid_argument("capacity quadrature: resolution must be >= 2");
  const int n = c.dim();
  const double t0 = std::log(c.r - c.mollify > 0.0 ? c.r - c.mollify : c.r);
  const double t1 = std::log(c.R + c.mollify);
  const double dt = (t1 - t0) / res;
  std::vector<double> x(n, 0.0), gr(n);
  auto density = [&](double rho) {
    c.grad(x, gr);
    double s = 0.0;
    for (double v : gr) s += v * v;
    return std::pow(s, 0.5 * n) * std::pow(rho, n);
  };
  double sum = 0.0;
  if (n == 2) {
    const double dth = 2.0 * std::numbers::pi / res;
    for (int i = 0; i < res; ++i) {
      double rho = std::exp(t0 + (i + 0.5) * dt);
      for (int a = 0; a < res; ++a) {
        double th = (a + 0.5) * dth;
        x[0] = c.center[0] + rho * std::cos(th);
        x[1] = c.center[1] + rho * std::sin(th);
        sum += density(rho) * dt * dth;
      }
    }
  } else if (n == 3) {
    const double dth = 2.0 * std::numbers::pi / res, dph = std::numbers::pi / res;
    for (int i = 0; i < res; ++i) {
      double rho = std::exp(t0 + (i + 0.5) * dt);
      for (int b = 0; b < res; ++b) {
        double ph = (b + 0.5) * dph;
        for (int a = 0; a < res; ++a) {
          double th = (a + 0.5) * dth;
          x[0] = c.center[0] + rho * std::sin(ph) * std::cos(th);
          x[1] = c.center[1] + rho * std::sin(ph) * std::sin(th);
          x[2] = c.center[2] + rho * std::cos(ph);
          sum += density(rho) * std::sin(ph) * dt * dth * dph;
        }
      }
    }
  } else {
    for (int i = 0; i < res; ++i) {
      double rho = std::exp(t0 + (i + 0.5) * dt);
      x = c.center;
      x[0] += rho;
      sum += density(rho) * dt;
    }
    sum *= sphere_area(n);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Energies

struct EnergyReport {
  double area = 0.0;             // int |wedge^n Df|
  double n_energy = 0.0;         // int |Df|^n
  double pullback = 0.0;         // int f^* omega
  double weighted_area = 0.0;    // int |omega o f| |wedge^n Df|, dominates the pullback integral
  double coarse_area = 0.0, coarse_n_energy = 0.0, coarse_pullback = 0.0;
  /// max relative change of the three integrals between half and full resolution
  double refinement_ratio = 0.0;
  std::string grid_descriptor;
  std::string grid_hash;
};

namespace detail {

inline std::vector<double> energy_sums(const MapSpec& f, const FormField& F, const GridDomain& W) {
  const int n = f.source_dim();
  return grid_integrate_many(W, 4, [&](std::span<const double> x, std::vector<double>& acc) {
    Jet j = f.jet(x);
    double area = top_minor_norm(j);
    acc[0] += area;
    acc[1] += std::pow(operator_norm(j), n);
    acc[2] += star_pullback(j, F);
    acc[3] += F.comass_at(j.value) * area;
  });
}

inline double rel_change(double fine, double coarse) {
  double s = std::max(std::abs(fine), 1e-300);
  return std::abs(fine - coarse) / s;
}

}  // namespace detail

inline EnergyReport energy(const MapSpec& f, const FormField& F, const GridDomain& W) {
  if (W.dim() != f.source_dim()) throw std::invalid_argument("energy: grid dimension does not match the map source");
  auto v = detail::energy_sums(f, F, W);
  auto c = detail::energy_sums(f, F, W.rescaled(1, 2));
  EnergyReport r;
  r.area = v[0];
  r.n_energy = v[1];
  r.pullback = v[2];
  r.weighted_area = v[3];
  r.coarse_area = c[0];
  r.coarse_n_energy = c[1];
  r.coarse_pullback = c[2];
  r.refinement_ratio = std::max({detail::rel_change(v[0], c[0]), detail::rel_change(v[1], c[1]),
                                 v[2] == 0.0 && c[2] == 0.0 ? 0.0 : detail::rel_change(v[2], c[2])});
  r.grid_descriptor = W.descriptor();
  r.grid_hash = W.hash();
  return r;
}

// ---------------------------------------------------------------------------
// Quasiminimality

struct QuasiminOptions {
  double boundary_tol = 1e-8;
  int boundary_per_axis = 64;
  double tol = 0.02;  // relative slack on the K R(omega) bound
  double quadrature_floor = 1e-10;
};

struct QuasiminReport {
  double pullback_f = 0.0, pullback_h = 0.0;
  double stokes_residual = 0.0;
  /// |I(N) - I(N/2)| summed over f and h, plus a relative floor
  double quadrature_tol = 0.0;
  double area_f = 0.0, area_h = 0.0;
  double ratio = 0.0;  // area_f / area_h
  double R = 1.0;      // bounded ratio of omega over the images
  double K = 1.0;
  double bound = 1.0;  // K R
  double boundary_mismatch = 0.0;
  bool stokes_ok = false;
  bool verified = false;
};

/// Compares the n-area of f with that of a competitor h agreeing with f on the boundary of W.
inline QuasiminReport quasiminimality_compare(const MapSpec& f, const MapSpec& h, const GridDomain& W,
                                              const FormField& F, double K, const QuasiminOptions& opt = {}) {
  if (!(K >= 1.0)) throw std::invalid_argument("K must be >= 1");
  if (f.source_dim() != h.source_dim() || f.target_dim() != h.target_dim())
    throw std::invalid_argument("quasiminimality: f and h have different dimensions");
  if (!F.potential()) throw NoPotentialError("quasiminimality: form '" + F.name() + "' is not known to be exact");
  QuasiminReport r;
  r.K = K;
  for (const auto& x : W.boundary_points(opt.boundary_per_axis)) {
    auto a = f(x), b = h(x);
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    r.boundary_mismatch = std::max(r.boundary_mismatch, d);
  }
  if (r.boundary_mismatch > opt.boundary_tol)
    throw PreconditionError("quasiminimality: h differs from f on the boundary by " +
                            std::to_string(r.boundary_mismatch) + "; h is not a competitor");
  auto ef = detail::energy_sums(f, F, W), eh = detail::energy_sums(h, F, W);
  auto cf = detail::energy_sums(f, F, W.rescaled(1, 2)), ch = detail::energy_sums(h, F, W.rescaled(1, 2));
  r.pullback_f = ef[2];
  r.pullback_h = eh[2];
  r.stokes_residual = std::abs(ef[2] - eh[2]);
  r.quadrature_tol = std::abs(ef[2] - cf[2]) + std::abs(eh[2] - ch[2]) +
                     opt.quadrature_floor * (1.0 + std::abs(ef[2]) + std::abs(eh[2]));
  r.area_f = ef[0];
  r.area_h = eh[0];
  r.ratio = ef[0] / eh[0];

  struct Acc {
    double sup = 0.0, inf = std::numeric_limits<double>::infinity();
  };
  Acc a = grid_reduce(
      W, Acc{},
      [&](std::span<const double> x, Acc& acc) {
        for (const MapSpec* g : {&f, &h}) {
          double c = F.comass_at((*g)(x));
          acc.sup = std::max(acc.sup, c);
          acc.inf = std::min(acc.inf, c);
        }
      },
      [](Acc x, const Acc& y) { return Acc{std::max(x.sup, y.sup), std::min(x.inf, y.inf)}; });
  if (!(a.inf > 1e-12)) throw std::domain_error("quasiminimality: form vanishes on the image");
  r.R = a.sup / a.inf;
  r.bound = K * r.R;
  r.stokes_ok = r.stokes_residual < 2.0 * r.quadrature_tol;
  r.verified = r.stokes_ok && r.ratio <= r.bound * (1.0 + opt.tol);
  return r;
}

namespace maps {

/// f + amplitude * v * prod_i sin^2(pi (x_i - lo_i) / (hi_i - lo_i)): agrees with f on the boundary of the box.
inline MapSpec bump_competitor(const MapSpec& f, std::span<const double> lo, std::span<const double> hi,
                               std::span<const double> direction, double amplitude) {
  const int n = f.source_dim();
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw std::invalid_argument("bump_competitor: box dimension differs from the source");
  if (static_cast<int>(direction.size()) != f.target_dim())
    throw std::invalid_argument("bump_competitor: direction must live in the target");
  Expr phi(amplitude);
  for (int i = 0; i < n; ++i) {
    Expr s = sin(Expr(std::numbers::pi / (hi[i] - lo[i])) * (Expr::var(i) - Expr(lo[i])));
    phi = phi * s * s;
  }
  std::vector<Expr> c = f.components();
  for (std::size_t k = 0; k < c.size(); ++k)
    if (direction[k] != 0.0) c[k] = c[k] + Expr(direction[k]) * phi;
  return MapSpec(f.name() + "+bump", n, std::move(c));
}

}  // namespace maps

// ---------------------------------------------------------------------------
// Caccioppoli

struct CaccioppoliOptions {
  double K = 1.0;
  double potential_tol = 1e-8;
  bool refinement = true;  // also evaluate at half resolution
};

struct CaccioppoliReport {
  double lhs = 0.0;             // int psi^n f^* omega
  double parts = 0.0;           // int d(psi^n) ^ f^* tau
  double parts_residual = 0.0;  // |lhs + parts|
  double kernel = 0.0;          // int |grad psi|^n (|tau|^n / |omega|^{n-1}) o f
  double K = 1.0;
  double C0 = 0.0;
  double empirical_C = 0.0;  // lhs / (K^{n-1} kernel)
  bool inequality_holds = false;
  std::optional<double> coarse_parts_residual;
  double potential_residual = 0.0;
};

namespace detail {

inline std::vector<double> caccioppoli_sums(const MapSpec& f, const FormField& F, const CutoffSpec& psi,
                                            const GridDomain& grid) {
  const int n = f.source_dim();
  return grid_integrate_many(grid, 3, [&](std::span<const double> x, std::vector<double>& acc) {
    double p = psi.psi(x);
    std::vector<double> gp(n);
    psi.grad(x, gp);
    double gnorm = 0.0;
    for (double v : gp) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    if (p == 0.0 && gnorm == 0.0) return;
    Jet j = f.jet(x);
    acc[0] += std::pow(p, n) * star_pullback(j, F);
    if (gnorm > 0.0) {
      // d(psi^n) = n psi^{n-1} d psi
      double s = n * std::pow(p, n - 1);
      for (double& v : gp) v *= s;
      acc[1] += wedge(AltTensor::covector(gp), pullback_potential(j, F))[0];
      AltTensor tau = poincare_potential(F, j.value);
      double tn = n == 1 ? std::abs(tau[0]) : comass(tau);
      acc[2] += std::pow(gnorm, n) * std::pow(tn, n) / std::pow(F.comass_at(j.value), n - 1);
    }
  });
}

}  // namespace detail

inline CaccioppoliReport caccioppoli_check(const MapSpec& f, const FormField& F, const CutoffSpec& psi,
                                           const GridDomain& grid, const CaccioppoliOptions& opt = {}) {
  const int n = f.source_dim();
  if (F.degree() != n) throw std::invalid_argument("caccioppoli: form degree differs from the source dimension");
  if (psi.dim() != n || grid.dim() != n) throw std::invalid_argument("caccioppoli: cutoff or grid dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (psi.support_lo()[i] < grid.lo()[i] || psi.support_hi()[i] > grid.hi()[i])
      throw PreconditionError("caccioppoli: cutoff support is not inside the grid");
  if (!F.potential()) throw NoPotentialError("caccioppoli: no potential for form '" + F.name() + "'");
  // potential check along a sparse set of image points
  std::vector<std::vector<double>> pts;
  const std::size_t stride = std::max<std::size_t>(1, grid.cell_count() / 64);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < grid.cell_count(); i += stride)
    if (grid.cell_center(i, x)) pts.push_back(f(x));
  CaccioppoliReport r;
  r.potential_residual = potential_residual(F, pts);
  if (r.potential_residual > opt.potential_tol)
    throw PreconditionError("caccioppoli: potential residual " + std::to_string(r.potential_residual) +
                            " exceeds tolerance");
  auto s = detail::caccioppoli_sums(f, F, psi, grid);
  r.lhs = s[0];
  r.parts = s[1];
  r.parts_residual = std::abs(s[0] + s[1]);
  r.kernel = s[2];
  r.K = opt.K;
  r.C0 = caccioppoli_constant(n);
  const double scale = std::pow(opt.K, n - 1) * r.kernel;
  r.empirical_C = scale > 0.0 ? r.lhs / scale : 0.0;
  r.inequality_holds = r.lhs <= r.C0 * scale * (1.0 + 1e-12) + 1e-14;
  if (opt.refinement) {
    auto c = detail::caccioppoli_sums(f, F, psi, grid.rescaled(1, 2));
    r.coarse_parts_residual = std::abs(c[0] + c[1]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Liouville

struct LiouvilleOptions {
  double K = 1.0;
  int resolution = 128;  // per axis, for the image sweep on B(R) and the direct integral on B(r)
  int capacity_resolution = 256;
};

struct LiouvilleReport {
  double r = 0.0, R = 0.0;
  double capacity_energy = 0.0;   // closed form
  double capacity_quadrature = 0.0;
  double sup_kernel = 0.0;        // sup over f(B(R)) of |tau|^n / |omega|^{n-1}
  double C0 = 0.0;
  double bound = 0.0;
  double direct_integral = 0.0;   // int_{B(r)} f^* omega
};

inline LiouvilleReport liouville_bound(const MapSpec& f, const FormField& F, double r, double R,
                                       const LiouvilleOptions& opt = {}) {
  const int n = f.source_dim();
  if (F.degree() != n) throw std::invalid_argument("liouville: form degree differs from the source dimension");
  if (!F.potential()) throw NoPotentialError("liouville: no potential for form '" + F.name() + "'");
  auto cap = capacity_cutoff(r, R, n);
  LiouvilleReport out;
  out.r = r;
  out.R = R;
  out.capacity_energy = cap.analytic_energy;
  out.capacity_quadrature = capacity_energy_quadrature(cap.cutoff, n == 2 ? opt.capacity_resolution : 64);
  out.C0 = caccioppoli_constant(n);
  std::vector<double> origin(n, 0.0);
  GridDomain big = GridDomain::ball(origin, R, opt.resolution);
  auto kernel_at = [&](std::span<const double> y) {
    for (double v : y)
      if (!std::isfinite(v)) throw std::domain_error("liouville: unbounded image on B(R)");
    AltTensor tau = poincare_potential(F, y);
    double w = F.comass_at(y);
    if (!(w > 0.0)) throw std::domain_error("liouville: form vanishes on the image");
    double tn = n == 1 ? std::abs(tau[0]) : comass(tau);
    return std::pow(tn, n) / std::pow(w, n - 1);
  };
  double sup = grid_reduce(
      big, 0.0, [&](std::span<const double> x, double& acc) { acc = std::max(acc, kernel_at(f(x))); },
      [](double a, double b) { return std::max(a, b); });
  for (const auto& x : big.boundary_points(std::max(8, opt.resolution))) sup = std::max(sup, kernel_at(f(x)));
  out.sup_kernel = sup;
  out.bound = out.C0 * std::pow(opt.K, n - 1) * sup * out.capacity_energy;
  GridDomain small = GridDomain::ball(origin, r, opt.resolution);
  out.direct_integral = grid_integrate(small, [&](std::span<const double> x) { return star_pullback(f.jet(x), F); });
  return out;
}

inline std::vector<LiouvilleReport> liouville_decay(const MapSpec& f, const FormField& F, double r,
                                                    std::span<const double> Rs, const LiouvilleOptions& opt = {}) {
  std::vector<LiouvilleReport> out;
  for (double R : Rs) out.push_back(liouville_bound(f, F, r, R, opt));
  return out;
}

inline void write_decay_csv(std::ostream& os, std::span<const LiouvilleReport> rows) {
  os << "R,capacity_energy,liouville_bound,direct_integral\n";
  os.precision(17);
  for (const auto& row : rows)
    os << row.R << ',' << row.capacity_energy << ',' << row.bound << ',' << row.direct_integral << '\n';
}

}  // namespace qrc
