#pragma once

// Sequences of curves with a declared limit: uniform distance, weak convergence
// of pullbacks against a cutoff, lower semicontinuity of the n-energy over a
// finite tail, and distortion of the limit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/distortion.hpp"
#include "qrc/functionals.hpp"
#include "qrc/grid.hpp"
#include "qrc/map_engine.hpp"

namespace qrc {

struct SequenceSpec {
  std::string name;
  std::function<MapSpec(int)> member;
  MapSpec limit;
  std::vector<int> indices{1, 2, 4, 8, 16, 32};

  void validate() const {
    if (indices.empty()) throw std::invalid_argument("sequence '" + name + "': empty index list");
    for (int j : indices) {
      if (j < 1) throw std::invalid_argument("sequence '" + name + "': indices must be >= 1");
      MapSpec f = member(j);
      if (f.source_dim() != limit.source_dim() || f.target_dim() != limit.target_dim())
        throw std::invalid_argument("sequence '" + name + "': member " + std::to_string(j) +
                                    " has different dimensions from the limit");
    }
  }
};

/// Max over grid samples of |f(x) - g(x)|.
inline double uniform_distance(const MapSpec& f, const MapSpec& g, const GridDomain& grid) {
  if (f.source_dim() != g.source_dim() || f.target_dim() != g.target_dim())
    throw std::invalid_argument("uniform_distance: maps have different dimensions");
  return grid_reduce(
      grid, 0.0,
      [&](std::span<const double> x, double& acc) {
        auto a = f(x), b = g(x);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        acc = std::max(acc, std::sqrt(s));
      },
      [](double a, double b) { return std::max(a, b); });
}

/// |int zeta f_j^* omega - int zeta f^* omega| by midpoint quadrature on the grid.
inline double weak_pullback_residual(const MapSpec& fj, const MapSpec& f, const CutoffSpec& zeta, const FormField& F,
                                     const GridDomain& grid) {
  if (zeta.dim() != grid.dim()) throw std::invalid_argument("weak residual: cutoff dimension mismatch");
  for (int i = 0; i < grid.dim(); ++i)
    if (zeta.support_lo()[i] < grid.lo()[i] || zeta.support_hi()[i] > grid.hi()[i])
      throw PreconditionError("weak residual: cutoff support is not inside the grid");
  double v = grid_integrate(grid, [&](std::span<const double> x) {
    double z = zeta.psi(x);
    if (z == 0.0) return 0.0;
    return z * (star_pullback(fj.jet(x), F) - star_pullback(f.jet(x), F));
  });
  return std::abs(v);
}

inline double n_energy(const MapSpec& f, const GridDomain& grid) {
  const int n = f.source_dim();
  return grid_integrate(grid, [&](std::span<const double> x) { return std::pow(operator_norm(f.jet(x)), n); });
}

struct LscReport {
  std::vector<int> indices;
  std::vector<double> energies;
  double limit_energy = 0.0;
  double tail_min = 0.0;  // finite-tail liminf estimate
  double gap = 0.0;       // tail_min - limit_energy
  bool lsc_holds = false;
};

inline LscReport energy_lsc_check(const SequenceSpec& seq, const GridDomain& U, double slack = 0.02) {
  seq.validate();
  LscReport r;
  r.indices = seq.indices;
  for (int j : seq.indices) r.energies.push_back(n_energy(seq.member(j), U));
  r.limit_energy = n_energy(seq.limit, U);
  r.tail_min = *std::min_element(r.energies.begin(), r.energies.end());
  r.gap = r.tail_min - r.limit_energy;
  r.lsc_holds = r.limit_energy <= r.tail_min * (1.0 + slack) + 1e-12;
  return r;
}

/// Checks every member at K first, then verifies the declared limit at the same K.
inline DistortionReport limit_distortion(const SequenceSpec& seq, const FormField& F, const GridDomain& grid, double K,
                                         const VerifyOptions& opt = {}) {
  seq.validate();
  VerifyOptions member_opt = opt;
  member_opt.coarse_check = false;
  for (int j : seq.indices) {
    auto rep = verify_qrc(seq.member(j), F, grid, K, member_opt);
    if (!rep.verified)
      throw PreconditionError("limit_distortion: member j = " + std::to_string(j) + " of '" + seq.name +
                              "' is not verified at K = " + std::to_string(K) + " (sup K " +
                              std::to_string(rep.sup_K) + ")");
  }
  return verify_qrc(seq.limit, F, grid, K, opt);
}

struct ConvergenceRow {
  int j = 0;
  double uniform_distance = 0.0;
  double weak_residual = 0.0;
  double n_energy = 0.0;
};

struct ConvergenceReport {
  std::string name;
  std::vector<ConvergenceRow> rows;
  double limit_energy = 0.0;
  double tail_min_energy = 0.0;
  /// fitted C in residual ~ C / j, from the last evaluated index
  double fitted_rate_constant = 0.0;
};

inline ConvergenceReport convergence(const SequenceSpec& seq, const FormField& F, const CutoffSpec& zeta,
                                     const GridDomain& grid) {
  seq.validate();
  ConvergenceReport r;
  r.name = seq.name;
  for (int j : seq.indices) {
    MapSpec fj = seq.member(j);
    r.rows.push_back({j, uniform_distance(fj, seq.limit, grid), weak_pullback_residual(fj, seq.limit, zeta, F, grid),
                      n_energy(fj, grid)});
  }
  r.limit_energy = n_energy(seq.limit, grid);
  r.tail_min_energy = std::numeric_limits<double>::infinity();
  for (const auto& row : r.rows) r.tail_min_energy = std::min(r.tail_min_energy, row.n_energy);
  r.fitted_rate_constant = r.rows.back().weak_residual * r.rows.back().j;
  return r;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
  os << "j,uniform_distance,weak_residual,n_energy\n";
  os.precision(17);
  for (const auto& row : r.rows)
    os << row.j << ',' << row.uniform_distance << ',' << row.weak_residual << ',' << row.n_energy << '\n';
}

namespace families {

/// z^2 + z/j -> z^2.
inline SequenceSpec poly_perturb(std::vector<int> indices = {1, 2, 4, 8, 16, 32}) {
  auto member = [](int j) {
    Expr x = Expr::var(0), y = Expr::var(1), c(1.0 / j);
    return MapSpec("poly_perturb_" + std::to_string(j), 2, {x * x - y * y + c * x, Expr(2.0) * x * y + c * y});
  };
  return {"poly_perturb", member, maps::winding(2), std::move(indices)};
}

/// (x, y + sin(j x)/j) -> identity; Df_j does not converge.
inline SequenceSpec oscillation(std::vector<int> indices = {1, 2, 4, 8, 16, 32}) {
  auto member = [](int j) {
    Expr x = Expr::var(0), y = Expr::var(1);
    return MapSpec("oscillation_" + std::to_string(j), 2, {x, y + sin(Expr(static_cast<double>(j)) * x) / Expr(j)});
  };
  return {"oscillation", member, maps::identity(2), std::move(indices)};
}

/// f + (1/j) v bump, with the sin^2 bump of the box [lo, hi].
inline SequenceSpec bump_perturb(MapSpec f, std::vector<double> lo, std::vector<double> hi, std::vector<double> v,
                                 std::vector<int> indices = {1, 2, 4, 8, 16, 32}) {
  auto member = [f, lo, hi, v](int j) { return maps::bump_competitor(f, lo, hi, v, 1.0 / j); };
  return {"bump_perturb", member, f, std::move(indices)};
}

/// (z, h_j(z)) with h_j = (1 + 1/j) * h, h given in x1, x2.
inline SequenceSpec graph_family(const std::string& h, std::vector<int> indices = {1, 2, 4, 8, 16, 32}) {
  Expr base = parse_expr(h, 2);
  auto member = [base](int j) {
    return MapSpec("graph_" + std::to_string(j), 2, {Expr::var(0), Expr::var(1), Expr(1.0 + 1.0 / j) * base});
  };
  return {"graph_family", member, MapSpec("graph_limit", 2, {Expr::var(0), Expr::var(1), base}), std::move(indices)};
}

inline SequenceSpec constant_sequence(MapSpec f, std::vector<int> indices = {1, 2, 4}) {
  auto member = [f](int) { return f; };
  return {"constant", member, f, std::move(indices)};
}

}  // namespace families

}  // namespace qrc
