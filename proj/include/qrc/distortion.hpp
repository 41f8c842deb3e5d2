#pragma once

// Pointwise distortion K(x) = |omega|(f(x)) |Df(x)|^n / (star f^* omega)(x)
// and grid verification of the quasiregular-curve inequality.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrc/form_field.hpp"
#include "qrc/grid.hpp"
#include "qrc/map_engine.hpp"

namespace qrc {

/// |Df| below this counts as Df = 0.
inline constexpr double kDegenerateTol = 1e-12;

/// Optional conformal factors on the source and the target.
struct MetricPair {
  std::optional<ConformalMetric> domain;
  std::optional<ConformalMetric> target;
};

struct DistortionSample {
  std::vector<double> x;
  double opnorm = 0.0;
  double jac = 0.0;
  double comass_at_image = 0.0;
  double K = 1.0;
  bool degenerate = false;
  bool violating = false;
};

inline DistortionSample pointwise_distortion(const Jet& j, const FormField& F, const MetricPair& g = {}) {
  const int n = static_cast<int>(j.D.cols());
  DistortionSample s;
  s.x = j.x;
  s.opnorm = operator_norm(j);
  s.jac = star_pullback(j, F);
  s.comass_at_image = F.comass_at(j.value);
  if (g.domain) {
    double ld = (*g.domain)(j.x);
    s.opnorm /= ld;
    s.jac /= std::pow(ld, n);
  }
  if (g.target) {
    double lt = (*g.target)(j.value);
    s.opnorm *= lt;
    s.comass_at_image *= std::pow(lt, -n);
  }
  if (s.opnorm <= kDegenerateTol) {
    s.degenerate = true;
    s.K = 1.0;
  } else if (s.jac <= 0.0) {
    s.violating = true;
    s.K = std::numeric_limits<double>::infinity();
  } else {
    s.K = s.comass_at_image * std::pow(s.opnorm, n) / s.jac;
  }
  return s;
}

inline DistortionSample pointwise_distortion(const MapSpec& f, const FormField& F, std::span<const double> x,
                                             const MetricPair& g = {}) {
  return pointwise_distortion(f.jet(x), F, g);
}

struct DistortionReport {
  std::string grid_hash;
  std::string grid_descriptor;
  std::size_t n_samples = 0;
  std::size_t n_degenerate = 0;
  std::size_t n_violations = 0;
  double sup_K = 0.0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
  /// min over samples of (K jac - |omega| |Df|^n) / (|omega| |Df|^n); negative means the inequality fails
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> worst_point;
  double target_K = 1.0;
  double tol = 0.0;
  bool verified = false;
  bool vacuous = false;
  /// sup at half resolution; the ratio sup_K / coarse_sup_K tracks grid convergence
  std::optional<double> coarse_sup_K;
  std::vector<DistortionSample> violations;  // capped list
};

struct VerifyOptions {
  double tol = 1e-6;
  bool coarse_check = true;
  std::size_t max_listed_violations = 32;
  MetricPair metrics{};
};

namespace detail {

struct DistortionAcc {
  std::vector<double> Ks;
  std::size_t n = 0, degenerate = 0, violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> worst_point;
  std::vector<DistortionSample> listed;
};

inline DistortionAcc merge(DistortionAcc a, const DistortionAcc& b, std::size_t cap) {
  a.Ks.insert(a.Ks.end(), b.Ks.begin(), b.Ks.end());
  a.n += b.n;
  a.degenerate += b.degenerate;
  a.violations += b.violations;
  if (b.worst_margin < a.worst_margin) {
    a.worst_margin = b.worst_margin;
    a.worst_point = b.worst_point;
  }
  for (const auto& s : b.listed)
    if (a.listed.size() < cap) a.listed.push_back(s);
  return a;
}

inline DistortionAcc sweep(const MapSpec& f, const FormField& F, const GridDomain& grid, double K,
                           const VerifyOptions& opt) {
  const std::size_t cap = opt.max_listed_violations;
  return grid_reduce(
      grid, DistortionAcc{},
      [&](std::span<const double> x, DistortionAcc& acc) {
        DistortionSample s = pointwise_distortion(f, F, x, opt.metrics);
        ++acc.n;
        if (s.degenerate) {
          ++acc.degenerate;
          return;
        }
        double lhs = s.comass_at_image * std::pow(s.opnorm, grid.dim());
        double margin = lhs > 0.0 ? (K * s.jac - lhs) / lhs : (s.jac > 0.0 ? 0.0 : -1.0);
        if (margin < acc.worst_margin) {
          acc.worst_margin = margin;
          acc.worst_point.assign(x.begin(), x.end());
        }
        if (s.violating) {
          ++acc.violations;
          if (acc.listed.size() < cap) acc.listed.push_back(s);
          return;
        }
        acc.Ks.push_back(s.K);
      },
      [cap](DistortionAcc a, const DistortionAcc& b) { return merge(std::move(a), b, cap); });
}

inline double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Sweeps the grid; verified iff there are no violations and sup K <= K (1 + tol).
inline DistortionReport verify_qrc(const MapSpec& f, const FormField& F, const GridDomain& grid, double K,
                                   const VerifyOptions& opt = {}) {
  if (!(K >= 1.0)) throw std::invalid_argument("K must be >= 1");
  if (!(opt.tol >= 0.0)) throw std::invalid_argument("tol must be >= 0");
  if (grid.dim() != f.source_dim()) throw std::invalid_argument("grid dimension does not match the map source");
  auto acc = detail::sweep(f, F, grid, K, opt);
  DistortionReport r;
  r.grid_hash = grid.hash();
  r.grid_descriptor = grid.descriptor();
  r.n_samples = acc.n;
  r.n_degenerate = acc.degenerate;
  r.n_violations = acc.violations;
  r.worst_margin = acc.worst_margin;
  r.worst_point = acc.worst_point;
  r.violations = std::move(acc.listed);
  r.target_K = K;
  r.tol = opt.tol;
  std::sort(acc.Ks.begin(), acc.Ks.end());
  r.vacuous = acc.Ks.empty() && r.n_violations == 0;
  if (!acc.Ks.empty()) {
    r.sup_K = acc.Ks.back();
    r.q50 = detail::quantile(acc.Ks, 0.5);
    r.q90 = detail::quantile(acc.Ks, 0.9);
    r.q99 = detail::quantile(acc.Ks, 0.99);
  }
  if (r.n_violations > 0) r.sup_K = std::numeric_limits<double>::infinity();
  r.verified = !r.vacuous && r.n_violations == 0 && r.sup_K <= K * (1.0 + opt.tol);
  if (opt.coarse_check) {
    auto coarse = detail::sweep(f, F, grid.rescaled(1, 2), K, opt);
    if (!coarse.Ks.empty() && coarse.violations == 0)
      r.coarse_sup_K = *std::max_element(coarse.Ks.begin(), coarse.Ks.end());
  }
  return r;
}

/// Max over non-degenerate grid samples of |K with metrics - K Euclidean|.
inline double conformal_invariance_check(const MapSpec& f, const FormField& F, const MetricPair& metrics,
                                         const GridDomain& grid) {
  return grid_reduce(
      grid, 0.0,
      [&](std::span<const double> x, double& acc) {
        Jet j = f.jet(x);
        auto e = pointwise_distortion(j, F);
        auto c = pointwise_distortion(j, F, metrics);
        if (e.degenerate || c.degenerate) return;
        if (e.violating || c.violating) {
          if (e.violating != c.violating) acc = std::numeric_limits<double>::infinity();
          return;
        }
        acc = std::max(acc, std::abs(c.K - e.K));
      },
      [](double a, double b) { return std::max(a, b); });
}

}  // namespace qrc
