#pragma once

// Uniform cell-centred grids on boxes with optional ball / annulus masks.
// Quadrature is the midpoint rule: every unmasked cell contributes
// f(center) * cell volume.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrc/parallel.hpp"

namespace qrc {

enum class MaskKind { None, Ball, Annulus };

struct GridMask {
  MaskKind kind = MaskKind::None;
  std::vector<double> center;
  double r_inner = 0.0;  // annulus only
  double r_outer = 0.0;  // ball radius / annulus outer radius
};

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

class GridDomain {
 public:
  GridDomain() = default;
  GridDomain(std::vector<double> lo, std::vector<double> hi, std::vector<int> resolution, GridMask mask = {})
      : lo_(std::move(lo)), hi_(std::move(hi)), res_(std::move(resolution)), mask_(std::move(mask)) {
    if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != res_.size())
      throw std::invalid_argument("grid: lo, hi and resolution need the same non-zero length");
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (!(lo_[i] < hi_[i])) throw std::invalid_argument("grid: lo < hi violated on axis " + std::to_string(i + 1));
      if (res_[i] < 2) throw std::invalid_argument("grid: resolution must be >= 2 on axis " + std::to_string(i + 1));
    }
    if (mask_.kind != MaskKind::None) {
      if (mask_.center.size() != lo_.size()) throw std::invalid_argument("grid: mask center has wrong dimension");
      if (!(mask_.r_outer > 0.0)) throw std::invalid_argument("grid: mask radius must be positive");
      if (mask_.kind == MaskKind::Annulus && !(mask_.r_inner >= 0.0 && mask_.r_inner < mask_.r_outer))
        throw std::invalid_argument("grid: annulus needs 0 <= r_inner < r_outer");
    }
  }

  static GridDomain box(std::vector<double> lo, std::vector<double> hi, int res_per_axis) {
    std::vector<int> res(lo.size(), res_per_axis);
    return GridDomain(std::move(lo), std::move(hi), std::move(res));
  }
  /// Ball B(center, radius) realized as its bounding box with a cell-center mask.
  static GridDomain ball(std::vector<double> center, double radius, int res_per_axis) {
    std::vector<double> lo, hi;
    for (double c : center) {
      lo.push_back(c - radius);
      hi.push_back(c + radius);
    }
    std::vector<int> res(center.size(), res_per_axis);
    GridMask m{MaskKind::Ball, center, 0.0, radius};
    return GridDomain(std::move(lo), std::move(hi), std::move(res), std::move(m));
  }
  static GridDomain annulus(std::vector<double> center, double r_inner, double r_outer, int res_per_axis) {
    std::vector<double> lo, hi;
    for (double c : center) {
      lo.push_back(c - r_outer);
      hi.push_back(c + r_outer);
    }
    std::vector<int> res(center.size(), res_per_axis);
    GridMask m{MaskKind::Annulus, center, r_inner, r_outer};
    return GridDomain(std::move(lo), std::move(hi), std::move(res), std::move(m));
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<int>& resolution() const { return res_; }
  const GridMask& mask() const { return mask_; }

  double spacing(int axis) const { return (hi_[axis] - lo_[axis]) / res_[axis]; }
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= spacing(i);
    return v;
  }
  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += (hi_[i] - lo_[i]) * (hi_[i] - lo_[i]);
    return std::sqrt(s);
  }
  std::size_t cell_count() const {
    std::size_t n = 1;
    for (int r : res_) n *= static_cast<std::size_t>(r);
    return n;
  }

  bool contains(std::span<const double> p) const {
    if (mask_.kind == MaskKind::None) {
      for (int i = 0; i < dim(); ++i)
        if (p[i] < lo_[i] || p[i] > hi_[i]) return false;
      return true;
    }
    double r2 = 0.0;
    for (int i = 0; i < dim(); ++i) r2 += (p[i] - mask_.center[i]) * (p[i] - mask_.center[i]);
    double r = std::sqrt(r2);
    if (mask_.kind == MaskKind::Ball) return r <= mask_.r_outer;
    return r >= mask_.r_inner && r <= mask_.r_outer;
  }

  /// Writes the center of cell `linear` (axis 0 fastest) and reports whether it is unmasked.
  bool cell_center(std::size_t linear, std::span<double> out) const {
    for (int i = 0; i < dim(); ++i) {
      std::size_t idx = linear % static_cast<std::size_t>(res_[i]);
      linear /= static_cast<std::size_t>(res_[i]);
      out[i] = lo_[i] + (static_cast<double>(idx) + 0.5) * spacing(i);
    }
    return contains(out);
  }

  /// Same domain with every resolution multiplied by num/den (at least 2 cells per axis).
  GridDomain rescaled(int num, int den = 1) const {
    std::vector<int> r = res_;
    for (int& v : r) v = std::max(2, v * num / den);
    return GridDomain(lo_, hi_, r, mask_);
  }

  /// Points on the boundary of the domain: box faces, or spheres for masked grids.
  std::vector<std::vector<double>> boundary_points(int per_axis) const {
    std::vector<std::vector<double>> pts;
    if (mask_.kind != MaskKind::None) {
      std::vector<double> radii{mask_.r_outer};
      if (mask_.kind == MaskKind::Annulus && mask_.r_inner > 0.0) radii.push_back(mask_.r_inner);
      if (dim() == 1) {
        for (double r : radii) {
          pts.push_back({mask_.center[0] - r});
          pts.push_back({mask_.center[0] + r});
        }
        return pts;
      }
      // sphere points from the box-face lattice pushed radially
      GridDomain unit = GridDomain::box(std::vector<double>(dim(), -1.0), std::vector<double>(dim(), 1.0), 2);
      auto dirs = unit.box_faces(per_axis);
      for (double r : radii)
        for (const auto& d : dirs) {
          double n = 0.0;
          for (double v : d) n += v * v;
          n = std::sqrt(n);
          std::vector<double> p(dim());
          for (int i = 0; i < dim(); ++i) p[i] = mask_.center[i] + r * d[i] / n;
          pts.push_back(std::move(p));
        }
      return pts;
    }
    return box_faces(per_axis);
  }

  std::string descriptor() const {
    std::ostringstream os;
    os << std::setprecision(17) << "grid;lo=";
    for (double v : lo_) os << v << ',';
    os << ";hi=";
    for (double v : hi_) os << v << ',';
    os << ";res=";
    for (int v : res_) os << v << ',';
    os << ";mask=" << static_cast<int>(mask_.kind);
    if (mask_.kind != MaskKind::None) {
      os << ";c=";
      for (double v : mask_.center) os << v << ',';
      os << ";r=" << mask_.r_inner << ',' << mask_.r_outer;
    }
    return os.str();
  }
  std::string hash() const { return fnv1a_hex(descriptor()); }

 private:
  std::vector<std::vector<double>> box_faces(int per_axis) const {
    std::vector<std::vector<double>> pts;
    const int d = dim();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis + 1);
    for (std::size_t lin = 0; lin < total; ++lin) {
      std::size_t rem = lin;
      std::vector<double> p(d);
      bool on_face = false;
      for (int i = 0; i < d; ++i) {
        std::size_t idx = rem % static_cast<std::size_t>(per_axis + 1);
        rem /= static_cast<std::size_t>(per_axis + 1);
        if (idx == 0 || idx == static_cast<std::size_t>(per_axis)) on_face = true;
        p[i] = lo_[i] + (hi_[i] - lo_[i]) * static_cast<double>(idx) / per_axis;
      }
      if (on_face) pts.push_back(std::move(p));
    }
    return pts;
  }

  std::vector<double> lo_, hi_;
  std::vector<int> res_;
  GridMask mask_;
};

/// Reduces per-cell contributions over the unmasked cells of `grid`.
/// cell_fn(point, acc) folds one cell into a block accumulator; blocks are
/// merged with `combine` in a fixed tree.
template <class Acc, class CellFn, class Combine>
Acc grid_reduce(const GridDomain& grid, Acc identity, CellFn&& cell_fn, Combine&& combine) {
  auto parts = map_blocks(grid.cell_count(), [&](std::size_t begin, std::size_t end) {
    Acc acc = identity;
    std::vector<double> p(grid.dim());
    for (std::size_t i = begin; i < end; ++i)
      if (grid.cell_center(i, p)) cell_fn(std::span<const double>(p), acc);
    return acc;
  });
  return tree_reduce(std::move(parts), identity, combine);
}

/// Midpoint-rule integral of f over the unmasked cells.
template <class F>
double grid_integrate(const GridDomain& grid, F&& f) {
  double sum = grid_reduce(
      grid, 0.0, [&](std::span<const double> p, double& acc) { acc += f(p); },
      [](double a, double b) { return a + b; });
  return sum * grid.cell_volume();
}

/// Several integrals in one sweep; f(p, out) adds the integrand values into out.
template <class F>
std::vector<double> grid_integrate_many(const GridDomain& grid, std::size_t count, F&& f) {
  auto sums = grid_reduce(
      grid, std::vector<double>(count, 0.0), [&](std::span<const double> p, std::vector<double>& acc) { f(p, acc); },
      [](std::vector<double> a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        return a;
      });
  for (double& s : sums) s *= grid.cell_volume();
  return sums;
}

}  // namespace qrc
