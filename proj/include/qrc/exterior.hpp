#pragma once

// Alternating multilinear algebra on R^m with the Euclidean inner product.
//
// Sign conventions (all signs in the library derive from these two rules):
//
//   basis          dx_I = dx_{i1} ^ ... ^ dx_{ik},  i1 < ... < ik,  stored in
//                  lexicographic order of I (for m = 4, k = 2:
//                  12, 13, 14, 23, 24, 34)
//   Hodge star     dx_I ^ *dx_I = dx_1 ^ ... ^ dx_m, i.e.
//                  *dx_I = sign(I, I^c) dx_{I^c}
//   interior       (v -| a)(w_2, ..., w_k) = a(v, w_2, ..., w_k), i.e.
//                  e_{i_p} -| dx_I = (-1)^(p-1) dx_{I \ i_p}
//   evaluation     a(v_1, ..., v_k) = sum_I a_I det([v_1 ... v_k] rows I)
//
// Multi-indices use 1-based axes, matching the coordinate names x1..xm.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrc {

inline constexpr int kMaxDim = 12;

using Mask = std::uint32_t;

inline std::size_t binomial(int m, int k) {
  if (k < 0 || k > m) return 0;
  std::size_t v = 1;
  for (int i = 0; i < k; ++i) v = v * static_cast<std::size_t>(m - i) / static_cast<std::size_t>(i + 1);
  return v;
}

namespace detail {

struct BasisTables {
  // masks[m][k]: degree-k subsets of {0..m-1} in lexicographic order.
  std::array<std::array<std::vector<Mask>, kMaxDim + 1>, kMaxDim + 1> masks;
  // rank[m][mask]: lexicographic position of mask among subsets of equal size.
  std::array<std::vector<int>, kMaxDim + 1> rank;

  BasisTables() {
    for (int m = 0; m <= kMaxDim; ++m) {
      rank[m].assign(std::size_t{1} << m, -1);
      for (int k = 0; k <= m; ++k) {
        std::vector<Mask>& out = masks[m][k];
        std::vector<int> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        for (;;) {
          Mask mask = 0;
          for (int i : idx) mask |= Mask{1} << i;
          rank[m][mask] = static_cast<int>(out.size());
          out.push_back(mask);
          int p = k - 1;
          while (p >= 0 && idx[p] == m - k + p) --p;
          if (p < 0) break;
          ++idx[p];
          for (int q = p + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
        }
      }
    }
  }
};

inline const BasisTables& basis_tables() {
  static const BasisTables tables;
  return tables;
}

// Parity of the number of pairs (i in lhs, j in rhs) with i > j: the sign of the
// permutation that sorts the concatenation (lhs, rhs).
inline int shuffle_sign(Mask lhs, Mask rhs) {
  int inversions = 0;
  for (Mask r = rhs; r; r &= r - 1) {
    int j = std::countr_zero(r);
    inversions += std::popcount(lhs >> (j + 1));
  }
  return (inversions & 1) ? -1 : 1;
}

inline void check_dim(int m) {
  if (m < 0 || m > kMaxDim)
    throw std::invalid_argument("ambient dimension " + std::to_string(m) + " outside [0, " +
                                std::to_string(kMaxDim) + "]");
}

}  // namespace detail

inline const std::vector<Mask>& basis_masks(int m, int k) {
  detail::check_dim(m);
  if (k < 0 || k > m) throw std::invalid_argument("degree " + std::to_string(k) + " outside [0, m]");
  return detail::basis_tables().masks[m][k];
}

inline int basis_rank(int m, Mask mask) { return detail::basis_tables().rank[m][mask]; }

/// Strictly increasing tuple of 1-based axes in an ambient dimension m.
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(int dim, std::initializer_list<int> axes) : MultiIndex(dim, std::vector<int>(axes)) {}
  MultiIndex(int dim, std::vector<int> axes) : dim_(dim), axes_(std::move(axes)) {
    detail::check_dim(dim);
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      if (axes_[i] < 1 || axes_[i] > dim)
        throw std::invalid_argument("multi-index entry " + std::to_string(axes_[i]) + " outside [1, " +
                                    std::to_string(dim) + "]");
      if (i > 0 && axes_[i] <= axes_[i - 1])
        throw std::invalid_argument("multi-index entries must be strictly increasing");
    }
  }
  static MultiIndex from_mask(int dim, Mask mask) {
    std::vector<int> axes;
    for (Mask r = mask; r; r &= r - 1) axes.push_back(std::countr_zero(r) + 1);
    return MultiIndex(dim, std::move(axes));
  }

  int dim() const { return dim_; }
  int degree() const { return static_cast<int>(axes_.size()); }
  const std::vector<int>& axes() const { return axes_; }
  Mask mask() const {
    Mask m = 0;
    for (int a : axes_) m |= Mask{1} << (a - 1);
    return m;
  }
  /// Position in the lexicographic basis of degree-k tensors.
  int rank() const { return basis_rank(dim_, mask()); }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < axes_.size(); ++i) s += (i ? "," : "") + std::to_string(axes_[i]);
    return s + ")";
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  int dim_ = 0;
  std::vector<int> axes_;
};

/// Degree-k alternating tensor (covector) on R^m in the lexicographic basis.
class AltTensor {
 public:
  AltTensor() : AltTensor(0, 0) {}
  AltTensor(int dim, int degree) : dim_(dim), degree_(degree), c_(basis_masks(dim, degree).size(), 0.0) {}
  AltTensor(int dim, int degree, std::vector<double> coeffs) : dim_(dim), degree_(degree), c_(std::move(coeffs)) {
    if (c_.size() != basis_masks(dim, degree).size())
      throw std::invalid_argument("coefficient vector of length " + std::to_string(c_.size()) + ", expected C(" +
                                  std::to_string(dim) + "," + std::to_string(degree) + ") = " +
                                  std::to_string(binomial(dim, degree)));
  }

  static AltTensor scalar(int dim, double value) { return AltTensor(dim, 0, {value}); }
  static AltTensor basis(const MultiIndex& I, double coeff = 1.0) {
    AltTensor t(I.dim(), I.degree());
    t.c_[I.rank()] = coeff;
    return t;
  }
  /// Shorthand for the basis covector dx_I in R^dim.
  static AltTensor dx(int dim, std::initializer_list<int> axes) { return basis(MultiIndex(dim, axes)); }
  static AltTensor covector(std::span<const double> components) {
    return AltTensor(static_cast<int>(components.size()), 1,
                     std::vector<double>(components.begin(), components.end()));
  }

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  std::size_t size() const { return c_.size(); }
  std::span<const double> coeffs() const { return c_; }
  std::span<double> coeffs() { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  double coeff(const MultiIndex& I) const { return c_[I.rank()]; }
  Mask mask_at(std::size_t i) const { return basis_masks(dim_, degree_)[i]; }

  double inner(const AltTensor& o) const {
    check_same_shape(o);
    double s = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) s += c_[i] * o.c_[i];
    return s;
  }
  /// Euclidean (mass) norm sqrt(<a, a>).
  double mass() const { return std::sqrt(inner(*this)); }
  double max_abs() const {
    double s = 0.0;
    for (double v : c_) s = std::max(s, std::abs(v));
    return s;
  }
  bool is_zero() const { return max_abs() == 0.0; }

  AltTensor& operator+=(const AltTensor& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  AltTensor& operator-=(const AltTensor& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  AltTensor& operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
  }
  friend AltTensor operator+(AltTensor a, const AltTensor& b) { return a += b; }
  friend AltTensor operator-(AltTensor a, const AltTensor& b) { return a -= b; }
  friend AltTensor operator-(AltTensor a) { return a *= -1.0; }
  friend AltTensor operator*(double s, AltTensor a) { return a *= s; }
  friend AltTensor operator*(AltTensor a, double s) { return a *= s; }
  friend bool operator==(const AltTensor&, const AltTensor&) = default;

  void check_same_shape(const AltTensor& o) const {
    if (dim_ != o.dim_ || degree_ != o.degree_)
      throw std::invalid_argument("tensor shape mismatch: (m=" + std::to_string(dim_) + ", k=" +
                                  std::to_string(degree_) + ") vs (m=" + std::to_string(o.dim_) +
                                  ", k=" + std::to_string(o.degree_) + ")");
  }

 private:
  int dim_;
  int degree_;
  std::vector<double> c_;
};

inline AltTensor wedge(const AltTensor& a, const AltTensor& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("wedge: ambient dimensions " + std::to_string(a.dim()) + " and " +
                                std::to_string(b.dim()) + " differ");
  const int m = a.dim();
  const int k = a.degree() + b.degree();
  if (k > m)
    throw std::logic_error("wedge: degree " + std::to_string(k) + " exceeds ambient dimension " + std::to_string(m));
  AltTensor out(m, k);
  const auto& ma = basis_masks(m, a.degree());
  const auto& mb = basis_masks(m, b.degree());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      if (b[j] == 0.0 || (ma[i] & mb[j])) continue;
      out[basis_rank(m, ma[i] | mb[j])] += detail::shuffle_sign(ma[i], mb[j]) * a[i] * b[j];
    }
  }
  return out;
}

inline AltTensor hodge_star(const AltTensor& a) {
  const int m = a.dim();
  const Mask full = (Mask{1} << m) - 1;
  AltTensor out(m, m - a.degree());
  const auto& masks = basis_masks(m, a.degree());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (a[i] == 0.0) continue;
    Mask comp = full ^ masks[i];
    out[basis_rank(m, comp)] += detail::shuffle_sign(masks[i], comp) * a[i];
  }
  return out;
}

/// v -| a for a vector v in R^m; a must have degree >= 1.
inline AltTensor interior_product(std::span<const double> v, const AltTensor& a) {
  const int m = a.dim();
  if (static_cast<int>(v.size()) != m)
    throw std::invalid_argument("interior_product: vector of length " + std::to_string(v.size()) +
                                " in ambient dimension " + std::to_string(m));
  if (a.degree() == 0) throw std::invalid_argument("interior_product: degree-0 tensor");
  AltTensor out(m, a.degree() - 1);
  const auto& masks = basis_masks(m, a.degree());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (a[i] == 0.0) continue;
    int p = 0;
    for (Mask r = masks[i]; r; r &= r - 1, ++p) {
      int axis = std::countr_zero(r);
      if (v[axis] == 0.0) continue;
      double s = (p & 1) ? -1.0 : 1.0;
      out[basis_rank(m, masks[i] & ~(Mask{1} << axis))] += s * v[axis] * a[i];
    }
  }
  return out;
}

/// e_{j_1} ^ ... ^ e_{j_r} -| a, contracting the basis vectors in increasing order.
inline AltTensor interior_product_basis(Mask vectors, const AltTensor& a) {
  AltTensor out = a;
  std::vector<double> e(a.dim(), 0.0);
  for (Mask r = vectors; r; r &= r - 1) {
    int axis = std::countr_zero(r);
    e[axis] = 1.0;
    out = interior_product(e, out);
    e[axis] = 0.0;
  }
  return out;
}

/// a(v_1, ..., v_k), vectors given as columns of a column-major m x k array.
inline double evaluate(const AltTensor& a, std::span<const double> frame_col_major) {
  const int m = a.dim();
  const int k = a.degree();
  if (static_cast<int>(frame_col_major.size()) != m * k)
    throw std::invalid_argument("evaluate: frame has wrong size");
  AltTensor t = a;
  // a(v_1, ..., v_k) = v_k -| ... -| v_1 -| a
  for (int c = 0; c < k; ++c) t = interior_product(frame_col_major.subspan(static_cast<std::size_t>(c) * m, m), t);
  return t[0];
}

inline constexpr double kSimpleTol = 1e-9;

/// Decomposability test through the Pluecker relations
/// (xi -| a) ^ a = 0 for every basis (k-1)-vector xi, relative to |a|^2.
inline bool is_simple(const AltTensor& a, double tol = kSimpleTol) {
  const int m = a.dim();
  const int k = a.degree();
  if (k == 0) throw std::invalid_argument("is_simple: degree-0 tensor");
  if (k == 1 || k >= m - 1) return true;
  const double scale = a.inner(a);
  if (scale == 0.0) return true;
  for (Mask xi : basis_masks(m, k - 1)) {
    AltTensor c = interior_product_basis(xi, a);
    if (c.is_zero()) continue;
    if (wedge(c, a).mass() > tol * scale) return false;
  }
  return true;
}

}  // namespace qrc
