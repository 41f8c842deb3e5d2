#pragma once

// Comass norm: the maximum of |a(v_1, ..., v_k)| over orthonormal k-frames.
//
// Exact paths: k = 1 (Euclidean norm), simple a (mass norm), k = 2 (largest
// singular value of the associated skew matrix). Everything else goes through
// projected gradient ascent on the Stiefel manifold with QR retraction and
// seeded random restarts; that value is a certified lower bound only.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "qrc/exterior.hpp"

namespace qrc {

enum class ComassMethod { Auto, Simple, Spectral, Optimize };

inline const char* to_string(ComassMethod m) {
  switch (m) {
    case ComassMethod::Auto: return "auto";
    case ComassMethod::Simple: return "simple";
    case ComassMethod::Spectral: return "spectral";
    case ComassMethod::Optimize: return "optimize";
  }
  return "?";
}

struct ComassOptions {
  ComassMethod method = ComassMethod::Auto;
  std::uint64_t seed = 0;
  int restarts = 64;
  int max_iterations = 500;
  double gradient_tol = 1e-11;
};

struct ComassResult {
  double value = 0.0;
  ComassMethod method = ComassMethod::Auto;  // path actually taken
  bool heuristic = false;                    // optimizer value (lower bound)
  int restarts = 0;
  bool converged = true;                     // false: iteration cap hit on the best restart
};

namespace detail {

inline Eigen::MatrixXd skew_matrix(const AltTensor& a) {
  const int m = a.dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  const auto& masks = basis_masks(m, 2);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    int p = std::countr_zero(masks[i]);
    int q = 31 - std::countl_zero(masks[i]);
    A(p, q) = a[i];
    A(q, p) = -a[i];
  }
  return A;
}

inline double spectral_comass(const AltTensor& a) {
  Eigen::MatrixXd A = skew_matrix(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Thin Q factor with positive diagonal of R.
inline Eigen::MatrixXd q_factor(const Eigen::MatrixXd& M) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), M.cols());
  const Eigen::MatrixXd& R = qr.matrixQR();
  for (Eigen::Index c = 0; c < M.cols(); ++c)
    if (R(c, c) < 0.0) Q.col(c) *= -1.0;
  return Q;
}

struct FrameValue {
  double value;
  Eigen::MatrixXd grad;  // Euclidean gradient, m x k
};

// value a(v_1..v_k) and its gradient; column c of the gradient is the covector
// w -> a(v_1, .., w, .., v_k) = (-1)^(k-c) (v_k -| .. v_{c+1} -| v_{c-1} -| .. v_1 -| a)(w)
inline FrameValue frame_value(const AltTensor& a, const Eigen::MatrixXd& V) {
  const int m = a.dim();
  const int k = a.degree();
  FrameValue out{0.0, Eigen::MatrixXd::Zero(m, k)};
  auto col = [&](int c) { return std::span<const double>(V.data() + static_cast<std::ptrdiff_t>(c) * m, m); };
  AltTensor prefix = a;  // v_{c-1} -| ... -| v_1 -| a
  for (int c = 0; c < k; ++c) {
    AltTensor t = prefix;
    for (int j = c + 1; j < k; ++j) t = interior_product(col(j), t);
    double sign = ((k - 1 - c) & 1) ? -1.0 : 1.0;
    for (int r = 0; r < m; ++r) out.grad(r, c) = sign * t[r];
    prefix = interior_product(col(c), prefix);
  }
  out.value = prefix[0];
  return out;
}

struct AscentResult {
  double value;
  bool converged;
};

inline AscentResult stiefel_ascent(const AltTensor& a, Eigen::MatrixXd V, const ComassOptions& opt) {
  const int k = a.degree();
  FrameValue fv = frame_value(a, V);
  if (fv.value < 0.0) {
    V.col(k - 1) *= -1.0;
    fv = frame_value(a, V);
  }
  const double scale = 1.0 / std::max(1e-300, a.mass());
  const double max_step = 1e3 * scale;
  const double min_step = 1e-14 * scale;
  double step = scale;
  Eigen::MatrixXd prev_V, prev_rgrad;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::MatrixXd VtG = V.transpose() * fv.grad;
    Eigen::MatrixXd rgrad = fv.grad - V * (0.5 * (VtG + VtG.transpose()));
    double gnorm2 = rgrad.squaredNorm();
    if (std::sqrt(gnorm2) <= opt.gradient_tol * std::max(1.0, std::abs(fv.value))) return {fv.value, true};
    if (it > 0) {
      // Barzilai-Borwein step for ascent: |s|^2 / -<s, y>
      Eigen::MatrixXd s = V - prev_V;
      Eigen::MatrixXd y = rgrad - prev_rgrad;
      double sy = -(s.array() * y.array()).sum();
      if (sy > 0.0) step = std::clamp(s.squaredNorm() / sy, min_step, max_step);
    }
    bool accepted = false;
    for (double t = step; t >= min_step; t *= 0.5) {
      Eigen::MatrixXd Vn = q_factor(V + t * rgrad);
      FrameValue fn = frame_value(a, Vn);
      if (fn.value >= fv.value + 1e-4 * t * gnorm2) {
        prev_V = std::move(V);
        prev_rgrad = std::move(rgrad);
        V = std::move(Vn);
        fv = std::move(fn);
        accepted = true;
        break;
      }
    }
    // no ascent step at floating-point resolution: stationary to working precision
    if (!accepted) return {fv.value, true};
  }
  return {fv.value, false};
}

inline ComassResult optimize_comass(const AltTensor& a, const ComassOptions& opt) {
  const int m = a.dim();
  const int k = a.degree();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComassResult best{0.0, ComassMethod::Optimize, true, opt.restarts, true};
  bool have = false;
  for (int r = 0; r < opt.restarts; ++r) {
    Eigen::MatrixXd G(m, k);
    for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = gauss(rng);
    AscentResult res = stiefel_ascent(a, q_factor(G), opt);
    if (!have || res.value > best.value) {
      best.value = res.value;
      best.converged = res.converged;
      have = true;
    }
  }
  return best;
}

}  // namespace detail

inline ComassResult comass_report(const AltTensor& a, const ComassOptions& opt = {}) {
  const int m = a.dim();
  const int k = a.degree();
  if (k == 0) throw std::invalid_argument("comass: degree-0 tensor");
  switch (opt.method) {
    case ComassMethod::Simple:
      if (!is_simple(a)) throw std::invalid_argument("comass: method 'simple' requested for a non-simple tensor");
      return {a.mass(), ComassMethod::Simple, false, 0, true};
    case ComassMethod::Spectral:
      if (k != 2) throw std::invalid_argument("comass: method 'spectral' needs degree 2, got " + std::to_string(k));
      return {detail::spectral_comass(a), ComassMethod::Spectral, false, 0, true};
    case ComassMethod::Optimize:
      return detail::optimize_comass(a, opt);
    case ComassMethod::Auto:
      break;
  }
  if (a.is_zero()) return {0.0, ComassMethod::Simple, false, 0, true};
  if (k == 1 || k >= m - 1) return {a.mass(), ComassMethod::Simple, false, 0, true};
  if (k == 2) return {detail::spectral_comass(a), ComassMethod::Spectral, false, 0, true};
  if (is_simple(a)) return {a.mass(), ComassMethod::Simple, false, 0, true};
  return detail::optimize_comass(a, opt);
}

inline double comass(const AltTensor& a, ComassMethod method = ComassMethod::Auto, std::uint64_t seed = 0) {
  ComassOptions opt;
  opt.method = method;
  opt.seed = seed;
  return comass_report(a, opt).value;
}

}  // namespace qrc
