#pragma once

// Forward-mode dual numbers: a value paired with one directional derivative.
// A jet of f: R^n -> R^m is assembled from n forward passes, one per seed axis.

#include <cmath>
#include <ostream>

namespace qrc {

template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(T value) : v(value), d(0) {}  // NOLINT(implicit)
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

  constexpr Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  constexpr Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  constexpr Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  constexpr Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

template <class T> constexpr Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> constexpr Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> constexpr Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T> constexpr Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <class T> constexpr Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }

template <class T> constexpr bool operator<(const Dual<T>& a, const Dual<T>& b) { return a.v < b.v; }
template <class T> constexpr bool operator<=(const Dual<T>& a, const Dual<T>& b) { return a.v <= b.v; }
template <class T> constexpr bool operator>(const Dual<T>& a, const Dual<T>& b) { return a.v > b.v; }

template <class T> Dual<T> sin(const Dual<T>& a) { using std::sin, std::cos; return {sin(a.v), a.d * cos(a.v)}; }
template <class T> Dual<T> cos(const Dual<T>& a) { using std::sin, std::cos; return {cos(a.v), -a.d * sin(a.v)}; }
template <class T> Dual<T> exp(const Dual<T>& a) { using std::exp; T e = exp(a.v); return {e, a.d * e}; }
template <class T> Dual<T> log(const Dual<T>& a) { using std::log; return {log(a.v), a.d / a.v}; }
template <class T> Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return {s, s > T(0) ? a.d / (T(2) * s) : T(0)};
}

// Real power with constant exponent; the integer case stays defined for negative bases.
template <class T> Dual<T> pow(const Dual<T>& a, T p) {
  using std::pow;
  if (p == T(0)) return {T(1), T(0)};
  return {pow(a.v, p), a.d * p * pow(a.v, p - T(1))};
}

// General power a^b with both arguments varying (requires a > 0 when b varies).
template <class T> Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
  using std::pow, std::log;
  if (b.d == T(0)) return pow(a, b.v);
  T val = pow(a.v, b.v);
  return {val, val * (b.d * log(a.v) + b.v * a.d / a.v)};
}

template <class T> T value_of(const Dual<T>& a) { return a.v; }
inline double value_of(double a) { return a; }

template <class T>
std::ostream& operator<<(std::ostream& os, const Dual<T>& a) {
  return os << a.v << " + " << a.d << "e";
}

}  // namespace qrc
