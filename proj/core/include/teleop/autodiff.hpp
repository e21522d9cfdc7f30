#pragma once

// Forward-mode differentiation scalars used by the kinematic chain.
//
//   Dual<N>  value plus an N-vector of first partial derivatives.
//   Jet<T>   second-order truncated Taylor polynomial c0 + c1 t + c2 t^2 in
//            time. Seeding q(t) = q + qd t + u t^2 / 2 and evaluating the
//            chain yields p(t) with p'' = 2 c2, so Jet<Dual<N>> gives the
//            end-effector acceleration together with its partials.

#include <Eigen/Core>

#include <cmath>

namespace teleop::ad {

template <int N>
struct Dual {
  using Grad = Eigen::Matrix<double, N, 1>;

  double v = 0.0;
  Grad g = Grad::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constants are intended
  Dual(double value, const Grad& grad) : v(value), g(grad) {}

  static Dual variable(double value, int index, double seed = 1.0) {
    Dual d(value);
    d.g[index] = seed;
    return d;
  }

  Dual& operator+=(const Dual& o) { v += o.v; g += o.g; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; g -= o.g; return *this; }
};

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator-(const Dual<N>& a) { return {-a.v, -a.g}; }
template <int N> Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g};
}
template <int N> Dual<N> operator*(double s, const Dual<N>& a) { return {s * a.v, s * a.g}; }
template <int N> Dual<N> operator*(const Dual<N>& a, double s) { return {s * a.v, s * a.g}; }
template <int N> Dual<N> operator+(const Dual<N>& a, double s) { return {a.v + s, a.g}; }
template <int N> Dual<N> operator+(double s, const Dual<N>& a) { return {a.v + s, a.g}; }
template <int N> Dual<N> operator-(const Dual<N>& a, double s) { return {a.v - s, a.g}; }
template <int N> Dual<N> operator-(double s, const Dual<N>& a) { return {s - a.v, -a.g}; }

template <int N> Dual<N> sin(const Dual<N>& a) { return {std::sin(a.v), std::cos(a.v) * a.g}; }
template <int N> Dual<N> cos(const Dual<N>& a) { return {std::cos(a.v), -std::sin(a.v) * a.g}; }

inline double value(double x) { return x; }
template <int N> double value(const Dual<N>& x) { return x.v; }

template <typename T>
struct Jet {
  T c0{}, c1{}, c2{};

  Jet() = default;
  Jet(double constant) : c0(constant), c1(0.0), c2(0.0) {}  // NOLINT
  Jet(T a0, T a1, T a2) : c0(a0), c1(a1), c2(a2) {}

  Jet& operator+=(const Jet& o) { c0 += o.c0; c1 += o.c1; c2 += o.c2; return *this; }
  Jet& operator-=(const Jet& o) { c0 -= o.c0; c1 -= o.c1; c2 -= o.c2; return *this; }

  /// Second time derivative at t = 0.
  T second_derivative() const { return 2.0 * c2; }
};

template <typename T> Jet<T> operator+(Jet<T> a, const Jet<T>& b) { return a += b; }
template <typename T> Jet<T> operator-(Jet<T> a, const Jet<T>& b) { return a -= b; }
template <typename T> Jet<T> operator-(const Jet<T>& a) { return {-a.c0, -a.c1, -a.c2}; }
template <typename T> Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  return {a.c0 * b.c0, a.c0 * b.c1 + a.c1 * b.c0, a.c0 * b.c2 + a.c1 * b.c1 + a.c2 * b.c0};
}
template <typename T> Jet<T> operator*(double s, const Jet<T>& a) { return {s * a.c0, s * a.c1, s * a.c2}; }
template <typename T> Jet<T> operator*(const Jet<T>& a, double s) { return s * a; }
template <typename T> Jet<T> operator+(Jet<T> a, double s) { a.c0 = a.c0 + s; return a; }
template <typename T> Jet<T> operator-(Jet<T> a, double s) { a.c0 = a.c0 - s; return a; }

template <typename T> Jet<T> sin(const Jet<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.c0);
  const T c = cos(a.c0);
  return {s, c * a.c1, c * a.c2 - 0.5 * (s * (a.c1 * a.c1))};
}

template <typename T> Jet<T> cos(const Jet<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.c0);
  const T c = cos(a.c0);
  return {c, -(s * a.c1), -(s * a.c2) - 0.5 * (c * (a.c1 * a.c1))};
}

}  // namespace teleop::ad
