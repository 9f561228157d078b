#pragma once
// Forward-mode automatic differentiation. Nesting Dual<Dual<double,M>,N> gives
// higher derivatives; everything here is constexpr-free and header only.
#include <array>
#include <cmath>
#include <type_traits>

namespace surfns {

template <class T, int N>
struct Dual {
  T v{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double c) : v(c) {
    for (auto& x : d) x = T(0.0);
  }
  template <class U, std::enable_if_t<!std::is_arithmetic_v<U> && std::is_convertible_v<U, T>, int> = 0>
  Dual(const U& c) : v(c) {
    for (auto& x : d) x = T(0.0);
  }
  Dual(const T& val, const std::array<T, N>& der) : v(val), d(der) {}

  static Dual variable(const T& val, int i) {
    Dual r(val);
    r.d[i] = T(1.0);
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    T inv = T(1.0) / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
};

template <class T> struct is_dual : std::false_type {};
template <class T, int N> struct is_dual<Dual<T, N>> : std::true_type {};

template <class T, int N> Dual<T, N> operator+(Dual<T, N> a, const Dual<T, N>& b) { return a += b; }
template <class T, int N> Dual<T, N> operator-(Dual<T, N> a, const Dual<T, N>& b) { return a -= b; }
template <class T, int N> Dual<T, N> operator*(Dual<T, N> a, const Dual<T, N>& b) { return a *= b; }
template <class T, int N> Dual<T, N> operator/(Dual<T, N> a, const Dual<T, N>& b) { return a /= b; }
template <class T, int N> Dual<T, N> operator-(const Dual<T, N>& a) {
  Dual<T, N> r;
  r.v = -a.v;
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}

// mixed arithmetic with plain doubles
template <class T, int N> Dual<T, N> operator+(Dual<T, N> a, double b) { a.v += b; return a; }
template <class T, int N> Dual<T, N> operator+(double b, Dual<T, N> a) { a.v += b; return a; }
template <class T, int N> Dual<T, N> operator-(Dual<T, N> a, double b) { a.v -= b; return a; }
template <class T, int N> Dual<T, N> operator-(double b, const Dual<T, N>& a) { return -a + b; }
template <class T, int N> Dual<T, N> operator*(Dual<T, N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <class T, int N> Dual<T, N> operator*(double b, const Dual<T, N>& a) { return a * b; }
template <class T, int N> Dual<T, N> operator/(const Dual<T, N>& a, double b) { return a * (1.0 / b); }
template <class T, int N> Dual<T, N> operator/(double b, const Dual<T, N>& a) { return Dual<T, N>(b) / a; }

// chain rule helper: f(a) with value fv and derivative fp (both of type T)
template <class T, int N>
Dual<T, N> chain(const Dual<T, N>& a, const T& fv, const T& fp) {
  Dual<T, N> r;
  r.v = fv;
  for (int i = 0; i < N; ++i) r.d[i] = fp * a.d[i];
  return r;
}

template <class T, int N> Dual<T, N> sin(const Dual<T, N>& a) {
  using std::sin; using std::cos;
  return chain(a, T(sin(a.v)), T(cos(a.v)));
}
template <class T, int N> Dual<T, N> cos(const Dual<T, N>& a) {
  using std::sin; using std::cos;
  return chain(a, T(cos(a.v)), T(-sin(a.v)));
}
template <class T, int N> Dual<T, N> exp(const Dual<T, N>& a) {
  using std::exp;
  T e = exp(a.v);
  return chain(a, e, e);
}
template <class T, int N> Dual<T, N> sqrt(const Dual<T, N>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return chain(a, s, T(0.5 / s));
}

// innermost scalar value
inline double value(double x) { return x; }
template <class T, int N> double value(const Dual<T, N>& a) { return value(a.v); }

}  // namespace surfns
