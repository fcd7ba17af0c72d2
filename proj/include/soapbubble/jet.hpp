#pragma once

// Second-order forward-mode jets: value, gradient and Hessian of a scalar
// function of up to three variables. Used to differentiate implicit defining
// functions exactly (up to rounding) instead of by finite differences.

#include "soapbubble/geometry.hpp"

#include <cmath>

namespace soapbubble {

struct Jet {
  double v = 0.0;
  Vec g;
  Mat h;

  Jet() = default;
  Jet(double value, int dim) : v(value), g(Vec::Zero(dim)), h(Mat::Zero(dim, dim)) {}

  static Jet variable(double value, int index, int dim) {
    Jet j(value, dim);
    j.g[index] = 1.0;
    return j;
  }
  int dim() const { return static_cast<int>(g.size()); }
};

/// Applies a scalar function with known first and second derivatives.
inline Jet chain(const Jet& a, double f, double df, double d2f) {
  Jet r;
  r.v = f;
  r.g = df * a.g;
  r.h = df * a.h + d2f * (a.g * a.g.transpose());
  return r;
}

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}
inline Jet operator-(const Jet& a) {
  Jet r;
  r.v = -a.v;
  r.g = -a.g;
  r.h = -a.h;
  return r;
}
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}
inline Jet operator+(const Jet& a, double s) {
  Jet r = a;
  r.v += s;
  return r;
}
inline Jet operator+(double s, const Jet& a) { return a + s; }
inline Jet operator-(const Jet& a, double s) { return a + (-s); }
inline Jet operator-(double s, const Jet& a) { return (-a) + s; }
inline Jet operator*(const Jet& a, double s) {
  Jet r;
  r.v = a.v * s;
  r.g = a.g * s;
  r.h = a.h * s;
  return r;
}
inline Jet operator*(double s, const Jet& a) { return a * s; }
inline Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }

inline Jet reciprocal(const Jet& a) {
  const double inv = 1.0 / a.v;
  return chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

// Overloads so templated defining functions compile for both double and Jet.
inline double value_of(double x) { return x; }
inline double value_of(const Jet& j) { return j.v; }

}  // namespace soapbubble
