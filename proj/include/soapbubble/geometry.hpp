#pragma once

// Small-dimension linear algebra shared by every module. Ambient dimension is
// a runtime value (2 or 3); vectors never allocate.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace soapbubble {

inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Thrown for malformed user input (spec files, CLI values, preconditions).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a numerical stage cannot produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline Vec zeros(int dim) { return Vec::Zero(dim); }

inline Vec basis(int dim, int axis) {
  Vec e = Vec::Zero(dim);
  e[axis] = 1.0;
  return e;
}

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

/// Unit-length direction. Construction normalizes; the zero vector is rejected.
class UnitVector {
 public:
  UnitVector() = default;
  explicit UnitVector(const Vec& v) {
    const double len = v.norm();
    if (!(len > 0.0) || !std::isfinite(len)) throw InputError("direction must be a finite non-zero vector");
    v_ = v / len;
  }
  const Vec& vec() const noexcept { return v_; }
  operator const Vec&() const noexcept { return v_; }  // NOLINT
  int dim() const noexcept { return static_cast<int>(v_.size()); }
  double dot(const Vec& w) const { return v_.dot(w); }
  double operator[](Eigen::Index i) const { return v_[i]; }

 private:
  Vec v_;
};

/// Orthonormal basis of the hyperplane orthogonal to `normal` (dim-1 columns).
inline Mat tangent_basis(const Vec& normal) {
  const int d = static_cast<int>(normal.size());
  Mat t(d, d - 1);
  if (d == 2) {
    t(0, 0) = -normal[1];
    t(1, 0) = normal[0];
    return t;
  }
  // Frisvad-style construction, stable for all unit normals.
  Vec a = std::abs(normal[0]) < 0.9 ? basis(3, 0) : basis(3, 1);
  Vec t1 = a - normal.dot(a) * normal;
  t1.normalize();
  Vec t2(3);
  t2 << normal[1] * t1[2] - normal[2] * t1[1], normal[2] * t1[0] - normal[0] * t1[2],
      normal[0] * t1[1] - normal[1] * t1[0];
  t.col(0) = t1;
  t.col(1) = t2;
  return t;
}

/// Reflection of `x` about the hyperplane {ξ : ξ·ω = λ}.
inline Vec reflect_point(const Vec& x, const UnitVector& omega, double lambda) {
  return x - 2.0 * (omega.dot(x) - lambda) * omega.vec();
}

/// Reflection of a direction (normal vector) about any hyperplane orthogonal to ω.
inline Vec reflect_direction(const Vec& v, const UnitVector& omega) {
  return v - 2.0 * omega.dot(v) * omega.vec();
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Surface measure of the unit sphere S^{d-1} in R^d.
inline double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

}  // namespace soapbubble
