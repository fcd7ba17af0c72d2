#pragma once

// Hand-rolled generators for the property tests. Every generator draws from a
// caller-owned engine so a failing case can be replayed from its seed.

#include "soapbubble/geometry.hpp"

#include <random>

namespace soapbubble::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec random_point(Rng& rng, int dim, double half_width) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = uniform(rng, -half_width, half_width);
  return v;
}

inline UnitVector random_direction(Rng& rng, int dim) {
  std::normal_distribution<double> g;
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-6);
  return UnitVector(v);
}

/// Rotation taking e_3 to a random direction, with a random twist.
inline Mat random_rotation(Rng& rng) {
  Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  q.normalize();
  return Mat(q.toRotationMatrix());
}

/// Semi-axes within [lo, hi].
inline Vec random_axes(Rng& rng, double lo, double hi) {
  return make_vec({uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)});
}

}  // namespace soapbubble::testing
