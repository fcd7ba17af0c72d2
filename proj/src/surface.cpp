#include "soapbubble/surface.hpp"

#include "soapbubble/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace soapbubble {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kGoldenAngle = M_PI * (3.0 - std::sqrt(5.0));

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim + 1, kMaxDim + 1>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim + 1, 1>;

/// Near-uniform unit directions: Fibonacci lattice on S^2, equal angles on S^1.
std::vector<Vec> lattice_directions(int dim, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out(count);
  Mat rot = Mat::Identity(dim, dim);
  double phase = 0.0;
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    if (dim == 3) {
      Mat g(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g(i, j) = gauss(rng);
      Eigen::HouseholderQR<Mat> qr(g);
      rot = qr.householderQ();
      if (rot.determinant() < 0) rot.col(0) *= -1.0;
    } else {
      phase = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    Vec u(dim);
    if (dim == 2) {
      const double t = 2.0 * M_PI * (static_cast<double>(i) + 0.5) / static_cast<double>(count) + phase;
      u << std::cos(t), std::sin(t);
    } else {
      const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = kGoldenAngle * static_cast<double>(i);
      u << r * std::cos(phi), r * std::sin(phi), z;
      u = rot * u;
    }
    out[i] = u;
  }
  return out;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

Vec sphere_retract(const Vec& u) { return u / u.norm(); }

// --- Eberly's robust point-to-ellipse/ellipsoid distance -----------------
// Axes sorted descending, query in the first orthant.

double bisect_root(const std::function<double(double)>& g, double s0, double s1) {
  double s = s0;
  for (int i = 0; i < 2200; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double v = g(s);
    if (v > 0) {
      s0 = s;
    } else if (v < 0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

double ellipse_foot(double e0, double e1, double y0, double y1, double& x0, double& x1) {
  if (y1 > 0) {
    if (y0 > 0) {
      const double z0 = y0 / e0, z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g != 0) {
        const double r0 = (e0 / e1) * (e0 / e1);
        const double n0 = r0 * z0;
        const double s = bisect_root(
            [&](double t) {
              const double a = n0 / (t + r0), b = z1 / (t + 1.0);
              return a * a + b * b - 1.0;
            },
            z1 - 1.0, g < 0 ? 0.0 : std::hypot(n0, z1) - 1.0);
        x0 = r0 * y0 / (s + r0);
        x1 = y1 / (s + 1.0);
        return std::hypot(x0 - y0, x1 - y1);
      }
      x0 = y0;
      x1 = y1;
      return 0.0;
    }
    x0 = 0.0;
    x1 = e1;
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    x0 = e0 * xde0;
    x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    return std::hypot(x0 - y0, x1);
  }
  x0 = e0;
  x1 = 0.0;
  return std::abs(y0 - e0);
}

double ellipsoid_foot(const std::array<double, 3>& e, const std::array<double, 3>& y, std::array<double, 3>& x) {
  auto dist3 = [&] { return std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) + (x[2] - y[2]) * (x[2] - y[2])); };
  if (y[2] > 0) {
    if (y[1] > 0) {
      if (y[0] > 0) {
        const double z0 = y[0] / e[0], z1 = y[1] / e[1], z2 = y[2] / e[2];
        const double g = z0 * z0 + z1 * z1 + z2 * z2 - 1.0;
        if (g != 0) {
          const double r0 = (e[0] / e[2]) * (e[0] / e[2]);
          const double r1 = (e[1] / e[2]) * (e[1] / e[2]);
          const double n0 = r0 * z0, n1 = r1 * z1;
          const double hi = g < 0 ? 0.0 : std::sqrt(n0 * n0 + n1 * n1 + z2 * z2) - 1.0;
          const double s = bisect_root(
              [&](double t) {
                const double a = n0 / (t + r0), b = n1 / (t + r1), c = z2 / (t + 1.0);
                return a * a + b * b + c * c - 1.0;
              },
              z2 - 1.0, hi);
          x[0] = r0 * y[0] / (s + r0);
          x[1] = r1 * y[1] / (s + r1);
          x[2] = y[2] / (s + 1.0);
          return dist3();
        }
        x = y;
        return 0.0;
      }
      x[0] = 0.0;
      ellipse_foot(e[1], e[2], y[1], y[2], x[1], x[2]);
      return dist3();
    }
    if (y[0] > 0) {
      x[1] = 0.0;
      ellipse_foot(e[0], e[2], y[0], y[2], x[0], x[2]);
      return dist3();
    }
    x[0] = x[1] = 0.0;
    x[2] = e[2];
    return std::abs(y[2] - e[2]);
  }
  const double denom0 = e[0] * e[0] - e[2] * e[2], denom1 = e[1] * e[1] - e[2] * e[2];
  const double numer0 = e[0] * y[0], numer1 = e[1] * y[1];
  if (numer0 < denom0 && numer1 < denom1) {
    const double xde0 = numer0 / denom0, xde1 = numer1 / denom1;
    const double discr = 1.0 - xde0 * xde0 - xde1 * xde1;
    if (discr > 0) {
      x[0] = e[0] * xde0;
      x[1] = e[1] * xde1;
      x[2] = e[2] * std::sqrt(discr);
      return dist3();
    }
  }
  x[2] = 0.0;
  ellipse_foot(e[0], e[1], y[0], y[1], x[0], x[1]);
  return dist3();
}

}  // namespace

nlohmann::json to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<Vec> SampleSet::points() const {
  std::vector<Vec> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.point);
  return out;
}

SurfaceSample curvature_from_jet(const Vec& point, const Jet& g) {
  const double norm = g.g.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("curvature", "defining function has vanishing gradient");
  SurfaceSample s;
  s.point = point;
  s.inner_normal = g.g / norm;
  const Mat t = tangent_basis(s.inner_normal);
  const Mat w = -(t.transpose() * g.h * t) / norm;
  const int n = static_cast<int>(w.rows());
  if (n == 1) {
    s.principal_curvatures = Vec::Constant(1, w(0, 0));
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> eig(w, Eigen::EigenvaluesOnly);
    s.principal_curvatures = eig.eigenvalues();
  }
  s.mean_curvature = s.principal_curvatures.mean();
  return s;
}

// ---------------------------------------------------------------------------
// AnalyticSurface

SurfaceSample AnalyticSurface::sample_at(const Vec& p) const { return curvature_from_jet(p, defining_jet(p)); }

void AnalyticSurface::finalize() {
  const std::size_t count = dim() == 3 ? 2000 : 256;
  seed_params_ = lattice_directions(dim(), count, 0);
  seeds_.resize(count);
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    seeds_[i] = point_at(seed_params_[i]);
    const double r = (seeds_[i] - center()).norm();
    if (r > best) {
      best = r;
      arg = i;
    }
  }
  seed_index_ = KdTree(seeds_);
  const Vec u = refine_extremum([this](const Vec& v) { return radius_along(v); }, seed_params_[arg], true);
  bounding_radius_ = std::max(best, radius_along(u)) * (1.0 + 1e-9);
}

double AnalyticSurface::bounding_radius() const { return bounding_radius_; }

Projection AnalyticSurface::newton_project(const Vec& xi, const Vec& start) const {
  const int d = dim();
  const double scale = 1.0 + bounding_radius_ + (xi - center()).norm();
  Vec x = start;
  Jet j = defining_jet(x);
  double mu = -(x - xi).dot(j.g) / j.g.squaredNorm();
  auto residual = [&](const Vec& xx, double m, const Jet& jj) {
    SmallVec r(d + 1);
    r.head(d) = xx - xi + m * jj.g;
    r[d] = jj.v / jj.g.norm();
    return r;
  };
  SmallVec r = residual(x, mu, j);
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    SmallMat jac = SmallMat::Zero(d + 1, d + 1);
    jac.topLeftCorner(d, d) = Mat::Identity(d, d) + mu * j.h;
    jac.topRightCorner(d, 1) = j.g;
    const double gn = j.g.norm();
    // Row for G/|∇G|; the derivative of 1/|∇G| is dropped (vanishes at convergence).
    jac.bottomLeftCorner(1, d) = j.g.transpose() / gn;
    SmallVec rhs = -r;
    const SmallVec step = jac.fullPivLu().solve(rhs);
    if (!step.allFinite()) break;
    double t = 1.0;
    const double r0 = r.norm();
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Vec xn = x + t * step.head(d);
      const double mn = mu + t * step[d];
      const Jet jn = defining_jet(xn);
      if (jn.g.norm() > 0) {
        const SmallVec rn = residual(xn, mn, jn);
        if (rn.norm() < (1.0 - 1e-4 * t) * r0 || rn.norm() <= 1e-15 * scale) {
          x = xn;
          mu = mn;
          j = jn;
          r = rn;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    const double step_len = t * step.head(d).norm();
    if (r.norm() <= 1e-13 * scale || (accepted && step_len <= 1e-15 * scale)) {
      converged = true;
      break;
    }
    if (!accepted) {
      converged = r.norm() <= 1e-10 * scale;
      break;
    }
  }
  Projection out;
  if (!converged) {
    out.signed_distance = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  // Final polish onto the level set along the gradient.
  for (int it = 0; it < 3; ++it) {
    x -= (j.v / j.g.squaredNorm()) * j.g;
    j = defining_jet(x);
  }
  out.point = x;
  out.inner_normal = j.g.normalized();
  const double gx = defining(xi);
  const double dist = (x - xi).norm();
  out.signed_distance = gx > 0 ? dist : (gx < 0 ? -dist : 0.0);
  return out;
}

Projection AnalyticSurface::project(const Vec& xi) const {
  std::vector<Vec> starts;
  const Vec rel = xi - center();
  if (rel.norm() > 1e-12 * (1.0 + bounding_radius_)) starts.push_back(point_at(rel / rel.norm()));
  for (const auto& nb : seed_index_.nearest(xi, 2)) starts.push_back(seeds_[nb.index]);
  Projection best;
  double best_dist = kInf;
  for (const auto& s : starts) {
    Projection p = newton_project(xi, s);
    if (!std::isfinite(p.signed_distance)) continue;
    const double dist = std::abs(p.signed_distance);
    if (dist < best_dist) {
      best_dist = dist;
      best = p;
    }
  }
  if (!std::isfinite(best_dist)) throw NumericalError("projection", "Newton projection onto the surface did not converge");
  return best;
}

double AnalyticSurface::signed_distance(const Vec& x) const { return project(x).signed_distance; }

SurfaceSample AnalyticSurface::evaluate_sample(const Vec& seed) const { return sample_at(project(seed).point); }

SampleSet AnalyticSurface::sample(std::size_t budget, std::uint64_t seed) const {
  if (budget == 0) throw InputError("sample budget must be positive");
  SampleSet set;
  set.params = lattice_directions(dim(), budget, seed);
  set.samples.resize(budget);
  set.weights.resize(budget);
  const int n = intrinsic_dim();
  const double dsigma = unit_sphere_area(dim()) / static_cast<double>(budget);
  parallel_for(budget, [&](std::size_t i) {
    const Vec& u = set.params[i];
    const double r = radius_along(u);
    set.samples[i] = sample_at(center() + r * u);
    set.weights[i] = std::pow(r, n) / std::abs(u.dot(set.samples[i].inner_normal)) * dsigma;
  });
  const double total = std::accumulate(set.weights.begin(), set.weights.end(), 0.0);
  set.spacing = std::pow(total / static_cast<double>(budget), 1.0 / n);
  return set;
}

double AnalyticSurface::area_quadrature(int nodes) const {
  const int n = intrinsic_dim();
  auto integrand = [&](const Vec& u) {
    const double r = radius_along(u);
    const Vec p = center() + r * u;
    const Vec g = defining_jet(p).g;
    return std::pow(r, n) * g.norm() / std::abs(u.dot(g));
  };
  if (dim() == 2) {
    const int m = 4 * nodes;
    std::vector<double> vals(m);
    parallel_for(m, [&](std::size_t i) {
      const double t = 2.0 * M_PI * static_cast<double>(i) / m;
      vals[i] = integrand(make_vec({std::cos(t), std::sin(t)}));
    });
    return std::accumulate(vals.begin(), vals.end(), 0.0) * 2.0 * M_PI / m;
  }
  std::vector<double> z, wz;
  gauss_legendre(nodes, z, wz);
  const int m = 2 * nodes;
  std::vector<double> rows(nodes);
  parallel_for(nodes, [&](std::size_t i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const double phi = 2.0 * M_PI * k / m;
      acc += integrand(make_vec({s * std::cos(phi), s * std::sin(phi), z[i]}));
    }
    rows[i] = wz[i] * acc * 2.0 * M_PI / m;
  });
  return std::accumulate(rows.begin(), rows.end(), 0.0);
}

double AnalyticSurface::area() const {
  std::call_once(area_once_, [this] { area_ = area_quadrature(dim() == 3 ? 96 : 512); });
  return area_;
}

Vec AnalyticSurface::refine_extremum(const std::function<double(const Vec&)>& f_of_param, Vec u, bool maximize,
                                     int steps) const {
  const double sign = maximize ? -1.0 : 1.0;
  auto F = [&](const Vec& v) { return sign * f_of_param(v); };
  constexpr double h = 1e-6;
  double fu = F(u);
  double alpha = -1.0;
  for (int step = 0; step < steps; ++step) {
    const Mat t = tangent_basis(u);
    Vec g(t.cols());
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
      g[k] = (F(sphere_retract(u + h * t.col(k))) - F(sphere_retract(u - h * t.col(k)))) / (2.0 * h);
    }
    const double gn = g.norm();
    if (!(gn > 1e-14)) break;
    if (alpha < 0) alpha = 1e-2 / gn;
    const Vec dir = -(t * g);
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Vec cand = sphere_retract(u + alpha * dir);
      const double fc = F(cand);
      if (fc <= fu - 1e-4 * alpha * gn * gn) {
        u = cand;
        fu = fc;
        moved = true;
        alpha *= 2.0;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Sphere

Sphere::Sphere(Vec center, double radius) : center_(std::move(center)), radius_(radius) {
  if (center_.size() < 2 || center_.size() > kMaxDim) throw InputError("sphere center must have 2 or 3 coordinates");
  if (!center_.allFinite()) throw InputError("sphere center must be finite");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw InputError("sphere radius must be positive");
  finalize();
}

double Sphere::defining(const Vec& x) const { return (radius_ * radius_ - (x - center_).squaredNorm()) / (2.0 * radius_); }

Jet Sphere::defining_jet(const Vec& x) const {
  const int d = dim();
  Jet j(defining(x), d);
  j.g = -(x - center_) / radius_;
  j.h = -Mat::Identity(d, d) / radius_;
  return j;
}

Projection Sphere::project(const Vec& x) const {
  Vec rel = x - center_;
  double len = rel.norm();
  if (len == 0.0) {
    rel = basis(dim(), 0);
    len = 0.0;
  } else {
    rel /= len;
  }
  Projection p;
  p.point = center_ + radius_ * rel;
  p.inner_normal = -rel;
  p.signed_distance = radius_ - len;
  return p;
}

double Sphere::area() const { return unit_sphere_area(dim()) * std::pow(radius_, dim() - 1); }

nlohmann::json Sphere::describe() const {
  return {{"type", "sphere"}, {"center", to_json(center_)}, {"radius", radius_}};
}

// ---------------------------------------------------------------------------
// Ellipsoid

Ellipsoid::Ellipsoid(Vec semi_axes, std::optional<Vec> center, std::optional<Mat> rotation)
    : axes_(std::move(semi_axes)) {
  const int d = static_cast<int>(axes_.size());
  if (d < 2 || d > kMaxDim) throw InputError("ellipsoid needs 2 or 3 semi-axes");
  for (int i = 0; i < d; ++i) {
    if (!(axes_[i] > 0.0) || !std::isfinite(axes_[i])) throw InputError("ellipsoid semi-axes must be positive");
  }
  center_ = center.value_or(Vec::Zero(d));
  if (center_.size() != d || !center_.allFinite()) throw InputError("ellipsoid center has wrong dimension");
  rotation_ = rotation.value_or(Mat::Identity(d, d));
  if (rotation_.rows() != d || rotation_.cols() != d) throw InputError("ellipsoid rotation has wrong shape");
  if ((rotation_.transpose() * rotation_ - Mat::Identity(d, d)).norm() > 1e-9)
    throw InputError("ellipsoid rotation must be orthogonal");
  finalize();
}

double Ellipsoid::defining(const Vec& x) const {
  const Vec y = rotation_.transpose() * (x - center_);
  return 1.0 - y.cwiseQuotient(axes_).squaredNorm();
}

Jet Ellipsoid::defining_jet(const Vec& x) const {
  const Vec y = rotation_.transpose() * (x - center_);
  const Vec inv2 = axes_.cwiseProduct(axes_).cwiseInverse();
  Jet j(1.0 - y.cwiseQuotient(axes_).squaredNorm(), dim());
  j.g = -2.0 * rotation_ * inv2.cwiseProduct(y);
  j.h = -2.0 * rotation_ * inv2.asDiagonal() * rotation_.transpose();
  return j;
}

double Ellipsoid::radius_along(const Vec& u) const {
  const Vec y = rotation_.transpose() * u;
  return 1.0 / y.cwiseQuotient(axes_).norm();
}

Projection Ellipsoid::project(const Vec& x) const {
  const int d = dim();
  const Vec y = rotation_.transpose() * (x - center_);
  std::array<int, 3> perm{0, 1, 2};
  std::sort(perm.begin(), perm.begin() + d, [&](int a, int b) { return axes_[a] > axes_[b]; });
  std::array<double, 3> e{}, ya{}, foot{};
  for (int i = 0; i < d; ++i) {
    e[i] = axes_[perm[i]];
    ya[i] = std::abs(y[perm[i]]);
  }
  double dist;
  if (d == 3) {
    dist = ellipsoid_foot(e, ya, foot);
  } else {
    dist = ellipse_foot(e[0], e[1], ya[0], ya[1], foot[0], foot[1]);
  }
  Vec local(d);
  for (int i = 0; i < d; ++i) local[perm[i]] = std::copysign(foot[i], y[perm[i]]);
  Projection p;
  p.point = center_ + rotation_ * local;
  const Vec inv2 = axes_.cwiseProduct(axes_).cwiseInverse();
  p.inner_normal = -(rotation_ * inv2.cwiseProduct(local)).normalized();
  const double g = 1.0 - y.cwiseQuotient(axes_).squaredNorm();
  p.signed_distance = g > 0 ? dist : (g < 0 ? -dist : 0.0);
  return p;
}

double Ellipsoid::signed_distance(const Vec& x) const { return project(x).signed_distance; }

nlohmann::json Ellipsoid::describe() const {
  nlohmann::json j{{"type", "ellipsoid"}, {"semi_axes", to_json(axes_)}, {"center", to_json(center_)}};
  if (!rotation_.isIdentity(0.0)) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < rotation_.rows(); ++i) rows.push_back(to_json(rotation_.row(i).transpose()));
    j["rotation"] = rows;
  }
  return j;
}

// ---------------------------------------------------------------------------
// RadialGraph

namespace {

double factorial_ratio(int l, int m) {
  // (l - m)! / (l + m)!
  double r = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) r /= k;
  return r;
}

}  // namespace

template <class T>
T RadialGraph::radial_function(const T* u) const {
  T total = u[0] * 0.0 + base_;
  if (basis_ == Basis::Fourier) {
    for (const auto& term : terms_) {
      const int m = std::abs(term.m);
      T re = u[0] * 0.0 + 1.0, im = u[0] * 0.0;
      for (int k = 0; k < m; ++k) {
        const T nr = re * u[0] - im * u[1];
        im = re * u[1] + im * u[0];
        re = nr;
      }
      total = total + term.value * (term.m >= 0 ? re : im);
    }
    return total;
  }
  const T& x = u[0];
  const T& y = u[1];
  const T& z = u[2];
  for (const auto& term : terms_) {
    const int l = term.l, m = std::abs(term.m);
    // Q_l^m(z) with P_l^m = (1 - z^2)^{m/2} Q_l^m, no Condon-Shortley phase.
    double dfact = 1.0;
    for (int k = 1; k <= 2 * m - 1; k += 2) dfact *= k;
    T qmm = z * 0.0 + dfact;
    T q = qmm;
    if (l > m) {
      T qprev = qmm;
      T qcur = z * ((2.0 * m + 1.0) * dfact);
      for (int ll = m + 2; ll <= l; ++ll) {
        T qnext = ((2.0 * ll - 1.0) * (z * qcur) - (ll + m - 1.0) * qprev) / static_cast<double>(ll - m);
        qprev = qcur;
        qcur = qnext;
      }
      q = qcur;
    }
    T re = x * 0.0 + 1.0, im = x * 0.0;
    for (int k = 0; k < m; ++k) {
      const T nr = re * x - im * y;
      im = re * y + im * x;
      re = nr;
    }
    double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) * factorial_ratio(l, m));
    if (m != 0) norm *= std::sqrt(2.0);
    total = total + (term.value * norm) * (q * (term.m >= 0 ? re : im));
  }
  return total;
}

template double RadialGraph::radial_function<double>(const double*) const;
template Jet RadialGraph::radial_function<Jet>(const Jet*) const;

RadialGraph::RadialGraph(Basis basis, std::vector<Term> terms, double base_radius, std::optional<Vec> center)
    : basis_(basis), terms_(std::move(terms)), base_(base_radius) {
  const int d = dim();
  center_ = center.value_or(Vec::Zero(d));
  if (center_.size() != d || !center_.allFinite()) throw InputError("radial_graph center has wrong dimension");
  if (!std::isfinite(base_)) throw InputError("radial_graph base radius must be finite");
  for (const auto& t : terms_) {
    if (!std::isfinite(t.value)) throw InputError("radial_graph coefficient must be finite");
    if (basis_ == Basis::SphericalHarmonics && (t.l < 0 || std::abs(t.m) > t.l))
      throw InputError("spherical harmonic index requires l >= 0 and |m| <= l");
  }
  // Positivity of r(.) on a fine lattice, refined locally.
  const auto dirs = lattice_directions(d, d == 3 ? 20000 : 4096, 0);
  double lo = kInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double r = radius_along(dirs[i]);
    if (r < lo) {
      lo = r;
      arg = i;
    }
  }
  const Vec u = refine_extremum([this](const Vec& v) { return radius_along(v); }, dirs[arg], false);
  min_radius_ = std::min(lo, radius_along(u));
  if (!(min_radius_ > 1e-6 * std::max(1.0, std::abs(base_))))
    throw InputError("radial_graph radial function must stay positive (min r = " + std::to_string(min_radius_) + ")");
  finalize();
}

double RadialGraph::radius_along(const Vec& u) const {
  std::array<double, 3> a{u[0], u[1], dim() == 3 ? u[2] : 0.0};
  return radial_function<double>(a.data());
}

double RadialGraph::defining(const Vec& x) const {
  const Vec rel = x - center_;
  const double len = rel.norm();
  if (len == 0.0) return base_;
  return radius_along(rel / len) - len;
}

Jet RadialGraph::defining_jet(const Vec& x) const {
  const int d = dim();
  std::array<Jet, 3> rel;
  Jet sq(0.0, d);
  for (int i = 0; i < d; ++i) {
    rel[i] = Jet::variable(x[i], i, d) - center_[i];
    sq = sq + rel[i] * rel[i];
  }
  if (sq.v == 0.0) throw NumericalError("curvature", "radial graph evaluated at its center");
  const Jet len = sqrt(sq);
  const Jet inv = reciprocal(len);
  std::array<Jet, 3> u;
  for (int i = 0; i < d; ++i) u[i] = rel[i] * inv;
  return radial_function<Jet>(u.data()) - len;
}

nlohmann::json RadialGraph::describe() const {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& t : terms_) {
    if (basis_ == Basis::Fourier) {
      coeffs.push_back({t.m, t.value});
    } else {
      coeffs.push_back({t.l, t.m, t.value});
    }
  }
  return {{"type", "radial_graph"},
          {"basis", basis_ == Basis::Fourier ? "fourier" : "real_spherical_harmonics"},
          {"radius", base_},
          {"center", to_json(center_)},
          {"coeffs", coeffs}};
}

// ---------------------------------------------------------------------------
// PointCloudSurface

PointCloudSurface::PointCloudSurface(std::vector<Vec> points, std::vector<Vec> inner_normals, int fit_neighbors)
    : points_(std::move(points)), normals_(std::move(inner_normals)), k_(fit_neighbors) {
  if (points_.size() != normals_.size()) throw InputError("point cloud needs one normal per point");
  if (points_.size() < 32) throw InputError("point cloud needs at least 32 points");
  dim_ = static_cast<int>(points_.front().size());
  if (dim_ < 2 || dim_ > kMaxDim) throw InputError("point cloud must live in R^2 or R^3");
  const int min_k = dim_ == 3 ? 6 : 3;
  if (k_ < min_k) throw InputError("quadric fit needs at least " + std::to_string(min_k) + " neighbours");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != dim_ || normals_[i].size() != dim_) throw InputError("point cloud rows have mixed dimension");
    if (!points_[i].allFinite() || !normals_[i].allFinite()) throw InputError("point cloud contains non-finite values");
    const double len = normals_[i].norm();
    if (!(len > 0.0)) throw InputError("point cloud normal " + std::to_string(i) + " is zero");
    normals_[i] /= len;
  }
  index_ = KdTree(points_);

  centroid_ = Vec::Zero(dim_);
  for (const auto& p : points_) centroid_ += p;
  centroid_ /= static_cast<double>(points_.size());
  for (const auto& p : points_) bounding_radius_ = std::max(bounding_radius_, (p - centroid_).norm());

  // Orientation consistency: flipped normals on the same sheet.
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (const auto& nb : index_.nearest(points_[i], 9)) {
      if (nb.index == i) continue;
      const Vec d = points_[nb.index] - points_[i];
      const bool same_sheet = std::abs(d.dot(normals_[i])) < 0.5 * d.norm();
      if (same_sheet && normals_[i].dot(normals_[nb.index]) < -0.5)
        throw InputError("point cloud normals are inconsistently oriented near point " + std::to_string(i));
    }
  }

  cells_.resize(points_.size());
  parallel_for(points_.size(), [&](std::size_t i) { cells_[i] = voronoi_cell(i); });
  double flux = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) flux += cells_[i] * (points_[i] - centroid_).dot(normals_[i]);
  if (flux >= 0.0) throw InputError("point cloud normals point outward; inner normals are required");
  spacing_ = std::pow(area() / static_cast<double>(points_.size()), 1.0 / (dim_ - 1));
}

double PointCloudSurface::voronoi_cell(std::size_t i) const {
  const Vec& p = points_[i];
  const Vec& nu = normals_[i];
  const Mat t = tangent_basis(nu);
  const auto nbs = index_.nearest(p, 17);
  std::vector<Vec> local;
  for (const auto& nb : nbs) {
    if (nb.index == i || normals_[nb.index].dot(nu) < 0.5) continue;
    const Vec y = t.transpose() * (points_[nb.index] - p);
    if (y.norm() > 0.0) local.push_back(y);
  }
  if (local.empty()) return 0.0;
  if (dim_ == 2) {
    double right = kInf, left = kInf;
    for (const auto& y : local) {
      if (y[0] > 0) right = std::min(right, y[0]);
      if (y[0] < 0) left = std::min(left, -y[0]);
    }
    if (!std::isfinite(right)) right = left;
    if (!std::isfinite(left)) left = right;
    return 0.5 * (left + right);
  }
  double reach = 0.0;
  for (const auto& y : local) reach = std::max(reach, y.norm());
  using P2 = Eigen::Vector2d;
  std::vector<P2> poly{{-reach, -reach}, {reach, -reach}, {reach, reach}, {-reach, reach}};
  for (const auto& y : local) {
    const P2 a(y[0], y[1]);
    const double c = 0.5 * a.squaredNorm();
    std::vector<P2> next;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const P2& s = poly[k];
      const P2& e = poly[(k + 1) % poly.size()];
      const double fs = s.dot(a) - c, fe = e.dot(a) - c;
      if (fs <= 0) next.push_back(s);
      if ((fs < 0 && fe > 0) || (fs > 0 && fe < 0)) next.push_back(s + (fs / (fs - fe)) * (e - s));
    }
    poly.swap(next);
    if (poly.size() < 3) return 0.0;
  }
  double area2 = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const P2& s = poly[k];
    const P2& e = poly[(k + 1) % poly.size()];
    area2 += s[0] * e[1] - s[1] * e[0];
  }
  return 0.5 * std::abs(area2);
}

double PointCloudSurface::area() const { return std::accumulate(cells_.begin(), cells_.end(), 0.0); }

double PointCloudSurface::signed_distance(const Vec& x) const {
  // Distance to the union of tangent splats (disks of the cell's size).
  const auto nb = index_.nearest(x, 1).front();
  const Vec d = x - points_[nb.index];
  const double normal_part = d.dot(normals_[nb.index]);
  const double tangential = std::sqrt(std::max(0.0, d.squaredNorm() - normal_part * normal_part));
  const double splat = dim_ == 3 ? std::sqrt(cells_[nb.index] / M_PI) : 0.5 * cells_[nb.index];
  const double excess = std::max(0.0, tangential - splat);
  const double dist = std::hypot(normal_part, excess);
  return normal_part >= 0 ? dist : -dist;
}

SurfaceSample PointCloudSurface::fit_at(std::size_t i) const {
  const Vec& p = points_[i];
  const Vec& nu = normals_[i];
  const Mat t = tangent_basis(nu);
  const int n = dim_ - 1;
  const int cols = n == 2 ? 6 : 3;
  const auto nbs = index_.nearest(p, static_cast<std::size_t>(k_));
  std::vector<std::size_t> use;
  for (const auto& nb : nbs) {
    if (normals_[nb.index].dot(nu) > 0.0) use.push_back(nb.index);
  }
  if (static_cast<int>(use.size()) < cols) throw NumericalError("quadric fit", "neighbourhood too sparse for quadric fit");
  Eigen::MatrixXd a(use.size(), cols);
  Eigen::VectorXd h(use.size());
  for (std::size_t r = 0; r < use.size(); ++r) {
    const Vec d = points_[use[r]] - p;
    const Vec y = t.transpose() * d;
    h[static_cast<Eigen::Index>(r)] = d.dot(nu);
    if (n == 2) {
      a.row(static_cast<Eigen::Index>(r)) << 1.0, y[0], y[1], 0.5 * y[0] * y[0], y[0] * y[1], 0.5 * y[1] * y[1];
    } else {
      a.row(static_cast<Eigen::Index>(r)) << 1.0, y[0], 0.5 * y[0] * y[0];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < cols) throw NumericalError("quadric fit", "neighbourhood too sparse for quadric fit");
  const Eigen::VectorXd c = qr.solve(h);
  Vec b(n);
  Mat hess(n, n);
  if (n == 2) {
    b << c[1], c[2];
    hess << c[3], c[4], c[4], c[5];
  } else {
    b << c[1];
    hess << c[2];
  }
  const double root = std::sqrt(1.0 + b.squaredNorm());
  const Mat metric = Mat::Identity(n, n) + b * b.transpose();
  const Mat second = hess / root;
  const Eigen::LLT<Mat> llt(metric);
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(n, n));
  const Mat w = l_inv * second * l_inv.transpose();
  SurfaceSample s;
  s.point = p + c[0] * nu;
  s.inner_normal = (nu - t * b) / root;
  if (n == 1) {
    s.principal_curvatures = Vec::Constant(1, w(0, 0));
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> eig(w, Eigen::EigenvaluesOnly);
    s.principal_curvatures = eig.eigenvalues();
  }
  s.mean_curvature = s.principal_curvatures.mean();
  return s;
}

Projection PointCloudSurface::project(const Vec& x) const {
  const std::size_t i = index_.nearest(x, 1).front().index;
  const SurfaceSample s = fit_at(i);
  Projection p;
  p.inner_normal = s.inner_normal;
  const double off = (x - s.point).dot(s.inner_normal);
  p.point = x - off * s.inner_normal;
  p.signed_distance = signed_distance(x);
  return p;
}

SurfaceSample PointCloudSurface::evaluate_sample(const Vec& seed) const {
  if (seed.size() != dim_) throw InputError("seed has wrong dimension");
  return fit_at(index_.nearest(seed, 1).front().index);
}

SampleSet PointCloudSurface::sample(std::size_t budget, std::uint64_t seed) const {
  if (budget == 0) throw InputError("sample budget must be positive");
  const std::size_t total = points_.size();
  std::vector<std::size_t> chosen;
  if (budget >= total) {
    chosen.resize(total);
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  } else {
    double offset = 0.0;
    if (seed != 0) {
      std::mt19937_64 rng(seed);
      offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    for (std::size_t j = 0; j < budget; ++j) {
      chosen.push_back(std::min(total - 1, static_cast<std::size_t>((static_cast<double>(j) + offset) *
                                                                    static_cast<double>(total) / static_cast<double>(budget))));
    }
  }
  SampleSet set;
  set.samples.resize(chosen.size());
  set.weights.resize(chosen.size());
  const double scale = static_cast<double>(total) / static_cast<double>(chosen.size());
  parallel_for(chosen.size(), [&](std::size_t j) {
    set.samples[j] = fit_at(chosen[j]);
    set.weights[j] = cells_[chosen[j]] * scale;
  });
  set.spacing = std::pow(area() / static_cast<double>(chosen.size()), 1.0 / (dim_ - 1));
  return set;
}

nlohmann::json PointCloudSurface::describe() const {
  return {{"type", "point_cloud"}, {"points", points_.size()}, {"dimension", dim_}, {"k", k_}};
}

// ---------------------------------------------------------------------------
// Operations

OscReport mean_curvature_oscillation(const Surface& surface, std::size_t budget) {
  if (budget < 100) throw InputError("mean_curvature_oscillation needs a sample budget of at least 100");
  return mean_curvature_oscillation(surface, surface.sample(budget));
}

OscReport mean_curvature_oscillation(const Surface& surface, const SampleSet& set) {
  if (set.size() < 100) throw InputError("mean_curvature_oscillation needs at least 100 samples");
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.samples[a].mean_curvature < set.samples[b].mean_curvature;
  });
  OscReport rep;
  rep.samples = set.size();
  const auto& lo = set.samples[order.front()];
  const auto& hi = set.samples[order.back()];
  rep.min_H = lo.mean_curvature;
  rep.max_H = hi.mean_curvature;
  rep.argmin = lo.point;
  rep.argmax = hi.point;

  if (const AnalyticSurface* an = surface.as_analytic(); an && !set.params.empty()) {
    auto H = [an](const Vec& u) { return an->sample_at_param(u).mean_curvature; };
    const std::size_t tries = std::min<std::size_t>(5, order.size());
    double min_h = rep.min_H, max_h = rep.max_H;
    for (std::size_t k = 0; k < tries; ++k) {
      const Vec umin = an->refine_extremum(H, set.params[order[k]], false);
      const SurfaceSample smin = an->sample_at_param(umin);
      if (smin.mean_curvature < min_h) {
        min_h = smin.mean_curvature;
        rep.argmin = smin.point;
      }
      const Vec umax = an->refine_extremum(H, set.params[order[order.size() - 1 - k]], true);
      const SurfaceSample smax = an->sample_at_param(umax);
      if (smax.mean_curvature > max_h) {
        max_h = smax.mean_curvature;
        rep.argmax = smax.point;
      }
    }
    rep.resolution = std::max(rep.min_H - min_h, max_h - rep.max_H);
    rep.min_H = min_h;
    rep.max_H = max_h;
  } else {
    // Local scatter of H around the extremal samples.
    const auto points = set.points();
    const KdTree tree(points);
    double scatter = 0.0;
    for (const std::size_t idx : {order.front(), order.back()}) {
      double mean = 0.0;
      int count = 0;
      for (const auto& nb : tree.nearest(points[idx], 7)) {
        if (nb.index == idx) continue;
        mean += set.samples[nb.index].mean_curvature;
        ++count;
      }
      if (count > 0) scatter = std::max(scatter, std::abs(set.samples[idx].mean_curvature - mean / count));
    }
    rep.resolution = scatter;
  }
  rep.osc = std::max(0.0, rep.max_H - rep.min_H);
  return rep;
}

TouchingRadius estimate_touching_radius(const Surface& surface, std::size_t budget) {
  if (budget < 100) throw InputError("estimate_touching_radius needs a sample budget of at least 100");
  return estimate_touching_radius(surface, surface.sample(budget));
}

TouchingRadius estimate_touching_radius(const Surface& surface, const SampleSet& set) {
  if (set.size() < 100) throw InputError("estimate_touching_radius needs at least 100 samples");
  auto kappa_abs = [](const SurfaceSample& s) { return s.principal_curvatures.cwiseAbs().maxCoeff(); };
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return kappa_abs(set.samples[a]) > kappa_abs(set.samples[b]); });
  double kmax = kappa_abs(set.samples[order.front()]);
  Vec kpoint = set.samples[order.front()].point;
  if (const AnalyticSurface* an = surface.as_analytic(); an && !set.params.empty()) {
    auto K = [&](const Vec& u) { return kappa_abs(an->sample_at_param(u)); };
    for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
      const Vec u = an->refine_extremum(K, set.params[order[k]], true);
      const SurfaceSample s = an->sample_at_param(u);
      if (kappa_abs(s) > kmax) {
        kmax = kappa_abs(s);
        kpoint = s.point;
      }
    }
  }

  // Pairwise two-ball bound on a strided subset.
  const std::size_t m = std::min<std::size_t>(set.size(), 3000);
  std::vector<std::size_t> sub(m);
  for (std::size_t j = 0; j < m; ++j) sub[j] = j * set.size() / m;
  std::vector<double> row_min(m, kInf);
  parallel_for(m, [&](std::size_t a) {
    const SurfaceSample& p = set.samples[sub[a]];
    double best = kInf;
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      const Vec d = set.samples[sub[b]].point - p.point;
      const double off = std::abs(d.dot(p.inner_normal));
      if (off <= 1e-14 * d.norm()) continue;
      best = std::min(best, d.squaredNorm() / (2.0 * off));
    }
    row_min[a] = best;
  });
  TouchingRadius out;
  out.curvature_bound = kmax > 0 ? 1.0 / kmax : kInf;
  out.pairwise_bound = *std::min_element(row_min.begin(), row_min.end());
  out.rho = std::min(out.curvature_bound, out.pairwise_bound);
  out.max_curvature_point = kpoint;
  if (!(out.rho > 0.0) || !std::isfinite(out.rho)) throw NumericalError("touching radius", "estimate is not a positive finite number");
  return out;
}

GraphPatch::GraphPatch(const Surface& surface, SurfaceSample base, double radius, double rho, bool enforce_bounds)
    : surface_(&surface), base_(std::move(base)), radius_(radius), rho_(rho), enforce_bounds_(enforce_bounds) {
  if (!(rho_ > 0.0)) throw InputError("graph patch needs a positive touching radius");
  if (!(radius_ > 0.0) || radius_ >= rho_) throw InputError("graph patch radius must lie in (0, rho)");
  frame_ = tangent_basis(base_.inner_normal);
}

double GraphPatch::height(const Vec& x) const {
  const double s = x.norm();
  if (s == 0.0) return 0.0;
  if (enforce_bounds_ && s >= rho_) throw InputError("graph patch evaluated outside the touching-ball disk");
  const Vec foot = base_.point + frame_ * x;
  const Vec& nu = base_.inner_normal;
  auto f = [&](double t) { return surface_->inside_indicator(foot + t * nu); };
  const double reach = s * (1.0 + 1e-7) + 1e-14;
  const double flo = f(-reach), fhi = f(reach);
  if (!(flo < 0 && fhi > 0)) {
    throw NumericalError("local_graph", "no surface crossing along the normal: radius too large or rho overestimated");
  }
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(f, -reach, reach, flo, fhi,
                                                      boost::math::tools::eps_tolerance<double>(52), iters);
  const double u = 0.5 * (root.first + root.second);
  if (!enforce_bounds_) return u;
  const double bound = rho_ - std::sqrt(rho_ * rho_ - s * s);
  if (std::abs(u) > bound * (1.0 + 1e-6) + 1e-12)
    throw NumericalError("local_graph", "graph height leaves the touching-ball bracket: radius too large or rho overestimated");
  return u;
}

Vec GraphPatch::point(const Vec& x) const { return base_.point + frame_ * x + height(x) * base_.inner_normal; }

Vec GraphPatch::gradient(const Vec& x) const {
  const int n = static_cast<int>(frame_.cols());
  if (x.norm() == 0.0) return Vec::Zero(n);
  if (const AnalyticSurface* an = surface_->as_analytic()) {
    const Vec g = an->defining_jet(point(x)).g;
    return -(frame_.transpose() * g) / base_.inner_normal.dot(g);
  }
  const double h = 1e-4 * radius_;
  Vec grad(n);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = h;
    grad[k] = (height(x + e) - height(x - e)) / (2.0 * h);
  }
  return grad;
}

Vec GraphPatch::normal_at(const Vec& x) const {
  const Vec g = gradient(x);
  return (base_.inner_normal - frame_ * g) / std::sqrt(1.0 + g.squaredNorm());
}

GraphPatch local_graph(const Surface& surface, const SurfaceSample& p, double radius, double rho) {
  return GraphPatch(surface, p, radius, rho);
}

}  // namespace soapbubble
