#pragma once

// Closed embedded hypersurfaces in R^{n+1} (n = 1 or 2) and their pointwise
// differential geometry. Orientation is by the inner normal throughout, so a
// sphere of radius R has mean curvature +1/R and signed distance is positive
// inside the enclosed domain.

#include "soapbubble/geometry.hpp"
#include "soapbubble/jet.hpp"
#include "soapbubble/kdtree.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace soapbubble {

struct SurfaceSample {
  Vec point;
  Vec inner_normal;
  Vec principal_curvatures;  // ascending, length n
  double mean_curvature = 0.0;
};

/// Deterministic sample of a surface with area weights (sum ~ |S|).
struct SampleSet {
  std::vector<SurfaceSample> samples;
  std::vector<double> weights;
  std::vector<Vec> params;  // unit parameter directions (analytic variants only)
  double spacing = 0.0;     // typical neighbour distance

  std::size_t size() const { return samples.size(); }
  std::vector<Vec> points() const;
};

struct Projection {
  Vec point;
  Vec inner_normal;
  double signed_distance = 0.0;
};

class AnalyticSurface;

class Surface {
 public:
  Surface() = default;
  Surface(const Surface&) = delete;
  Surface& operator=(const Surface&) = delete;
  virtual ~Surface() = default;

  virtual std::string kind() const = 0;
  /// Ambient dimension n + 1.
  virtual int dim() const = 0;
  int intrinsic_dim() const { return dim() - 1; }

  /// Positive strictly inside, zero on S, negative outside; 1-Lipschitz.
  virtual double signed_distance(const Vec& x) const = 0;
  /// Cheap function with the sign of signed_distance (not a distance).
  virtual double inside_indicator(const Vec& x) const { return signed_distance(x); }
  /// Lower bound for |inside_indicator(x)| / |signed_distance(x)| near S.
  virtual double indicator_slope() const { return 1.0; }
  /// Nearest point of S with its inner normal.
  virtual Projection project(const Vec& x) const = 0;
  /// Projects `seed` onto S and evaluates curvatures there.
  virtual SurfaceSample evaluate_sample(const Vec& seed) const = 0;
  /// `budget` roughly evenly spread samples; `seed` perturbs the lattice.
  virtual SampleSet sample(std::size_t budget, std::uint64_t seed = 0) const = 0;
  virtual double area() const = 0;
  /// A point inside the enclosed domain and a radius about it containing S.
  virtual Vec center() const = 0;
  virtual double bounding_radius() const = 0;
  virtual nlohmann::json describe() const = 0;

  virtual const AnalyticSurface* as_analytic() const { return nullptr; }
};

/// Star-shaped analytic surface { c + R(u) u : u in S^n } with a smooth
/// defining function G (G > 0 inside, G = 0 on S).
class AnalyticSurface : public Surface {
 public:
  const AnalyticSurface* as_analytic() const override { return this; }

  virtual double defining(const Vec& x) const = 0;
  virtual Jet defining_jet(const Vec& x) const = 0;
  /// Distance from center() to S along the unit direction u.
  virtual double radius_along(const Vec& u) const = 0;

  Vec point_at(const Vec& u) const { return center() + radius_along(u) * u; }
  /// Normal and curvatures at a point already on S.
  SurfaceSample sample_at(const Vec& point_on_surface) const;
  SurfaceSample sample_at_param(const Vec& u) const { return sample_at(point_at(u)); }

  double signed_distance(const Vec& x) const override;
  double inside_indicator(const Vec& x) const override { return defining(x); }
  Projection project(const Vec& x) const override;
  SurfaceSample evaluate_sample(const Vec& seed) const override;
  SampleSet sample(std::size_t budget, std::uint64_t seed = 0) const override;
  double area() const override;
  double bounding_radius() const override;

  /// Area by product quadrature with `nodes` Gauss nodes in the polar variable.
  double area_quadrature(int nodes) const;

  /// Local ascent (maximize) or descent of f over S from parameter u0 using
  /// projected-gradient steps on the parameter sphere. Returns the best parameter.
  Vec refine_extremum(const std::function<double(const Vec&)>& f_of_param, Vec u0, bool maximize,
                      int steps = 50) const;

 protected:
  /// Coarse samples used as multistart seeds for projection. Call once at the
  /// end of derived constructors.
  void finalize();
  Projection newton_project(const Vec& x, const Vec& start) const;

 private:
  std::vector<Vec> seeds_;
  std::vector<Vec> seed_params_;
  KdTree seed_index_;
  double bounding_radius_ = 0.0;
  mutable std::once_flag area_once_;
  mutable double area_ = 0.0;
};

class Sphere final : public AnalyticSurface {
 public:
  Sphere(Vec center, double radius);

  std::string kind() const override { return "sphere"; }
  int dim() const override { return static_cast<int>(center_.size()); }
  double defining(const Vec& x) const override;
  Jet defining_jet(const Vec& x) const override;
  double radius_along(const Vec&) const override { return radius_; }
  double indicator_slope() const override { return 0.5; }
  double signed_distance(const Vec& x) const override { return radius_ - (x - center_).norm(); }
  Projection project(const Vec& x) const override;
  double area() const override;
  Vec center() const override { return center_; }
  double radius() const { return radius_; }
  nlohmann::json describe() const override;

 private:
  Vec center_;
  double radius_;
};

/// Ellipse or ellipsoid with semi-axes along the columns of `rotation`.
class Ellipsoid final : public AnalyticSurface {
 public:
  explicit Ellipsoid(Vec semi_axes, std::optional<Vec> center = std::nullopt,
                     std::optional<Mat> rotation = std::nullopt);

  std::string kind() const override { return "ellipsoid"; }
  int dim() const override { return static_cast<int>(axes_.size()); }
  double defining(const Vec& x) const override;
  Jet defining_jet(const Vec& x) const override;
  double radius_along(const Vec& u) const override;
  double indicator_slope() const override { return 1.0 / axes_.maxCoeff(); }
  double signed_distance(const Vec& x) const override;
  Projection project(const Vec& x) const override;
  Vec center() const override { return center_; }
  const Vec& semi_axes() const { return axes_; }
  const Mat& rotation() const { return rotation_; }
  nlohmann::json describe() const override;

 private:
  Vec axes_;
  Vec center_;
  Mat rotation_;
};

/// Radial graph c + r(u) u with r = base + sum of basis terms. In R^3 the basis
/// is orthonormal real spherical harmonics Y_lm (m > 0 cosine type, m < 0 sine
/// type, no Condon-Shortley phase); in R^2 it is cos(m t) for m >= 0 and
/// sin(|m| t) for m < 0.
class RadialGraph final : public AnalyticSurface {
 public:
  struct Term {
    int l = 0;
    int m = 0;
    double value = 0.0;
  };
  enum class Basis { SphericalHarmonics, Fourier };

  RadialGraph(Basis basis, std::vector<Term> terms, double base_radius = 1.0,
              std::optional<Vec> center = std::nullopt);

  std::string kind() const override { return "radial_graph"; }
  int dim() const override { return basis_ == Basis::SphericalHarmonics ? 3 : 2; }
  double defining(const Vec& x) const override;
  Jet defining_jet(const Vec& x) const override;
  double radius_along(const Vec& u) const override;
  double indicator_slope() const override { return 0.5; }
  Vec center() const override { return center_; }
  double min_radius() const { return min_radius_; }
  nlohmann::json describe() const override;

  template <class T>
  T radial_function(const T* unit) const;

 private:
  Basis basis_;
  std::vector<Term> terms_;
  double base_;
  Vec center_;
  double min_radius_ = 0.0;
};

/// Sampled surface: points with inward unit normals.
class PointCloudSurface final : public Surface {
 public:
  PointCloudSurface(std::vector<Vec> points, std::vector<Vec> inner_normals, int fit_neighbors = 20);

  std::string kind() const override { return "point_cloud"; }
  int dim() const override { return dim_; }
  double signed_distance(const Vec& x) const override;
  Projection project(const Vec& x) const override;
  SurfaceSample evaluate_sample(const Vec& seed) const override;
  SampleSet sample(std::size_t budget, std::uint64_t seed = 0) const override;
  double area() const override;
  Vec center() const override { return centroid_; }
  double bounding_radius() const override { return bounding_radius_; }
  nlohmann::json describe() const override;

  const std::vector<Vec>& points() const { return points_; }
  const std::vector<Vec>& normals() const { return normals_; }
  /// Voronoi cell measure of each point within its tangent hyperplane.
  const std::vector<double>& cell_areas() const { return cells_; }
  int fit_neighbors() const { return k_; }

 private:
  SurfaceSample fit_at(std::size_t index) const;
  double voronoi_cell(std::size_t index) const;

  int dim_;
  std::vector<Vec> points_;
  std::vector<Vec> normals_;
  KdTree index_;
  int k_;
  Vec centroid_;
  double bounding_radius_ = 0.0;
  std::vector<double> cells_;
  double spacing_ = 0.0;
};

// ---------------------------------------------------------------------------
// Operations

nlohmann::json to_json(const Vec& v);

/// Normal and curvatures of the level set {G = G(x)} with inner normal ∇G/|∇G|.
SurfaceSample curvature_from_jet(const Vec& point, const Jet& g);

struct OscReport {
  double min_H = 0.0;
  double max_H = 0.0;
  double osc = 0.0;
  Vec argmin;
  Vec argmax;
  double resolution = 0.0;  // change produced by local refinement, or sample-based estimate
  std::size_t samples = 0;
};

OscReport mean_curvature_oscillation(const Surface& surface, std::size_t sample_budget);
OscReport mean_curvature_oscillation(const Surface& surface, const SampleSet& samples);

struct TouchingRadius {
  double rho = 0.0;
  double curvature_bound = 0.0;  // 1 / max |kappa|
  double pairwise_bound = 0.0;   // inf |q-p|^2 / (2 dist(q-p, T_pS))
  Vec max_curvature_point;
};

TouchingRadius estimate_touching_radius(const Surface& surface, std::size_t sample_budget);
TouchingRadius estimate_touching_radius(const Surface& surface, const SampleSet& samples);

/// Height function of S over the tangent disk at a sample point.
class GraphPatch {
 public:
  /// With `enforce_bounds` false the height is not checked against the
  /// touching-ball bracket (the lemma verifier checks it itself).
  GraphPatch(const Surface& surface, SurfaceSample base, double radius, double rho, bool enforce_bounds = true);

  const SurfaceSample& base() const { return base_; }
  const Mat& frame() const { return frame_; }  // columns: orthonormal tangent basis
  const Vec& normal() const { return base_.inner_normal; }
  double radius() const { return radius_; }
  double rho() const { return rho_; }

  /// x in tangent coordinates (length n).
  double height(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Vec point(const Vec& x) const;
  Vec normal_at(const Vec& x) const;

 private:
  const Surface* surface_;
  SurfaceSample base_;
  Mat frame_;
  double radius_;
  double rho_;
  bool enforce_bounds_;
};

GraphPatch local_graph(const Surface& surface, const SurfaceSample& p, double radius, double rho);

}  // namespace soapbubble
