#pragma once

// Numerical stress tests of the quantitative geometric lemmas. Each suite
// returns a LemmaVerdict; margins are (right-hand side - left-hand side), so a
// trial is a violation when its margin drops below -tolerance.

#include "soapbubble/intrinsic.hpp"
#include "soapbubble/jet.hpp"
#include "soapbubble/moving_planes.hpp"
#include "soapbubble/surface.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace soapbubble {

inline constexpr double kAnalyticTolerance = 1e-7;
inline constexpr double kFiniteDifferenceTolerance = 1e-4;

struct LemmaVerdict {
  std::string id;
  std::string statement;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;   // precondition not met for this trial (e.g. no match found)
  std::size_t failures = 0;  // evaluation failed (root finding, patch), not a violation
  double worst_slack = std::numeric_limits<double>::infinity();
  nlohmann::json witness;    // inputs of the worst trial
  double tolerance = kAnalyticTolerance;
  bool rejected = false;     // suite-level precondition failed
  std::string reject_reason;
  nlohmann::json reject_witness;
  bool low_resolution = false;
  nlohmann::json extras = nlohmann::json::object();
  std::vector<std::string> notes;

  bool passed() const { return !rejected && violations == 0; }
  /// Records one trial with its margin.
  void record(double margin, const nlohmann::json& inputs);
  void merge(const LemmaVerdict& other);
};

nlohmann::json to_json(const LemmaVerdict& v);

struct VerifyOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  double tolerance = kAnalyticTolerance;
};

// ---------------------------------------------------------------------------
// Touching-ball patch bounds.

/// Random base points p and tangent offsets |x| < 0.9 rho; checks the height,
/// gradient and normal bounds with the supplied rho.
LemmaVerdict verify_graph_bounds(const Surface& surface, double rho, const VerifyOptions& options = {});

/// |x| <= d_S(p, q) <= rho asin(|x|/rho) for q in the patch over T_p.
/// d_S is estimated from above by the smaller of the graph distance and the
/// length of the chord projected onto S.
LemmaVerdict verify_distance_bounds(const Surface& surface, const GeodesicGraph& graph, double rho,
                                    const VerifyOptions& options = {});

// ---------------------------------------------------------------------------
// Slices and projections.

using ImplicitFunction = std::function<Jet(const Vec&)>;

ImplicitFunction implicit_of(const AnalyticSurface& surface);
/// G = z - x^2 - y^2, positive above the bowl.
ImplicitFunction paraboloid();

struct AffinePlane {
  UnitVector normal;
  double offset = 0.0;  // {x : normal·x = offset}
};

struct SliceTrace {
  std::vector<Vec> points;
  std::vector<SurfaceSample> surface;  // normal and principal curvatures of U at each point
  bool closed = false;
  double step = 0.0;
  double length = 0.0;
};

/// Predictor-corrector continuation of U ∩ plane starting near `start`.
SliceTrace trace_slice(const ImplicitFunction& f, const AffinePlane& plane, const Vec& start, double step = 1e-3,
                       double max_length = 1e3);

/// A point of S on the plane, found along a ray inside the plane; throws
/// InputError when the plane misses S.
Vec slice_start(const AnalyticSurface& surface, const AffinePlane& plane);

/// Signed curvature of the circle through a, b, c, positive when it bends
/// towards `normal`; circumcenter returned through `center` when given.
double three_point_curvature(const Vec& a, const Vec& b, const Vec& c, const Vec& normal, Vec* center = nullptr);

/// Slice curvature bounds kappa_1/(nu·nu') <= kappa' <= kappa_n/(nu·nu') with
/// the unit in-plane normal nu', and the identity nu·nu'_raw = 1 - (nu·omega)^2
/// for the unnormalised Hodge vector. Rejects non-transversal slices.
LemmaVerdict slice_curvature_bounds(const ImplicitFunction& f, const AffinePlane& plane, const Vec& start,
                                    double step = 1e-3, double tolerance = kFiniteDifferenceTolerance);
LemmaVerdict slice_curvature_bounds(const AnalyticSurface& surface, const AffinePlane& plane, double step = 1e-3,
                                    double tolerance = kFiniteDifferenceTolerance);

/// Projection of the slice onto the hyperplane through the origin orthogonal
/// to omega2: |kappa''| <= |w1·w2| / [(w1·w2)^2 + (w2·nu')^2]^{3/2} |kappa'|.
/// Extras carry the curvature range and the fitted center of the projection.
LemmaVerdict projected_curvature_bounds(const ImplicitFunction& f, const AffinePlane& slicing, const UnitVector& omega2,
                                        const Vec& start, double step = 1e-3,
                                        double tolerance = kFiniteDifferenceTolerance);
LemmaVerdict projected_curvature_bounds(const AnalyticSurface& surface, const AffinePlane& slicing,
                                        const UnitVector& omega2, double step = 1e-3,
                                        double tolerance = kFiniteDifferenceTolerance);

/// The paraboloid z = x^2 + y^2 cut by z = 2 + 8y and projected to z = 0.
LemmaVerdict paraboloid_slice_check(double step = 1e-3);

/// Random planes through the surface until `options.trials` trace points are checked.
LemmaVerdict slice_curvature_suite(const AnalyticSurface& surface, const VerifyOptions& options = {});
LemmaVerdict projected_curvature_suite(const AnalyticSurface& surface, const VerifyOptions& options = {});

// ---------------------------------------------------------------------------
// Change of normal direction.

/// Re-graphs the patch of radius r at p over ell^perp on the disk of radius
/// r sqrt(1 - eps^2); checks sup|v| <= sup|u| + sqrt(2) eps r and that the
/// re-graphed points stay over B_r of T_p.
LemmaVerdict verify_normal_change(const Surface& surface, const SurfaceSample& p, const UnitVector& ell, double eps,
                                  double r, double rho, double tolerance = kAnalyticTolerance);
LemmaVerdict normal_change_suite(const Surface& surface, double rho, double eps, const VerifyOptions& options = {});

/// |nu_1 - nu_2| <= sqrt(5)/2 |grad u_2 - grad u_1| for graph normals at x0.
LemmaVerdict verify_normal_difference(const Vec& grad_u1, const Vec& grad_u2, double tolerance = kAnalyticTolerance);
/// Random quadratic pairs in n = 2.
LemmaVerdict normal_difference_suite(const VerifyOptions& options = {});

// ---------------------------------------------------------------------------
// Moving-plane configurations.

/// For reflected-cap points q within delta of the cap boundary, matches
/// q_hat = q - a nu_q on the left portion and checks
/// 0 <= nu_q·omega <= sqrt(8 delta^2/rho^2 + alpha/2), alpha = max(a, |nu_q - nu_qhat|).
LemmaVerdict verify_normal_tilt(const Surface& surface, const GeodesicGraph& graph, const CriticalPlane& plane,
                                double delta, double rho, double tolerance = kAnalyticTolerance);
/// Critical planes in `directions` random directions, each checked as above.
LemmaVerdict normal_tilt_suite(const Surface& surface, const GeodesicGraph& graph, double delta, double rho,
                               std::size_t directions, const VerifyOptions& options = {});

/// (p - O)/|p - O|·nu_p <= -1 + (r_e - r_i)/rho at every sample; rejected when
/// r_e - r_i > 2 rho.
LemmaVerdict verify_annulus_normal(const Surface& surface, const SampleSet& samples, const Vec& O, double r_i,
                                   double r_e, double rho, double tolerance = kAnalyticTolerance);

// ---------------------------------------------------------------------------

/// Canonical suite ids accepted by run_lemma.
const std::vector<std::string>& lemma_ids();
/// Maps aliases to canonical ids; empty string when unknown.
std::string canonical_lemma_id(const std::string& id);

/// Runs one suite on a surface (rho is estimated when not positive).
LemmaVerdict run_lemma(const std::string& id, const Surface& surface, const VerifyOptions& options, double rho = 0.0);

std::string verdict_table(const std::vector<LemmaVerdict>& verdicts);

}  // namespace soapbubble
