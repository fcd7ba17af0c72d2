#pragma once

#include "soapbubble/intrinsic.hpp"
#include "soapbubble/surface.hpp"

#include <string>

namespace soapbubble {

enum class TangencyCase { InteriorTangency, BoundaryOrthogonality };

std::string to_string(TangencyCase c);

/// Support value M = max_{p in S} p·omega (samples, refined on analytic surfaces).
double extent(const Surface& surface, const UnitVector& omega, std::size_t sample_budget = 20000);
double extent(const Surface& surface, const SampleSet& samples, const UnitVector& omega);

struct CapContainment {
  bool inside = true;
  double worst_violation = 0.0;  // -min signed distance of reflected cap samples
  Vec witness;                   // reflected sample attaining the minimum
  Vec preimage;                  // the cap sample it came from
  std::size_t witness_index = 0;
  std::size_t cap_size = 0;
};

/// Checks signed_distance(reflect(p)) >= -tol for all samples with p·omega > lambda.
CapContainment reflected_cap_inside(const Surface& surface, const SampleSet& samples, const UnitVector& omega,
                                    double lambda, double tol);
CapContainment reflected_cap_inside(const Surface& surface, const UnitVector& omega, double lambda, double tol,
                                    std::size_t sample_budget = 20000);

struct CriticalPlane {
  UnitVector omega;
  double m = 0.0;
  TangencyCase tangency = TangencyCase::InteriorTangency;
  Vec p0;                    // pre-image of the contact witness
  Vec contact_point;         // reflection of p0 (lies near S)
  double contact_gap = 0.0;  // min signed distance of the reflected cap at m
  double extent = 0.0;
  double lower = 0.0;        // min_{p in S} p·omega
  double normal_dot_omega = 0.0;  // |nu_{p0}·omega|
  double interior_offset = 0.0;   // p0·omega - m
  double case_threshold = 0.0;
  bool degenerate_contact = false;
  double touching_fraction = 0.0;
  double tol = 0.0;
  int iterations = 0;
  std::size_t samples = 0;
  double spacing = 0.0;
};

/// Bisection for the critical level m = inf{lambda : reflected cap inside}.
/// tol <= 0 selects 1e-8 times the surface diameter.
CriticalPlane critical_position(const Surface& surface, const SampleSet& samples, const UnitVector& omega, double tol);
CriticalPlane critical_position(const Surface& surface, const UnitVector& omega, double tol = 0.0,
                                std::size_t sample_budget = 20000, std::uint64_t seed = 0);

/// Default bisection tolerance for a surface.
double default_plane_tolerance(const Surface& surface);

struct CapRegion {
  UnitVector omega;
  double m = 0.0;
  std::vector<std::size_t> sigma;        // cap nodes p·omega > m (pre-images of the reflected cap)
  std::vector<std::size_t> sigma_hat;    // left nodes p·omega < m
  std::vector<std::size_t> sigma_boundary;
  std::vector<std::size_t> sigma_hat_boundary;
  std::size_t anchor = 0;      // node nearest p0
  std::size_t hat_anchor = 0;  // node nearest the reflection of p0
};

CapRegion critical_caps(const Surface& surface, const CriticalPlane& plane, const GeodesicGraph& graph);

nlohmann::json to_json(const CriticalPlane& plane);

}  // namespace soapbubble
