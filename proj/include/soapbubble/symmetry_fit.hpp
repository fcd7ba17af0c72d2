#pragma once

#include "soapbubble/constants.hpp"
#include "soapbubble/moving_planes.hpp"
#include "soapbubble/surface.hpp"

#include <optional>
#include <string>
#include <vector>

namespace soapbubble {

/// O = (m_{e_1}, ..., m_{e_{n+1}}); the planes used are returned through `planes`.
Vec symmetry_center(const Surface& surface, const SampleSet& samples, double tol,
                    std::vector<CriticalPlane>* planes = nullptr);
Vec symmetry_center(const Surface& surface, double tol = 0.0, std::size_t sample_budget = 20000);

struct RadialBounds {
  double r_i = 0.0;
  double r_e = 0.0;
  Vec p_i;
  Vec p_e;
};

RadialBounds radial_bounds(const Surface& surface, const SampleSet& samples, const Vec& O);
RadialBounds radial_bounds(const Surface& surface, const Vec& O, std::size_t sample_budget = 20000);

/// |O·omega - m(omega)|.
double critical_plane_distance(const Surface& surface, const SampleSet& samples, const Vec& O,
                               const UnitVector& omega, double tol);

/// max over samples of |signed_distance(2O - p)|.
double reflection_defect(const Surface& surface, const SampleSet& samples, const Vec& O);
double reflection_defect(const Surface& surface, const Vec& O, std::size_t sample_budget = 20000);

struct RayWitness {
  Vec direction;
  int hits = 0;
};

struct RadialMapCheck {
  bool ok = false;
  bool hypothesis_ok = false;    // r_e - r_i <= 2 rho
  bool lemma_ok = false;         // (p-O)/|p-O|·nu <= -1 + (r_e - r_i)/rho at every sample
  bool transversal_ok = false;   // (p-O)/|p-O|·nu < 0 at every sample
  bool rays_ok = false;          // every ray from O crosses S once
  double max_dot = 0.0;
  double lemma_bound = 0.0;
  Vec max_dot_point;
  std::size_t rays = 0;
  std::size_t multi_hit_rays = 0;
  int max_hits = 0;
  std::vector<RayWitness> ray_witnesses;  // first few rays with hits != 1
};

RadialMapCheck radial_map_check(const Surface& surface, const SampleSet& samples, const Vec& O, double r_i, double r_e,
                                double rho, std::size_t rays = 1000, std::uint64_t seed = 0);

/// Number of sign changes of the inside indicator along the ray O + t·dir.
int count_ray_hits(const Surface& surface, const Vec& O, const Vec& dir, double step);

struct StabilityOptions {
  std::size_t samples = 20000;
  double tol = 0.0;  // <= 0: 1e-8 times the diameter
  std::uint64_t seed = 0;
  std::size_t rays = 1000;
  std::size_t robust_directions = 0;  // extra random directions for the averaged center
  ConstantsInput constants;           // n, rho and area are filled from measurements
};

struct StabilityReport {
  std::string surface_kind;
  nlohmann::json surface;
  Vec O;
  double r_i = 0.0;
  double r_e = 0.0;
  Vec p_i;
  Vec p_e;
  OscReport osc;
  double noise_floor = 0.0;
  bool ratio_indeterminate = false;
  double ratio = 0.0;
  std::vector<CriticalPlane> planes;       // canonical axes
  std::vector<double> plane_distances;     // dist(O, pi_omega) for `planes`
  CriticalPlane extremal_plane;            // direction (p_e - p_i)/|p_e - p_i|
  bool has_extremal_plane = false;
  double extremal_distance = 0.0;
  double cross_check_slack = 0.0;
  bool cross_check_ok = true;
  std::optional<Vec> robust_center;
  double robust_spread = 0.0;
  double reflection_defect = 0.0;
  RadialMapCheck radial_map;
  TouchingRadius rho;
  double area = 0.0;
  std::size_t samples = 0;
  double spacing = 0.0;
  double tol = 0.0;
  ConstantsReport constants;
  Smallness smallness;
  std::string verdict;
};

StabilityReport stability_ratio(const Surface& surface, const StabilityOptions& options = {});

nlohmann::json to_json(const StabilityReport& report);

}  // namespace soapbubble
