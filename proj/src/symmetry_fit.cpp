#include "soapbubble/symmetry_fit.hpp"

#include "soapbubble/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace soapbubble {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* kHConvention = "inner normal orientation; a sphere of radius R has H = +1/R";

}  // namespace

Vec symmetry_center(const Surface& surface, const SampleSet& samples, double tol, std::vector<CriticalPlane>* planes) {
  const int d = surface.dim();
  Vec O(d);
  for (int i = 0; i < d; ++i) {
    CriticalPlane cp = critical_position(surface, samples, UnitVector(basis(d, i)), tol);
    O[i] = cp.m;
    if (planes) planes->push_back(std::move(cp));
  }
  return O;
}

Vec symmetry_center(const Surface& surface, double tol, std::size_t budget) {
  return symmetry_center(surface, surface.sample(budget), tol);
}

RadialBounds radial_bounds(const Surface& surface, const SampleSet& samples, const Vec& O) {
  if (O.size() != surface.dim()) throw InputError("center dimension does not match the surface");
  RadialBounds b;
  b.r_i = kInf;
  b.r_e = -kInf;
  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = (samples.samples[i].point - O).norm();
    if (r < b.r_i) {
      b.r_i = r;
      imin = i;
    }
    if (r > b.r_e) {
      b.r_e = r;
      imax = i;
    }
  }
  b.p_i = samples.samples[imin].point;
  b.p_e = samples.samples[imax].point;
  if (const AnalyticSurface* an = surface.as_analytic(); an && !samples.params.empty()) {
    auto dist = [&](const Vec& u) { return (an->point_at(u) - O).norm(); };
    const Vec ui = an->refine_extremum(dist, samples.params[imin], false);
    const Vec ue = an->refine_extremum(dist, samples.params[imax], true);
    if (dist(ui) < b.r_i) {
      b.r_i = dist(ui);
      b.p_i = an->point_at(ui);
    }
    if (dist(ue) > b.r_e) {
      b.r_e = dist(ue);
      b.p_e = an->point_at(ue);
    }
  }
  return b;
}

RadialBounds radial_bounds(const Surface& surface, const Vec& O, std::size_t budget) {
  return radial_bounds(surface, surface.sample(budget), O);
}

double critical_plane_distance(const Surface& surface, const SampleSet& samples, const Vec& O, const UnitVector& omega,
                               double tol) {
  const CriticalPlane cp = critical_position(surface, samples, omega, tol);
  return std::abs(omega.dot(O) - cp.m);
}

double reflection_defect(const Surface& surface, const SampleSet& samples, const Vec& O) {
  std::vector<double> d(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    d[i] = std::abs(surface.signed_distance(2.0 * O - samples.samples[i].point));
  });
  double worst = 0.0;
  for (double v : d) worst = std::max(worst, v);
  return worst;
}

double reflection_defect(const Surface& surface, const Vec& O, std::size_t budget) {
  return reflection_defect(surface, surface.sample(budget), O);
}

int count_ray_hits(const Surface& surface, const Vec& O, const Vec& dir, double step) {
  const double reach = (O - surface.center()).norm() + surface.bounding_radius() * 1.01 + step;
  int hits = 0;
  double prev = surface.inside_indicator(O);
  for (double t = step; t <= reach + step; t += step) {
    const double cur = surface.inside_indicator(O + t * dir);
    if ((prev > 0) != (cur > 0)) ++hits;
    prev = cur;
  }
  return hits;
}

RadialMapCheck radial_map_check(const Surface& surface, const SampleSet& samples, const Vec& O, double r_i, double r_e,
                                double rho, std::size_t rays, std::uint64_t seed) {
  if (O.size() != surface.dim()) throw InputError("center dimension does not match the surface");
  if (!(surface.inside_indicator(O) > 0)) throw InputError("radial map check needs O inside the enclosed domain");
  RadialMapCheck c;
  c.hypothesis_ok = r_e - r_i <= 2.0 * rho;
  c.lemma_bound = -1.0 + (r_e - r_i) / rho;
  c.max_dot = -kInf;
  for (const auto& s : samples.samples) {
    const Vec rel = s.point - O;
    const double dot = rel.dot(s.inner_normal) / rel.norm();
    if (dot > c.max_dot) {
      c.max_dot = dot;
      c.max_dot_point = s.point;
    }
  }
  c.transversal_ok = c.max_dot < 0.0;
  c.lemma_ok = c.hypothesis_ok && c.max_dot <= c.lemma_bound + 1e-9;

  c.rays = rays;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss;
  std::vector<Vec> dirs(rays);
  for (auto& v : dirs) {
    v.resize(surface.dim());
    do {
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = gauss(rng);
    } while (v.norm() < 1e-12);
    v.normalize();
  }
  const double step = samples.spacing / 4.0;
  std::vector<int> hits(rays, 0);
  parallel_for(rays, [&](std::size_t i) { hits[i] = count_ray_hits(surface, O, dirs[i], step); });
  for (std::size_t i = 0; i < rays; ++i) {
    c.max_hits = std::max(c.max_hits, hits[i]);
    if (hits[i] != 1) {
      ++c.multi_hit_rays;
      if (c.ray_witnesses.size() < 8) c.ray_witnesses.push_back({dirs[i], hits[i]});
    }
  }
  c.rays_ok = c.multi_hit_rays == 0;
  c.ok = c.lemma_ok && c.transversal_ok && c.rays_ok;
  return c;
}

StabilityReport stability_ratio(const Surface& surface, const StabilityOptions& opt) {
  StabilityReport rep;
  rep.surface_kind = surface.kind();
  rep.surface = surface.describe();
  const double tol = opt.tol > 0 ? opt.tol : default_plane_tolerance(surface);
  rep.tol = tol;
  const SampleSet samples = surface.sample(opt.samples, opt.seed);
  rep.samples = samples.size();
  rep.spacing = samples.spacing;
  rep.area = surface.area();

  rep.osc = mean_curvature_oscillation(surface, samples);
  rep.rho = estimate_touching_radius(surface, samples);

  rep.O = symmetry_center(surface, samples, tol, &rep.planes);
  for (const auto& p : rep.planes) rep.plane_distances.push_back(std::abs(p.omega.dot(rep.O) - p.m));

  const RadialBounds rb = radial_bounds(surface, samples, rep.O);
  rep.r_i = rb.r_i;
  rep.r_e = rb.r_e;
  rep.p_i = rb.p_i;
  rep.p_e = rb.p_e;

  double max_h = std::max(std::abs(rep.osc.max_H), std::abs(rep.osc.min_H));
  rep.noise_floor = 1e-8 * std::max(1.0, max_h) + rep.osc.resolution;
  rep.ratio_indeterminate = rep.osc.osc <= rep.noise_floor;
  rep.ratio = rep.ratio_indeterminate ? std::numeric_limits<double>::quiet_NaN() : (rep.r_e - rep.r_i) / rep.osc.osc;

  // Cross-check r_e - r_i <= 2 dist(O, pi) in the extremal direction.
  const Vec span = rep.p_e - rep.p_i;
  if (span.norm() > 1e-9 * surface.bounding_radius()) {
    rep.has_extremal_plane = true;
    rep.extremal_plane = critical_position(surface, samples, UnitVector(span), tol);
    rep.extremal_distance = std::abs(rep.extremal_plane.omega.dot(rep.O) - rep.extremal_plane.m);
    rep.cross_check_slack = 2.0 * (2.0 * tol + samples.spacing * samples.spacing / rep.rho.rho);
    rep.cross_check_ok = rep.r_e - rep.r_i <= 2.0 * rep.extremal_distance + rep.cross_check_slack;
  }

  if (opt.robust_directions > 0) {
    const int d = surface.dim();
    std::mt19937_64 rng(opt.seed + 17);
    std::normal_distribution<double> gauss;
    std::vector<Vec> dirs;
    std::vector<double> levels;
    for (const auto& p : rep.planes) {
      dirs.push_back(p.omega.vec());
      levels.push_back(p.m);
    }
    for (std::size_t j = 0; j < opt.robust_directions; ++j) {
      Vec w(d);
      for (int k = 0; k < d; ++k) w[k] = gauss(rng);
      const UnitVector omega(w);
      dirs.push_back(omega.vec());
      levels.push_back(critical_position(surface, samples, omega, tol).m);
    }
    Eigen::MatrixXd a(dirs.size(), d);
    Eigen::VectorXd b(dirs.size());
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      a.row(static_cast<Eigen::Index>(j)) = dirs[j].transpose();
      b[static_cast<Eigen::Index>(j)] = levels[j];
    }
    const Eigen::VectorXd o = a.colPivHouseholderQr().solve(b);
    Vec center = o;
    rep.robust_center = center;
    for (std::size_t j = 0; j < dirs.size(); ++j)
      rep.robust_spread = std::max(rep.robust_spread, std::abs(dirs[j].dot(center) - levels[j]));
  }

  rep.reflection_defect = reflection_defect(surface, samples, rep.O);
  rep.radial_map = radial_map_check(surface, samples, rep.O, rep.r_i, rep.r_e, rep.rho.rho, opt.rays, opt.seed);

  ConstantsInput ci = opt.constants;
  ci.n = surface.intrinsic_dim();
  ci.rho = rep.rho.rho;
  ci.area = rep.area;
  rep.constants = compute_constants(ci);
  rep.smallness = check_smallness(rep.osc.osc, rep.constants);

  const double gap = rep.r_e - rep.r_i;
  if (rep.ratio_indeterminate) {
    rep.verdict = gap <= 1e-6 * std::max(1.0, rep.r_e) ? "sphere within tolerance"
                                                       : "indeterminate: osc below noise floor but radii differ";
  } else {
    rep.verdict = "ratio measured";
  }
  return rep;
}

nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json planes = nlohmann::json::array();
  for (const auto& p : r.planes) planes.push_back(to_json(p));
  nlohmann::json witnesses = nlohmann::json::array();
  for (const auto& w : r.radial_map.ray_witnesses) witnesses.push_back({{"direction", to_json(w.direction)}, {"hits", w.hits}});
  nlohmann::json j{
      {"surface", r.surface},
      {"center", to_json(r.O)},
      {"r_i", r.r_i},
      {"r_e", r.r_e},
      {"re_minus_ri", r.r_e - r.r_i},
      {"p_i", to_json(r.p_i)},
      {"p_e", to_json(r.p_e)},
      {"osc",
       {{"value", r.osc.osc},
        {"min_H", r.osc.min_H},
        {"max_H", r.osc.max_H},
        {"argmin", to_json(r.osc.argmin)},
        {"argmax", to_json(r.osc.argmax)},
        {"resolution", r.osc.resolution},
        {"noise_floor", r.noise_floor}}},
      {"ratio", r.ratio_indeterminate ? nlohmann::json(nullptr) : nlohmann::json(r.ratio)},
      {"ratio_indeterminate", r.ratio_indeterminate},
      {"planes", planes},
      {"plane_distances", r.plane_distances},
      {"reflection_defect", r.reflection_defect},
      {"radial_map",
       {{"ok", r.radial_map.ok},
        {"hypothesis_ok", r.radial_map.hypothesis_ok},
        {"lemma_ok", r.radial_map.lemma_ok},
        {"transversal_ok", r.radial_map.transversal_ok},
        {"rays_ok", r.radial_map.rays_ok},
        {"max_dot", r.radial_map.max_dot},
        {"lemma_bound", r.radial_map.lemma_bound},
        {"rays", r.radial_map.rays},
        {"multi_hit_rays", r.radial_map.multi_hit_rays},
        {"max_hits", r.radial_map.max_hits},
        {"ray_witnesses", witnesses}}},
      {"constants", to_json(r.constants)},
      {"smallness", {{"applicable", r.smallness.applicable}, {"margin", r.smallness.margin}}},
      {"verdict", r.verdict},
      {"metadata",
       {{"rho_hat", r.rho.rho},
        {"rho_curvature_bound", r.rho.curvature_bound},
        {"rho_pairwise_bound", r.rho.pairwise_bound},
        {"area", r.area},
        {"samples", r.samples},
        {"spacing", r.spacing},
        {"tol", r.tol},
        {"H_convention", kHConvention},
        {"containment_note", "containment is tested on samples only"}}},
  };
  if (r.has_extremal_plane) {
    j["cross_check"] = {{"plane", to_json(r.extremal_plane)},
                        {"lhs_re_minus_ri", r.r_e - r.r_i},
                        {"rhs_two_dist", 2.0 * r.extremal_distance},
                        {"slack", r.cross_check_slack},
                        {"ok", r.cross_check_ok}};
  }
  if (r.robust_center) j["robust_center"] = {{"center", to_json(*r.robust_center)}, {"spread", r.robust_spread}};
  return j;
}

}  // namespace soapbubble
