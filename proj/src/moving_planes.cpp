#include "soapbubble/moving_planes.hpp"

#include "soapbubble/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace soapbubble {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kClosestChecked = 32;

struct ReflectedCap {
  std::vector<std::size_t> index;  // sample index of each cap member
  std::vector<Vec> reflected;
  std::vector<double> indicator;   // inside_indicator of the reflected point
};

ReflectedCap reflect_cap(const Surface& surface, const SampleSet& samples, const UnitVector& omega, double lambda) {
  ReflectedCap cap;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (omega.dot(samples.samples[i].point) > lambda) cap.index.push_back(i);
  }
  cap.reflected.resize(cap.index.size());
  cap.indicator.resize(cap.index.size());
  parallel_for(cap.index.size(), [&](std::size_t j) {
    cap.reflected[j] = reflect_point(samples.samples[cap.index[j]].point, omega, lambda);
    cap.indicator[j] = surface.inside_indicator(cap.reflected[j]);
  });
  return cap;
}

/// Members that need an exact signed distance: everything whose indicator
/// allows a violation plus the few closest to the surface.
std::vector<std::size_t> suspects(const ReflectedCap& cap, double skip) {
  std::vector<std::size_t> order(cap.index.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cap.indicator[a] < cap.indicator[b]; });
  std::size_t keep = 0;
  while (keep < order.size() && (cap.indicator[order[keep]] <= skip || keep < kClosestChecked)) ++keep;
  order.resize(keep);
  return order;
}

/// Fast monotone predicate used inside the bisection: exits on the first violation.
bool cap_inside(const Surface& surface, const SampleSet& samples, const UnitVector& omega, double lambda, double tol) {
  const ReflectedCap cap = reflect_cap(surface, samples, omega, lambda);
  // Indicator above -slope*tol certifies signed distance above -tol.
  const double skip = -surface.indicator_slope() * tol;
  for (std::size_t j = 0; j < cap.index.size(); ++j) {
    if (cap.indicator[j] > skip) continue;
    if (surface.signed_distance(cap.reflected[j]) < -tol) return false;
  }
  return true;
}

double refined_support(const Surface& surface, const SampleSet& samples, const Vec& dir) {
  std::size_t arg = 0;
  double best = -kInf;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = samples.samples[i].point.dot(dir);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  if (const AnalyticSurface* an = surface.as_analytic(); an && !samples.params.empty()) {
    const Vec u = an->refine_extremum([&](const Vec& v) { return an->point_at(v).dot(dir); }, samples.params[arg], true);
    best = std::max(best, an->point_at(u).dot(dir));
  }
  return best;
}

}  // namespace

std::string to_string(TangencyCase c) {
  return c == TangencyCase::InteriorTangency ? "InteriorTangency" : "BoundaryOrthogonality";
}

double extent(const Surface& surface, const SampleSet& samples, const UnitVector& omega) {
  return refined_support(surface, samples, omega.vec());
}

double extent(const Surface& surface, const UnitVector& omega, std::size_t budget) {
  if (omega.dim() != surface.dim()) throw InputError("direction dimension does not match the surface");
  return extent(surface, surface.sample(budget), omega);
}

CapContainment reflected_cap_inside(const Surface& surface, const SampleSet& samples, const UnitVector& omega,
                                    double lambda, double tol) {
  if (omega.dim() != surface.dim()) throw InputError("direction dimension does not match the surface");
  const ReflectedCap cap = reflect_cap(surface, samples, omega, lambda);
  CapContainment out;
  out.cap_size = cap.index.size();
  const auto check = suspects(cap, -surface.indicator_slope() * tol);
  std::vector<double> sd(check.size());
  parallel_for(check.size(), [&](std::size_t j) { sd[j] = surface.signed_distance(cap.reflected[check[j]]); });
  double worst = kInf;
  for (std::size_t j = 0; j < check.size(); ++j) {
    if (sd[j] < worst) {
      worst = sd[j];
      const std::size_t member = check[j];
      out.witness = cap.reflected[member];
      out.witness_index = cap.index[member];
      out.preimage = samples.samples[cap.index[member]].point;
    }
  }
  if (check.empty()) {
    out.worst_violation = -kInf;
    out.inside = true;
    return out;
  }
  out.worst_violation = -worst;
  out.inside = worst >= -tol;
  return out;
}

CapContainment reflected_cap_inside(const Surface& surface, const UnitVector& omega, double lambda, double tol,
                                    std::size_t budget) {
  return reflected_cap_inside(surface, surface.sample(budget), omega, lambda, tol);
}

double default_plane_tolerance(const Surface& surface) { return 1e-8 * 2.0 * surface.bounding_radius(); }

CriticalPlane critical_position(const Surface& surface, const SampleSet& samples, const UnitVector& omega, double tol) {
  if (omega.dim() != surface.dim()) throw InputError("direction dimension does not match the surface");
  if (!(tol > 0.0)) tol = default_plane_tolerance(surface);
  CriticalPlane cp;
  cp.omega = omega;
  cp.tol = tol;
  cp.samples = samples.size();
  cp.spacing = samples.spacing;
  cp.extent = refined_support(surface, samples, omega.vec());
  cp.lower = -refined_support(surface, samples, -omega.vec());

  double lo = cp.lower;
  double hi = cp.extent - tol;
  if (!cap_inside(surface, samples, omega, hi, tol))
    throw NumericalError("moving planes", "reflected cap already leaves the domain next to the extent; surface fails the orientation/embeddedness sanity check");
  int it = 0;
  if (cap_inside(surface, samples, omega, lo, tol)) {
    hi = lo;
  } else {
    while (hi - lo > tol && it < 60) {
      const double mid = 0.5 * (lo + hi);
      if (cap_inside(surface, samples, omega, mid, tol)) {
        hi = mid;
      } else {
        lo = mid;
      }
      ++it;
    }
  }
  cp.iterations = it;
  cp.m = hi;

  const CapContainment at_m = reflected_cap_inside(surface, samples, omega, cp.m, tol);
  cp.contact_gap = std::isfinite(at_m.worst_violation) ? -at_m.worst_violation : 0.0;
  if (at_m.cap_size == 0) {
    cp.p0 = Vec::Zero(surface.dim());
    cp.contact_point = cp.p0;
  } else {
    cp.p0 = at_m.preimage;
    cp.contact_point = at_m.witness;
  }
  cp.interior_offset = omega.dot(cp.p0) - cp.m;
  cp.case_threshold = 2.0 * samples.spacing;
  cp.tangency = cp.interior_offset > cp.case_threshold ? TangencyCase::InteriorTangency : TangencyCase::BoundaryOrthogonality;
  cp.normal_dot_omega = std::abs(samples.samples[at_m.witness_index].inner_normal.dot(omega.vec()));

  // Degenerate contact: most of the reflected cap lies on S.
  if (at_m.cap_size > 0) {
    const ReflectedCap cap = reflect_cap(surface, samples, omega, cp.m);
    const double touch = std::max(10.0 * tol, 1e-9 * surface.bounding_radius());
    std::vector<char> touching(cap.index.size(), 0);
    parallel_for(cap.index.size(), [&](std::size_t j) {
      if (std::abs(cap.indicator[j]) > 8.0 * touch) return;
      touching[j] = std::abs(surface.signed_distance(cap.reflected[j])) <= touch ? 1 : 0;
    });
    const auto count = std::count(touching.begin(), touching.end(), 1);
    cp.touching_fraction = static_cast<double>(count) / static_cast<double>(cap.index.size());
    cp.degenerate_contact = cp.touching_fraction > 0.5;
  }
  return cp;
}

CriticalPlane critical_position(const Surface& surface, const UnitVector& omega, double tol, std::size_t budget,
                                std::uint64_t seed) {
  return critical_position(surface, surface.sample(budget, seed), omega, tol);
}

CapRegion critical_caps(const Surface& surface, const CriticalPlane& plane, const GeodesicGraph& graph) {
  if (plane.omega.dim() != surface.dim()) throw InputError("plane dimension does not match the surface");
  const std::size_t n = graph.size();
  const Vec& w = plane.omega.vec();
  std::vector<char> right(n, 0), left(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = graph.node(i).point.dot(w);
    right[i] = h > plane.m;
    left[i] = h < plane.m;
  }
  std::size_t right_count = 0, left_count = 0;
  const auto right_label = graph.components_of(right, &right_count);
  const auto left_label = graph.components_of(left, &left_count);

  // Component containing the anchor, or abutting it through one edge.
  auto pick = [&](std::size_t anchor, const std::vector<char>& mask, const std::vector<int>& label) -> int {
    if (mask[anchor]) return label[anchor];
    double best = kInf;
    int out = -1;
    for (const auto& e : graph.neighbors(anchor)) {
      if (mask[e.to] && e.weight < best) {
        best = e.weight;
        out = label[e.to];
      }
    }
    return out;
  };

  CapRegion region;
  region.omega = plane.omega;
  region.m = plane.m;
  region.anchor = graph.nearest_node(plane.p0);
  region.hat_anchor = graph.nearest_node(reflect_point(plane.p0, plane.omega, plane.m));
  const int sigma_label = pick(region.anchor, right, right_label);
  const int hat_label = pick(region.hat_anchor, left, left_label);
  if (sigma_label < 0 || hat_label < 0)
    throw NumericalError("critical caps", "tangency point is not adjacent to the cap; re-run with a looser tolerance");
  std::vector<char> in_sigma(n, 0), in_hat(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (right[i] && right_label[i] == sigma_label) {
      region.sigma.push_back(i);
      in_sigma[i] = 1;
    }
    if (left[i] && left_label[i] == hat_label) {
      region.sigma_hat.push_back(i);
      in_hat[i] = 1;
    }
  }
  auto boundary = [&](const std::vector<std::size_t>& members, const std::vector<char>& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i : members) {
      for (const auto& e : graph.neighbors(i)) {
        if (!mask[e.to]) {
          out.push_back(i);
          break;
        }
      }
    }
    return out;
  };
  region.sigma_boundary = boundary(region.sigma, in_sigma);
  region.sigma_hat_boundary = boundary(region.sigma_hat, in_hat);
  return region;
}

nlohmann::json to_json(const CriticalPlane& p) {
  return {{"omega", to_json(p.omega.vec())},
          {"m", p.m},
          {"case", to_string(p.tangency)},
          {"p0", to_json(p.p0)},
          {"contact_gap", p.contact_gap},
          {"extent", p.extent},
          {"degenerate_contact", p.degenerate_contact},
          {"touching_fraction", p.touching_fraction},
          {"normal_dot_omega", p.normal_dot_omega},
          {"interior_offset", p.interior_offset},
          {"tol", p.tol},
          {"iterations", p.iterations},
          {"samples", p.samples}};
}

}  // namespace soapbubble
