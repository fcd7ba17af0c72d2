#include "soapbubble/lemmas.hpp"

#include "soapbubble/parallel.hpp"
#include "soapbubble/symmetry_fit.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace soapbubble {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTransversalMargin = 1e-3;
constexpr const char* kDomainGapNote =
    "some points of the shrunken disk have no re-graphed point inside U_r(p); the sup bound is checked where v exists";

std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t trial) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return std::mt19937_64(z ^ (z >> 31));
}

Vec random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss;
  Vec v(dim);
  do {
    for (int k = 0; k < dim; ++k) v[k] = gauss(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

/// Uniform point of the n-ball of radius r.
Vec random_in_ball(std::mt19937_64& rng, int n, double r) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return random_unit(rng, n) * (r * std::pow(unif(rng), 1.0 / n));
}

Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c[0] = a[1] * b[2] - a[2] * b[1];
  c[1] = a[2] * b[0] - a[0] * b[2];
  c[2] = a[0] * b[1] - a[1] * b[0];
  return c;
}

Vec pad3(const Vec& v) {
  Vec out = Vec::Zero(3);
  out.head(v.size()) = v;
  return out;
}

/// Outcome of one trial, reduced in index order.
struct Trial {
  enum class State { Checked, Skipped, Failed } state = State::Failed;
  double margin = 0.0;
  nlohmann::json inputs;
};

void reduce(LemmaVerdict& v, const std::vector<Trial>& trials) {
  for (const auto& t : trials) {
    switch (t.state) {
      case Trial::State::Checked:
        v.record(t.margin, t.inputs);
        break;
      case Trial::State::Skipped:
        ++v.skipped;
        break;
      case Trial::State::Failed:
        ++v.failures;
        break;
    }
  }
}

/// Nearest sign change of f on [-limit, limit] scanning outward from 0.
std::optional<double> nearest_root(const std::function<double(double)>& f, double step, double limit) {
  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  const int count = static_cast<int>(std::ceil(limit / step));
  auto solve = [&](double a, double b, double fa, double fb) {
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
  };
  double fr = f0, fl = f0;
  for (int k = 1; k <= count; ++k) {
    const double a = (k - 1) * step, b = k * step;
    const double fb = f(b);
    if ((fr > 0) != (fb > 0)) return solve(a, b, fr, fb);
    fr = fb;
    const double fa = f(-b);
    if ((fl > 0) != (fa > 0)) return solve(-b, -a, fa, fl);
    fl = fa;
  }
  return std::nullopt;
}

/// Directions used to scan a tangent disk: 32 angles for n = 2, both signs for n = 1.
std::vector<Vec> disk_directions(int n) {
  std::vector<Vec> out;
  if (n == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  const int count = 32;
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * std::numbers::pi * k / count;
    Vec v(2);
    v << std::cos(a), std::sin(a);
    out.push_back(v);
  }
  return out;
}

}  // namespace

void LemmaVerdict::record(double margin, const nlohmann::json& inputs) {
  ++trials;
  if (margin < -tolerance) ++violations;
  if (margin < worst_slack) {
    worst_slack = margin;
    witness = inputs;
  }
}

void LemmaVerdict::merge(const LemmaVerdict& other) {
  trials += other.trials;
  violations += other.violations;
  skipped += other.skipped;
  failures += other.failures;
  if (other.worst_slack < worst_slack) {
    worst_slack = other.worst_slack;
    witness = other.witness;
  }
  if (other.rejected && !rejected) {
    rejected = true;
    reject_reason = other.reject_reason;
    reject_witness = other.reject_witness;
  }
  low_resolution = low_resolution || other.low_resolution;
  for (const auto& n : other.notes) {
    if (std::find(notes.begin(), notes.end(), n) == notes.end()) notes.push_back(n);
  }
}

nlohmann::json to_json(const LemmaVerdict& v) {
  nlohmann::json j{{"id", v.id},
                   {"statement", v.statement},
                   {"trials", v.trials},
                   {"violations", v.violations},
                   {"skipped", v.skipped},
                   {"failures", v.failures},
                   {"worst_slack", std::isfinite(v.worst_slack) ? nlohmann::json(v.worst_slack) : nlohmann::json(nullptr)},
                   {"witness", v.witness},
                   {"tolerance", v.tolerance},
                   {"rejected", v.rejected},
                   {"low_resolution", v.low_resolution},
                   {"passed", v.passed()},
                   {"extras", v.extras},
                   {"notes", v.notes}};
  if (v.rejected) {
    j["reject_reason"] = v.reject_reason;
    j["reject_witness"] = v.reject_witness;
  }
  return j;
}

// ---------------------------------------------------------------------------

LemmaVerdict verify_graph_bounds(const Surface& surface, double rho, const VerifyOptions& options) {
  if (!(rho > 0.0)) throw InputError("graph bounds need a positive rho");
  LemmaVerdict v;
  v.id = "graph-bounds";
  v.statement = "|u| <= rho - sqrt(rho^2-|x|^2), |grad u| <= |x|/sqrt(rho^2-|x|^2), nu_p.nu_q >= sqrt(rho^2-|x|^2)/rho, |nu_p-nu_q| <= sqrt(2)|x|/rho";
  v.tolerance = options.tolerance;
  const SampleSet base = surface.sample(4096, options.seed);
  const int n = surface.intrinsic_dim();
  const double radius = 0.9 * rho;
  std::vector<Trial> out(options.trials);
  parallel_for(options.trials, [&](std::size_t i) {
    auto rng = trial_rng(options.seed, i);
    const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, base.size() - 1)(rng);
    const SurfaceSample& p = base.samples[idx];
    const Vec x = random_in_ball(rng, n, radius);
    Trial& t = out[i];
    try {
      const GraphPatch patch(surface, p, radius, rho, false);
      const double s = x.norm();
      const double u = patch.height(x);
      const Vec g = patch.gradient(x);
      const Vec nq = patch.normal_at(x);
      const double root = std::sqrt(rho * rho - s * s);
      const double m_height = (rho - root) - std::abs(u);
      const double m_grad = s / root - g.norm();
      const double m_dot = p.inner_normal.dot(nq) - root / rho;
      const double m_diff = std::sqrt(2.0) * s / rho - (p.inner_normal - nq).norm();
      t.margin = std::min({m_height, m_grad, m_dot, m_diff});
      t.state = Trial::State::Checked;
      t.inputs = {{"p", to_json(p.point)}, {"x", to_json(x)}, {"u", u}, {"grad_norm", g.norm()},
                  {"margins", {m_height, m_grad, m_dot, m_diff}}};
    } catch (const NumericalError&) {
      t.state = Trial::State::Failed;
    }
  });
  reduce(v, out);
  v.extras["rho"] = rho;
  if (v.failures > 0) v.notes.push_back("patch evaluation failures are counted separately from violations");
  return v;
}

LemmaVerdict verify_distance_bounds(const Surface& surface, const GeodesicGraph& graph, double rho,
                                    const VerifyOptions& options) {
  if (!(rho > 0.0)) throw InputError("distance bounds need a positive rho");
  LemmaVerdict v;
  v.id = "distance-bounds";
  v.statement = "|x| <= d_S(p,q) <= rho asin(|x|/rho)";
  v.tolerance = options.tolerance;
  const int n = surface.intrinsic_dim();
  const double radius = 0.9 * rho;
  constexpr int kChordSegments = 64;
  std::vector<Trial> out(options.trials);
  std::vector<double> excess(options.trials, 0.0);
  parallel_for(options.trials, [&](std::size_t i) {
    auto rng = trial_rng(options.seed, i);
    const std::size_t node = std::uniform_int_distribution<std::size_t>(0, graph.size() - 1)(rng);
    const SurfaceSample& p = graph.node(node);
    const Vec x = random_in_ball(rng, n, radius);
    Trial& t = out[i];
    try {
      const GraphPatch patch(surface, p, radius, rho, false);
      const Vec q = patch.point(x);
      const double s = x.norm();
      const double upper = rho * std::asin(std::min(1.0, s / rho));
      double chord = 0.0;
      Vec prev = p.point;
      for (int k = 1; k <= kChordSegments; ++k) {
        const Vec cur = k == kChordSegments ? q : surface.project(p.point + (double(k) / kChordSegments) * (q - p.point)).point;
        chord += (cur - prev).norm();
        prev = cur;
      }
      const std::size_t qn = graph.nearest_node(q);
      const DistanceField df = graph.distances({{node, 0.0}}, {}, 1.5 * upper + 2.0 * graph.max_edge_length(), qn);
      const double dg = df.distance[qn] + (graph.node(qn).point - q).norm();
      const double dhat = std::min(dg, chord);
      excess[i] = dg - chord;
      const double m_lower = chord - s;
      const double m_upper = upper - dhat;
      t.margin = std::min(m_lower, m_upper);
      t.state = Trial::State::Checked;
      t.inputs = {{"p", to_json(p.point)}, {"q", to_json(q)}, {"x_norm", s}, {"graph_distance", dg},
                  {"chord_distance", chord}, {"upper", upper}};
    } catch (const NumericalError&) {
      t.state = Trial::State::Failed;
    }
  });
  reduce(v, out);
  double worst_excess = 0.0, mean_excess = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].state != Trial::State::Checked) continue;
    worst_excess = std::max(worst_excess, excess[i]);
    mean_excess += excess[i];
    ++counted;
  }
  v.extras["graph_excess_max"] = worst_excess;
  v.extras["graph_excess_mean"] = counted ? mean_excess / counted : 0.0;
  v.extras["graph_mean_edge"] = graph.mean_edge_length();
  v.extras["rho"] = rho;
  if (graph.mean_edge_length() > 0.1 * rho) {
    v.low_resolution = true;
    v.notes.push_back("graph resolution is coarse relative to rho; graph distances dominated by edge length, chord estimate used");
  }
  return v;
}

// ---------------------------------------------------------------------------

ImplicitFunction implicit_of(const AnalyticSurface& surface) {
  return [&surface](const Vec& x) { return surface.defining_jet(x); };
}

ImplicitFunction paraboloid() {
  return [](const Vec& x) {
    Jet j(x[2] - x[0] * x[0] - x[1] * x[1], 3);
    j.g << -2.0 * x[0], -2.0 * x[1], 1.0;
    j.h(0, 0) = -2.0;
    j.h(1, 1) = -2.0;
    return j;
  };
}

double three_point_curvature(const Vec& a, const Vec& b, const Vec& c, const Vec& normal, Vec* center) {
  const Vec u = pad3(a - b), w = pad3(c - b);
  const Vec cr = cross3(u, w);
  const double den = 2.0 * cr.squaredNorm();
  if (!(den > 0.0)) {
    if (center) *center = Vec::Constant(b.size(), kInf);
    return 0.0;
  }
  const Vec rel = cross3(u.squaredNorm() * w - w.squaredNorm() * u, cr) / den;
  if (center) *center = b + rel.head(b.size());
  const double k = 1.0 / rel.norm();
  return rel.head(b.size()).dot(normal) >= 0.0 ? k : -k;
}

namespace {

std::optional<Vec> correct_onto_slice(const ImplicitFunction& f, const AffinePlane& plane, Vec x) {
  const Vec& w = plane.normal.vec();
  for (int it = 0; it < 60; ++it) {
    const Jet j = f(x);
    const double gn = j.g.norm();
    if (!(gn > 0.0)) return std::nullopt;
    const Vec a = j.g / gn;
    const double r0 = j.v / gn, r1 = w.dot(x) - plane.offset;
    const double scale = 1.0 + x.norm();
    if (std::abs(r0) < 1e-15 * scale && std::abs(r1) < 1e-15 * scale) return x;
    const double ab = a.dot(w);
    const double det = 1.0 - ab * ab;
    if (det < 1e-14) return std::nullopt;
    const double l0 = (r0 - ab * r1) / det;
    const double l1 = (r1 - ab * r0) / det;
    x -= l0 * a + l1 * w;
  }
  const Jet j = f(x);
  if (std::abs(j.v) / j.g.norm() < 1e-12 * (1.0 + x.norm())) return x;
  return std::nullopt;
}

}  // namespace

SliceTrace trace_slice(const ImplicitFunction& f, const AffinePlane& plane, const Vec& start, double step,
                       double max_length) {
  if (start.size() != 3 || plane.normal.dim() != 3) throw InputError("slice tracing needs a surface in R^3");
  if (!(step > 0.0)) throw InputError("trace step must be positive");
  const Vec& w = plane.normal.vec();
  auto first = correct_onto_slice(f, plane, start);
  if (!first) throw NumericalError("slice trace", "could not place the start point on the slice");
  SliceTrace trace;
  trace.step = step;
  const Vec x0 = *first;
  Vec x = x0;
  Vec tangent;
  auto tangent_at = [&](const SurfaceSample& s) {
    const Vec t = cross3(s.inner_normal, w);
    const double len = t.norm();
    if (len < 1e-9) throw NumericalError("slice trace", "plane is tangent to the surface on the slice");
    return Vec(t / len);
  };
  const std::size_t max_points = 4000000;
  while (true) {
    const SurfaceSample s = curvature_from_jet(x, f(x));
    Vec t = tangent_at(s);
    if (tangent.size() && t.dot(tangent) < 0) t = -t;
    tangent = t;
    trace.points.push_back(x);
    trace.surface.push_back(s);
    const double tilt = s.inner_normal.dot(w);
    const double kmax = s.principal_curvatures.cwiseAbs().maxCoeff();
    const double h = kmax > 0 ? std::min(step, 0.02 * std::sqrt(std::max(1e-12, 1.0 - tilt * tilt)) / kmax) : step;
    auto next = correct_onto_slice(f, plane, x + h * t);
    if (!next) throw NumericalError("slice trace", "corrector failed to converge");
    trace.length += (*next - x).norm();
    x = *next;
    if (trace.length > 2.5 * h && (x - x0).norm() < 0.55 * h) {
      trace.closed = true;
      trace.length += (x0 - trace.points.back()).norm() - (x - trace.points.back()).norm();
      break;
    }
    if (trace.length > max_length || trace.points.size() >= max_points) break;
  }
  return trace;
}

Vec slice_start(const AnalyticSurface& surface, const AffinePlane& plane) {
  if (surface.dim() != 3) throw InputError("slices need a surface in R^3");
  const Vec& w = plane.normal.vec();
  const Vec c = surface.center();
  const Mat t = tangent_basis(w);
  const double r = surface.bounding_radius();
  Vec inside = c + (plane.offset - w.dot(c)) * w;
  if (!(surface.inside_indicator(inside) > 0)) {
    // The plane may still cut S away from the center line.
    bool found = false;
    for (int k = 0; k < 64 && !found; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 64.0;
      for (int s = 1; s <= 16 && !found; ++s) {
        const Vec y = inside + (r * s / 16.0) * (std::cos(a) * t.col(0) + std::sin(a) * t.col(1));
        if (surface.inside_indicator(y) > 0) {
          inside = y;
          found = true;
        }
      }
    }
    if (!found) throw InputError("plane does not meet the surface");
  }
  const Vec dir = t.col(0);
  const double far = 2.0 * r + (inside - c).norm();
  auto f = [&](double s) { return surface.inside_indicator(inside + s * dir); };
  boost::uintmax_t iters = 200;
  const auto root = boost::math::tools::toms748_solve(f, 0.0, far, f(0.0), f(far), boost::math::tools::eps_tolerance<double>(50), iters);
  return inside + 0.5 * (root.first + root.second) * dir;
}

namespace {

struct SliceGeometry {
  Vec nu;        // normal of U
  Vec nu_prime;  // unit normal of U' inside the plane
  double tilt;   // nu·omega
};

SliceGeometry slice_geometry(const SurfaceSample& s, const Vec& w) {
  SliceGeometry g;
  g.nu = s.inner_normal;
  g.tilt = g.nu.dot(w);
  const Vec raw = g.nu - g.tilt * w;
  g.nu_prime = raw / raw.norm();
  return g;
}

std::size_t wrap(std::ptrdiff_t i, std::size_t n) { return static_cast<std::size_t>((i % std::ptrdiff_t(n) + std::ptrdiff_t(n)) % std::ptrdiff_t(n)); }

}  // namespace

LemmaVerdict slice_curvature_bounds(const ImplicitFunction& f, const AffinePlane& plane, const Vec& start, double step,
                                    double tolerance) {
  LemmaVerdict v;
  v.id = "slice-curvature";
  v.statement = "kappa_1/(nu.nu') <= kappa'_i <= kappa_n/(nu.nu'); nu.nu'_raw = 1 - (nu.omega)^2";
  v.tolerance = tolerance;
  const Vec& w = plane.normal.vec();
  {
    const auto x0 = correct_onto_slice(f, plane, start);
    const Vec at = x0 ? *x0 : start;
    const Jet j = f(at);
    const double tilt = std::abs(j.g.dot(w)) / j.g.norm();
    if (!x0 || tilt > 1.0 - kTransversalMargin) {
      v.rejected = true;
      v.reject_reason = "slice is not transversal: |nu.omega| >= 1 - margin";
      v.reject_witness = {{"point", to_json(at)}, {"nu_dot_omega", tilt}};
      return v;
    }
  }
  SliceTrace trace;
  try {
    trace = trace_slice(f, plane, start, step);
  } catch (const NumericalError& e) {
    v.rejected = true;
    v.reject_reason = e.what();
    return v;
  }
  const std::size_t n = trace.points.size();
  if (n < 3) {
    v.rejected = true;
    v.reject_reason = "slice trace too short";
    return v;
  }
  double kmin = kInf, kmax = -kInf;
  const std::size_t first = trace.closed ? 0 : 1, last = trace.closed ? n : n - 1;
  for (std::size_t i = first; i < last; ++i) {
    const SurfaceSample& s = trace.surface[i];
    const SliceGeometry g = slice_geometry(s, w);
    if (std::abs(g.tilt) > 1.0 - kTransversalMargin) {
      v.rejected = true;
      v.reject_reason = "slice is not transversal: |nu.omega| >= 1 - margin";
      v.reject_witness = {{"point", to_json(trace.points[i])}, {"nu_dot_omega", g.tilt}};
      return v;
    }
    const Vec raw = -cross3(cross3(g.nu, w), w);
    const double identity = std::abs(g.nu.dot(raw) - (1.0 - g.tilt * g.tilt));
    const double nn = g.nu.dot(g.nu_prime);
    const double k = three_point_curvature(trace.points[wrap(std::ptrdiff_t(i) - 1, n)], trace.points[i],
                                           trace.points[wrap(std::ptrdiff_t(i) + 1, n)], g.nu_prime);
    kmin = std::min(kmin, k);
    kmax = std::max(kmax, k);
    const double lo = s.principal_curvatures[0] / nn;
    const double hi = s.principal_curvatures[s.principal_curvatures.size() - 1] / nn;
    const double margin = std::min({k - lo, hi - k, -identity});
    v.record(margin, {{"point", to_json(trace.points[i])}, {"kappa_prime", k}, {"lower", lo}, {"upper", hi},
                      {"nu_dot_omega", g.tilt}, {"identity_error", identity}});
  }
  v.extras = {{"points", n}, {"closed", trace.closed}, {"length", trace.length}, {"step", trace.step},
              {"kappa_prime_min", kmin}, {"kappa_prime_max", kmax}};
  return v;
}

LemmaVerdict slice_curvature_bounds(const AnalyticSurface& surface, const AffinePlane& plane, double step,
                                    double tolerance) {
  Vec start;
  try {
    start = slice_start(surface, plane);
  } catch (const InputError& e) {
    LemmaVerdict v;
    v.id = "slice-curvature";
    v.tolerance = tolerance;
    v.rejected = true;
    v.reject_reason = e.what();
    return v;
  }
  return slice_curvature_bounds(implicit_of(surface), plane, start, step, tolerance);
}

LemmaVerdict projected_curvature_bounds(const ImplicitFunction& f, const AffinePlane& slicing, const UnitVector& omega2,
                                        const Vec& start, double step, double tolerance) {
  LemmaVerdict v;
  v.id = "projected-curvature";
  v.statement = "|kappa''_i| <= |w1.w2| / [(w1.w2)^2 + (w2.nu')^2]^{3/2} max|kappa'|";
  v.tolerance = tolerance;
  const Vec& w1 = slicing.normal.vec();
  const Vec& w2 = omega2.vec();
  SliceTrace trace;
  try {
    trace = trace_slice(f, slicing, start, step);
  } catch (const NumericalError& e) {
    v.rejected = true;
    v.reject_reason = e.what();
    return v;
  }
  const std::size_t n = trace.points.size();
  if (n < 3) {
    v.rejected = true;
    v.reject_reason = "slice trace too short";
    return v;
  }
  std::vector<Vec> proj(n);
  for (std::size_t i = 0; i < n; ++i) proj[i] = trace.points[i] - trace.points[i].dot(w2) * w2;
  const double c12 = w1.dot(w2);
  double kmin = kInf, kmax = -kInf;
  const std::size_t first = trace.closed ? 0 : 1, last = trace.closed ? n : n - 1;
  std::vector<Vec> checked_points;
  for (std::size_t i = first; i < last; ++i) {
    const SliceGeometry g = slice_geometry(trace.surface[i], w1);
    const double d = c12 * c12 + std::pow(w2.dot(g.nu_prime), 2);
    if (d < 1e-6 || std::abs(g.tilt) > 1.0 - kTransversalMargin) {
      v.rejected = true;
      v.reject_reason = d < 1e-6 ? "omega2 is tangent to the slice" : "slice is not transversal";
      v.reject_witness = {{"point", to_json(trace.points[i])}, {"denominator", d}, {"nu_dot_omega", g.tilt}};
      return v;
    }
    const std::size_t a = wrap(std::ptrdiff_t(i) - 1, n), c = wrap(std::ptrdiff_t(i) + 1, n);
    const double k1 = three_point_curvature(trace.points[a], trace.points[i], trace.points[c], g.nu_prime);
    const double k2 = std::abs(three_point_curvature(proj[a], proj[i], proj[c], g.nu_prime));
    kmin = std::min(kmin, k2);
    kmax = std::max(kmax, k2);
    const double bound = std::abs(c12) / std::pow(d, 1.5) * std::abs(k1);
    v.record(bound - k2, {{"point", to_json(trace.points[i])}, {"projected", to_json(proj[i])}, {"kappa_prime", k1},
                          {"kappa_second", k2}, {"bound", bound}});
  }
  // Wide triples give a rounding-robust circle fit for the projection.
  const std::size_t stride = std::max<std::size_t>(1, n / 6);
  Vec center_sum = Vec::Zero(3);
  double radius_sum = 0.0;
  double center_spread = 0.0;
  std::vector<Vec> centers;
  std::vector<double> radii;
  const std::size_t fits = trace.closed ? std::min<std::size_t>(n, 64) : 0;
  for (std::size_t k = 0; k < fits; ++k) {
    const std::size_t i = k * n / std::max<std::size_t>(fits, 1);
    Vec c;
    const double kk = three_point_curvature(proj[wrap(std::ptrdiff_t(i) - std::ptrdiff_t(stride), n)], proj[i],
                                            proj[wrap(std::ptrdiff_t(i + stride), n)], w2, &c);
    if (!std::isfinite(c[0])) continue;
    centers.push_back(c);
    radii.push_back(1.0 / std::abs(kk));
    center_sum += c;
    radius_sum += 1.0 / std::abs(kk);
  }
  v.extras = {{"points", n}, {"closed", trace.closed}, {"step", trace.step},
              {"kappa_second_min", kmin}, {"kappa_second_max", kmax}};
  if (!centers.empty()) {
    const Vec mean = center_sum / double(centers.size());
    double rmin = kInf, rmax = -kInf;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      center_spread = std::max(center_spread, (centers[k] - mean).norm());
      rmin = std::min(rmin, radii[k]);
      rmax = std::max(rmax, radii[k]);
    }
    v.extras["fit_center"] = to_json(mean);
    v.extras["fit_center_spread"] = center_spread;
    v.extras["fit_radius"] = radius_sum / double(centers.size());
    v.extras["fit_radius_min"] = rmin;
    v.extras["fit_radius_max"] = rmax;
  }
  return v;
}

LemmaVerdict projected_curvature_bounds(const AnalyticSurface& surface, const AffinePlane& slicing,
                                        const UnitVector& omega2, double step, double tolerance) {
  Vec start;
  try {
    start = slice_start(surface, slicing);
  } catch (const InputError& e) {
    LemmaVerdict v;
    v.id = "projected-curvature";
    v.tolerance = tolerance;
    v.rejected = true;
    v.reject_reason = e.what();
    return v;
  }
  return projected_curvature_bounds(implicit_of(surface), slicing, omega2, start, step, tolerance);
}

LemmaVerdict paraboloid_slice_check(double step) {
  const UnitVector w1(make_vec({0.0, -8.0, 1.0}));
  const AffinePlane slicing{w1, 2.0 / std::sqrt(65.0)};
  const Vec start = make_vec({std::sqrt(18.0), 4.0, 34.0});
  LemmaVerdict v = projected_curvature_bounds(paraboloid(), slicing, UnitVector(basis(3, 2)), start, step);
  v.id = "fig1";
  return v;
}

namespace {

template <class Check>
LemmaVerdict plane_suite(const AnalyticSurface& surface, const VerifyOptions& options, const std::string& id,
                         Check&& check) {
  LemmaVerdict total;
  total.id = id;
  total.tolerance = kFiniteDifferenceTolerance;
  const SampleSet samples = surface.sample(2000, options.seed);
  const double step = 1e-3 * surface.bounding_radius();
  std::size_t planes = 0;
  for (std::size_t k = 0; k < 256 && total.trials < options.trials; ++k) {
    auto rng = trial_rng(options.seed, k);
    const UnitVector w(random_unit(rng, 3));
    double lo = kInf, hi = -kInf;
    for (const auto& s : samples.samples) {
      lo = std::min(lo, w.dot(s.point));
      hi = std::max(hi, w.dot(s.point));
    }
    const double offset = lo + (hi - lo) * std::uniform_real_distribution<double>(0.15, 0.85)(rng);
    const LemmaVerdict v = check(AffinePlane{w, offset}, rng, step);
    total.statement = v.statement;
    if (v.rejected) {
      ++total.skipped;
      continue;
    }
    total.merge(v);
    ++planes;
  }
  total.extras["planes"] = planes;
  return total;
}

}  // namespace

LemmaVerdict slice_curvature_suite(const AnalyticSurface& surface, const VerifyOptions& options) {
  return plane_suite(surface, options, "slice-curvature", [&](const AffinePlane& plane, std::mt19937_64&, double step) {
    return slice_curvature_bounds(surface, plane, step);
  });
}

LemmaVerdict projected_curvature_suite(const AnalyticSurface& surface, const VerifyOptions& options) {
  return plane_suite(surface, options, "projected-curvature",
                     [&](const AffinePlane& plane, std::mt19937_64& rng, double step) {
                       // omega2 tilted from omega1 by at most 60 degrees.
                       const Vec& w1 = plane.normal.vec();
                       Vec side = random_unit(rng, 3);
                       side -= side.dot(w1) * w1;
                       side.normalize();
                       const double angle = std::uniform_real_distribution<double>(0.0, std::numbers::pi / 3.0)(rng);
                       const UnitVector w2(std::cos(angle) * w1 + std::sin(angle) * side);
                       return projected_curvature_bounds(surface, plane, w2, step);
                     });
}

// ---------------------------------------------------------------------------

namespace {

struct NormalChangeOutcome {
  double margin = 0.0;
  std::size_t points = 0;
  std::size_t gaps = 0;  // disk points with no re-graphed point inside U_r(p)
  nlohmann::json inputs;
};

/// Margin of the re-graphing bound, or nullopt when the center cannot be re-graphed.
std::optional<NormalChangeOutcome> normal_change_margin(const Surface& surface, const SurfaceSample& p, const Vec& ell,
                                                        double eps, double r, double rho) {
  const int n = surface.intrinsic_dim();
  const GraphPatch patch(surface, p, r, rho, false);
  const auto dirs = disk_directions(n);
  double sup_u = 0.0;
  for (const auto& d : dirs) {
    for (int k = 1; k <= 4; ++k) {
      const double s = k == 4 ? r * (1.0 - 1e-9) : r * k / 4.0;
      sup_u = std::max(sup_u, std::abs(patch.height(s * d)));
    }
  }
  const Mat lf = tangent_basis(ell);
  const Mat& tf = patch.frame();
  const double shrunk = r * std::sqrt(1.0 - eps * eps);
  NormalChangeOutcome out;
  double sup_v = 0.0;
  nlohmann::json gap_witness;
  auto visit = [&](const Vec& y) {
    ++out.points;
    const Vec foot = p.point + lf * y;
    const auto t = nearest_root([&](double s) { return surface.inside_indicator(foot + s * ell); }, r / 32.0, 2.0 * r);
    if (t) {
      const Vec q = foot + *t * ell;
      if ((tf.transpose() * (q - p.point)).norm() < r) {
        sup_v = std::max(sup_v, std::abs(*t));
        return true;
      }
    }
    ++out.gaps;
    if (gap_witness.is_null()) gap_witness = to_json(y);
    return false;
  };
  if (!visit(Vec::Zero(n))) return std::nullopt;
  for (const auto& d : dirs) {
    for (int k = 1; k <= 4; ++k) {
      const double s = k == 4 ? shrunk * (1.0 - 1e-9) : shrunk * k / 4.0;
      visit(s * d);
    }
  }
  const double bound = sup_u + std::sqrt(2.0) * eps * r;
  out.margin = bound - sup_v;
  out.inputs = {{"p", to_json(p.point)}, {"ell", to_json(ell)}, {"eps", eps},     {"r", r},
                {"sup_u", sup_u},        {"sup_v", sup_v},        {"bound", bound}, {"domain_gaps", out.gaps}};
  if (out.gaps) out.inputs["gap_point"] = gap_witness;
  return out;
}

}  // namespace

LemmaVerdict verify_normal_change(const Surface& surface, const SurfaceSample& p, const UnitVector& ell, double eps,
                                  double r, double rho, double tolerance) {
  LemmaVerdict v;
  v.id = "normal-change";
  v.statement = "sup|v| <= sup|u| + sqrt(2) eps r on B_{r sqrt(1-eps^2)} of ell^perp";
  v.tolerance = tolerance;
  const double dev = (ell.vec() - p.inner_normal).norm();
  if (!(ell.dot(p.inner_normal) > 0.0) || !(dev < eps) || !(eps < 1.0) || !(r > 0.0 && r < rho)) {
    v.rejected = true;
    v.reject_reason = "precondition failed: need ell.nu_p > 0, |ell - nu_p| < eps < 1 and 0 < r < rho";
    v.reject_witness = {{"ell_dot_nu", ell.dot(p.inner_normal)}, {"deviation", dev}, {"eps", eps}, {"r", r}};
    return v;
  }
  try {
    const auto m = normal_change_margin(surface, p, ell.vec(), eps, r, rho);
    if (!m) {
      v.rejected = true;
      v.reject_reason = "re-graphing root find failed";
      return v;
    }
    v.record(m->margin, m->inputs);
    v.extras = {{"disk_points", m->points}, {"domain_gaps", m->gaps}};
    if (m->gaps) v.notes.push_back(kDomainGapNote);
  } catch (const NumericalError& e) {
    v.rejected = true;
    v.reject_reason = e.what();
  }
  return v;
}

LemmaVerdict normal_change_suite(const Surface& surface, double rho, double eps, const VerifyOptions& options) {
  if (!(eps >= 0.0 && eps < 1.0)) throw InputError("eps must lie in [0, 1)");
  if (!(rho > 0.0)) throw InputError("normal change needs a positive rho");
  LemmaVerdict v;
  v.id = "normal-change";
  v.statement = "sup|v| <= sup|u| + sqrt(2) eps r on B_{r sqrt(1-eps^2)} of ell^perp";
  v.tolerance = options.tolerance;
  const SampleSet base = surface.sample(4096, options.seed);
  const int d = surface.dim();
  const double max_angle = 2.0 * std::asin(eps / 2.0);
  std::vector<Trial> out(options.trials);
  std::vector<std::size_t> gaps(options.trials, 0), points(options.trials, 0);
  parallel_for(options.trials, [&](std::size_t i) {
    auto rng = trial_rng(options.seed, i);
    const SurfaceSample& p = base.samples[std::uniform_int_distribution<std::size_t>(0, base.size() - 1)(rng)];
    const double r = rho * std::uniform_real_distribution<double>(0.2, 0.9)(rng);
    Vec side = random_unit(rng, d);
    side -= side.dot(p.inner_normal) * p.inner_normal;
    const double angle = 0.999 * max_angle * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Vec ell = p.inner_normal;
    if (side.norm() > 1e-9) ell = std::cos(angle) * p.inner_normal + std::sin(angle) * side.normalized();
    Trial& t = out[i];
    try {
      const auto m = normal_change_margin(surface, p, ell, eps, r, rho);
      if (!m) return;
      t.state = Trial::State::Checked;
      t.margin = m->margin;
      t.inputs = m->inputs;
      gaps[i] = m->gaps;
      points[i] = m->points;
    } catch (const NumericalError&) {
      t.state = Trial::State::Failed;
    }
  });
  reduce(v, out);
  std::size_t gap_total = 0, point_total = 0, gap_trials = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    gap_total += gaps[i];
    point_total += points[i];
    gap_trials += gaps[i] > 0;
  }
  v.extras = {{"eps", eps}, {"rho", rho}, {"disk_points", point_total}, {"domain_gaps", gap_total},
              {"trials_with_domain_gaps", gap_trials}};
  if (gap_total) v.notes.push_back(kDomainGapNote);
  return v;
}

LemmaVerdict verify_normal_difference(const Vec& g1, const Vec& g2, double tolerance) {
  LemmaVerdict v;
  v.id = "normal-difference";
  v.statement = "|nu_1 - nu_2| <= sqrt(5)/2 |grad u_2 - grad u_1|";
  v.tolerance = tolerance;
  if (g1.size() != g2.size()) throw InputError("gradients must have the same dimension");
  auto normal = [](const Vec& g) {
    Vec nu(g.size() + 1);
    nu.head(g.size()) = -g;
    nu[g.size()] = 1.0;
    return Vec(nu / std::sqrt(1.0 + g.squaredNorm()));
  };
  const double eps = (g2 - g1).norm();
  const double lhs = (normal(g1) - normal(g2)).norm();
  const double rhs = std::sqrt(5.0) / 2.0 * eps;
  v.record(rhs - lhs, {{"grad_u1", to_json(g1)}, {"grad_u2", to_json(g2)}, {"lhs", lhs}, {"rhs", rhs}});
  return v;
}

LemmaVerdict normal_difference_suite(const VerifyOptions& options) {
  LemmaVerdict v;
  v.id = "normal-difference";
  v.statement = "|nu_1 - nu_2| <= sqrt(5)/2 |grad u_2 - grad u_1|";
  v.tolerance = options.tolerance;
  std::vector<LemmaVerdict> out(options.trials);
  parallel_for(options.trials, [&](std::size_t i) {
    auto rng = trial_rng(options.seed, i);
    std::uniform_real_distribution<double> expo(-3.0, 1.0);
    std::normal_distribution<double> gauss;
    auto quadratic_gradient = [&](const Vec& x0) {
      const double scale = std::pow(10.0, expo(rng));
      Vec b(2);
      b << gauss(rng), gauss(rng);
      Mat a(2, 2);
      a(0, 0) = gauss(rng);
      a(1, 1) = gauss(rng);
      a(0, 1) = a(1, 0) = gauss(rng);
      return Vec(scale * (b + a * x0));
    };
    const Vec x0 = random_in_ball(rng, 2, 1.0);
    const Vec g1 = quadratic_gradient(x0);
    Vec g2 = quadratic_gradient(x0);
    if (i % 2 == 1) g2 = g1 + std::pow(10.0, expo(rng) - 2.0) * random_unit(rng, 2);
    out[i] = verify_normal_difference(g1, g2, options.tolerance);
  });
  for (const auto& t : out) v.merge(t);
  return v;
}

// ---------------------------------------------------------------------------

LemmaVerdict verify_normal_tilt(const Surface& surface, const GeodesicGraph& graph, const CriticalPlane& plane,
                                double delta, double rho, double tolerance) {
  LemmaVerdict v;
  v.id = "normal-tilt";
  v.statement = "0 <= nu_q.omega <= sqrt(8 delta^2/rho^2 + alpha/2)";
  v.tolerance = tolerance;
  if (!(delta >= 0.0) || !(rho > 0.0)) throw InputError("normal tilt needs delta >= 0 and rho > 0");
  const CapRegion region = critical_caps(surface, plane, graph);
  const UnitVector& w = plane.omega;
  std::vector<char> mask(graph.size(), 0);
  for (std::size_t i : region.sigma) mask[i] = 1;
  std::vector<std::pair<std::size_t, double>> sources;
  for (std::size_t b : region.sigma_boundary) sources.emplace_back(b, w.dot(graph.node(b).point) - plane.m);
  const DistanceField df = graph.distances(sources, mask, delta);
  std::vector<std::size_t> band;
  for (std::size_t i : region.sigma) {
    if (df.distance[i] <= delta) band.push_back(i);
  }
  const double reach = rho - 2.0 * delta;
  std::vector<Trial> out(band.size());
  std::vector<char> beyond(band.size(), 0);
  parallel_for(band.size(), [&](std::size_t j) {
    const SurfaceSample& p = graph.node(band[j]);
    const Vec q = reflect_point(p.point, w, plane.m);
    const Vec nu_q = reflect_direction(p.inner_normal, w);
    Trial& t = out[j];
    t.state = Trial::State::Skipped;
    if (!(reach > 0.0)) return;
    auto g = [&](double s) { return surface.inside_indicator(q - s * nu_q); };
    const auto root = nearest_root(g, std::max(reach / 256.0, 1e-9), reach);
    if (!root) return;
    const double a = *root;
    const Vec qhat = q - a * nu_q;
    if (!(w.dot(qhat) < plane.m)) return;
    const Projection proj = surface.project(qhat);
    const double alpha = std::max(std::abs(a), (nu_q - proj.inner_normal).norm());
    if (!(alpha + 2.0 * delta < rho)) return;
    beyond[j] = alpha > 2.0 * delta;
    const double tilt = nu_q.dot(w.vec());
    const double bound = std::sqrt(8.0 * delta * delta / (rho * rho) + alpha / 2.0);
    t.state = Trial::State::Checked;
    t.margin = std::min(tilt, bound - tilt);
    t.inputs = {{"q", to_json(q)}, {"q_hat", to_json(qhat)}, {"nu_dot_omega", tilt}, {"alpha", alpha},
                {"bound", bound}, {"boundary_distance", df.distance[band[j]]}};
  });
  reduce(v, out);
  v.extras = {{"band_nodes", band.size()}, {"delta", delta}, {"rho", rho},
              {"alpha_above_two_delta", std::count(beyond.begin(), beyond.end(), 1)}};
  if (v.skipped > 0) v.notes.push_back("reflected-cap points without a matched point on the left portion are skipped and counted");
  return v;
}

LemmaVerdict normal_tilt_suite(const Surface& surface, const GeodesicGraph& graph, double delta, double rho,
                               std::size_t directions, const VerifyOptions& options) {
  LemmaVerdict total;
  total.id = "normal-tilt";
  total.tolerance = options.tolerance;
  const SampleSet samples = surface.sample(20000, options.seed);
  std::size_t used = 0;
  for (std::size_t k = 0; k < directions && total.trials < options.trials; ++k) {
    auto rng = trial_rng(options.seed, k);
    const UnitVector w(random_unit(rng, surface.dim()));
    const CriticalPlane plane = critical_position(surface, samples, w, 0.0);
    LemmaVerdict v = verify_normal_tilt(surface, graph, plane, delta, rho, options.tolerance);
    total.statement = v.statement;
    total.merge(v);
    ++used;
  }
  total.extras = {{"directions", used}, {"delta", delta}, {"rho", rho}};
  return total;
}

LemmaVerdict verify_annulus_normal(const Surface& surface, const SampleSet& samples, const Vec& O, double r_i,
                                   double r_e, double rho, double tolerance) {
  LemmaVerdict v;
  v.id = "annulus-normal";
  v.statement = "(p-O)/|p-O| . nu_p <= -1 + (r_e - r_i)/rho";
  v.tolerance = tolerance;
  if (O.size() != surface.dim()) throw InputError("center dimension does not match the surface");
  if (!(r_e - r_i <= 2.0 * rho)) {
    v.rejected = true;
    v.reject_reason = "hypothesis r_e - r_i <= 2 rho fails";
    v.reject_witness = {{"r_i", r_i}, {"r_e", r_e}, {"rho", rho}};
    return v;
  }
  const double bound = -1.0 + (r_e - r_i) / rho;
  for (const auto& s : samples.samples) {
    const Vec rel = s.point - O;
    const double dot = rel.dot(s.inner_normal) / rel.norm();
    v.record(bound - dot, {{"p", to_json(s.point)}, {"dot", dot}, {"bound", bound}});
  }
  v.extras = {{"r_i", r_i}, {"r_e", r_e}, {"rho", rho}, {"bound", bound}};
  return v;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& lemma_ids() {
  static const std::vector<std::string> ids{"graph-bounds",      "distance-bounds", "slice-curvature",
                                            "projected-curvature", "normal-change",  "normal-difference",
                                            "normal-tilt",       "annulus-normal",  "fig1"};
  return ids;
}

std::string canonical_lemma_id(const std::string& id) {
  static const std::map<std::string, std::string> aliases{
      {"2.1", "graph-bounds"},       {"2.2", "distance-bounds"}, {"2.8", "slice-curvature"},
      {"2.9", "projected-curvature"}, {"3.4", "normal-change"},  {"3.5", "normal-difference"},
      {"4.5", "normal-tilt"},        {"5.1", "annulus-normal"},  {"figure1", "fig1"}};
  if (std::find(lemma_ids().begin(), lemma_ids().end(), id) != lemma_ids().end()) return id;
  const auto it = aliases.find(id);
  return it == aliases.end() ? std::string() : it->second;
}

LemmaVerdict run_lemma(const std::string& raw_id, const Surface& surface, const VerifyOptions& options, double rho) {
  const std::string id = canonical_lemma_id(raw_id);
  if (id.empty()) throw InputError("unknown lemma id '" + raw_id + "'");
  if (id == "fig1") return paraboloid_slice_check();
  if (id == "normal-difference") return normal_difference_suite(options);
  const SampleSet samples = surface.sample(20000, options.seed);
  if (!(rho > 0.0)) rho = estimate_touching_radius(surface, samples).rho;
  auto analytic = [&]() -> const AnalyticSurface& {
    const AnalyticSurface* an = surface.as_analytic();
    if (!an || surface.dim() != 3) throw InputError("suite '" + id + "' needs an analytic surface in R^3");
    return *an;
  };
  if (id == "graph-bounds") return verify_graph_bounds(surface, rho, options);
  if (id == "distance-bounds") {
    const GeodesicGraph graph(surface, 20000, kDefaultGraphNeighbors, options.seed);
    return verify_distance_bounds(surface, graph, rho, options);
  }
  if (id == "slice-curvature") return slice_curvature_suite(analytic(), options);
  if (id == "projected-curvature") return projected_curvature_suite(analytic(), options);
  if (id == "normal-change") return normal_change_suite(surface, rho, 0.3, options);
  if (id == "normal-tilt") {
    const GeodesicGraph graph(surface, 20000, kDefaultGraphNeighbors, options.seed);
    return normal_tilt_suite(surface, graph, 0.1 * rho, rho, 64, options);
  }
  // annulus-normal
  const double tol = default_plane_tolerance(surface);
  const Vec O = symmetry_center(surface, samples, tol);
  const RadialBounds rb = radial_bounds(surface, samples, O);
  return verify_annulus_normal(surface, samples, O, rb.r_i, rb.r_e, rho, options.tolerance);
}

std::string verdict_table(const std::vector<LemmaVerdict>& verdicts) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %8s %10s %8s %8s %14s  %s\n", "lemma", "trials", "violations", "skipped",
                "failures", "worst_slack", "status");
  os << line;
  for (const auto& v : verdicts) {
    const char* status = v.rejected ? "REJECTED" : (v.violations ? "VIOLATED" : "ok");
    std::snprintf(line, sizeof line, "%-20s %8zu %10zu %8zu %8zu %14.6e  %s%s\n", v.id.c_str(), v.trials, v.violations,
                  v.skipped, v.failures, std::isfinite(v.worst_slack) ? v.worst_slack : 0.0, status,
                  v.low_resolution ? " (low resolution)" : "");
    os << line;
  }
  return os.str();
}

}  // namespace soapbubble
