#include "soapbubble/constants.hpp"
#include "soapbubble/intrinsic.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace soapbubble;
using namespace soapbubble::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Half-meridian of the spheroid (1, 1, 1.1), complete elliptic integral E(1 - 1/1.21) evaluated at high precision.
constexpr double kHalfMeridian = 3.30054254706884816858650345318;

std::size_t node_near(const GeodesicGraph& g, std::initializer_list<double> p) { return g.nearest_node(make_vec(p)); }

}  // namespace

TEST_CASE("graph construction") {
  Sphere s(zeros(3), 1.0);
  const GeodesicGraph g(s, 5000, 8);
  CHECK(g.component_count() == 1);
  for (std::size_t i = 0; i < g.size(); i += 97) {
    for (const auto& e : g.neighbors(i)) CHECK(e.weight >= (g.positions()[i] - g.positions()[e.to]).norm() - 1e-15);
  }
  CHECK_THROWS_AS(GeodesicGraph(s, 50, 8), InputError);
  CHECK_THROWS_AS(GeodesicGraph(s, 500, 4), InputError);

  // two disjoint spheres as one node set
  std::vector<SurfaceSample> nodes;
  for (const auto& c : {make_vec({-3, 0, 0}), make_vec({3, 0, 0})}) {
    Sphere part(c, 1.0);
    for (const auto& q : part.sample(800).samples) nodes.push_back(q);
  }
  const GeodesicGraph two(nodes, 8, false);
  CHECK(two.component_count() == 2);
  CHECK(std::isinf(intrinsic_distance(two, 0, nodes.size() - 1)));
  CHECK_THROWS_AS(GeodesicGraph(nodes, 8, true), NumericalError);
}

TEST_CASE("intrinsic distance examples") {
  Sphere s(zeros(3), 1.0);
  const GeodesicGraph g(s, 20000, 16);
  const std::size_t n = node_near(g, {0, 0, 1}), sp = node_near(g, {0, 0, -1});
  CHECK(intrinsic_distance(g, n, sp) == doctest::Approx(kPi).epsilon(0.02));
  CHECK(intrinsic_distance(g, n, n) == 0.0);

  // chord 0.2: between the chord and the arcsin bound plus resolution slack
  const double th = 2 * std::asin(0.1);
  const std::size_t a = node_near(g, {0, 0, 1}), b = node_near(g, {std::sin(th), 0, std::cos(th)});
  const double chord = (g.positions()[a] - g.positions()[b]).norm();
  const double d = intrinsic_distance(g, a, b);
  CHECK(d >= chord);
  CHECK(d <= std::asin(0.2) + 2 * g.mean_edge_length());

  Ellipsoid e(make_vec({1, 1, 1.1}));
  const GeodesicGraph ge(e, 5000, 16);
  const double poles = intrinsic_distance(ge, node_near(ge, {0, 0, 1.1}), node_near(ge, {0, 0, -1.1}));
  CHECK(poles == doctest::Approx(kHalfMeridian).epsilon(0.03));
}

TEST_CASE("distance properties on random pairs") {
  Rng rng(21);
  Ellipsoid e(make_vec({1.0, 1.2, 0.9}), std::nullopt, random_rotation(rng));
  const GeodesicGraph g(e, 4000, 16);
  const double rho = estimate_touching_radius(e, 8000).rho;
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  int triangle_bad = 0, chord_bad = 0, lemma_bad = 0, lemma_checked = 0;
  for (int t = 0; t < 60; ++t) {
    const std::size_t p = pick(rng), q = pick(rng), r = pick(rng);
    const DistanceField fp = g.distances({{p, 0.0}});
    const DistanceField fq = g.distances({{q, 0.0}});
    triangle_bad += fp.distance[r] > fp.distance[q] + fq.distance[r] + 1e-9;
    for (std::size_t k = 0; k < g.size(); k += 37) {
      const Vec diff = g.positions()[k] - g.positions()[p];
      chord_bad += fp.distance[k] < diff.norm() - 1e-12;
      // tangent offset of k in the patch at p
      const Vec nu = g.node(p).inner_normal;
      const double x = (diff - diff.dot(nu) * nu).norm();
      if (x < 0.8 * rho && diff.norm() < rho) {
        ++lemma_checked;
        lemma_bad += fp.distance[k] > rho * std::asin(x / rho) + 2 * g.mean_edge_length();
      }
    }
  }
  CHECK(triangle_bad == 0);
  CHECK(chord_bad == 0);
  CHECK(lemma_checked > 100);
  CHECK(lemma_bad == 0);
}

TEST_CASE("cap interior") {
  Sphere s(zeros(3), 1.0);
  const GeodesicGraph g(s, 20000, 16);
  std::vector<std::size_t> all(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) all[i] = i;
  CHECK(cap_interior(all, 0.5, g).nodes.size() == g.size());

  std::vector<std::size_t> upper;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.positions()[i][2] > 0) upper.push_back(i);
  const CapInterior c = cap_interior(upper, 0.3, g);
  // nodes carry area weights; compare area fractions
  double w_all = 0, w_in = 0;
  for (std::size_t i = 0; i < g.size(); ++i) w_all += g.weights()[i];
  for (auto i : c.nodes) w_in += g.weights()[i];
  CHECK(w_in / w_all == doctest::Approx((1 - std::sin(0.3)) / 2).epsilon(0.05));
  CHECK(c.component_count == 1);
  for (auto i : c.nodes) CHECK(g.positions()[i][2] > std::sin(0.3) - 0.05);
  CHECK(cap_interior(upper, kPi, g).nodes.empty());
}

TEST_CASE("piecewise geodesic chain") {
  Sphere s(zeros(3), 1.0);
  const GeodesicGraph g(s, 20000, 16);
  const std::size_t n = node_near(g, {0, 0, 1}), sp = node_near(g, {0, 0, -1});
  const Chain self = piecewise_geodesic_chain(g, n, n, 0.5, s.area());
  CHECK(self.N == 0);
  CHECK(self.total_length == 0.0);

  const Chain c = piecewise_geodesic_chain(g, n, sp, 0.5, s.area());
  CHECK(c.total_length == doctest::Approx(kPi).epsilon(0.02));
  CHECK(c.N == 6);
  CHECK(c.L == doctest::Approx(64.0));
  CHECK(c.within_bound);
  for (double a : c.arc_lengths) CHECK(a <= 0.5 + 1e-12);
}

TEST_CASE("chain invariants on random pairs") {
  Rng rng(8);
  for (int s = 0; s < 2; ++s) {
    Ellipsoid e(random_axes(rng, 0.8, 1.3), std::nullopt, random_rotation(rng));
    const GeodesicGraph g(e, 6000, 16);
    const double rho = estimate_touching_radius(e, 8000).rho;
    const double delta = std::min(rho / 64, rho / (8 * std::sqrt(2.0)));
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    int bad = 0;
    for (int t = 0; t < 300; ++t) {
      const Chain c = piecewise_geodesic_chain(g, pick(rng), pick(rng), delta, e.area());
      for (double a : c.arc_lengths) bad += a > delta + 1e-12;
      bad += c.N > c.L;
      bad += c.total_length > c.L;
      bad += !c.within_bound;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("harnack chain radii") {
  Sphere s(zeros(3), 1.0);
  const GeodesicGraph g(s, 20000, 16);
  ConstantsInput in;
  in.n = 2;
  in.rho = 1.0;
  in.area = 4 * kPi;
  const ConstantsReport ledger = compute_constants(in);
  const std::size_t a = node_near(g, {0, 0, 1}), b = node_near(g, {0.6, 0, 0.8});
  const Chain c = piecewise_geodesic_chain(g, a, b, ledger.delta, in.area);

  const HarnackChain flat = harnack_chain(g, c, 0.0, 1.0, ledger.delta, ledger);
  for (const auto& l : flat.links) CHECK(l.radius == doctest::Approx(std::sin(1.0 / 128)).epsilon(1e-14));

  const HarnackChain h = harnack_chain(g, c, 1e-9, 1.0, ledger.delta, ledger);
  REQUIRE(h.links.size() > 2);
  CHECK(h.links[2].radius == doctest::Approx(0.00781242051175799).epsilon(1e-13));
  CHECK(h.within_count);
  CHECK(h.within_quarter);
  CHECK_THROWS_AS(harnack_chain(g, c, ledger.eps0, 1.0, ledger.delta, ledger), InputError);
}
