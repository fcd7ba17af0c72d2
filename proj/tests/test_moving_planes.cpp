#include "soapbubble/moving_planes.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace soapbubble;
using namespace soapbubble::testing;

namespace {

UnitVector e(int i) { return UnitVector(basis(3, i)); }
UnitVector diag() { return UnitVector(make_vec({1, 0, 1})); }

}  // namespace

TEST_CASE("extent") {
  Rng rng(2);
  for (int i = 0; i < 5; ++i) CHECK(extent(Sphere(zeros(3), 1.0), random_direction(rng, 3)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(extent(Sphere(make_vec({0, 0, 3}), 1.0), e(2)) == doctest::Approx(4.0).epsilon(1e-9));
  Ellipsoid el(make_vec({1, 1, 1.1}));
  CHECK(extent(el, e(2)) == doctest::Approx(1.1).epsilon(1e-9));
  // support function of an ellipsoid
  for (int i = 0; i < 5; ++i) {
    const UnitVector w = random_direction(rng, 3);
    const double h = std::sqrt(w[0] * w[0] + w[1] * w[1] + 1.21 * w[2] * w[2]);
    CHECK(extent(el, w) == doctest::Approx(h).epsilon(1e-8));
  }
}

TEST_CASE("reflection") {
  CHECK((reflect_point(make_vec({2, 0, 0}), e(0), 0.0) - make_vec({-2, 0, 0})).norm() < 1e-15);
  CHECK((reflect_point(make_vec({3, 1, 0}), e(0), 1.0) - make_vec({-1, 1, 0})).norm() < 1e-15);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const UnitVector w = random_direction(rng, 3);
    const double lam = uniform(rng, -2, 2);
    const Vec x = random_point(rng, 3, 3);
    // involution
    CHECK((reflect_point(reflect_point(x, w, lam), w, lam) - x).norm() < 1e-12);
    // fixes the plane pointwise
    const Vec on = x - (w.dot(x) - lam) * w.vec();
    CHECK((reflect_point(on, w, lam) - on).norm() < 1e-12);
  }
}

TEST_CASE("reflected cap containment") {
  Sphere s(zeros(3), 1.0);
  CHECK(reflected_cap_inside(s, e(0), 0.5, 1e-9).inside);
  const CapContainment out = reflected_cap_inside(s, e(0), -0.2, 1e-9);
  CHECK_FALSE(out.inside);
  // the right pole reflects to (-1.4, 0, 0), just past the left pole
  CHECK((out.witness.normalized() - make_vec({-1, 0, 0})).norm() < 0.05);
  CHECK(out.worst_violation == doctest::Approx(0.4).epsilon(1e-3));
  CHECK(reflected_cap_inside(Ellipsoid(make_vec({1, 1, 1.1})), e(2), 0.05, 1e-9, 100000).inside);
}

TEST_CASE("containment is monotone in lambda") {
  Rng rng(9);
  for (int s = 0; s < 4; ++s) {
    Ellipsoid el(random_axes(rng, 0.7, 1.4), random_point(rng, 3, 0.5), random_rotation(rng));
    const SampleSet set = el.sample(4000, s);
    const UnitVector w = random_direction(rng, 3);
    const double top = extent(el, set, w);
    bool seen_inside = false;
    int bad = 0;
    for (int k = 0; k <= 60; ++k) {
      const double lam = -top + 2 * top * k / 60.0;
      const bool in = reflected_cap_inside(el, set, w, lam, 1e-9).inside;
      bad += seen_inside && !in;
      seen_inside = seen_inside || in;
    }
    CHECK(seen_inside);
    CHECK(bad == 0);
  }
}

TEST_CASE("critical position on symmetric surfaces") {
  Sphere s(make_vec({0.3, 0, 0}), 1.0);
  const CriticalPlane p = critical_position(s, e(0));
  CHECK(p.m == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(p.degenerate_contact);
  CHECK(p.m < p.extent);

  Ellipsoid el(make_vec({1, 1, 1.1}));
  const CriticalPlane q = critical_position(el, e(2));
  CHECK(std::abs(q.m) <= 2 * q.tol);
  CHECK(q.contact_gap <= q.tol);
}

TEST_CASE("critical position matches a grid scan") {
  Ellipsoid el(make_vec({1, 1, 1.1}));
  const SampleSet set = el.sample(20000);
  const double tol = 1e-4;
  const CriticalPlane p = critical_position(el, set, diag(), tol);
  // brute-force: smallest lambda on a tol/2 grid where the cap stays inside
  double lam = p.m - 20 * tol;
  while (!reflected_cap_inside(el, set, diag(), lam, tol).inside) lam += tol / 2;
  CHECK(std::abs(lam - p.m) <= tol);
  // strictly inside a little above m
  CHECK(reflected_cap_inside(el, set, diag(), p.m + 10 * tol, 0.0).inside);
}

TEST_CASE("symmetry plane recovered on random ellipsoids") {
  Rng rng(31);
  for (int s = 0; s < 5; ++s) {
    const Mat R = random_rotation(rng);
    const Vec c = random_point(rng, 3, 1.0);
    Ellipsoid el(random_axes(rng, 0.7, 1.4), c, R);
    const int axis = s % 3;
    const UnitVector w(R.col(axis));
    const CriticalPlane p = critical_position(el, w);
    CHECK(std::abs(p.m - w.dot(c)) <= 2 * p.tol);
  }
}

TEST_CASE("rigid motion invariance") {
  Rng rng(13);
  const Vec axes = make_vec({0.9, 1.2, 1.0});
  const UnitVector w = random_direction(rng, 3);
  const Mat R0 = random_rotation(rng);
  Ellipsoid base(axes, zeros(3), R0);
  const double tol = 1e-6;
  const double m0 = critical_position(base, w, tol).m;
  const Vec t = make_vec({0.4, -0.7, 0.2});
  Ellipsoid moved(axes, t, R0);
  CHECK(critical_position(moved, w, tol).m == doctest::Approx(m0 + w.dot(t)).epsilon(2 * tol));
  const Mat Q = random_rotation(rng);
  Ellipsoid turned(axes, zeros(3), Mat(Q * R0));
  CHECK(critical_position(turned, UnitVector(Q * w.vec()), tol).m == doctest::Approx(m0).epsilon(2 * tol));
}

TEST_CASE("critical caps") {
  Ellipsoid el(make_vec({1, 1, 1.1}));
  const GeodesicGraph g(el, 20000, 16);
  const CriticalPlane p = critical_position(el, e(2));
  const CapRegion c = critical_caps(el, p, g);
  double total = 0, sigma = 0;
  for (std::size_t i = 0; i < g.size(); ++i) total += g.weights()[i];
  for (auto i : c.sigma) sigma += g.weights()[i];
  CHECK(std::abs(sigma / total - 0.5) < 0.02);
  for (auto i : c.sigma) CHECK(g.positions()[i][2] > p.m);
  for (auto i : c.sigma_hat) CHECK(g.positions()[i][2] < p.m);

  const CriticalPlane px = critical_position(el, e(0));
  const CapRegion cx = critical_caps(el, px, g);
  REQUIRE_FALSE(cx.sigma_hat_boundary.empty());
  for (auto i : cx.sigma_hat_boundary) CHECK(std::abs(g.positions()[i][0] - px.m) <= g.max_edge_length());

  Sphere s(zeros(3), 1.0);
  const GeodesicGraph gs(s, 8000, 16);
  const CapRegion cs = critical_caps(s, critical_position(s, e(1)), gs);
  const double ratio = double(cs.sigma.size()) / double(cs.sigma_hat.size());
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("json form") {
  const CriticalPlane p = critical_position(Sphere(zeros(3), 1.0), e(2));
  const nlohmann::json j = to_json(p);
  for (const char* key : {"omega", "m", "case", "p0", "contact_gap", "extent"}) CHECK(j.contains(key));
}
