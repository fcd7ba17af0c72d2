#include "soapbubble/lemmas.hpp"
#include "soapbubble/symmetry_fit.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace soapbubble;
using namespace soapbubble::testing;

namespace {

VerifyOptions with_trials(std::size_t n, std::uint64_t seed = 0) {
  VerifyOptions o;
  o.trials = n;
  o.seed = seed;
  return o;
}

UnitVector e(int i) { return UnitVector(basis(3, i)); }

}  // namespace

TEST_CASE("lemma ids and aliases") {
  CHECK(canonical_lemma_id("2.1") == "graph-bounds");
  CHECK(canonical_lemma_id("2.2") == "distance-bounds");
  CHECK(canonical_lemma_id("2.8") == "slice-curvature");
  CHECK(canonical_lemma_id("2.9") == "projected-curvature");
  CHECK(canonical_lemma_id("3.4") == "normal-change");
  CHECK(canonical_lemma_id("3.5") == "normal-difference");
  CHECK(canonical_lemma_id("4.5") == "normal-tilt");
  CHECK(canonical_lemma_id("5.1") == "annulus-normal");
  CHECK(canonical_lemma_id("figure1") == "fig1");
  for (const auto& id : lemma_ids()) CHECK(canonical_lemma_id(id) == id);
  CHECK(canonical_lemma_id("9.9").empty());
}

TEST_CASE("verdict bookkeeping") {
  LemmaVerdict v;
  v.record(0.5, {{"a", 1}});
  v.record(-1e-9, {{"a", 2}});
  v.record(-1e-3, {{"a", 3}});
  CHECK(v.trials == 3);
  CHECK(v.violations == 1);
  CHECK(v.worst_slack == doctest::Approx(-1e-3));
  CHECK(v.witness["a"] == 3);
  CHECK_FALSE(v.passed());
  const nlohmann::json j = to_json(v);
  CHECK(j["violations"] == 1);
}

TEST_CASE("touching-ball patch bounds") {
  Sphere s(make_vec({0.1, 0.2, -0.3}), 1.0);
  const LemmaVerdict vs = verify_graph_bounds(s, 1.0, with_trials(2000));
  CHECK(vs.passed());
  CHECK(vs.trials == 2000);
  // the sphere saturates the height bound
  CHECK(vs.worst_slack < 1e-6);

  Ellipsoid el(make_vec({1, 1, 1.1}));
  CHECK(verify_graph_bounds(el, 1.0 / 1.1, with_trials(2000)).passed());

  const LemmaVerdict wrong = verify_graph_bounds(el, 2.0 / 1.1, with_trials(500));
  CHECK(wrong.violations > 0);
}

TEST_CASE("intrinsic distance bounds") {
  Sphere s(zeros(3), 1.0);
  const GeodesicGraph gs(s, 20000, 16);
  const LemmaVerdict vs = verify_distance_bounds(s, gs, 1.0, with_trials(300));
  CHECK(vs.passed());
  CHECK_FALSE(vs.low_resolution);

  Ellipsoid el(make_vec({1, 1.2, 0.9}));
  const GeodesicGraph ge(el, 20000, 16);
  CHECK(verify_distance_bounds(el, ge, estimate_touching_radius(el, 20000).rho, with_trials(300)).passed());

  const GeodesicGraph coarse(s, 100, 8);
  CHECK(verify_distance_bounds(s, coarse, 1.0, with_trials(100)).low_resolution);
}

TEST_CASE("three-point curvature on circles") {
  for (double r : {0.3, 1.0, 4.2}) {
    const double h = 1e-3;
    auto at = [&](double t) { return Vec(make_vec({r * std::cos(t / r), r * std::sin(t / r), 0.0})); };
    Vec c;
    const double k = three_point_curvature(at(-h), at(0), at(h), make_vec({-1, 0, 0}), &c);
    CHECK(k == doctest::Approx(1.0 / r).epsilon(1e-6));
    CHECK(c.norm() < 1e-6 * r);
  }
}

TEST_CASE("slice curvature bounds") {
  Sphere s(zeros(3), 1.0);
  const LemmaVerdict v = slice_curvature_bounds(s, AffinePlane{e(2), 0.5});
  CHECK(v.passed());
  CHECK(v.extras["closed"] == true);
  CHECK(double(v.extras["kappa_prime_min"]) == doctest::Approx(1.0 / std::sqrt(0.75)).epsilon(1e-6));
  CHECK(double(v.extras["kappa_prime_max"]) == doctest::Approx(1.0 / std::sqrt(0.75)).epsilon(1e-6));

  // any slice of a sphere is a circle
  Rng rng(12);
  for (int i = 0; i < 5; ++i) {
    const AffinePlane pl{random_direction(rng, 3), uniform(rng, -0.8, 0.8)};
    const LemmaVerdict w = slice_curvature_bounds(s, pl);
    const double expect = 1.0 / std::sqrt(1.0 - pl.offset * pl.offset);
    CHECK(w.passed());
    CHECK(double(w.extras["kappa_prime_min"]) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(double(w.extras["kappa_prime_max"]) == doctest::Approx(expect).epsilon(1e-6));
  }

  // tangential slice is rejected with a witness
  const LemmaVerdict t = slice_curvature_bounds(s, AffinePlane{e(2), 1.0 - 1e-6});
  CHECK(t.rejected);
  CHECK_FALSE(t.reject_witness.is_null());

  // the slice z = 2 + 8y of the paraboloid closes up (an ellipse)
  const AffinePlane fig{UnitVector(make_vec({0, -8, 1})), 2.0 / std::sqrt(65.0)};
  const LemmaVerdict p = slice_curvature_bounds(paraboloid(), fig, make_vec({std::sqrt(18.0), 4.0, 34.0}));
  CHECK(p.passed());
  CHECK(p.extras["closed"] == true);
  CHECK(double(p.extras["kappa_prime_max"]) > 1.5 * double(p.extras["kappa_prime_min"]));
}

TEST_CASE("slice suite on a tilted ellipsoid") {
  const LemmaVerdict v = slice_curvature_suite(Ellipsoid(make_vec({1, 1.2, 0.9})), with_trials(3000, 4));
  CHECK(v.passed());
  CHECK(v.trials >= 3000);
}

TEST_CASE("projected curvature") {
  const LemmaVerdict f = paraboloid_slice_check();
  CHECK(f.passed());
  CHECK(double(f.extras["kappa_second_min"]) == doctest::Approx(1.0 / std::sqrt(18.0)).epsilon(1e-6));
  CHECK(double(f.extras["kappa_second_max"]) == doctest::Approx(1.0 / std::sqrt(18.0)).epsilon(1e-6));
  const nlohmann::json c = f.extras["fit_center"];
  CHECK(std::abs(double(c[0]) - 0.0) < 1e-6);
  CHECK(std::abs(double(c[1]) - 4.0) < 1e-6);
  CHECK(std::abs(double(c[2]) - 0.0) < 1e-6);
  CHECK(double(f.extras["fit_radius"]) == doctest::Approx(std::sqrt(18.0)).epsilon(1e-6));

  // parallel planes: the projection is an isometry
  Sphere s(zeros(3), 1.0);
  const LemmaVerdict same = projected_curvature_bounds(s, AffinePlane{e(2), 0.5}, e(2));
  CHECK(same.passed());
  CHECK(double(same.extras["kappa_second_min"]) == doctest::Approx(1.0 / std::sqrt(0.75)).epsilon(1e-6));
  CHECK(double(same.extras["kappa_second_max"]) == doctest::Approx(1.0 / std::sqrt(0.75)).epsilon(1e-6));

  // ellipsoid slice tilted 30 degrees, projected to z = 0
  Ellipsoid el(make_vec({1, 1, 1.1}));
  const double a = 30.0 * std::acos(-1.0) / 180.0;
  const LemmaVerdict tilted =
      projected_curvature_bounds(el, AffinePlane{UnitVector(make_vec({std::sin(a), 0, std::cos(a)})), 0.2}, e(2));
  CHECK(tilted.passed());
  CHECK(tilted.trials > 1000);

  // omega2 tangent to the slice is rejected
  CHECK(projected_curvature_bounds(s, AffinePlane{e(2), 0.5}, e(0)).rejected);
}

TEST_CASE("change of normal direction") {
  Sphere s(zeros(3), 1.0);
  const LemmaVerdict v = normal_change_suite(s, 1.0, 0.3, with_trials(500));
  CHECK(v.passed());
  const LemmaVerdict edge = normal_change_suite(s, 1.0, 0.99, with_trials(500));
  CHECK(edge.passed());
  CHECK(edge.extras["domain_gaps"] == 0);

  // ell = nu_p: v is u itself
  const SurfaceSample p = s.sample_at(make_vec({0, 0, 1}));
  const LemmaVerdict same = verify_normal_change(s, p, UnitVector(p.inner_normal), 0.3, 0.5, 1.0);
  CHECK(same.passed());
  CHECK(same.worst_slack >= std::sqrt(2.0) * 0.3 * 0.5 - 1e-9);
}

TEST_CASE("normal difference") {
  const Vec zero = zeros(2);
  const LemmaVerdict same = verify_normal_difference(zero, zero);
  CHECK(same.passed());
  CHECK(same.worst_slack == doctest::Approx(0.0));

  const LemmaVerdict slope = verify_normal_difference(zero, make_vec({0.1, 0.0}));
  CHECK(slope.passed());
  // |nu_1 - nu_2| = 0.0996274037603195 and the bound is sqrt(5)/2 * 0.1
  CHECK(slope.worst_slack == doctest::Approx(std::sqrt(5.0) / 2 * 0.1 - 0.0996274037603195).epsilon(1e-10));

  const LemmaVerdict suite = normal_difference_suite(with_trials(10000));
  CHECK(suite.passed());
  CHECK(suite.trials == 10000);
}

TEST_CASE("normal tilt near the critical plane") {
  Sphere s(make_vec({0.1, 0.2, -0.3}), 1.0);
  const GeodesicGraph g(s, 20000, 16);
  const LemmaVerdict v = normal_tilt_suite(s, g, 0.1, 1.0, 8, with_trials(2000));
  CHECK(v.passed());
  CHECK(v.trials > 500);

  Ellipsoid el(make_vec({1, 1, 1.1}));
  const GeodesicGraph ge(el, 20000, 16);
  const CriticalPlane plane = critical_position(el, e(2));
  const LemmaVerdict sym = verify_normal_tilt(el, ge, plane, 0.1 / 1.1, 1.0 / 1.1);
  CHECK(sym.passed());
  CHECK(sym.trials > 100);

  // empty band
  CHECK(verify_normal_tilt(el, ge, plane, 0.0, 1.0 / 1.1).passed());
}

TEST_CASE("annulus normal") {
  Sphere s(zeros(3), 1.0);
  const LemmaVerdict vs = verify_annulus_normal(s, s.sample(5000), zeros(3), 1.0, 1.0, 1.0);
  CHECK(vs.passed());
  CHECK(std::abs(vs.worst_slack) < 1e-9);

  Ellipsoid el(make_vec({1, 1, 1.1}));
  const LemmaVerdict ve = verify_annulus_normal(el, el.sample(20000), zeros(3), 1.0, 1.1, 1.0 / 1.1);
  CHECK(ve.passed());
  CHECK(double(ve.extras["bound"]) == doctest::Approx(-0.89));

  RadialGraph dumbbell(RadialGraph::Basis::SphericalHarmonics, {{2, 0, 1.268264735}, {3, 0, 0.5359396685}}, 1.0);
  const Vec O = symmetry_center(dumbbell);
  const RadialBounds b = radial_bounds(dumbbell, O);
  const LemmaVerdict vd = verify_annulus_normal(dumbbell, dumbbell.sample(5000), O, b.r_i, b.r_e,
                                                estimate_touching_radius(dumbbell, 20000).rho);
  CHECK(vd.rejected);
  CHECK(vd.violations == 0);
}

TEST_CASE("run_lemma dispatch is deterministic") {
  Ellipsoid el(make_vec({1, 1, 1.1}));
  const VerifyOptions o = with_trials(300, 9);
  const LemmaVerdict a = run_lemma("2.1", el, o);
  const LemmaVerdict b = run_lemma("graph-bounds", el, o);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(a.passed());
  CHECK_THROWS_AS(run_lemma("nope", el, o), InputError);
  const std::string table = verdict_table({a});
  CHECK(table.find("graph-bounds") != std::string::npos);
}
