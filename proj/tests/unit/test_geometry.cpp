#include <cmath>

#include "breaklab/geometry.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace breaklab;
using namespace breaklab::geometry;

namespace {

ConvexPolytope unit_square() { return ConvexPolytope::box(make_vec({0, 0}), make_vec({1, 1})); }
ConvexPolytope unit_cube() { return ConvexPolytope::box(make_vec({0, 0, 0}), make_vec({1, 1, 1})); }

}  // namespace

TEST_CASE("volume of simple shapes") {
  CHECK(volume(unit_square()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(volume(ConvexPolytope::polygon({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})})) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(volume(ConvexPolytope::interval(-1, 2)) == doctest::Approx(3.0));
  CHECK(volume(unit_cube()) == doctest::Approx(1.0).epsilon(1e-14));
  // Clockwise input is reoriented.
  auto cw = ConvexPolytope::polygon({make_vec({0, 0}), make_vec({0, 1}), make_vec({1, 1}), make_vec({1, 0})});
  CHECK(volume(cw) == doctest::Approx(1.0));
}

TEST_CASE("hexagon volume agrees with hit-or-miss estimate") {
  Rng rng(11);
  auto hex = gen::convex_polygon(rng, 6, 6);
  REQUIRE(hex.vertices().size() == 6);
  const auto mc = mc_volume(hex, 1'000'000, 5);
  CHECK(std::abs(mc.value - volume(hex)) <= 3.0 * mc.std_error);
}

TEST_CASE("centroid and second moment against closed forms") {
  const Vec c = centroid(unit_square());
  CHECK(c(0) == doctest::Approx(0.5));
  CHECK(c(1) == doctest::Approx(0.5));
  // int_[0,1]^2 x^2 + y^2 = 2/3; about the centre 1/6.
  CHECK(second_moment(unit_square(), make_vec({0, 0})) == doctest::Approx(2.0 / 3.0));
  CHECK(second_moment(unit_square(), make_vec({0.5, 0.5})) == doctest::Approx(1.0 / 6.0));
  CHECK(second_moment(unit_cube(), make_vec({0.5, 0.5, 0.5})) == doctest::Approx(0.25));
  CHECK(second_moment(ConvexPolytope::interval(-1, 1), make_vec({0})) == doctest::Approx(2.0 / 3.0));
  const Vec cc = centroid(unit_cube());
  CHECK(cc(2) == doctest::Approx(0.5));
  // Right triangle centroid (1/3, 1/3).
  const Vec tc = centroid(ConvexPolytope::polygon({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})}));
  CHECK(tc(0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("second moment matches Monte Carlo on random polygons") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = gen::convex_polygon(rng);
    const Vec about = gen::random_vec(rng, 2);
    auto s = sample_points(p, 200'000, 100 + trial);
    double acc = 0.0;
    double acc2 = 0.0;
    for (const auto& x : s.points) {
      const double q = (x - about).squaredNorm();
      acc += q;
      acc2 += q * q;
    }
    const double n = static_cast<double>(s.points.size());
    const double mean = acc / n;
    const double sd = std::sqrt(acc2 / n - mean * mean);
    const double vol = volume(p);
    CHECK(std::abs(second_moment(p, about) - vol * mean) <= 4.0 * vol * sd / std::sqrt(n));
  }
}

TEST_CASE("intersect") {
  auto sq = unit_square();
  auto same = intersect(sq, sq);
  REQUIRE(same);
  CHECK(volume(*same) == doctest::Approx(1.0));

  CHECK_FALSE(intersect(ConvexPolytope::interval(0, 1), ConvexPolytope::interval(2, 3)));
  // Touching intervals have a measure-zero intersection.
  CHECK_FALSE(intersect(ConvexPolytope::interval(0, 1), ConvexPolytope::interval(1, 3)));

  auto half = intersect(sq, ConvexPolytope::box(make_vec({0.5, 0}), make_vec({1.5, 1})));
  REQUIRE(half);
  CHECK(volume(*half) == doctest::Approx(0.5).epsilon(1e-15));

  auto cube_half = intersect(unit_cube(), ConvexPolytope::box(make_vec({0.5, 0, 0}), make_vec({1.5, 1, 1})));
  REQUIRE(cube_half);
  CHECK(volume(*cube_half) == doctest::Approx(0.5));

  CHECK_THROWS_AS(intersection(sq, ConvexPolytope::interval(0, 1)), DimensionError);
}

TEST_CASE("clipping keeps half-space tags") {
  auto clipped = clip(unit_square(), HalfSpace::make(make_vec({1, 0}), 0.25, 7));
  CHECK(volume(clipped) == doctest::Approx(0.25));
  int tagged = 0;
  for (const auto& h : clipped.halfspaces())
    if (h.tag == 7) ++tagged;
  CHECK(tagged == 1);
  for (const auto& v : clipped.vertices())
    for (const auto& h : clipped.halfspaces()) CHECK(h.slack(v) <= 1e-9);
}

TEST_CASE("translate") {
  auto sq = unit_square();
  auto same = translate(sq, make_vec({0, 0}));
  for (std::size_t i = 0; i < sq.vertices().size(); ++i) CHECK((same.vertices()[i] - sq.vertices()[i]).norm() == 0.0);

  const double t = 0.3;
  auto iv = translate(ConvexPolytope::interval(0, 1), make_vec({-t}));
  CHECK(iv.vertices()[0](0) == doctest::Approx(-t));
  CHECK(iv.vertices()[1](0) == doctest::Approx(1 - t));

  auto moved = translate(sq, make_vec({1, 1}));
  CHECK(volume(moved) == doctest::Approx(1.0));
  CHECK(moved.vertices()[0](0) == doctest::Approx(sq.vertices()[0](0) + 1));
  CHECK(moved.contains(make_vec({1.5, 1.5})));
  CHECK_FALSE(moved.contains(make_vec({0.5, 0.5})));
}

TEST_CASE("union and subtraction volumes") {
  std::vector<ConvexPolytope> two{unit_square(), ConvexPolytope::box(make_vec({0.5, 0}), make_vec({1.5, 1}))};
  CHECK(union_volume(two) == doctest::Approx(1.5));
  auto pieces = subtract(two[0], two[1]);
  double v = 0.0;
  for (const auto& p : pieces) v += volume(p);
  CHECK(v == doctest::Approx(0.5));

  // Random unions against Monte Carlo membership counts.
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<ConvexPolytope> polys;
    for (int k = 0; k < 4; ++k) polys.push_back(gen::convex_polygon(rng));
    Box b = polys[0].bounds();
    for (const auto& p : polys) b = b.merged(p.bounds());
    Rng mc(50 + trial);
    const int n = 400'000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      const Vec x = make_vec({mc.uniform(b.lo(0), b.hi(0)), mc.uniform(b.lo(1), b.hi(1))});
      for (const auto& p : polys)
        if (p.contains(x, 0.0)) {
          ++hits;
          break;
        }
    }
    const double frac = static_cast<double>(hits) / n;
    const double est = frac * b.volume();
    const double se = b.volume() * std::sqrt(frac * (1 - frac) / n);
    CHECK(std::abs(union_volume(polys) - est) <= 4.0 * se);
  }
}

TEST_CASE("inscribed ball") {
  auto [c, r] = inscribed_ball(unit_square());
  CHECK(r == doctest::Approx(0.5));
  CHECK(c(0) == doctest::Approx(0.5).epsilon(1e-6));
  auto tri = ConvexPolytope::polygon({make_vec({0, 0}), make_vec({1, 0}), make_vec({0, 1})});
  CHECK(inscribed_ball(tri).second == doctest::Approx(1.0 / (2.0 + std::sqrt(2.0))));
  CHECK(inscribed_ball(unit_cube()).second == doctest::Approx(0.5));
}

TEST_CASE("sample_points") {
  auto s = sample_points(ConvexPolytope::interval(0, 1), 4, 42);
  REQUIRE(s.points.size() == 4);
  for (const auto& x : s.points) CHECK((x(0) > 0.0 && x(0) < 1.0));
  auto again = sample_points(ConvexPolytope::interval(0, 1), 4, 42);
  for (int i = 0; i < 4; ++i) CHECK(again.points[i](0) == s.points[i](0));
  CHECK(s.weight == doctest::Approx(0.25));

  const std::size_t n = 100'000;
  auto sq = sample_points(unit_square(), n, 7);
  Vec mean = Vec::Zero(2);
  for (const auto& x : sq.points) mean += x;
  mean /= static_cast<double>(n);
  const double sigma = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(mean(0) - 0.5) <= 3 * sigma);
  CHECK(std::abs(mean(1) - 0.5) <= 3 * sigma);

  CHECK_THROWS_AS(sample_points(ConvexPolytope::empty(2), 3, 1), DegenerateError);
}

TEST_CASE("property: intersection volume bounded by operands") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = gen::convex_polygon(rng);
    auto q = gen::convex_polygon(rng);
    const double v = intersection_volume(p, q);
    CHECK(v >= 0.0);
    CHECK(v <= std::min(volume(p), volume(q)) + 1e-12);
    CHECK(v == doctest::Approx(intersection_volume(q, p)).epsilon(1e-10));
  }
  for (int trial = 0; trial < 40; ++trial) {
    auto p = gen::convex_polyhedron(rng);
    auto q = gen::convex_polyhedron(rng);
    const double v = intersection_volume(p, q);
    CHECK(v <= std::min(volume(p), volume(q)) + 1e-12);
  }
}

TEST_CASE("property: translation preserves volume") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = gen::convex_polygon(rng);
    auto q = translate(p, gen::random_vec(rng, 2, -5, 5));
    CHECK(std::abs(volume(q) - volume(p)) <= 1e-12 * volume(p));
  }
  for (int trial = 0; trial < 20; ++trial) {
    auto p = gen::convex_polyhedron(rng);
    auto q = translate(p, gen::random_vec(rng, 3, -5, 5));
    CHECK(std::abs(volume(q) - volume(p)) <= 1e-12 * volume(p));
  }
}

TEST_CASE("property: Monte Carlo volume error shrinks like 1/sqrt(n)") {
  Rng rng(4);
  const std::size_t n = 20'000;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = trial % 2 == 0 ? gen::convex_polygon(rng) : gen::convex_polyhedron(rng);
    const auto est = mc_volume(p, n, 1000 + trial);
    CHECK(std::abs(est.value - volume(p)) < 4.0 / std::sqrt(static_cast<double>(n)) * p.bounds().volume());
  }
}

TEST_CASE("polyhedron volume agrees with hit-or-miss estimate") {
  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = gen::convex_polyhedron(rng, 12);
    const auto mc = mc_volume(p, 400'000, 77 + trial);
    CHECK(std::abs(mc.value - volume(p)) <= 4.0 * mc.std_error);
    // Every vertex satisfies every half-space.
    for (const auto& v : p.vertices())
      for (const auto& h : p.halfspaces()) CHECK(h.slack(v) <= 1e-9);
  }
}

TEST_CASE("property: hull of vertices plus interior points recovers the polytope") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const bool solid = trial % 2;
    const auto p = solid ? gen::convex_polyhedron(rng) : gen::convex_polygon(rng);
    std::vector<Vec> pts = p.vertices();
    for (const auto& x : sample_points(p, 20, trial).points) pts.push_back(x);
    const auto h = ConvexPolytope::hull(p.dimension(), pts);
    CHECK(volume(h) == doctest::Approx(volume(p)).epsilon(1e-10));
    for (const auto& x : pts) CHECK(h.contains(x));
  }
  const auto line = ConvexPolytope::hull(1, {make_vec({0.5}), make_vec({-1.0}), make_vec({0.0})});
  CHECK(volume(line) == doctest::Approx(1.5));
  CHECK_THROWS_AS(ConvexPolytope::hull(2, {make_vec({0, 0}), make_vec({1, 1}), make_vec({2, 2})}), DegenerateError);
}
