#include <cmath>
#include <memory>

#include "breaklab/field.hpp"
#include "doctest.h"

using namespace breaklab;
using namespace breaklab::field;
using geometry::ConvexPolytope;
using geometry::Domain;

namespace {

constexpr double kTol = 1e-10;

std::shared_ptr<const Grid> disk_grid(int n) {
  return std::make_shared<Grid>(Domain(ConvexPolytope::regular_polygon(make_vec({0, 0}), 1.0, 256)), n);
}

std::shared_ptr<const Grid> square_grid(int n) {
  return std::make_shared<Grid>(Domain(ConvexPolytope::box(make_vec({0, 0}), make_vec({1, 1}))), n);
}

GridVectorField rotational(const std::shared_ptr<const Grid>& g) {
  return GridVectorField::sample(g, make_generator({"rotational_disk"}, 2));
}

void check_split_invariants(const GridVectorField& b, const HelmholtzSplit& s) {
  const Grid& g = b.grid();
  double worst = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    for (int a = 0; a < g.dimension(); ++a)
      worst = std::max(worst, std::abs(s.gradient_part.flux(c, a) + s.solenoidal_part.flux(c, a) - b.flux(c, a)));
  const double bb = inner(b, b);
  CHECK(worst <= 1e-15 * std::max(1.0, l2_norm(b) * 1e3));
  CHECK(std::abs(s.cross_inner) <= 10 * kTol * bb);
  const double pyth = inner(s.gradient_part, s.gradient_part) + inner(s.solenoidal_part, s.solenoidal_part);
  CHECK(std::abs(bb - pyth) <= 20 * kTol * bb);
}

}  // namespace

TEST_CASE("grid geometry on the unit square") {
  const auto g = square_grid(16);
  CHECK(g->shape()[0] == 16);
  CHECK(g->shape()[1] == 16);
  double vol = 0.0;
  for (std::size_t c = 0; c < g->cell_count(); ++c) vol += g->cell_volume(c);
  CHECK(vol == doctest::Approx(1.0).epsilon(1e-14));
  // Faces on the outer boundary are not part of the field space.
  CHECK(g->aperture(g->flat_index({15, 3, 0}), 0) == 0.0);
  CHECK(g->aperture(g->flat_index({14, 3, 0}), 0) == 1.0);
}

TEST_CASE("cut cells measure the disk exactly") {
  const auto g = disk_grid(40);
  double vol = 0.0;
  for (std::size_t c = 0; c < g->cell_count(); ++c) vol += g->cell_volume(c);
  CHECK(vol == doctest::Approx(geometry::volume(g->domain().convex_piece())).epsilon(1e-12));
}

TEST_CASE("norms") {
  const auto g = disk_grid(64);
  GridVectorField zero(g);
  CHECK(l2_norm(zero) == 0.0);
  const auto c = GridVectorField::sample(g, [](const Vec&) { return make_vec({0.3, -0.4}); });
  CHECK(l2_error(c, c) == 0.0);
  const double exact = 0.5 * std::sqrt(g->domain().volume());
  CHECK(std::abs(l2_norm(c) - exact) <= 4.0 * g->spacing());
  CHECK_THROWS_AS(l2_error(c, GridVectorField(disk_grid(32))), Error);
}

TEST_CASE("projection of simple fields") {
  const auto sq = square_grid(32);
  const auto grad = GridVectorField::sample(sq, [](const Vec& x) { return make_vec({x(0), 0.0}); });
  const auto s = helmholtz_project(grad, kTol);
  CHECK(l2_norm(s.solenoidal_part) <= 10 * kTol);
  check_split_invariants(grad, s);

  const auto g = disk_grid(64);
  const auto rot = rotational(g);
  const auto r = helmholtz_project(rot, kTol);
  CHECK(l2_norm(r.gradient_part) <= 0.02 * l2_norm(rot));
  check_split_invariants(rot, r);

  const auto radial = GridVectorField::sample(g, make_generator({"radial_gradient"}, 2));
  const auto p = helmholtz_project(radial, kTol);
  CHECK(l2_norm(p.solenoidal_part) <= 10 * kTol * l2_norm(radial));

  const auto both = GridVectorField::sample(
      g, make_generator({"sum", {}, 1.0, {{"rotational_disk"}, {"radial_gradient"}}}, 2));
  const auto q = helmholtz_project(both, kTol);
  CHECK(l2_error(q.gradient_part, r.gradient_part + p.gradient_part) <= 10 * kTol * l2_norm(both));
  CHECK(l2_error(q.solenoidal_part, r.solenoidal_part + p.solenoidal_part) <= 10 * kTol * l2_norm(both));
}

TEST_CASE("projection in one and three dimensions") {
  const auto line = std::make_shared<Grid>(Domain(ConvexPolytope::interval(-1, 2)), 32);
  const auto b = GridVectorField::sample(line, [](const Vec& x) { return make_vec({std::sin(3 * x(0))}); });
  const auto s = helmholtz_project(b, kTol);
  CHECK(l2_norm(s.solenoidal_part) <= 10 * kTol * l2_norm(b));

  const auto cube = std::make_shared<Grid>(Domain(ConvexPolytope::box(make_vec({0, 0, 0}), make_vec({1, 1, 1}))), 16);
  const auto radial = GridVectorField::sample(cube, make_generator({"radial_gradient", {0.5, 0.5, 0.5}}, 3));
  const auto p = helmholtz_project(radial, kTol);
  CHECK(l2_norm(p.solenoidal_part) <= 10 * kTol * l2_norm(radial));
  const auto rnd = GridVectorField::sample(cube, random_smooth_field(3, 9));
  check_split_invariants(rnd, helmholtz_project(rnd, kTol));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(helmholtz_project(rotational(disk_grid(8)), kTol), DimensionError);
  CHECK_THROWS_AS(make_generator({"nope"}, 2), Error);
  CHECK_THROWS_AS(make_generator({"rotational_disk"}, 3), DimensionError);
  CHECK_THROWS_AS(make_generator({"radial_gradient", {1.0}}, 2), Error);
}

TEST_CASE("property: split invariants and idempotence on random smooth fields") {
  const auto disk = disk_grid(64);
  const auto sq = square_grid(64);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto& g = seed % 2 ? disk : sq;
    const auto b = GridVectorField::sample(g, random_smooth_field(2, seed));
    const auto s = helmholtz_project(b, kTol);
    check_split_invariants(b, s);
    CHECK(s.relative_residual <= kTol);
    const auto idem = projector_idempotence_check(b, kTol);
    CHECK(idem.ok);
  }
  CHECK(projector_idempotence_check(rotational(disk), kTol).ok);
}

TEST_CASE("rotational field: gradient part sits at the polygon floor for every h") {
  // Face fluxes of an affine field are exact, so the discrete divergence is
  // the boundary flux of the polygon itself; refining h cannot reduce it.
  for (int n : {32, 64, 128}) {
    const auto g = std::make_shared<Grid>(Domain(ConvexPolytope::regular_polygon(make_vec({0, 0}), 1.0, 1024)), n);
    const auto rot = rotational(g);
    const double norm = l2_norm(helmholtz_project(rot, kTol).gradient_part);
    CHECK(norm <= 5e-5 * l2_norm(rot));
  }
  const auto coarse = std::make_shared<Grid>(Domain(ConvexPolytope::regular_polygon(make_vec({0, 0}), 1.0, 256)), 64);
  const auto fine = std::make_shared<Grid>(Domain(ConvexPolytope::regular_polygon(make_vec({0, 0}), 1.0, 1024)), 64);
  CHECK(l2_norm(helmholtz_project(rotational(fine), kTol).gradient_part) <=
        0.1 * l2_norm(helmholtz_project(rotational(coarse), kTol).gradient_part));
}
