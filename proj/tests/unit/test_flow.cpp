#include <cmath>

#include "breaklab/flow.hpp"
#include "doctest.h"
#include "potential_gen.hpp"

using namespace breaklab;
using namespace breaklab::geometry;
using namespace breaklab::flow;
using breaklab::potential::PiecewiseAffinePotential;

namespace {

PiecewiseAffinePotential abs_1d(double sign) {
  CellPartition part(Domain(ConvexPolytope::interval(-1, 1)),
                     {ConvexPolytope::interval(-1, 0), ConvexPolytope::interval(0, 1)});
  return {part, {make_vec({-sign}), make_vec({sign})}, {0.0, 0.0}};
}

PiecewiseAffinePotential affine_1d(double slope) {
  CellPartition part(Domain(ConvexPolytope::interval(-1, 1)), {ConvexPolytope::interval(-1, 1)});
  return {part, {make_vec({slope})}, {0.0}};
}

}  // namespace

TEST_CASE("snapshot at t = 0 is the partition itself") {
  const auto s = snapshot(abs_1d(-1), 0.0);
  CHECK(s.overlap_volume == 0.0);
  CHECK(s.images[0].vertices()[0](0) == -1.0);
  CHECK(s.coverage_volume == doctest::Approx(2.0));
}

TEST_CASE("1D counterexample: overlap 2t and multiplicity 2 at the origin") {
  for (double t : {0.05, 0.1, 0.25}) {
    const auto s = snapshot(abs_1d(-1), t);
    CHECK(std::abs(s.overlap_volume - 2 * t) <= 1e-12);
    CHECK(s.image_volume == doctest::Approx(2.0).epsilon(1e-15));
  }
  const auto m = multiplicity_count(abs_1d(-1), 0.25, {make_vec({0.0}), make_vec({5.0})});
  CHECK(m.counts[0] == 2);
  CHECK(m.counts[1] == 0);
  CHECK(multiplicity_count(abs_1d(1), 0.25, {make_vec({0.0})}).counts[0] == 0);
}

TEST_CASE("|x| opens a rarefaction gap of width 2t") {
  const double t = 0.3;
  const auto s = snapshot(abs_1d(1), t);
  CHECK(s.overlap_volume == 0.0);
  const Box b = s.images[0].bounds().merged(s.images[1].bounds());
  CHECK(b.volume() - s.coverage_volume == doctest::Approx(2 * t));
}

TEST_CASE("MPC verdicts") {
  const auto grid = default_time_grid(1);
  CHECK(mpc_verdict(affine_1d(0.7), grid).preserving);
  CHECK(mpc_verdict(abs_1d(1), grid).preserving);
  const auto bad = mpc_verdict(abs_1d(-1), grid);
  CHECK_FALSE(bad.preserving);
  CHECK(bad.witness_t == grid.front());
  // For t <= 1/2 the overlap is 2t; beyond that the images nest.
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid[k] <= 0.5) CHECK(bad.overlaps[k] == doctest::Approx(2 * grid[k]));
}

TEST_CASE("default time grid") {
  const auto g = default_time_grid(42);
  CHECK(g.size() == 40);
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(g.front() > 0.0);
  CHECK(g.back() <= 10.0);
  CHECK(g == default_time_grid(42));
  CHECK(g != default_time_grid(43));
}

TEST_CASE("expanding verdicts") {
  CHECK(expanding_verdict(abs_1d(1), 0.25, 10'000, 3).expanding);
  const auto bad = expanding_verdict(abs_1d(-1), 0.25, 10'000, 3);
  CHECK_FALSE(bad.expanding);
  CHECK(bad.exact_volume == doctest::Approx(0.5));
  CHECK(expanding_verdict(abs_1d(-1), 0.0, 10'000, 3).expanding);
}

TEST_CASE("g^psi curves") {
  const TestFunction psi{make_vec({0.0}), 0.5};
  const auto flat = gpsi_curve(affine_1d(0.0), psi, {0.0, 0.2, 0.7});
  for (const auto& s : flat.samples) CHECK(s.value == doctest::Approx(psi.integral()));

  std::vector<double> ts{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const auto down = gpsi_curve(abs_1d(1), psi, ts);
  for (std::size_t k = 1; k < 6; ++k) CHECK(down.samples[k].value < down.samples[k - 1].value);
  CHECK(down.samples[5].value == doctest::Approx(0.0));
  CHECK(gpsi_monotone(down, 1e-6));
  CHECK_FALSE(gpsi_initial_increase(down));

  const auto up = gpsi_curve(abs_1d(-1), psi, ts);
  CHECK(gpsi_initial_increase(up));
  CHECK_FALSE(gpsi_monotone(up, 1e-6));
}

TEST_CASE("derivative check") {
  const TestFunction psi{make_vec({0.0}), 0.5};
  const auto d = derivative_check(abs_1d(1), psi, 0.1, 1e-3);
  CHECK(std::abs(d.lhs - d.rhs) <= 1e-4);
  const auto zero = derivative_check(affine_1d(0.0), psi, 0.1);
  CHECK(std::abs(zero.lhs) < 1e-9);
  CHECK(zero.rhs == 0.0);
  const TestFunction far{make_vec({10.0}), 0.5};
  const auto away = derivative_check(abs_1d(1), far, 0.1);
  CHECK(away.lhs == 0.0);
  CHECK(away.rhs == 0.0);

  Rng rng(4);
  auto phi = gen::random_max_affine(rng, gen::unit_square(), 5);
  const TestFunction psi2{make_vec({0.5, 0.5}), 0.3};
  const auto d2 = derivative_check(phi, psi2, 0.05, 1e-3);
  CHECK(std::abs(d2.lhs - d2.rhs) <= 1e-4);
}

TEST_CASE("property: convex potentials do not overlap; nonconvex ones do") {
  Rng rng(31);
  const auto grid = default_time_grid(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto convex = gen::random_max_affine(rng, gen::unit_square(), 6);
    const auto v = mpc_verdict(convex, grid);
    CHECK(v.preserving);
    auto concave = gen::random_max_affine(rng, gen::unit_square(), 6, -1.0);
    if (concave.partition().size() < 2) continue;
    const auto w = potential::is_locally_convex(concave);
    REQUIRE_FALSE(w.convex);
    const auto& j = w.witnesses.front();
    const auto& cells = concave.partition().cells();
    const double t = 1e-2;
    const double ov = intersection_volume(translate(cells[j.cell_a], t * concave.gradients()[j.cell_a]),
                                          translate(cells[j.cell_b], t * concave.gradients()[j.cell_b]));
    CHECK(ov > 0.0);
  }
}

TEST_CASE("property: mass bookkeeping and probe/exact multiplicity agreement") {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    auto phi = gen::random_max_affine(rng, gen::unit_square(), 5, trial % 2 ? 1.0 : -1.0);
    const double t = rng.uniform(0.01, 0.5);
    const auto s = snapshot(phi, t);
    CHECK(std::abs(s.image_volume - 1.0) <= 1e-12);
    CHECK(s.coverage_volume <= s.image_volume + 1e-12);
    CHECK(s.overlap_volume >= 0.0);
    Box box = s.images.front().bounds();
    for (const auto& p : s.images) box = box.merged(p.bounds());
    const auto e = expanding_verdict(phi, t, 20'000, 100 + trial);
    const double frac = e.violated_fraction;
    const double se = box.volume() * std::sqrt(frac * (1 - frac) / e.probes);
    CHECK(std::abs(e.probe_volume - e.exact_volume) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("property: g^psi never rises above g(0) for convex potentials") {
  Rng rng(41);
  std::vector<double> ts{0.0};
  for (double t : default_time_grid(2)) ts.push_back(t);
  for (int trial = 0; trial < 5; ++trial) {
    auto phi = gen::random_max_affine(rng, gen::unit_square(), 6);
    for (const auto& psi : potential::bump_battery(phi.partition().domain())) {
      CHECK(gpsi_monotone(gpsi_curve(phi, psi, ts), 1e-6));
    }
  }
}
