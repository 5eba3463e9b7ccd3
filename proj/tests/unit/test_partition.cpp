#include <cmath>

#include "breaklab/partition.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace breaklab;
using namespace breaklab::geometry;

namespace {

ConvexPolytope rect(double x0, double y0, double x1, double y1) {
  return ConvexPolytope::box(make_vec({x0, y0}), make_vec({x1, y1}));
}

double perimeter(const ConvexPolytope& p) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.facet_count(); ++k) s += facet_measure(p, k);
  return s;
}

}  // namespace

TEST_CASE("1D split at the origin has one point face") {
  CellPartition part(Domain(ConvexPolytope::interval(-1, 1)),
                     {ConvexPolytope::interval(-1, 0), ConvexPolytope::interval(0, 1)});
  const auto faces = extract_faces(part);
  REQUIRE(faces.size() == 1);
  CHECK(faces[0].cell_a == 0);
  CHECK(faces[0].cell_b == 1);
  CHECK(faces[0].normal(0) == doctest::Approx(1.0));
  CHECK(faces[0].measure == 1.0);
  CHECK(faces[0].vertices[0](0) == doctest::Approx(0.0));
}

TEST_CASE("unit square split at x = 1/2") {
  CellPartition part(Domain(rect(0, 0, 1, 1)), {rect(0, 0, 0.5, 1), rect(0.5, 0, 1, 1)});
  REQUIRE(part.faces().size() == 1);
  const auto& f = part.faces()[0];
  CHECK(f.measure == doctest::Approx(1.0));
  CHECK(f.normal(0) == doctest::Approx(1.0));
  CHECK(f.normal(1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(part.adjacency()[0].size() == 1);
}

TEST_CASE("single cell has no interior faces") {
  CellPartition part(Domain(rect(0, 0, 1, 1)), {rect(0, 0, 1, 1)});
  CHECK(part.faces().empty());
}

TEST_CASE("T-junctions split a facet into several faces") {
  CellPartition part(Domain(rect(0, 0, 1, 1)), {rect(0, 0, 0.5, 1), rect(0.5, 0, 1, 0.3), rect(0.5, 0.3, 1, 1)});
  double into_left = 0.0;
  for (const auto& f : part.faces())
    if (f.cell_a == 0) into_left += f.measure;
  CHECK(into_left == doctest::Approx(1.0));
  CHECK(part.faces().size() == 3);
}

TEST_CASE("invalid partitions are rejected") {
  const Domain sq(rect(0, 0, 1, 1));
  CHECK_THROWS_AS(CellPartition(sq, {rect(0, 0, 0.5, 1)}), PartitionError);
  CHECK_THROWS_AS(CellPartition(sq, {rect(0, 0, 0.6, 1), rect(0.4, 0, 1, 1)}), PartitionError);
  CHECK_THROWS_AS(CellPartition(sq, {rect(0, 0, 0.5, 1), rect(0.5, 0, 1.2, 1)}), PartitionError);
  CHECK_THROWS_AS(CellPartition(sq, {}), PartitionError);
}

TEST_CASE("3D cube split into octants") {
  std::vector<ConvexPolytope> cells;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        cells.push_back(ConvexPolytope::box(make_vec({0.5 * i, 0.5 * j, 0.5 * k}),
                                            make_vec({0.5 * i + 0.5, 0.5 * j + 0.5, 0.5 * k + 0.5})));
  CellPartition part(Domain(ConvexPolytope::box(make_vec({0, 0, 0}), make_vec({1, 1, 1}))), cells);
  CHECK(part.faces().size() == 12);
  for (const auto& f : part.faces()) CHECK(f.measure == doctest::Approx(0.25));
}

TEST_CASE("property: every interior facet is counted twice") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    // Random guillotine partition of the unit square.
    std::vector<ConvexPolytope> cells{rect(0, 0, 1, 1)};
    for (int cut = 0; cut < 6; ++cut) {
      const std::size_t pick = static_cast<std::size_t>(rng.uniform() * cells.size());
      const ConvexPolytope c = cells[pick];
      const Vec n = make_vec({rng.normal(), rng.normal()}).normalized();
      const double off = n.dot(centroid(c));
      auto a = clip(c, {n, off, -1});
      auto b = clip(c, {-n, -off, -1});
      if (a.degenerate() || b.degenerate() || a.is_empty() || b.is_empty()) continue;
      cells[pick] = a;
      cells.push_back(b);
    }
    CellPartition part(Domain(rect(0, 0, 1, 1)), cells);
    double boundary = 0.0;
    for (const auto& c : part.cells()) boundary += perimeter(c);
    double interior = 0.0;
    for (const auto& f : part.faces()) interior += f.measure;
    CHECK(boundary == doctest::Approx(2.0 * interior + 4.0).epsilon(1e-12));
    for (const auto& f : part.faces()) {
      CHECK(f.normal.norm() == doctest::Approx(1.0));
      // The normal points out of cell_a.
      const Vec mid = 0.5 * (f.vertices[0] + f.vertices[1]);
      CHECK(part.cells()[f.cell_a].contains(mid - 1e-6 * f.normal));
      CHECK(part.cells()[f.cell_b].contains(mid + 1e-6 * f.normal));
    }
  }
}
