#pragma once

#include <vector>

#include "breaklab/geometry.hpp"

namespace breaklab::geometry {

/// Shared (d-1)-face between two cells. The normal points from cell_a into
/// cell_b; facet_a / facet_b index the supporting half-spaces of each cell.
struct InteriorFace {
  int cell_a = -1;
  int cell_b = -1;
  int facet_a = -1;
  int facet_b = -1;
  Vec normal;
  /// H^{d-1} of the face (1 for a point face in d = 1).
  double measure = 0.0;
  /// Face vertices in R^d: one point (d=1), two endpoints (d=2), an ordered
  /// polygon (d=3).
  std::vector<Vec> vertices;
};

/// Faces between every pair of cells whose facets are coplanar with opposite
/// normals and overlap in positive (d-1)-measure. Each face appears once,
/// with cell_a < cell_b.
std::vector<InteriorFace> extract_faces(const std::vector<ConvexPolytope>& cells);

/// Finite partition of a domain into convex cells, validated on construction.
class CellPartition {
 public:
  CellPartition() = default;
  /// Throws PartitionError when cells overlap, leave part of the domain
  /// uncovered, stick out of it, or meet along non-matching facets.
  CellPartition(Domain domain, std::vector<ConvexPolytope> cells);

  int dimension() const { return domain_.dimension(); }
  const Domain& domain() const { return domain_; }
  const std::vector<ConvexPolytope>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<InteriorFace>& faces() const { return faces_; }
  /// Face indices touching each cell.
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }

  /// Index of a cell whose closure contains x, or -1.
  int locate(const Vec& x, double tol = kGeomTol) const;

 private:
  Domain domain_;
  std::vector<ConvexPolytope> cells_;
  std::vector<InteriorFace> faces_;
  std::vector<std::vector<int>> adjacency_;
};

std::vector<InteriorFace> extract_faces(const CellPartition& partition);

}  // namespace breaklab::geometry
