#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "breaklab/common.hpp"

namespace breaklab::geometry {

/// Closed half-space {x : normal . x <= offset} with a unit outward normal.
/// The tag records where the constraint came from (a neighbouring Laguerre
/// site, a domain facet, ...) and survives clipping and translation.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;
  int tag = -1;

  /// Normalizes `normal`; throws DegenerateError on a zero normal.
  static HalfSpace make(const Vec& normal, double offset, int tag = -1);

  double slack(const Vec& x) const { return normal.dot(x) - offset; }
  HalfSpace complement() const { return {-normal, -offset, tag}; }
};

struct Box {
  Vec lo;
  Vec hi;

  bool overlaps(const Box& other, double pad = kGeomTol) const;
  double volume() const;
  Box merged(const Box& other) const;
};

/// Bounded convex cell in dimension 1, 2 or 3, held both as a vertex list and
/// as a list of facet-defining half-spaces. In d = 2 vertices run
/// counterclockwise and half-space k supports the edge (k, k+1).
class ConvexPolytope {
 public:
  ConvexPolytope() = default;

  static ConvexPolytope empty(int dim);
  static ConvexPolytope interval(double lo, double hi);
  static ConvexPolytope box(const Vec& lo, const Vec& hi);
  /// Convex polygon from its vertices in either orientation.
  static ConvexPolytope polygon(std::vector<Vec> vertices);
  static ConvexPolytope regular_polygon(const Vec& center, double radius, int sides);
  /// Intersection of half-spaces. The caller guarantees boundedness.
  static ConvexPolytope from_halfspaces(int dim, std::vector<HalfSpace> halfspaces);
  /// Convex hull of a point set. Throws DegenerateError when the hull has
  /// empty interior.
  static ConvexPolytope hull(int dim, const std::vector<Vec>& points);

  int dimension() const { return dim_; }
  bool is_empty() const { return vertices_.empty(); }
  /// True when the interior is (numerically) empty but the set is not.
  bool degenerate() const { return degenerate_; }

  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<HalfSpace>& halfspaces() const { return halfspaces_; }
  /// Ordered vertex indices of facet k (the facet supported by halfspaces()[k]).
  const std::vector<int>& facet(std::size_t k) const { return facets_[k]; }
  std::size_t facet_count() const { return halfspaces_.size(); }

  bool contains(const Vec& x, double tol = kGeomTol) const;
  Box bounds() const;

 private:
  friend class PolytopeBuilder;
  friend double volume(const ConvexPolytope&);
  friend ConvexPolytope clip(const ConvexPolytope&, const HalfSpace&);
  friend ConvexPolytope translate(const ConvexPolytope&, const Vec&);

  void finalize();
  double raw_volume() const;

  int dim_ = 0;
  std::vector<Vec> vertices_;
  std::vector<HalfSpace> halfspaces_;
  std::vector<std::vector<int>> facets_;
  bool degenerate_ = false;
};

/// Lebesgue measure; exact in every supported dimension. Zero when empty or
/// degenerate.
double volume(const ConvexPolytope& p);
Vec centroid(const ConvexPolytope& p);
/// Integral of |x - about|^2 over p.
double second_moment(const ConvexPolytope& p, const Vec& about);
double diameter(const ConvexPolytope& p);
/// (d-1)-dimensional measure of facet k; counting measure (1) when d = 1.
double facet_measure(const ConvexPolytope& p, std::size_t k);
/// Largest ball inside p: returns {center, radius}.
std::pair<Vec, double> inscribed_ball(const ConvexPolytope& p);

ConvexPolytope clip(const ConvexPolytope& p, const HalfSpace& h);
/// Raw intersection, possibly empty or degenerate. Throws DimensionError.
ConvexPolytope intersection(const ConvexPolytope& p, const ConvexPolytope& q);
/// Intersection with an empty marker for measure-zero results.
std::optional<ConvexPolytope> intersect(const ConvexPolytope& p, const ConvexPolytope& q);
double intersection_volume(const ConvexPolytope& p, const ConvexPolytope& q);
ConvexPolytope translate(const ConvexPolytope& p, const Vec& shift);
/// p minus q as a list of convex pieces with disjoint interiors.
std::vector<ConvexPolytope> subtract(const ConvexPolytope& p, const ConvexPolytope& q);
/// Exact measure of a finite union of convex polytopes.
double union_volume(std::span<const ConvexPolytope> pieces);

/// Finite union of convex pieces with pairwise-disjoint interiors.
class Domain {
 public:
  Domain() = default;
  explicit Domain(ConvexPolytope piece);
  explicit Domain(std::vector<ConvexPolytope> pieces);

  int dimension() const { return pieces_.front().dimension(); }
  const std::vector<ConvexPolytope>& pieces() const { return pieces_; }
  bool is_convex() const { return pieces_.size() == 1; }
  const ConvexPolytope& convex_piece() const;
  double volume() const;
  bool contains(const Vec& x, double tol = kGeomTol) const;
  Box bounds() const;
  /// Distance from x to the complement, measured inside the piece holding x.
  double interior_depth(const Vec& x) const;
  double inradius() const;
  double diameter() const;

 private:
  std::vector<ConvexPolytope> pieces_;
};

struct PointSample {
  int dimension = 0;
  std::vector<Vec> points;
  std::uint64_t seed = 0;
  /// vol(region) / count.
  double weight = 0.0;
};

/// Uniform rejection sampling in the bounding box; deterministic per seed.
PointSample sample_points(const Domain& region, std::size_t count, std::uint64_t seed);
PointSample sample_points(const ConvexPolytope& region, std::size_t count, std::uint64_t seed);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Hit-or-miss volume estimate over the bounding box.
McEstimate mc_volume(const ConvexPolytope& p, std::size_t count, std::uint64_t seed);

}  // namespace breaklab::geometry
