#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "breaklab/geometry.hpp"

namespace breaklab::field {

/// Closed-form vector field x -> b(x).
using Generator = std::function<Vec(const Vec&)>;

/// Uniform staggered grid over the bounding box of a domain. Cell c owns the
/// face on its upper side along each axis. Cut cells carry the exact measure
/// of cell and face inside the domain.
class Grid {
 public:
  /// `cells_longest` cells along the longest bounding-box axis.
  Grid(geometry::Domain domain, int cells_longest);

  int dimension() const { return dim_; }
  double spacing() const { return h_; }
  const Vec& origin() const { return origin_; }
  const std::array<int, 3>& shape() const { return n_; }
  int min_axis_cells() const;
  std::size_t cell_count() const { return volume_.size(); }
  const geometry::Domain& domain() const { return domain_; }

  std::array<int, 3> multi_index(std::size_t c) const;
  std::size_t flat_index(const std::array<int, 3>& idx) const;
  /// Neighbor across the upper face along `axis`, or -1.
  long upper(std::size_t c, int axis) const;
  geometry::ConvexPolytope cell_box(std::size_t c) const;
  Vec cell_center(std::size_t c) const;
  /// Cell index holding x (clamped to the grid).
  std::size_t locate(const Vec& x) const;

  /// vol(cell ∩ domain).
  double cell_volume(std::size_t c) const { return volume_[c]; }
  bool active(std::size_t c) const { return volume_[c] > 0.0; }
  /// Fraction of the upper face inside the domain; zero unless both adjacent
  /// cells are active.
  double aperture(std::size_t c, int axis) const { return aperture_[c * 3 + axis]; }
  /// Centroid of the open part of the upper face.
  const Vec& face_centroid(std::size_t c, int axis) const { return face_centroid_[c * 3 + axis]; }

  bool same_as(const Grid& other) const;

 private:
  geometry::Domain domain_;
  int dim_ = 0;
  double h_ = 0.0;
  Vec origin_;
  std::array<int, 3> n_{1, 1, 1};
  std::vector<double> volume_;
  std::vector<double> aperture_;
  std::vector<Vec> face_centroid_;
};

/// Face-normal components on the interior faces of a Grid. The value of node
/// c is the d-vector of normal components on its upper faces.
class GridVectorField {
 public:
  explicit GridVectorField(std::shared_ptr<const Grid> grid);
  /// Face averages of b (exact for affine b); keeps b for point evaluation.
  static GridVectorField sample(std::shared_ptr<const Grid> grid, Generator b);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  int dimension() const { return grid_->dimension(); }

  double flux(std::size_t c, int axis) const { return values_[c * 3 + axis]; }
  /// Writes are ignored on faces outside the field space.
  void set_flux(std::size_t c, int axis, double v);
  /// Node value: the d-vector of upper-face components.
  Vec node_value(std::size_t c) const;
  /// Cell-centered reconstruction: aperture-weighted mean of the two faces
  /// along each axis.
  Vec cell_value(std::size_t c) const;
  /// The generator when present, otherwise the reconstruction of the cell
  /// holding x.
  Vec evaluate(const Vec& x) const;
  bool has_generator() const { return static_cast<bool>(generator_); }

  const std::vector<double>& raw() const { return values_; }

  GridVectorField& operator+=(const GridVectorField& o);
  GridVectorField& operator-=(const GridVectorField& o);
  GridVectorField& operator*=(double s);
  friend GridVectorField operator+(GridVectorField a, const GridVectorField& b) { return a += b; }
  friend GridVectorField operator-(GridVectorField a, const GridVectorField& b) { return a -= b; }
  friend GridVectorField operator*(double s, GridVectorField a) { return a *= s; }

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
  Generator generator_;
};

/// L2 inner product with face weights aperture * h^d. Throws Error on grid
/// mismatch.
double inner(const GridVectorField& f, const GridVectorField& g);
double l2_norm(const GridVectorField& f);
double l2_error(const GridVectorField& f, const GridVectorField& g);

struct HelmholtzSplit {
  GridVectorField gradient_part;
  GridVectorField solenoidal_part;
  /// Cell values of g, volume-weighted mean zero.
  Eigen::VectorXd potential;
  int iterations = 0;
  /// |r| / |rhs| of the Neumann solve.
  double relative_residual = 0.0;
  /// L2 norm of the weighted divergence of the solenoidal part.
  double divergence_norm = 0.0;
  /// <gradient_part, solenoidal_part>.
  double cross_inner = 0.0;
};

/// L2 projection onto discrete gradients: solves the weighted Neumann
/// problem D^T W D g = D^T W b by Jacobi-preconditioned CG. Throws
/// DimensionError when an axis has fewer than 16 cells and ConvergenceError
/// when CG stalls.
HelmholtzSplit helmholtz_project(const GridVectorField& b, double tol);

struct IdempotenceCheck {
  bool ok = false;
  /// |P(P b) - P b| in L2.
  double defect = 0.0;
  double bound = 0.0;
};

/// Projects the gradient part again and compares, with bound
/// 10 tol max(1, |P b|).
IdempotenceCheck projector_idempotence_check(const GridVectorField& b, double tol);

/// Named closed-form fields.
struct FieldSpec {
  std::string name;
  /// Empty means the origin.
  std::vector<double> center;
  double scale = 1.0;
  std::vector<FieldSpec> terms;
};

/// Registry: "zero", "rotational_disk" (d = 2, scale * (-(y - c_y), x - c_x)),
/// "radial_gradient" (scale * (x - c)), "sum" (of terms). Throws Error on an
/// unknown name or a dimension the field does not support.
Generator make_generator(const FieldSpec& spec, int dim);
const std::vector<std::string>& registry_names();

/// Smooth random field: a sum of a few low-frequency sinusoids, seeded.
Generator random_smooth_field(int dim, std::uint64_t seed);

}  // namespace breaklab::field
