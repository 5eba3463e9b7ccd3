#include "breaklab/field.hpp"

#include <algorithm>
#include <cmath>

#include "breaklab/parallel.hpp"

namespace breaklab::field {

namespace {

// Measure and centroid of {x in cell face : x in piece}, the face lying in
// the hyperplane x_axis = level.
std::pair<double, Vec> face_part(const geometry::ConvexPolytope& piece, const Vec& lo, const Vec& hi, int axis,
                                 double level) {
  const int dim = piece.dimension();
  Vec at(dim);
  if (dim == 1) {
    at(0) = level;
    return {piece.contains(at, 0.0) ? 1.0 : 0.0, at};
  }
  Vec flo(dim - 1);
  Vec fhi(dim - 1);
  for (int a = 0, k = 0; a < dim; ++a)
    if (a != axis) {
      flo(k) = lo(a);
      fhi(k) = hi(a);
      ++k;
    }
  auto face = geometry::ConvexPolytope::box(flo, fhi);
  for (const auto& hs : piece.halfspaces()) {
    Vec n(dim - 1);
    for (int a = 0, k = 0; a < dim; ++a)
      if (a != axis) n(k++) = hs.normal(a);
    const double off = hs.offset - hs.normal(axis) * level;
    if (n.norm() < 1e-14) {
      if (off < 0.0) return {0.0, at};
      continue;
    }
    face = geometry::clip(face, geometry::HalfSpace{n / n.norm(), off / n.norm(), hs.tag});
    if (face.is_empty()) return {0.0, at};
  }
  const double m = geometry::volume(face);
  if (m <= 0.0) return {0.0, at};
  const Vec c = geometry::centroid(face);
  for (int a = 0, k = 0; a < dim; ++a) at(a) = a == axis ? level : c(k++);
  return {m, at};
}

bool box_inside(const geometry::ConvexPolytope& piece, const Vec& lo, const Vec& hi) {
  const int dim = piece.dimension();
  for (int mask = 0; mask < (1 << dim); ++mask) {
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x(a) = (mask >> a & 1) ? hi(a) : lo(a);
    if (!piece.contains(x, 0.0)) return false;
  }
  return true;
}

}  // namespace

Grid::Grid(geometry::Domain domain, int cells_longest) : domain_(std::move(domain)) {
  if (cells_longest < 1) throw DimensionError("grid needs at least one cell per axis");
  dim_ = domain_.dimension();
  const auto box = domain_.bounds();
  origin_ = box.lo;
  const Vec extent = box.hi - box.lo;
  h_ = extent.maxCoeff() / cells_longest;
  for (int a = 0; a < dim_; ++a) n_[a] = std::max(1, static_cast<int>(std::ceil(extent(a) / h_ - 1e-9)));

  const std::size_t cells = static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
  volume_.assign(cells, 0.0);
  const double full = std::pow(h_, dim_);
  parallel_for(cells, [&](std::size_t c) {
    const auto cell = cell_box(c);
    const auto b = cell.bounds();
    double v = 0.0;
    for (const auto& piece : domain_.pieces()) {
      if (box_inside(piece, b.lo, b.hi)) {
        v += full;
        continue;
      }
      v += geometry::intersection_volume(cell, piece);
    }
    volume_[c] = v > 1e-12 * full ? std::min(v, full) : 0.0;
  });

  aperture_.assign(cells * 3, 0.0);
  face_centroid_.assign(cells * 3, Vec::Zero(dim_));
  const double full_face = std::pow(h_, dim_ - 1);
  parallel_for(cells, [&](std::size_t c) {
    if (!active(c)) return;
    const auto b = cell_box(c).bounds();
    for (int a = 0; a < dim_; ++a) {
      const long up = upper(c, a);
      if (up < 0 || !active(static_cast<std::size_t>(up))) continue;
      const double level = b.hi(a);
      double m = 0.0;
      Vec moment = Vec::Zero(dim_);
      for (const auto& piece : domain_.pieces()) {
        const auto [pm, pc] = face_part(piece, b.lo, b.hi, a, level);
        m += pm;
        moment += pm * pc;
      }
      if (m <= 1e-12 * full_face) continue;
      aperture_[c * 3 + a] = std::min(1.0, m / full_face);
      face_centroid_[c * 3 + a] = moment / m;
    }
  });
}

int Grid::min_axis_cells() const {
  int m = n_[0];
  for (int a = 1; a < dim_; ++a) m = std::min(m, n_[a]);
  return m;
}

std::array<int, 3> Grid::multi_index(std::size_t c) const {
  const int i = static_cast<int>(c % n_[0]);
  const int j = static_cast<int>((c / n_[0]) % n_[1]);
  const int k = static_cast<int>(c / (static_cast<std::size_t>(n_[0]) * n_[1]));
  return {i, j, k};
}

std::size_t Grid::flat_index(const std::array<int, 3>& idx) const {
  return static_cast<std::size_t>(idx[0]) + static_cast<std::size_t>(n_[0]) * (idx[1] + static_cast<std::size_t>(n_[1]) * idx[2]);
}

long Grid::upper(std::size_t c, int axis) const {
  auto idx = multi_index(c);
  if (idx[axis] + 1 >= n_[axis]) return -1;
  ++idx[axis];
  return static_cast<long>(flat_index(idx));
}

geometry::ConvexPolytope Grid::cell_box(std::size_t c) const {
  const auto idx = multi_index(c);
  Vec lo(dim_);
  Vec hi(dim_);
  for (int a = 0; a < dim_; ++a) {
    lo(a) = origin_(a) + idx[a] * h_;
    hi(a) = lo(a) + h_;
  }
  return geometry::ConvexPolytope::box(lo, hi);
}

Vec Grid::cell_center(std::size_t c) const {
  const auto idx = multi_index(c);
  Vec x(dim_);
  for (int a = 0; a < dim_; ++a) x(a) = origin_(a) + (idx[a] + 0.5) * h_;
  return x;
}

std::size_t Grid::locate(const Vec& x) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a)
    idx[a] = std::clamp(static_cast<int>(std::floor((x(a) - origin_(a)) / h_)), 0, n_[a] - 1);
  return flat_index(idx);
}

bool Grid::same_as(const Grid& other) const {
  return this == &other || (dim_ == other.dim_ && h_ == other.h_ && n_ == other.n_ && origin_ == other.origin_ &&
                            volume_ == other.volume_ && aperture_ == other.aperture_);
}

GridVectorField::GridVectorField(std::shared_ptr<const Grid> grid) : grid_(std::move(grid)) {
  values_.assign(grid_->cell_count() * 3, 0.0);
}

GridVectorField GridVectorField::sample(std::shared_ptr<const Grid> grid, Generator b) {
  GridVectorField f(std::move(grid));
  const Grid& g = *f.grid_;
  for (std::size_t c = 0; c < g.cell_count(); ++c)
    for (int a = 0; a < g.dimension(); ++a)
      if (g.aperture(c, a) > 0.0) f.values_[c * 3 + a] = b(g.face_centroid(c, a))(a);
  f.generator_ = std::move(b);
  return f;
}

void GridVectorField::set_flux(std::size_t c, int axis, double v) {
  if (grid_->aperture(c, axis) > 0.0) values_[c * 3 + axis] = v;
}

Vec GridVectorField::node_value(std::size_t c) const {
  Vec v(dimension());
  for (int a = 0; a < dimension(); ++a) v(a) = values_[c * 3 + a];
  return v;
}

Vec GridVectorField::cell_value(std::size_t c) const {
  const Grid& g = *grid_;
  Vec v = Vec::Zero(dimension());
  auto idx = g.multi_index(c);
  for (int a = 0; a < dimension(); ++a) {
    double num = g.aperture(c, a) * values_[c * 3 + a];
    double den = g.aperture(c, a);
    if (idx[a] > 0) {
      auto lo = idx;
      --lo[a];
      const std::size_t l = g.flat_index(lo);
      num += g.aperture(l, a) * values_[l * 3 + a];
      den += g.aperture(l, a);
    }
    if (den > 0.0) v(a) = num / den;
  }
  return v;
}

Vec GridVectorField::evaluate(const Vec& x) const {
  if (generator_) return generator_(x);
  return cell_value(grid_->locate(x));
}

GridVectorField& GridVectorField::operator+=(const GridVectorField& o) {
  if (!grid_->same_as(*o.grid_)) throw Error("grid mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  generator_ = nullptr;
  return *this;
}

GridVectorField& GridVectorField::operator-=(const GridVectorField& o) {
  if (!grid_->same_as(*o.grid_)) throw Error("grid mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  generator_ = nullptr;
  return *this;
}

GridVectorField& GridVectorField::operator*=(double s) {
  for (double& v : values_) v *= s;
  generator_ = nullptr;
  return *this;
}

double inner(const GridVectorField& f, const GridVectorField& g) {
  const Grid& grid = f.grid();
  if (!grid.same_as(g.grid())) throw Error("grid mismatch");
  const double cell = std::pow(grid.spacing(), grid.dimension());
  double s = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    for (int a = 0; a < grid.dimension(); ++a) s += grid.aperture(c, a) * f.flux(c, a) * g.flux(c, a);
  return s * cell;
}

double l2_norm(const GridVectorField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

double l2_error(const GridVectorField& f, const GridVectorField& g) { return l2_norm(f - g); }

namespace {

struct NeumannOperator {
  const Grid& grid;
  double face_weight;  // h^d / h^2

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
    y.setZero(x.size());
    for (std::size_t c = 0; c < grid.cell_count(); ++c)
      for (int a = 0; a < grid.dimension(); ++a) {
        const double w = grid.aperture(c, a);
        if (w == 0.0) continue;
        const auto up = static_cast<std::size_t>(grid.upper(c, a));
        const double flux = w * face_weight * (x(up) - x(c));
        y(c) -= flux;
        y(up) += flux;
      }
  }

  Eigen::VectorXd diagonal() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.cell_count()));
    for (std::size_t c = 0; c < grid.cell_count(); ++c)
      for (int a = 0; a < grid.dimension(); ++a) {
        const double w = grid.aperture(c, a);
        if (w == 0.0) continue;
        d(c) += w * face_weight;
        d(grid.upper(c, a)) += w * face_weight;
      }
    return d;
  }
};

// D^T W u, the right-hand side of the Neumann problem.
Eigen::VectorXd weighted_divergence(const GridVectorField& u) {
  const Grid& grid = u.grid();
  const double scale = std::pow(grid.spacing(), grid.dimension() - 1);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.cell_count()));
  for (std::size_t c = 0; c < grid.cell_count(); ++c)
    for (int a = 0; a < grid.dimension(); ++a) {
      const double w = grid.aperture(c, a);
      if (w == 0.0) continue;
      const double flux = w * scale * u.flux(c, a);
      r(c) -= flux;
      r(grid.upper(c, a)) += flux;
    }
  return r;
}

GridVectorField discrete_gradient(const std::shared_ptr<const Grid>& grid, const Eigen::VectorXd& g) {
  GridVectorField out(grid);
  for (std::size_t c = 0; c < grid->cell_count(); ++c)
    for (int a = 0; a < grid->dimension(); ++a)
      if (grid->aperture(c, a) > 0.0)
        out.set_flux(c, a, (g(grid->upper(c, a)) - g(static_cast<Eigen::Index>(c))) / grid->spacing());
  return out;
}

}  // namespace

HelmholtzSplit helmholtz_project(const GridVectorField& b, double tol) {
  const auto& grid_ptr = b.grid_ptr();
  const Grid& grid = *grid_ptr;
  if (grid.min_axis_cells() < 16) throw DimensionError("Helmholtz projection needs at least 16 cells per axis");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  const NeumannOperator op{grid, std::pow(grid.spacing(), grid.dimension() - 2)};
  const Eigen::VectorXd rhs = weighted_divergence(b);
  const Eigen::VectorXd diag = op.diagonal();
  const Eigen::Index n = rhs.size();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = rhs;
  const double rhs_norm = rhs.norm();
  const double target = 0.1 * tol * rhs_norm;
  Eigen::VectorXd z(n);
  auto precondition = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    for (Eigen::Index k = 0; k < n; ++k) out(k) = diag(k) > 0.0 ? in(k) / diag(k) : 0.0;
  };
  precondition(r, z);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  int it = 0;
  const int max_it = std::max(1000, 20 * static_cast<int>(n));
  while (r.norm() > target && it < max_it) {
    op.apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    precondition(r, z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    ++it;
  }
  const double rel = rhs_norm > 0.0 ? r.norm() / rhs_norm : 0.0;
  if (rel > tol) throw ConvergenceError("Neumann solve did not converge", rel);

  double mass = 0.0;
  double vol = 0.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    mass += grid.cell_volume(c) * x(c);
    vol += grid.cell_volume(c);
  }
  for (std::size_t c = 0; c < grid.cell_count(); ++c) x(c) = grid.active(c) ? x(c) - mass / vol : 0.0;

  HelmholtzSplit s{discrete_gradient(grid_ptr, x), b, x, it, rel, 0.0, 0.0};
  s.solenoidal_part -= s.gradient_part;
  s.divergence_norm = weighted_divergence(s.solenoidal_part).norm();
  s.cross_inner = inner(s.gradient_part, s.solenoidal_part);
  return s;
}

IdempotenceCheck projector_idempotence_check(const GridVectorField& b, double tol) {
  const auto first = helmholtz_project(b, tol);
  const auto second = helmholtz_project(first.gradient_part, tol);
  IdempotenceCheck r;
  r.defect = l2_error(second.gradient_part, first.gradient_part);
  r.bound = 10.0 * tol * std::max(1.0, l2_norm(first.gradient_part));
  r.ok = r.defect <= r.bound;
  return r;
}

namespace {

Vec center_of(const FieldSpec& spec, int dim) {
  if (spec.center.empty()) return Vec::Zero(dim);
  if (static_cast<int>(spec.center.size()) != dim) throw Error("field center has the wrong dimension");
  Vec c(dim);
  for (int a = 0; a < dim; ++a) c(a) = spec.center[a];
  return c;
}

}  // namespace

Generator make_generator(const FieldSpec& spec, int dim) {
  if (dim < 1 || dim > 3) throw DimensionError("fields live in dimension 1..3");
  const double s = spec.scale;
  if (spec.name == "zero") return [dim](const Vec&) { return Vec::Zero(dim); };
  if (spec.name == "radial_gradient") {
    const Vec c = center_of(spec, dim);
    return [c, s](const Vec& x) -> Vec { return s * (x - c); };
  }
  if (spec.name == "rotational_disk") {
    if (dim != 2) throw DimensionError("rotational_disk is two-dimensional");
    const Vec c = center_of(spec, dim);
    return [c, s](const Vec& x) { return make_vec({-s * (x(1) - c(1)), s * (x(0) - c(0))}); };
  }
  if (spec.name == "sum") {
    std::vector<Generator> parts;
    for (const auto& t : spec.terms) parts.push_back(make_generator(t, dim));
    return [parts, s, dim](const Vec& x) {
      Vec v = Vec::Zero(dim);
      for (const auto& p : parts) v += p(x);
      return Vec(s * v);
    };
  }
  throw Error("unknown field '" + spec.name + "'");
}

const std::vector<std::string>& registry_names() {
  static const std::vector<std::string> names{"zero", "rotational_disk", "radial_gradient", "sum"};
  return names;
}

Generator random_smooth_field(int dim, std::uint64_t seed) {
  Rng rng(seed);
  struct Mode {
    Vec freq;
    Vec amp;
    double phase;
  };
  std::vector<Mode> modes;
  for (int k = 0; k < 4; ++k) {
    Mode m{Vec(dim), Vec(dim), rng.uniform(0.0, 6.283185307179586)};
    for (int a = 0; a < dim; ++a) {
      m.freq(a) = rng.uniform(-3.0, 3.0);
      m.amp(a) = rng.normal();
    }
    modes.push_back(m);
  }
  return [modes, dim](const Vec& x) {
    Vec v = Vec::Zero(dim);
    for (const auto& m : modes) v += m.amp * std::sin(m.freq.dot(x) + m.phase);
    return v;
  };
}

}  // namespace breaklab::field
