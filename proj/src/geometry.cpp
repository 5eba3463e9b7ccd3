#include "breaklab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace breaklab::geometry {

namespace {

// Vertices with slack below this count as inside when clipping.
constexpr double kClipEps = 1e-12;
constexpr double kMergeEps = 1e-11;

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

Eigen::Vector3d to3(const Vec& v) { return {v(0), v(1), v(2)}; }

Vec from3(const Eigen::Vector3d& v) { return make_vec({v(0), v(1), v(2)}); }

// Orthonormal (u, w) spanning the plane orthogonal to n, with u x w = n.
std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_basis(const Eigen::Vector3d& n) {
  const Eigen::Vector3d helper = std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d u = helper.cross(n).normalized();
  return {u, n.cross(u)};
}

double polygon_area_3d(const std::vector<Vec>& verts, const std::vector<int>& idx, const Vec& normal) {
  if (idx.size() < 3) return 0.0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < idx.size(); ++i)
    acc += to3(verts[idx[i]]).cross(to3(verts[idx[(i + 1) % idx.size()]]));
  return 0.5 * std::abs(acc.dot(to3(normal)));
}

bool near(const Vec& a, const Vec& b) { return (a - b).norm() <= kMergeEps * (1.0 + a.norm()); }

void push_unique(std::vector<Vec>& pts, const Vec& x) {
  for (const auto& p : pts)
    if (near(p, x)) return;
  pts.push_back(x);
}

}  // namespace

class PolytopeBuilder {
 public:
  // d = 2 from counterclockwise vertices and matching edge half-spaces.
  static ConvexPolytope polygon(std::vector<Vec> verts, std::vector<HalfSpace> edges) {
    // Drop zero-length edges; the later vertex keeps its outgoing label.
    std::vector<Vec> v;
    std::vector<HalfSpace> e;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      if (!v.empty() && near(v.back(), verts[i])) {
        v.back() = verts[i];
        e.back() = edges[i];
        continue;
      }
      v.push_back(verts[i]);
      e.push_back(edges[i]);
    }
    while (v.size() > 1 && near(v.back(), v.front())) {
      v.pop_back();
      e.pop_back();
    }
    ConvexPolytope p = ConvexPolytope::empty(2);
    if (v.size() < 3) return p;
    p.vertices_ = std::move(v);
    p.halfspaces_ = std::move(e);
    p.finalize();
    return p;
  }

  static ConvexPolytope interval(double lo, double hi, int lo_tag, int hi_tag) {
    ConvexPolytope p = ConvexPolytope::empty(1);
    if (hi < lo - kClipEps) return p;
    hi = std::max(lo, hi);
    p.halfspaces_ = {{make_vec({-1.0}), -lo, lo_tag}, {make_vec({1.0}), hi, hi_tag}};
    p.vertices_ = {make_vec({lo}), make_vec({hi})};
    p.finalize();
    return p;
  }

  static ConvexPolytope polygon_from_halfspaces(const std::vector<HalfSpace>& hs) {
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      for (std::size_t j = i + 1; j < hs.size(); ++j) {
        const double det = cross2(hs[i].normal, hs[j].normal);
        if (std::abs(det) < 1e-14) continue;
        const Vec x = make_vec({(hs[i].offset * hs[j].normal(1) - hs[j].offset * hs[i].normal(1)) / det,
                                (hs[i].normal(0) * hs[j].offset - hs[j].normal(0) * hs[i].offset) / det});
        if (feasible(hs, x)) push_unique(pts, x);
      }
    }
    if (pts.size() < 3) return ConvexPolytope::empty(2);
    Vec c = Vec::Zero(2);
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const Vec& a, const Vec& b) {
      return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
    });
    std::vector<HalfSpace> edges;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Vec& a = pts[k];
      const Vec& b = pts[(k + 1) % pts.size()];
      const Vec e = b - a;
      const Vec outward = make_vec({e(1), -e(0)}).normalized();
      const HalfSpace* best = &hs.front();
      double best_err = std::numeric_limits<double>::infinity();
      for (const auto& h : hs) {
        const double err = std::abs(h.slack(a)) + std::abs(h.slack(b)) + (h.normal - outward).norm();
        if (err < best_err) best_err = err, best = &h;
      }
      edges.push_back(*best);
    }
    return polygon(std::move(pts), std::move(edges));
  }

  static ConvexPolytope polyhedron_from_halfspaces(const std::vector<HalfSpace>& hs) {
    std::vector<Vec> pts;
    const std::size_t m = hs.size();
    std::vector<Eigen::Vector3d> n(m);
    for (std::size_t i = 0; i < m; ++i) n[i] = to3(hs[i].normal);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const Eigen::Vector3d nbc_a = n[a].cross(n[b]);
        if (nbc_a.norm() < 1e-12) continue;
        for (std::size_t c = b + 1; c < m; ++c) {
          const double det = n[a].dot(n[b].cross(n[c]));
          if (std::abs(det) < 1e-12) continue;
          const Eigen::Vector3d x =
              (hs[a].offset * n[b].cross(n[c]) + hs[b].offset * n[c].cross(n[a]) + hs[c].offset * nbc_a) / det;
          const Vec xv = from3(x);
          if (feasible(hs, xv)) push_unique(pts, xv);
        }
      }
    }
    ConvexPolytope p = ConvexPolytope::empty(3);
    if (pts.size() < 4) return p;
    for (std::size_t k = 0; k < m; ++k) {
      const HalfSpace& h = hs[k];
      bool duplicate = false;
      for (const auto& kept : p.halfspaces_)
        if (kept.normal.dot(h.normal) > 1.0 - 1e-12 && std::abs(kept.offset - h.offset) < 1e-11) duplicate = true;
      if (duplicate) continue;
      std::vector<int> on;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (std::abs(h.slack(pts[i])) <= 1e-9 * (1.0 + pts[i].norm())) on.push_back(static_cast<int>(i));
      if (on.size() < 3) continue;
      const auto [u, w] = plane_basis(n[k]);
      Eigen::Vector3d c = Eigen::Vector3d::Zero();
      for (int i : on) c += to3(pts[i]);
      c /= static_cast<double>(on.size());
      std::sort(on.begin(), on.end(), [&](int i, int j) {
        const Eigen::Vector3d a = to3(pts[i]) - c;
        const Eigen::Vector3d b = to3(pts[j]) - c;
        return std::atan2(a.dot(w), a.dot(u)) < std::atan2(b.dot(w), b.dot(u));
      });
      if (polygon_area_3d(pts, on, h.normal) <= 1e-20) continue;
      p.halfspaces_.push_back(h);
      p.facets_.push_back(std::move(on));
    }
    if (p.facets_.size() < 4) return ConvexPolytope::empty(3);
    p.vertices_ = std::move(pts);
    p.finalize();
    return p;
  }

 private:
  static bool feasible(const std::vector<HalfSpace>& hs, const Vec& x) {
    const double tol = 1e-10 * (1.0 + x.norm());
    for (const auto& h : hs)
      if (h.slack(x) > tol) return false;
    return true;
  }
};

HalfSpace HalfSpace::make(const Vec& normal, double offset, int tag) {
  const double len = normal.norm();
  if (!(len > 0.0)) throw DegenerateError("half-space with zero normal");
  return {normal / len, offset / len, tag};
}

bool Box::overlaps(const Box& other, double pad) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (hi(i) < other.lo(i) - pad || other.hi(i) < lo(i) - pad) return false;
  return true;
}

double Box::volume() const { return (hi - lo).cwiseMax(0.0).prod(); }

Box Box::merged(const Box& other) const { return {lo.cwiseMin(other.lo), hi.cwiseMax(other.hi)}; }

ConvexPolytope ConvexPolytope::empty(int dim) {
  if (dim < 1 || dim > 3) throw DimensionError("dimension must be 1, 2 or 3");
  ConvexPolytope p;
  p.dim_ = dim;
  return p;
}

ConvexPolytope ConvexPolytope::interval(double lo, double hi) { return PolytopeBuilder::interval(lo, hi, -1, -1); }

ConvexPolytope ConvexPolytope::box(const Vec& lo, const Vec& hi) {
  const int dim = static_cast<int>(lo.size());
  if (hi.size() != lo.size()) throw DimensionError("box corners differ in dimension");
  if (dim == 1) return interval(lo(0), hi(0));
  if (dim == 2)
    return polygon({lo, make_vec({hi(0), lo(1)}), hi, make_vec({lo(0), hi(1)})});
  std::vector<HalfSpace> hs;
  for (int a = 0; a < dim; ++a) {
    Vec e = Vec::Zero(dim);
    e(a) = 1.0;
    hs.push_back({-e, -lo(a), -1});
    hs.push_back({e, hi(a), -1});
  }
  return from_halfspaces(dim, std::move(hs));
}

ConvexPolytope ConvexPolytope::polygon(std::vector<Vec> vertices) {
  for (const auto& v : vertices)
    if (v.size() != 2) throw DimensionError("polygon vertices must be 2-vectors");
  std::vector<Vec> pts;
  for (const auto& v : vertices) push_unique(pts, v);
  if (pts.size() < 3) return empty(2);
  double area2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) area2 += cross2(pts[i], pts[(i + 1) % pts.size()]);
  if (area2 < 0.0) std::reverse(pts.begin(), pts.end());
  const std::size_t n = pts.size();
  std::vector<HalfSpace> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec e = pts[(i + 1) % n] - pts[i];
    const Vec out = make_vec({e(1), -e(0)});
    edges.push_back(HalfSpace::make(out, out.dot(pts[i])));
  }
  for (const auto& h : edges)
    for (const auto& v : pts)
      if (h.slack(v) > 1e-9) throw Error("polygon is not convex");
  return PolytopeBuilder::polygon(std::move(pts), std::move(edges));
}

ConvexPolytope ConvexPolytope::regular_polygon(const Vec& center, double radius, int sides) {
  if (sides < 3) throw DegenerateError("regular polygon needs at least 3 sides");
  std::vector<Vec> pts;
  for (int k = 0; k < sides; ++k) {
    const double a = 2.0 * M_PI * k / sides;
    pts.push_back(center + radius * make_vec({std::cos(a), std::sin(a)}));
  }
  return polygon(std::move(pts));
}

ConvexPolytope ConvexPolytope::from_halfspaces(int dim, std::vector<HalfSpace> halfspaces) {
  for (auto& h : halfspaces) {
    if (h.normal.size() != dim) throw DimensionError("half-space dimension mismatch");
    h = HalfSpace::make(h.normal, h.offset, h.tag);
  }
  switch (dim) {
    case 1: {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      int lo_tag = -1;
      int hi_tag = -1;
      for (const auto& h : halfspaces) {
        if (h.normal(0) > 0) {
          if (h.offset < hi) hi = h.offset, hi_tag = h.tag;
        } else if (-h.offset > lo) {
          lo = -h.offset, lo_tag = h.tag;
        }
      }
      if (!std::isfinite(lo) || !std::isfinite(hi)) throw DegenerateError("unbounded interval");
      return PolytopeBuilder::interval(lo, hi, lo_tag, hi_tag);
    }
    case 2:
      return PolytopeBuilder::polygon_from_halfspaces(halfspaces);
    case 3:
      return PolytopeBuilder::polyhedron_from_halfspaces(halfspaces);
    default:
      throw DimensionError("dimension must be 1, 2 or 3");
  }
}

ConvexPolytope ConvexPolytope::hull(int dim, const std::vector<Vec>& points) {
  for (const auto& x : points)
    if (x.size() != dim) throw DimensionError("hull point dimension mismatch");
  if (points.size() < static_cast<std::size_t>(dim) + 1) throw DegenerateError("too few points for a hull");
  ConvexPolytope p;
  switch (dim) {
    case 1: {
      const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                                [](const Vec& a, const Vec& b) { return a(0) < b(0); });
      p = interval((*lo)(0), (*hi)(0));
      break;
    }
    case 2: {
      // Monotone chain.
      std::vector<Vec> pts = points;
      std::sort(pts.begin(), pts.end(),
                [](const Vec& a, const Vec& b) { return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1)); });
      std::vector<Vec> h(2 * pts.size());
      std::size_t k = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0.0) --k;
        h[k++] = pts[i];
      }
      for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0.0) --k;
        h[k++] = pts[i];
      }
      h.resize(k - 1);
      if (h.size() < 3) throw DegenerateError("hull has empty interior");
      p = polygon(std::move(h));
      break;
    }
    case 3: {
      // Supporting planes through point triples; fine for small inputs.
      const std::size_t n = points.size();
      double scale = 0.0;
      for (const auto& x : points) scale = std::max(scale, x.norm());
      const double tol = 1e-12 * (1.0 + scale);
      std::vector<HalfSpace> hs;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          for (std::size_t c = b + 1; c < n; ++c) {
            const Eigen::Vector3d nrm = (to3(points[b]) - to3(points[a])).cross(to3(points[c]) - to3(points[a]));
            if (nrm.norm() <= tol * (1.0 + scale)) continue;
            for (double sign : {1.0, -1.0}) {
              const HalfSpace h = HalfSpace::make(from3(sign * nrm), sign * nrm.dot(to3(points[a])));
              bool supporting = true;
              for (const auto& x : points)
                if (h.slack(x) > tol) supporting = false;
              if (!supporting) continue;
              bool seen = false;
              for (const auto& k : hs)
                if (k.normal.dot(h.normal) > 1.0 - 1e-12 && std::abs(k.offset - h.offset) <= tol) seen = true;
              if (!seen) hs.push_back(h);
            }
          }
      if (hs.size() < 4) throw DegenerateError("hull has empty interior");
      p = from_halfspaces(3, std::move(hs));
      break;
    }
    default:
      throw DimensionError("dimension must be 1, 2 or 3");
  }
  if (p.is_empty() || p.degenerate()) throw DegenerateError("hull has empty interior");
  return p;
}

void ConvexPolytope::finalize() {
  if (dim_ == 1) {
    facets_ = {{0}, {1}};
  } else if (dim_ == 2) {
    facets_.clear();
    const int n = static_cast<int>(vertices_.size());
    for (int k = 0; k < n; ++k) facets_.push_back({k, (k + 1) % n});
  }
  degenerate_ = false;
  if (vertices_.empty()) return;
  // Bounding-box diagonal: within sqrt(d) of the diameter and linear in the
  // vertex count.
  const Box b = bounds();
  const double d = (b.hi - b.lo).norm();
  degenerate_ = raw_volume() <= kGeomTol * std::pow(std::max(d, kGeomTol), dim_ - 1);
}

double ConvexPolytope::raw_volume() const {
  if (vertices_.empty()) return 0.0;
  switch (dim_) {
    case 1:
      return vertices_[1](0) - vertices_[0](0);
    case 2: {
      double a = 0.0;
      for (std::size_t i = 0; i < vertices_.size(); ++i)
        a += cross2(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
      return 0.5 * a;
    }
    default: {
      Vec c = Vec::Zero(3);
      for (const auto& v : vertices_) c += v;
      c /= static_cast<double>(vertices_.size());
      double vol = 0.0;
      for (std::size_t k = 0; k < halfspaces_.size(); ++k)
        vol += -halfspaces_[k].slack(c) * polygon_area_3d(vertices_, facets_[k], halfspaces_[k].normal) / 3.0;
      return vol;
    }
  }
}

bool ConvexPolytope::contains(const Vec& x, double tol) const {
  if (is_empty()) return false;
  for (const auto& h : halfspaces_)
    if (h.slack(x) > tol) return false;
  return true;
}

Box ConvexPolytope::bounds() const {
  if (vertices_.empty()) {
    const Vec inf = Vec::Constant(dim_, std::numeric_limits<double>::infinity());
    return {inf, -inf};
  }
  Vec lo = vertices_.front();
  Vec hi = vertices_.front();
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

double volume(const ConvexPolytope& p) {
  if (p.is_empty() || p.degenerate()) return 0.0;
  return p.raw_volume();
}

namespace {

// Calls f(signed measure, simplex vertices) over a simplicial decomposition.
template <class F>
void for_each_simplex(const ConvexPolytope& p, F&& f) {
  const auto& v = p.vertices();
  switch (p.dimension()) {
    case 1:
      f(v[1](0) - v[0](0), std::vector<Vec>{v[0], v[1]});
      return;
    case 2:
      for (std::size_t i = 1; i + 1 < v.size(); ++i)
        f(0.5 * cross2(v[i] - v[0], v[i + 1] - v[0]), std::vector<Vec>{v[0], v[i], v[i + 1]});
      return;
    default: {
      Vec c = Vec::Zero(3);
      for (const auto& x : v) c += x;
      c /= static_cast<double>(v.size());
      for (std::size_t k = 0; k < p.facet_count(); ++k) {
        const auto& idx = p.facet(k);
        for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
          const Eigen::Vector3d a = to3(v[idx[0]]) - to3(c);
          const Eigen::Vector3d b = to3(v[idx[i]]) - to3(c);
          const Eigen::Vector3d d = to3(v[idx[i + 1]]) - to3(c);
          f(a.dot(b.cross(d)) / 6.0, std::vector<Vec>{c, v[idx[0]], v[idx[i]], v[idx[i + 1]]});
        }
      }
    }
  }
}

}  // namespace

Vec centroid(const ConvexPolytope& p) {
  if (p.is_empty()) throw DegenerateError("centroid of an empty set");
  const auto& v = p.vertices();
  Vec mean = Vec::Zero(p.dimension());
  for (const auto& x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (p.degenerate()) return mean;
  double total = 0.0;
  Vec acc = Vec::Zero(p.dimension());
  for_each_simplex(p, [&](double m, const std::vector<Vec>& s) {
    Vec c = Vec::Zero(p.dimension());
    for (const auto& x : s) c += x;
    acc += m * c / static_cast<double>(s.size());
    total += m;
  });
  return acc / total;
}

double second_moment(const ConvexPolytope& p, const Vec& about) {
  if (p.is_empty() || p.degenerate()) return 0.0;
  // Simplex with vertices a_i (relative to `about`) and measure m:
  // integral of |x|^2 = m (sum |a_i|^2 + |sum a_i|^2) / ((d+1)(d+2)).
  double total = 0.0;
  const double denom = (p.dimension() + 1.0) * (p.dimension() + 2.0);
  for_each_simplex(p, [&](double m, const std::vector<Vec>& s) {
    double sq = 0.0;
    Vec sum = Vec::Zero(p.dimension());
    for (const auto& x : s) {
      const Vec a = x - about;
      sq += a.squaredNorm();
      sum += a;
    }
    total += m * (sq + sum.squaredNorm()) / denom;
  });
  return total;
}

double diameter(const ConvexPolytope& p) {
  double d = 0.0;
  const auto& v = p.vertices();
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) d = std::max(d, (v[i] - v[j]).norm());
  return d;
}

double facet_measure(const ConvexPolytope& p, std::size_t k) {
  switch (p.dimension()) {
    case 1:
      return 1.0;
    case 2: {
      const auto& idx = p.facet(k);
      return (p.vertices()[idx[1]] - p.vertices()[idx[0]]).norm();
    }
    default:
      return polygon_area_3d(p.vertices(), p.facet(k), p.halfspaces()[k].normal);
  }
}

ConvexPolytope clip(const ConvexPolytope& p, const HalfSpace& h) {
  if (p.is_empty()) return p;
  const auto& v = p.vertices();
  bool all_in = true;
  bool all_out = true;
  for (const auto& x : v) {
    const double s = h.slack(x);
    if (s > kClipEps) all_in = false;
    if (s < -kClipEps) all_out = false;
  }
  if (all_in) return p;
  if (all_out) return ConvexPolytope::empty(p.dimension());

  switch (p.dimension()) {
    case 1: {
      double lo = v[0](0);
      double hi = v[1](0);
      int lo_tag = p.halfspaces()[0].tag;
      int hi_tag = p.halfspaces()[1].tag;
      if (h.normal(0) > 0) {
        if (h.offset < hi) hi = h.offset, hi_tag = h.tag;
      } else if (-h.offset > lo) {
        lo = -h.offset, lo_tag = h.tag;
      }
      return PolytopeBuilder::interval(lo, hi, lo_tag, hi_tag);
    }
    case 2: {
      // Sutherland-Hodgman keeping, for each output vertex, the half-space of
      // its outgoing edge.
      const auto& e = p.halfspaces();
      const std::size_t n = v.size();
      std::vector<Vec> out;
      std::vector<HalfSpace> labels;
      for (std::size_t k = 0; k < n; ++k) {
        const Vec& a = v[k];
        const Vec& b = v[(k + 1) % n];
        const double sa = h.slack(a);
        const double sb = h.slack(b);
        const bool a_in = sa <= kClipEps;
        const bool b_in = sb <= kClipEps;
        if (a_in) {
          if (b_in) {
            out.push_back(a), labels.push_back(e[k]);
          } else if (sa >= -kClipEps) {
            out.push_back(a), labels.push_back(h);
          } else {
            out.push_back(a), labels.push_back(e[k]);
            out.push_back(a + (sa / (sa - sb)) * (b - a)), labels.push_back(h);
          }
        } else if (sb < -kClipEps) {
          out.push_back(a + (sa / (sa - sb)) * (b - a)), labels.push_back(e[k]);
        }
      }
      return PolytopeBuilder::polygon(std::move(out), std::move(labels));
    }
    default: {
      std::vector<HalfSpace> hs = p.halfspaces();
      hs.push_back(h);
      return PolytopeBuilder::polyhedron_from_halfspaces(hs);
    }
  }
}

ConvexPolytope intersection(const ConvexPolytope& p, const ConvexPolytope& q) {
  if (p.dimension() != q.dimension()) throw DimensionError("intersection of polytopes in different dimensions");
  if (p.is_empty() || q.is_empty() || !p.bounds().overlaps(q.bounds(), 0.0))
    return ConvexPolytope::empty(p.dimension());
  if (p.dimension() == 3) {
    std::vector<HalfSpace> hs = p.halfspaces();
    hs.insert(hs.end(), q.halfspaces().begin(), q.halfspaces().end());
    return PolytopeBuilder::polyhedron_from_halfspaces(hs);
  }
  ConvexPolytope r = p;
  for (const auto& h : q.halfspaces()) {
    r = clip(r, h);
    if (r.is_empty()) break;
  }
  return r;
}

std::optional<ConvexPolytope> intersect(const ConvexPolytope& p, const ConvexPolytope& q) {
  ConvexPolytope r = intersection(p, q);
  if (r.is_empty() || r.degenerate()) return std::nullopt;
  return r;
}

double intersection_volume(const ConvexPolytope& p, const ConvexPolytope& q) { return volume(intersection(p, q)); }

ConvexPolytope translate(const ConvexPolytope& p, const Vec& shift) {
  if (shift.size() != p.dimension()) throw DimensionError("translation dimension mismatch");
  ConvexPolytope r = p;
  for (auto& v : r.vertices_) v += shift;
  for (auto& h : r.halfspaces_) h.offset += h.normal.dot(shift);
  return r;
}

std::vector<ConvexPolytope> subtract(const ConvexPolytope& p, const ConvexPolytope& q) {
  if (p.is_empty()) return {};
  if (q.is_empty() || !p.bounds().overlaps(q.bounds(), 0.0)) return {p};
  if (!intersect(p, q)) return {p};
  std::vector<ConvexPolytope> pieces;
  ConvexPolytope rest = p;
  for (const auto& h : q.halfspaces()) {
    ConvexPolytope outside = clip(rest, h.complement());
    if (!outside.is_empty() && !outside.degenerate()) pieces.push_back(std::move(outside));
    rest = clip(rest, h);
    if (rest.is_empty()) break;
  }
  return pieces;
}

double union_volume(std::span<const ConvexPolytope> pieces) {
  double total = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    std::vector<ConvexPolytope> frags{pieces[i]};
    for (std::size_t j = 0; j < i && !frags.empty(); ++j) {
      if (!pieces[i].bounds().overlaps(pieces[j].bounds(), 0.0)) continue;
      std::vector<ConvexPolytope> next;
      for (const auto& f : frags) {
        auto parts = subtract(f, pieces[j]);
        for (auto& part : parts) next.push_back(std::move(part));
      }
      frags = std::move(next);
    }
    for (const auto& f : frags) total += volume(f);
  }
  return total;
}

std::pair<Vec, double> inscribed_ball(const ConvexPolytope& p) {
  if (p.is_empty() || p.degenerate()) throw DegenerateError("inscribed ball of a set with empty interior");
  if (p.dimension() == 1) {
    const double lo = p.vertices()[0](0);
    const double hi = p.vertices()[1](0);
    return {make_vec({0.5 * (lo + hi)}), 0.5 * (hi - lo)};
  }
  // Bisection on r: the inner parallel body {x : n.x <= b - r} is nonempty
  // exactly when a ball of radius r fits.
  auto shrink = [&](double r) {
    ConvexPolytope q = p;
    for (const auto& h : p.halfspaces()) {
      q = clip(q, {h.normal, h.offset - r, h.tag});
      if (q.is_empty()) break;
    }
    return q;
  };
  const Box b = p.bounds();
  double lo = 0.0;
  double hi = 0.5 * (b.hi - b.lo).minCoeff();
  for (int it = 0; it < 60 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shrink(mid).is_empty())
      hi = mid;
    else
      lo = mid;
  }
  const ConvexPolytope core = shrink(lo);
  Vec c = Vec::Zero(p.dimension());
  if (core.is_empty()) return {centroid(p), lo};
  for (const auto& v : core.vertices()) c += v;
  c /= static_cast<double>(core.vertices().size());
  double r = std::numeric_limits<double>::infinity();
  for (const auto& h : p.halfspaces()) r = std::min(r, -h.slack(c));
  return {c, r};
}

Domain::Domain(ConvexPolytope piece) : Domain(std::vector<ConvexPolytope>{std::move(piece)}) {}

Domain::Domain(std::vector<ConvexPolytope> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw DegenerateError("domain without pieces");
  for (const auto& p : pieces_) {
    if (p.dimension() != pieces_.front().dimension()) throw DimensionError("domain pieces differ in dimension");
    if (p.is_empty() || p.degenerate()) throw DegenerateError("domain piece has empty interior");
  }
}

const ConvexPolytope& Domain::convex_piece() const {
  if (!is_convex()) throw Error("domain is not a single convex piece");
  return pieces_.front();
}

double Domain::volume() const {
  double v = 0.0;
  for (const auto& p : pieces_) v += geometry::volume(p);
  return v;
}

bool Domain::contains(const Vec& x, double tol) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [&](const ConvexPolytope& p) { return p.contains(x, tol); });
}

Box Domain::bounds() const {
  Box b = pieces_.front().bounds();
  for (const auto& p : pieces_) b = b.merged(p.bounds());
  return b;
}

double Domain::interior_depth(const Vec& x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pieces_) {
    double depth = std::numeric_limits<double>::infinity();
    for (const auto& h : p.halfspaces()) depth = std::min(depth, -h.slack(x));
    best = std::max(best, depth);
  }
  return best;
}

double Domain::inradius() const {
  double r = 0.0;
  for (const auto& p : pieces_) r = std::max(r, inscribed_ball(p).second);
  return r;
}

double Domain::diameter() const {
  double d = 0.0;
  for (const auto& p : pieces_)
    for (const auto& q : pieces_)
      for (const auto& a : p.vertices())
        for (const auto& b : q.vertices()) d = std::max(d, (a - b).norm());
  return d;
}

namespace {

template <class Contains>
PointSample rejection_sample(int dim, const Box& box, double vol, std::size_t count, std::uint64_t seed,
                             Contains&& inside) {
  if (!(vol > 0.0)) throw DegenerateError("cannot sample a set of zero volume");
  PointSample s;
  s.dimension = dim;
  s.seed = seed;
  s.weight = vol / static_cast<double>(count);
  s.points.reserve(count);
  Rng rng(seed);
  Vec x(dim);
  while (s.points.size() < count) {
    for (int a = 0; a < dim; ++a) x(a) = rng.uniform(box.lo(a), box.hi(a));
    if (inside(x)) s.points.push_back(x);
  }
  return s;
}

}  // namespace

PointSample sample_points(const Domain& region, std::size_t count, std::uint64_t seed) {
  return rejection_sample(region.dimension(), region.bounds(), region.volume(), count, seed,
                          [&](const Vec& x) { return region.contains(x, 0.0); });
}

PointSample sample_points(const ConvexPolytope& region, std::size_t count, std::uint64_t seed) {
  return rejection_sample(region.dimension(), region.bounds(), volume(region), count, seed,
                          [&](const Vec& x) { return region.contains(x, 0.0); });
}

McEstimate mc_volume(const ConvexPolytope& p, std::size_t count, std::uint64_t seed) {
  if (p.is_empty() || count == 0) return {};
  const Box b = p.bounds();
  Rng rng(seed);
  std::size_t hits = 0;
  Vec x(p.dimension());
  for (std::size_t i = 0; i < count; ++i) {
    for (int a = 0; a < p.dimension(); ++a) x(a) = rng.uniform(b.lo(a), b.hi(a));
    if (p.contains(x, 0.0)) ++hits;
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(count);
  const double bv = b.volume();
  return {frac * bv, bv * std::sqrt(frac * (1.0 - frac) / static_cast<double>(count))};
}

}  // namespace breaklab::geometry
