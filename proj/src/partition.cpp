#include "breaklab/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace breaklab::geometry {

namespace {

bool opposite(const HalfSpace& g, const HalfSpace& h) {
  return g.normal.dot(h.normal) < -1.0 + 1e-9 && std::abs(g.offset + h.offset) <= kGeomTol * (1.0 + std::abs(g.offset));
}

std::optional<InteriorFace> shared_face(const ConvexPolytope& a, std::size_t g, const ConvexPolytope& b,
                                        std::size_t h) {
  const HalfSpace& hg = a.halfspaces()[g];
  if (!opposite(hg, b.halfspaces()[h])) return std::nullopt;
  InteriorFace f;
  f.facet_a = static_cast<int>(g);
  f.facet_b = static_cast<int>(h);
  f.normal = hg.normal;
  switch (a.dimension()) {
    case 1:
      f.measure = 1.0;
      f.vertices = {hg.normal * hg.offset};
      return f;
    case 2: {
      const Vec& p0 = a.vertices()[a.facet(g)[0]];
      const Vec& p1 = a.vertices()[a.facet(g)[1]];
      const double len = (p1 - p0).norm();
      const Vec t = (p1 - p0) / len;
      const double s0 = (b.vertices()[b.facet(h)[0]] - p0).dot(t);
      const double s1 = (b.vertices()[b.facet(h)[1]] - p0).dot(t);
      const double lo = std::max(0.0, std::min(s0, s1));
      const double hi = std::min(len, std::max(s0, s1));
      if (hi - lo <= kGeomTol) return std::nullopt;
      f.measure = hi - lo;
      f.vertices = {p0 + lo * t, p0 + hi * t};
      return f;
    }
    default: {
      const Eigen::Vector3d n(hg.normal(0), hg.normal(1), hg.normal(2));
      const Eigen::Vector3d helper = std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
      const Eigen::Vector3d u = helper.cross(n).normalized();
      const Eigen::Vector3d w = n.cross(u);
      auto flatten = [&](const ConvexPolytope& p, std::size_t k) {
        std::vector<Vec> pts;
        for (int i : p.facet(k)) {
          const Eigen::Vector3d x(p.vertices()[i](0), p.vertices()[i](1), p.vertices()[i](2));
          pts.push_back(make_vec({x.dot(u), x.dot(w)}));
        }
        return ConvexPolytope::polygon(std::move(pts));
      };
      const auto face = intersect(flatten(a, g), flatten(b, h));
      if (!face) return std::nullopt;
      f.measure = volume(*face);
      for (const auto& q : face->vertices()) {
        const Eigen::Vector3d x = hg.offset * n + q(0) * u + q(1) * w;
        f.vertices.push_back(make_vec({x(0), x(1), x(2)}));
      }
      return f;
    }
  }
}

}  // namespace

std::vector<InteriorFace> extract_faces(const std::vector<ConvexPolytope>& cells) {
  std::vector<Box> boxes;
  for (const auto& c : cells) boxes.push_back(c.bounds());
  std::vector<int> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return boxes[i].lo(0) < boxes[j].lo(0); });

  std::vector<std::pair<int, int>> pairs;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const int i = order[oi];
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int j = order[oj];
      if (boxes[j].lo(0) > boxes[i].hi(0) + kGeomTol) break;
      if (boxes[i].overlaps(boxes[j])) pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<InteriorFace> faces;
  for (const auto& [i, j] : pairs) {
    const auto& a = cells[i];
    const auto& b = cells[j];
    if (a.is_empty() || b.is_empty()) continue;
    for (std::size_t g = 0; g < a.facet_count(); ++g) {
      for (std::size_t h = 0; h < b.facet_count(); ++h) {
        auto f = shared_face(a, g, b, h);
        if (!f) continue;
        f->cell_a = i;
        f->cell_b = j;
        faces.push_back(std::move(*f));
      }
    }
  }
  return faces;
}

CellPartition::CellPartition(Domain domain, std::vector<ConvexPolytope> cells)
    : domain_(std::move(domain)), cells_(std::move(cells)) {
  if (cells_.empty()) throw PartitionError("partition has no cells");
  const int dim = domain_.dimension();
  const double vol = domain_.volume();
  const double vol_tol = 1e-9 * vol;

  double total = 0.0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    if (c.dimension() != dim) throw PartitionError("cell " + std::to_string(i) + " has the wrong dimension");
    if (c.is_empty() || c.degenerate()) throw PartitionError("cell " + std::to_string(i) + " has empty interior");
    const double v = volume(c);
    double inside = 0.0;
    for (const auto& piece : domain_.pieces()) inside += intersection_volume(c, piece);
    if (v - inside > vol_tol) throw PartitionError("cell " + std::to_string(i) + " extends outside the domain");
    total += v;
  }
  if (std::abs(total - vol) > vol_tol)
    throw PartitionError("cell volumes sum to " + std::to_string(total) + ", domain volume is " + std::to_string(vol));

  std::vector<Box> boxes;
  for (const auto& c : cells_) boxes.push_back(c.bounds());
  double overlap = 0.0;
  for (std::size_t i = 0; i < cells_.size(); ++i)
    for (std::size_t j = i + 1; j < cells_.size(); ++j)
      if (boxes[i].overlaps(boxes[j], 0.0)) overlap += intersection_volume(cells_[i], cells_[j]);
  if (overlap > vol_tol) throw PartitionError("cells overlap in volume " + std::to_string(overlap));

  faces_ = extract_faces(cells_);
  adjacency_.assign(cells_.size(), {});
  std::vector<std::vector<double>> covered(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) covered[i].assign(cells_[i].facet_count(), 0.0);
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& face = faces_[f];
    adjacency_[face.cell_a].push_back(static_cast<int>(f));
    adjacency_[face.cell_b].push_back(static_cast<int>(f));
    covered[face.cell_a][face.facet_a] += face.measure;
    covered[face.cell_b][face.facet_b] += face.measure;
  }
  if (dim == 1) return;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    for (std::size_t k = 0; k < cells_[i].facet_count(); ++k) {
      const double m = facet_measure(cells_[i], k);
      if (m - covered[i][k] <= 1e-7 * m + kGeomTol) continue;
      const HalfSpace& h = cells_[i].halfspaces()[k];
      bool on_boundary = false;
      for (const auto& piece : domain_.pieces())
        for (const auto& ph : piece.halfspaces())
          if (ph.normal.dot(h.normal) > 1.0 - 1e-9 && std::abs(ph.offset - h.offset) <= kGeomTol * (1.0 + std::abs(h.offset)))
            on_boundary = true;
      if (!on_boundary)
        throw PartitionError("facet " + std::to_string(k) + " of cell " + std::to_string(i) +
                             " does not match a neighbouring facet or the domain boundary");
    }
  }
}

int CellPartition::locate(const Vec& x, double tol) const {
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i].contains(x, tol)) return static_cast<int>(i);
  return -1;
}

std::vector<InteriorFace> extract_faces(const CellPartition& partition) { return partition.faces(); }

}  // namespace breaklab::geometry
