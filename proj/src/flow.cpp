#include "breaklab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "breaklab/parallel.hpp"

namespace breaklab::flow {

namespace {

std::vector<geometry::ConvexPolytope> images_at(const PiecewiseAffinePotential& phi, double t) {
  std::vector<geometry::ConvexPolytope> out;
  const auto& cells = phi.partition().cells();
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) out.push_back(geometry::translate(cells[i], t * phi.gradients()[i]));
  return out;
}

// Index pairs (i < j) whose bounding boxes overlap, in lexicographic order.
std::vector<std::pair<int, int>> candidate_pairs(const std::vector<geometry::ConvexPolytope>& polys) {
  std::vector<geometry::Box> boxes;
  for (const auto& p : polys) boxes.push_back(p.bounds());
  std::vector<int> order(polys.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return boxes[a].lo(0) < boxes[b].lo(0); });
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t oi = 0; oi < order.size(); ++oi)
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int i = order[oi];
      const int j = order[oj];
      if (boxes[j].lo(0) > boxes[i].hi(0)) break;
      if (boxes[i].overlaps(boxes[j], 0.0)) pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double pairwise_overlap(const std::vector<geometry::ConvexPolytope>& images) {
  double total = 0.0;
  for (const auto& [i, j] : candidate_pairs(images)) total += geometry::intersection_volume(images[i], images[j]);
  return total;
}

}  // namespace

FlowSnapshot snapshot(const PiecewiseAffinePotential& phi, double t) {
  if (t < 0) throw std::invalid_argument("flow time must be nonnegative");
  FlowSnapshot s;
  s.t = t;
  s.images = images_at(phi, t);
  s.overlap_volume = pairwise_overlap(s.images);
  s.coverage_volume = geometry::union_volume(s.images);
  for (const auto& p : s.images) s.image_volume += geometry::volume(p);
  return s;
}

double overlap_volume(const PiecewiseAffinePotential& phi, double t) { return pairwise_overlap(images_at(phi, t)); }

double multiplicity_two_volume(const PiecewiseAffinePotential& phi, double t) {
  const auto images = images_at(phi, t);
  std::vector<geometry::ConvexPolytope> pieces;
  for (const auto& [i, j] : candidate_pairs(images))
    if (auto p = geometry::intersect(images[i], images[j])) pieces.push_back(std::move(*p));
  return geometry::union_volume(pieces);
}

std::vector<double> default_time_grid(std::uint64_t seed, double t_max) {
  std::vector<double> grid;
  const double lo = std::log(1e-3);
  const double hi = std::log(t_max);
  for (int k = 0; k < 32; ++k) grid.push_back(std::exp(lo + (hi - lo) * k / 31.0));
  grid.back() = t_max;
  Rng rng(seed);
  for (int k = 0; k < 8; ++k) grid.push_back(t_max * (1.0 - rng.uniform()));
  std::sort(grid.begin(), grid.end());
  return grid;
}

MpcVerdict mpc_verdict(const PiecewiseAffinePotential& phi, const std::vector<double>& times) {
  MpcVerdict v;
  v.tolerance = kOverlapRelTol * phi.partition().domain().volume();
  v.times = times;
  v.overlaps.assign(times.size(), 0.0);
  parallel_for(times.size(), [&](std::size_t k) { v.overlaps[k] = overlap_volume(phi, times[k]); });
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (v.overlaps[k] > v.tolerance) {
      v.preserving = false;
      v.witness_t = times[k];
      v.witness_overlap = v.overlaps[k];
      break;
    }
  }
  return v;
}

MultiplicityResult multiplicity_count(const PiecewiseAffinePotential& phi, double t, const std::vector<Vec>& queries) {
  const auto images = images_at(phi, t);
  std::vector<geometry::Box> boxes;
  for (const auto& p : images) boxes.push_back(p.bounds());
  MultiplicityResult r;
  r.counts.assign(queries.size(), 0);
  r.on_boundary.assign(queries.size(), false);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Vec& y = queries[q];
    const geometry::Box point{y, y};
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!boxes[i].overlaps(point)) continue;
      if (!images[i].contains(y, kGeomTol)) continue;
      ++r.counts[q];
      for (const auto& h : images[i].halfspaces())
        if (std::abs(h.slack(y)) <= kGeomTol) r.on_boundary[q] = true;
    }
  }
  return r;
}

ExpandingVerdict expanding_verdict(const PiecewiseAffinePotential& phi, double t, const geometry::PointSample& probe) {
  ExpandingVerdict v;
  v.probes = probe.points.size();
  const auto m = multiplicity_count(phi, t, probe.points);
  std::size_t multi = 0;
  for (int c : m.counts)
    if (c >= 2) ++multi;
  v.violated_fraction = v.probes == 0 ? 0.0 : static_cast<double>(multi) / static_cast<double>(v.probes);
  v.probe_volume = probe.weight * static_cast<double>(multi);
  v.exact_volume = phi.dimension() <= 3 ? multiplicity_two_volume(phi, t) : v.probe_volume;
  v.expanding = v.violated_fraction <= kExpandingFraction &&
                v.exact_volume <= kOverlapRelTol * phi.partition().domain().volume();
  return v;
}

ExpandingVerdict expanding_verdict(const PiecewiseAffinePotential& phi, double t, std::size_t probes,
                                   std::uint64_t seed) {
  const auto images = images_at(phi, t);
  geometry::Box box = images.front().bounds();
  for (const auto& p : images) box = box.merged(p.bounds());
  const auto region = geometry::ConvexPolytope::box(box.lo, box.hi);
  return expanding_verdict(phi, t, geometry::sample_points(region, probes, seed));
}

GpsiCurve gpsi_curve(const PiecewiseAffinePotential& phi, const TestFunction& psi, const std::vector<double>& times,
                     std::uint64_t seed) {
  GpsiCurve curve;
  curve.psi = psi;
  curve.samples.resize(times.size());
  parallel_for(times.size(), [&](std::size_t k) {
    const auto images = images_at(phi, times[k]);
    GpsiSample s{times[k], 0.0, 0.0};
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto q = quadrature::bump_integral(images[i], psi, seed + 0x9e3779b97f4a7c15ULL * (i + 1));
      s.value += q.value;
      s.error += q.error;
    }
    curve.samples[k] = s;
  });
  return curve;
}

bool gpsi_monotone(const GpsiCurve& curve, double tol) {
  auto zero = std::find_if(curve.samples.begin(), curve.samples.end(), [](const GpsiSample& s) { return s.t == 0.0; });
  if (zero == curve.samples.end()) throw std::invalid_argument("g curve has no t = 0 sample");
  return std::all_of(curve.samples.begin(), curve.samples.end(),
                     [&](const GpsiSample& s) { return s.value <= zero->value + tol; });
}

bool gpsi_initial_increase(const GpsiCurve& curve) {
  if (curve.samples.size() < 2) return false;
  const auto& a = curve.samples[0];
  const auto& b = curve.samples[1];
  return b.value > a.value + a.error + b.error;
}

DerivativeCheck derivative_check(const PiecewiseAffinePotential& phi, const TestFunction& psi, double t, double dt,
                                 std::uint64_t seed) {
  if (t - dt < 0) throw std::invalid_argument("derivative check needs t >= dt");
  const auto curve = gpsi_curve(phi, psi, {t - dt, t + dt}, seed);
  DerivativeCheck d;
  d.dt = dt;
  d.lhs = (curve.samples[1].value - curve.samples[0].value) / (2.0 * dt);
  const auto images = images_at(phi, t);
  for (std::size_t i = 0; i < images.size(); ++i)
    d.rhs += phi.gradients()[i].dot(
        quadrature::bump_gradient_integral(images[i], psi, seed + 0x9e3779b97f4a7c15ULL * (i + 1)).value);
  return d;
}

}  // namespace breaklab::flow
