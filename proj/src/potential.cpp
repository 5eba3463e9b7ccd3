#include "breaklab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace breaklab::potential {

namespace {

double tangential_residual(const Vec& diff, const Vec& nu) { return (diff - diff.dot(nu) * nu).norm(); }

}  // namespace

PiecewiseAffinePotential::PiecewiseAffinePotential(CellPartition partition, std::vector<Vec> gradients,
                                                   std::vector<double> offsets)
    : partition_(std::move(partition)), gradients_(std::move(gradients)), offsets_(std::move(offsets)) {
  if (gradients_.size() != partition_.size() || offsets_.size() != partition_.size())
    throw Error("potential needs one gradient and one offset per cell");
  for (const auto& v : gradients_)
    if (v.size() != partition_.dimension()) throw DimensionError("gradient dimension does not match the domain");
}

PiecewiseAffinePotential PiecewiseAffinePotential::from_gradients(CellPartition partition, std::vector<Vec> gradients) {
  auto offsets = repair_offsets(partition, gradients);
  return {std::move(partition), std::move(gradients), std::move(offsets)};
}

double PiecewiseAffinePotential::value(const Vec& x) const {
  const int i = partition_.locate(x);
  if (i < 0) throw SupportError("point outside the domain");
  return cell_value(static_cast<std::size_t>(i), x);
}

Vec PiecewiseAffinePotential::gradient(const Vec& x) const {
  const int i = partition_.locate(x);
  if (i < 0) throw SupportError("point outside the domain");
  return gradients_[static_cast<std::size_t>(i)];
}

std::vector<double> repair_offsets(const CellPartition& partition, const std::vector<Vec>& gradients) {
  if (gradients.size() != partition.size()) throw Error("potential needs one gradient per cell");
  const auto& faces = partition.faces();
  for (const auto& f : faces)
    if (tangential_residual(gradients[f.cell_a] - gradients[f.cell_b], f.normal) > kContinuityTol)
      throw NotContinuousError("tangential gradient jump across the face between cells " + std::to_string(f.cell_a) +
                               " and " + std::to_string(f.cell_b));
  std::vector<double> offsets(partition.size(), 0.0);
  std::vector<bool> seen(partition.size(), false);
  std::deque<int> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int fi : partition.adjacency()[i]) {
      const auto& f = faces[fi];
      const int j = f.cell_a == i ? f.cell_b : f.cell_a;
      if (seen[j]) continue;
      Vec x = Vec::Zero(partition.dimension());
      for (const auto& v : f.vertices) x += v;
      x /= static_cast<double>(f.vertices.size());
      offsets[j] = offsets[i] + (gradients[i] - gradients[j]).dot(x);
      seen[j] = true;
      queue.push_back(j);
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw NotContinuousError("face graph is disconnected; offsets are not determined");
  return offsets;
}

ValidationReport validate(const PiecewiseAffinePotential& phi) {
  ValidationReport report;
  const auto& faces = phi.partition().faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    FaceResidual r;
    r.face = static_cast<int>(k);
    r.tangential = tangential_residual(phi.gradients()[f.cell_a] - phi.gradients()[f.cell_b], f.normal);
    bool bad = r.tangential > kContinuityTol;
    for (const auto& x : f.vertices) {
      const double a = phi.cell_value(f.cell_a, x);
      const double gap = std::abs(a - phi.cell_value(f.cell_b, x));
      r.value_gap = std::max(r.value_gap, gap);
      if (gap > kContinuityTol * (1.0 + std::abs(a))) bad = true;
    }
    if (bad) report.violations.push_back(static_cast<int>(report.residuals.size()));
    report.residuals.push_back(r);
  }
  report.ok = report.violations.empty();
  return report;
}

std::vector<InterfaceJump> interface_jumps(const PiecewiseAffinePotential& phi) {
  std::vector<InterfaceJump> jumps;
  const auto& faces = phi.partition().faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const auto& f = faces[k];
    const Vec diff = phi.gradients()[f.cell_b] - phi.gradients()[f.cell_a];
    if (tangential_residual(diff, f.normal) > kContinuityTol)
      throw NotContinuousError("tangential gradient jump on face " + std::to_string(k));
    jumps.push_back({static_cast<int>(k), f.cell_a, f.cell_b, f.normal, diff.dot(f.normal), f.measure});
  }
  return jumps;
}

ConvexityVerdict is_locally_convex(const PiecewiseAffinePotential& phi) {
  ConvexityVerdict v;
  for (auto& j : interface_jumps(phi))
    if (j.lambda < -kConvexityTol) v.witnesses.push_back(std::move(j));
  v.convex = v.witnesses.empty();
  return v;
}

HessianReport distributional_hessian_report(const PiecewiseAffinePotential& phi) {
  HessianReport r;
  r.jumps = interface_jumps(phi);
  for (const auto& j : r.jumps) {
    r.total_variation += std::abs(j.lambda) * j.face_mass;
    if (j.lambda < -kConvexityTol) r.positive = false;
  }
  return r;
}

quadrature::Scalar weak_laplacian_pairing(const PiecewiseAffinePotential& phi, const TestFunction& psi,
                                          std::uint64_t seed) {
  const auto& domain = phi.partition().domain();
  if (psi.center.size() != phi.dimension()) throw DimensionError("bump dimension does not match the potential");
  if (domain.interior_depth(psi.center) < psi.radius * (1.0 - 1e-12))
    throw SupportError("bump support is not contained in the domain");
  const geometry::Box ball{(psi.center.array() - psi.radius).matrix(), (psi.center.array() + psi.radius).matrix()};
  quadrature::Scalar out;
  const auto& cells = phi.partition().cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].bounds().overlaps(ball, 0.0)) continue;
    const auto g = quadrature::bump_gradient_integral(cells[i], psi, seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    out.value -= phi.gradients()[i].dot(g.value);
    out.error += phi.gradients()[i].norm() * g.error;
  }
  return out;
}

quadrature::Scalar face_sum_pairing(const PiecewiseAffinePotential& phi, const TestFunction& psi) {
  quadrature::Scalar out;
  const auto& faces = phi.partition().faces();
  for (const auto& j : interface_jumps(phi)) {
    if (j.lambda == 0.0) continue;
    const auto s = quadrature::bump_face_integral(faces[j.face], phi.dimension(), psi);
    out.value += j.lambda * s.value;
    out.error += std::abs(j.lambda) * s.error;
  }
  return out;
}

std::vector<TestFunction> bump_battery(const geometry::Domain& domain) {
  const int dim = domain.dimension();
  const double R = domain.inradius();
  const geometry::Box box = domain.bounds();
  std::vector<TestFunction> out;
  int total = 1;
  for (int a = 0; a < dim; ++a) total *= 5;
  for (double radius : {R / 4.0, R / 8.0}) {
    for (int k = 0; k < total; ++k) {
      Vec c(dim);
      int rest = k;
      for (int a = 0; a < dim; ++a) {
        c(a) = box.lo(a) + (rest % 5 + 1) / 6.0 * (box.hi(a) - box.lo(a));
        rest /= 5;
      }
      if (domain.interior_depth(c) >= radius) out.push_back({c, radius});
    }
  }
  if (out.empty()) {
    for (const auto& piece : domain.pieces()) {
      const auto [c, r] = geometry::inscribed_ball(piece);
      out.push_back({c, r / 2.0});
    }
  }
  return out;
}

SubharmonicityReport subharmonicity_battery(const PiecewiseAffinePotential& phi, std::uint64_t seed) {
  SubharmonicityReport r;
  r.min_pairing = std::numeric_limits<double>::infinity();
  std::uint64_t k = 0;
  for (const auto& psi : bump_battery(phi.partition().domain())) {
    const auto vol = weak_laplacian_pairing(phi, psi, seed + 7919 * (++k));
    const auto face = face_sum_pairing(phi, psi);
    r.records.push_back({psi, vol.value, face.value, vol.error + face.error});
    // The d = 3 volume route is Monte Carlo; allow three standard errors.
    r.min_pairing = std::min(r.min_pairing, vol.value + 3.0 * vol.error);
    r.max_route_gap = std::max(r.max_route_gap, std::abs(vol.value - face.value));
  }
  r.subharmonic = r.min_pairing >= -kPairingTol;
  return r;
}

}  // namespace breaklab::potential
