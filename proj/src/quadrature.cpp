#include "breaklab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>

namespace breaklab {

double TestFunction::value(const Vec& x) const {
  const double q = (x - center).squaredNorm() / (radius * radius);
  return q < 1.0 ? (1.0 - q) * (1.0 - q) : 0.0;
}

Vec TestFunction::gradient(const Vec& x) const {
  const Vec d = x - center;
  const double q = d.squaredNorm() / (radius * radius);
  if (q >= 1.0) return Vec::Zero(x.size());
  return (-4.0 / (radius * radius) * (1.0 - q)) * d;
}

double TestFunction::integral() const {
  const double r = radius;
  switch (center.size()) {
    case 1:
      return 16.0 * r / 15.0;
    case 2:
      return M_PI * r * r / 3.0;
    default:
      return 32.0 * M_PI * r * r * r / 105.0;
  }
}

double TestFunction::gradient_sup() const { return 8.0 / (3.0 * std::sqrt(3.0) * radius); }

}  // namespace breaklab

namespace breaklab::quadrature {

namespace {

Rule compute_rule(int n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

struct FanResult {
  double psi = 0.0;
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
};

// Integrals of psi and grad psi over a polygon via signed triangles
// (c, p_k, p_{k+1}); the radial integrals are done in closed form, the
// angular one by Gauss-Legendre on pieces where min(rho_edge, r) is smooth.
FanResult polar_fan(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& c, double r, int order) {
  const Rule& rule = gauss_legendre(order);
  const double r2 = r * r;
  FanResult out;
  const std::size_t n = pts.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector2d a = pts[k] - c;
    const Eigen::Vector2d b = pts[(k + 1) % n] - c;
    const double cr = a.x() * b.y() - a.y() * b.x();
    if (std::abs(cr) <= 1e-15 * a.norm() * b.norm()) continue;
    const double th_a = std::atan2(a.y(), a.x());
    const double sweep = std::atan2(cr, a.dot(b));
    const Eigen::Vector2d e = b - a;
    Eigen::Vector2d nrm(e.y(), -e.x());
    nrm.normalize();
    double h = nrm.dot(a);
    if (h < 0) nrm = -nrm, h = -h;
    const double phi_n = std::atan2(nrm.y(), nrm.x());

    std::array<double, 4> cuts{0.0, sweep, 0.0, 0.0};
    int ncuts = 2;
    if (h < r) {
      const double alpha = std::acos(h / r);
      for (double cand : {phi_n - alpha, phi_n + alpha}) {
        double s = std::remainder(cand - th_a, 2.0 * M_PI);
        if ((sweep > 0 && s > 0 && s < sweep) || (sweep < 0 && s < 0 && s > sweep)) cuts[ncuts++] = s;
      }
    }
    std::sort(cuts.begin(), cuts.begin() + ncuts);
    for (int piece = 0; piece + 1 < ncuts; ++piece) {
      const double u0 = cuts[piece];
      const double u1 = cuts[piece + 1];
      const double half = 0.5 * (u1 - u0);
      const double mid = 0.5 * (u1 + u0);
      // Orientation: integrating from th_a to th_a + sweep; a negative sweep
      // flips the sign, which the sorted cuts undo.
      const double sign = sweep > 0 ? 1.0 : -1.0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double th = th_a + mid + half * rule.nodes[q];
        const double rho_e = h / std::cos(th - phi_n);
        const double R = std::min(rho_e, r);
        const double R2 = R * R;
        const double w = sign * half * rule.weights[q];
        out.psi += w * (R2 / 2.0 - R2 * R2 / (2.0 * r2) + R2 * R2 * R2 / (6.0 * r2 * r2));
        const double radial = -4.0 / r2 * (R2 * R / 3.0 - R2 * R2 * R / (5.0 * r2));
        out.grad += w * radial * Eigen::Vector2d(std::cos(th), std::sin(th));
      }
    }
  }
  // Signed fan integrates over the polygon with the sign of its orientation.
  double area2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = pts[k];
    const auto& q = pts[(k + 1) % n];
    area2 += p.x() * q.y() - p.y() * q.x();
  }
  if (area2 < 0) {
    out.psi = -out.psi;
    out.grad = -out.grad;
  }
  return out;
}

std::vector<Eigen::Vector2d> as2(const std::vector<Vec>& v) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(v.size());
  for (const auto& p : v) out.emplace_back(p(0), p(1));
  return out;
}

struct McResult {
  double psi = 0.0;
  double psi_err = 0.0;
  Vec grad;
  double grad_err = 0.0;
};

McResult monte_carlo(const geometry::ConvexPolytope& cell, const TestFunction& psi, std::uint64_t seed) {
  McResult out;
  out.grad = Vec::Zero(3);
  const geometry::Box cb = cell.bounds();
  const Vec lo = cb.lo.cwiseMax((psi.center.array() - psi.radius).matrix());
  const Vec hi = cb.hi.cwiseMin((psi.center.array() + psi.radius).matrix());
  if ((hi - lo).minCoeff() <= 0.0) return out;
  const double box = (hi - lo).prod();
  Rng rng(seed ^ 0x6a09e667f3bcc909ULL);
  const std::size_t n = kMonteCarloSamples;
  double s1 = 0.0;
  double s2 = 0.0;
  Vec g1 = Vec::Zero(3);
  double g2 = 0.0;
  Vec x(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) x(a) = rng.uniform(lo(a), hi(a));
    if (!cell.contains(x, 0.0)) continue;
    const double v = psi.value(x);
    const Vec g = psi.gradient(x);
    s1 += v;
    s2 += v * v;
    g1 += g;
    g2 += g.squaredNorm();
  }
  const double nd = static_cast<double>(n);
  out.psi = box * s1 / nd;
  out.psi_err = box * std::sqrt(std::max(0.0, s2 / nd - (s1 / nd) * (s1 / nd)) / nd);
  out.grad = box * g1 / nd;
  out.grad_err = box * std::sqrt(std::max(0.0, g2 / nd - (g1 / nd).squaredNorm()) / nd);
  return out;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
  return it->second;
}

Scalar bump_integral(const geometry::ConvexPolytope& cell, const TestFunction& psi, std::uint64_t seed) {
  if (cell.is_empty() || cell.degenerate()) return {};
  switch (cell.dimension()) {
    case 1: {
      const double lo = std::max(cell.vertices()[0](0), psi.center(0) - psi.radius);
      const double hi = std::min(cell.vertices()[1](0), psi.center(0) + psi.radius);
      if (hi <= lo) return {};
      auto rule_sum = [&](int n) {
        const Rule& rule = gauss_legendre(n);
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
          s += rule.weights[q] * psi.value(make_vec({0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q]}));
        return 0.5 * (hi - lo) * s;
      };
      const double v = rule_sum(5);
      return {v, std::abs(v - rule_sum(4))};
    }
    case 2: {
      const auto pts = as2(cell.vertices());
      const Eigen::Vector2d c(psi.center(0), psi.center(1));
      const double fine = polar_fan(pts, c, psi.radius, 24).psi;
      const double coarse = polar_fan(pts, c, psi.radius, 16).psi;
      return {fine, std::abs(fine - coarse)};
    }
    default: {
      const auto mc = monte_carlo(cell, psi, seed);
      return {mc.psi, mc.psi_err};
    }
  }
}

Vector bump_gradient_integral(const geometry::ConvexPolytope& cell, const TestFunction& psi, std::uint64_t seed) {
  const int dim = cell.dimension();
  if (cell.is_empty() || cell.degenerate()) return {Vec::Zero(dim), 0.0};
  switch (dim) {
    case 1: {
      const double lo = std::max(cell.vertices()[0](0), psi.center(0) - psi.radius);
      const double hi = std::min(cell.vertices()[1](0), psi.center(0) + psi.radius);
      if (hi <= lo) return {Vec::Zero(1), 0.0};
      auto rule_sum = [&](int n) {
        const Rule& rule = gauss_legendre(n);
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
          s += rule.weights[q] * psi.gradient(make_vec({0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q]}))(0);
        return 0.5 * (hi - lo) * s;
      };
      const double v = rule_sum(5);
      return {make_vec({v}), std::abs(v - rule_sum(3))};
    }
    case 2: {
      const auto pts = as2(cell.vertices());
      const Eigen::Vector2d c(psi.center(0), psi.center(1));
      const Eigen::Vector2d fine = polar_fan(pts, c, psi.radius, 24).grad;
      const Eigen::Vector2d coarse = polar_fan(pts, c, psi.radius, 16).grad;
      return {make_vec({fine.x(), fine.y()}), (fine - coarse).norm()};
    }
    default: {
      const auto mc = monte_carlo(cell, psi, seed);
      return {mc.grad, mc.grad_err};
    }
  }
}

Scalar bump_face_integral(const geometry::InteriorFace& face, int dimension, const TestFunction& psi) {
  switch (dimension) {
    case 1:
      return {psi.value(face.vertices.front()), 0.0};
    case 2: {
      const Vec& p0 = face.vertices[0];
      const Vec e = face.vertices[1] - p0;
      const Vec d0 = p0 - psi.center;
      // |d0 + s e|^2 = r^2 solved for s, then clipped to [0, 1].
      const double A = e.squaredNorm();
      const double B = 2.0 * d0.dot(e);
      const double C = d0.squaredNorm() - psi.radius * psi.radius;
      const double disc = B * B - 4.0 * A * C;
      if (disc <= 0.0) return {};
      const double sq = std::sqrt(disc);
      const double lo = std::max(0.0, (-B - sq) / (2.0 * A));
      const double hi = std::min(1.0, (-B + sq) / (2.0 * A));
      if (hi <= lo) return {};
      auto rule_sum = [&](int n) {
        const Rule& rule = gauss_legendre(n);
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
          s += rule.weights[q] * psi.value(p0 + (0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q]) * e);
        return 0.5 * (hi - lo) * std::sqrt(A) * s;
      };
      const double v = rule_sum(5);
      return {v, std::abs(v - rule_sum(3))};
    }
    default: {
      // On the face plane psi is a rescaled planar bump of radius r_eff.
      const Eigen::Vector3d n(face.normal(0), face.normal(1), face.normal(2));
      const Eigen::Vector3d c(psi.center(0), psi.center(1), psi.center(2));
      const Eigen::Vector3d p0(face.vertices[0](0), face.vertices[0](1), face.vertices[0](2));
      const double delta = n.dot(c - p0);
      const double r_eff2 = psi.radius * psi.radius - delta * delta;
      if (r_eff2 <= 0.0) return {};
      const double r_eff = std::sqrt(r_eff2);
      const Eigen::Vector3d helper =
          std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
      const Eigen::Vector3d u = helper.cross(n).normalized();
      const Eigen::Vector3d w = n.cross(u);
      std::vector<Eigen::Vector2d> pts;
      for (const auto& v : face.vertices) {
        const Eigen::Vector3d x(v(0), v(1), v(2));
        pts.emplace_back(x.dot(u), x.dot(w));
      }
      const Eigen::Vector2d c2(c.dot(u), c.dot(w));
      const double scale = std::pow(r_eff / psi.radius, 4);
      const double fine = scale * polar_fan(pts, c2, r_eff, 24).psi;
      const double coarse = scale * polar_fan(pts, c2, r_eff, 16).psi;
      return {fine, std::abs(fine - coarse)};
    }
  }
}

}  // namespace breaklab::quadrature
