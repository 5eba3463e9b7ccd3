#include "breaklab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

namespace breaklab::spectral {

Eigensystem eigensystem(const SymMatrix& m) {
  const Eigen::Index d = m.rows();
  if (d != m.cols() || d < 1 || d > 4) throw DimensionError("symmetric matrices of size 1..4 only");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) throw DimensionError("matrix is not symmetric");
  SymMatrix a = 0.5 * (m + m.transpose());
  SymMatrix v = SymMatrix::Identity(d, d);
  const double target = 1e-13 * std::max(1.0, a.norm());
  auto off = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };
  int sweeps = 0;
  while (off() > target && sweeps < 100) {
    ++sweeps;
    for (Eigen::Index p = 0; p < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < d; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  Eigensystem out;
  out.sweeps = sweeps;
  out.vectors.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    out.values.push_back(a(order[k], order[k]));
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

std::vector<double> eigenvalues(const SymMatrix& m) { return eigensystem(m).values; }

double rigidity_epsilon(const std::vector<double>& times, double tol) {
  std::vector<double> nodes = times;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.size() > kRigidityOrder) {
    // Spread through the grid, both ends included; clustered nodes make V
    // nearly singular.
    std::vector<double> spread;
    for (std::size_t k = 0; k < kRigidityOrder; ++k) spread.push_back(nodes[k * (nodes.size() - 1) / (kRigidityOrder - 1)]);
    nodes = std::move(spread);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd v(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) v(j, k) = std::pow(nodes[j], static_cast<double>(k + 1));
  const Eigen::MatrixXd inv = v.fullPivLu().inverse();
  const double inv_norm = inv.cwiseAbs().rowwise().sum().maxCoeff();
  const double delta = -std::log1p(-tol);
  return std::sqrt(2.0 * inv_norm * delta);
}

DetSweep unit_det_sweep(const SymMatrix& m, const std::vector<double>& times, double tol) {
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 3 || sorted.front() <= 0.0)
    throw std::invalid_argument("unit_det_sweep needs at least three distinct positive times");
  const auto lambda = eigenvalues(m);
  DetSweep r;
  r.epsilon = rigidity_epsilon(sorted, tol);
  for (double l : lambda) r.max_abs_eigenvalue = std::max(r.max_abs_eigenvalue, std::abs(l));
  bool all_ok = true;
  for (double t : times) {
    double prod = 1.0;
    for (double l : lambda) prod *= std::abs(1.0 + t * l);
    const double dev = std::abs(prod - 1.0);
    r.deviations.push_back(dev);
    if (dev > tol && all_ok) {
      all_ok = false;
      r.violating_t = t;
      r.violating_det = prod;
    }
  }
  r.rigid_zero = all_ok && r.max_abs_eigenvalue <= r.epsilon;
  return r;
}

AmGmReport amgm_trace_bound(const SymMatrix& m, double t) {
  const auto lambda = eigenvalues(m);
  const double d = static_cast<double>(lambda.size());
  AmGmReport r;
  double log_prod = 0.0;
  r.det = 1.0;
  for (double l : lambda) {
    const double f = 1.0 + t * l;
    if (f <= 0.0) throw DegenerateError("factor 1 + t lambda is not positive");
    r.det *= f;
    log_prod += std::log(f);
    r.trace += l;
  }
  r.geometric_mean = std::exp(log_prod / d);
  r.arithmetic_mean = 1.0 + t * r.trace / d;
  r.slack = r.arithmetic_mean - r.geometric_mean;
  r.unit_det = std::abs(r.det - 1.0) <= 1e-9;
  r.holds = r.slack >= -1e-12 && (!r.unit_det || r.trace >= -1e-6);
  return r;
}

}  // namespace breaklab::spectral
