#pragma once

#include <cstddef>
#include <vector>

#include "breaklab/common.hpp"

namespace breaklab::spectral {

/// Symmetric matrix of size at most 4.
using SymMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;

inline constexpr double kSymmetryTol = 1e-12;

struct Eigensystem {
  /// Ascending.
  std::vector<double> values;
  /// Column k is the unit eigenvector of values[k].
  SymMatrix vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is at most
/// 1e-13 * max(1, |M|_F). Throws DimensionError on asymmetry or size > 4.
Eigensystem eigensystem(const SymMatrix& m);
std::vector<double> eigenvalues(const SymMatrix& m);

inline constexpr std::size_t kRigidityOrder = 6;

/// Threshold on max |lambda_i| implied by |prod |1 + t_k lambda_i| - 1| <= tol
/// at the sample times. With f(t) = sum_i log|1 + t lambda_i| =
/// sum_k (-1)^{k+1} p_k t^k / k (p_k the power sums), truncating at order m
/// gives V c = f(t) with V_jk = t_j^k on m = min(count, kRigidityOrder)
/// distinct times spread evenly through the sorted grid. Each |f(t_j)| is at
/// most delta = -log(1 - tol), so |c_2| <= |V^{-1}|_inf delta, and
/// max |lambda| <= sqrt(p_2) = sqrt(2 |c_2|) <= sqrt(2 |V^{-1}|_inf delta).
double rigidity_epsilon(const std::vector<double>& times, double tol);

struct DetSweep {
  bool rigid_zero = false;
  /// First sample time where |prod |1 + t lambda_i| - 1| > tol.
  double violating_t = 0.0;
  double violating_det = 1.0;
  double epsilon = 0.0;
  double max_abs_eigenvalue = 0.0;
  /// |prod |1 + t_k lambda_i| - 1| per sample.
  std::vector<double> deviations;
};

/// rigid_zero iff the unit-determinant condition holds at every sample and
/// max |lambda_i| <= rigidity_epsilon. Needs at least three distinct positive
/// times.
DetSweep unit_det_sweep(const SymMatrix& m, const std::vector<double>& times, double tol);

struct AmGmReport {
  bool holds = true;
  bool unit_det = false;
  double det = 1.0;
  /// (prod (1 + t lambda_i))^{1/d}
  double geometric_mean = 1.0;
  /// 1 + (t/d) Tr M
  double arithmetic_mean = 1.0;
  double trace = 0.0;
  /// arithmetic_mean - geometric_mean
  double slack = 0.0;
};

/// Throws DegenerateError if some 1 + t lambda_i <= 0.
AmGmReport amgm_trace_bound(const SymMatrix& m, double t);

}  // namespace breaklab::spectral
