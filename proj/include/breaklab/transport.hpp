#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "breaklab/field.hpp"
#include "breaklab/geometry.hpp"
#include "breaklab/potential.hpp"

namespace breaklab::transport {

using geometry::ConvexPolytope;
using geometry::Domain;

struct DiscreteTarget {
  std::vector<Vec> sites;
  std::vector<double> masses;
};

/// Throws Error unless masses are positive and sum to vol(domain) within
/// 1e-9 relative, and DegenerateError when two sites are closer than 1e-9.
void validate_target(const Domain& domain, const DiscreteTarget& target);

/// Cells Lag_i = {x in domain : x.v_i + w_i >= x.v_j + w_j for all j}.
/// Half-spaces of a cell carry the index of the competing site as their tag;
/// domain facets keep negative tags.
struct LaguerreDiagram {
  Domain domain;
  std::vector<Vec> sites;
  std::vector<double> weights;
  /// Possibly empty.
  std::vector<ConvexPolytope> cells;
  std::vector<double> volumes;
  /// Filled by solve_sdot: vol_i - m_i at the returned weights.
  std::vector<double> residuals;
  /// max_i |vol_i - m_i| per Newton iterate, starting at the initial guess.
  std::vector<double> residual_history;
  int iterations = 0;
  /// Iterations that fell back to gradient ascent.
  int ascent_steps = 0;
};

/// Clips the domain cell by cell, pruning competitors with a security radius
/// in the lifted (power) formulation. Needs a convex domain; throws
/// DegenerateError on coincident sites.
LaguerreDiagram laguerre_cells(const Domain& domain, const std::vector<Vec>& sites,
                               const std::vector<double>& weights);

/// Dual objective sum_i m_i w_i - int_domain max_i (x.v_i + w_i) dx. Concave
/// in w with partial derivatives m_i - vol(Lag_i(w)).
double dual_objective(const Domain& domain, const DiscreteTarget& target, const std::vector<double>& weights);

struct SdotOptions {
  int max_iterations = 50;
};

/// Damped Newton on the dual: Hessian entries -H^{d-1}(Lag_i ∩ Lag_j)/|v_i - v_j|,
/// w_0 pinned to 0, step halved until every cell keeps at least half the
/// smaller of its initial volume and the smallest target mass and the
/// residual norm drops by the factor (1 - tau/2). Stops when
/// max_i |vol_i - m_i| <= tol vol(domain); throws ConvergenceError carrying
/// the residuals otherwise.
LaguerreDiagram solve_sdot(const Domain& domain, const DiscreteTarget& target, double tol,
                           const SdotOptions& options = {});

/// max_i (x.v_i + w_i) on the nonempty cells. Indices of dropped (empty or
/// measure-zero) cells go to `pruned` when given.
potential::PiecewiseAffinePotential brenier_potential(const LaguerreDiagram& diagram,
                                                      std::vector<int>* pruned = nullptr);

inline constexpr std::size_t kMaxExactSize = 4096;

struct Transfer {
  int source = 0;
  int target = 0;
  double mass = 0.0;
};

struct Coupling {
  std::vector<Transfer> transfers;
  /// sum of mass * |x_i - y_j|^2.
  double cost = 0.0;
  /// Barycentric image of each source point.
  std::vector<Vec> map;
};

/// Optimal assignment for an n x n cost matrix given as a callback (shortest
/// augmenting path with potentials). Returns the column of each row.
std::vector<int> optimal_assignment(std::size_t n, const std::function<double(std::size_t, std::size_t)>& cost);

/// Exact quadratic-cost coupling. Equal sizes with uniform weights use the
/// assignment solver; otherwise successive shortest paths on the bipartite
/// network. Throws SizeLimitError above kMaxExactSize points per side and
/// std::invalid_argument when total masses differ by more than 1e-9 relative.
Coupling discrete_ot(const std::vector<Vec>& source, const std::vector<double>& source_weights,
                     const std::vector<Vec>& target, const std::vector<double>& target_weights);

/// weight * min over permutations of sum |a_i - b_sigma(i)|^2 (a squared W2
/// between empirical measures with mass `weight` per point).
double w2_estimate(const std::vector<Vec>& source, const std::vector<Vec>& target, double weight);

enum class PolarEstimator {
  /// Lebesgue on the domain to the empirical image measure, by solve_sdot.
  semidiscrete,
  /// Empirical sample to empirical image, by optimal assignment.
  assignment,
};

struct PolarOptions {
  PolarEstimator estimator = PolarEstimator::semidiscrete;
  /// Target samples per averaging bin.
  double samples_per_bin = 128.0;
  double sdot_tol = 1e-10;
  double helmholtz_tol = 1e-10;
};

/// Averaging bins: blocks of grid cells intersected with the domain.
struct BinLayout {
  int block = 1;
  std::vector<ConvexPolytope> regions;
  std::vector<double> volumes;
  std::vector<Vec> centroids;
};

struct PolarStep {
  double t = 0.0;
  /// |grad h_t - P b| over the bins.
  double err_grad = 0.0;
  /// |(Phi_t - id)/t - (b - P b)|; NaN when not estimated (d >= 2).
  double err_phi = std::numeric_limits<double>::quiet_NaN();
  /// Transport cost from the domain (or the sample) to the image sample.
  double w2 = 0.0;
  double grad_h_norm = 0.0;
  /// Bin averages of grad h_t.
  std::vector<Vec> grad_h;
};

struct PolarExperimentResult {
  PolarEstimator estimator = PolarEstimator::semidiscrete;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<PolarStep> steps;
  BinLayout bins;
  /// |P b| over the bins.
  double projected_norm = 0.0;
  /// Sampling error of the empirical identity, |bin avg(T_0) - id| times the
  /// Lipschitz constant of b.
  double noise_floor = 0.0;
  double lipschitz = 0.0;

  bool strictly_decreasing() const;
  /// (err_first - floor) / (err_last - floor); +inf when the last error is at
  /// or below the floor.
  double reduction_factor() const;
};

/// For each t in the (strictly decreasing, positive) grid: X_t = id + t b on
/// uniform samples, grad f_t as the optimal map onto the image sample,
/// grad h_t = (grad f_t - grad f_0)/t with grad f_0 the same estimator
/// applied to the untransported sample, then bin averages compared with the
/// Helmholtz projection of b. Supports d <= 2 and convex domains.
PolarExperimentResult polar_experiment(const field::GridVectorField& b, const std::vector<double>& t_grid,
                                       std::size_t sample_count, std::uint64_t seed, const PolarOptions& options = {});

}  // namespace breaklab::transport
