#pragma once

#include <cstdint>
#include <vector>

#include "breaklab/potential.hpp"

namespace breaklab::flow {

using potential::PiecewiseAffinePotential;

/// Images T_t(A_i) = A_i + t v_i and their overlap bookkeeping.
struct FlowSnapshot {
  double t = 0.0;
  std::vector<geometry::ConvexPolytope> images;
  /// sum_{i<j} vol(T_t(A_i) ∩ T_t(A_j))
  double overlap_volume = 0.0;
  /// vol of the union of images
  double coverage_volume = 0.0;
  /// sum_i vol(T_t(A_i))
  double image_volume = 0.0;
};

FlowSnapshot snapshot(const PiecewiseAffinePotential& phi, double t);

/// sum_{i<j} vol(T_t(A_i) ∩ T_t(A_j)) without building the union.
double overlap_volume(const PiecewiseAffinePotential& phi, double t);

/// Volume of {y : N(y) >= 2}: the union of pairwise image intersections.
double multiplicity_two_volume(const PiecewiseAffinePotential& phi, double t);

/// 32 log-spaced times in [1e-3, t_max] plus 8 uniform times in (0, t_max],
/// sorted ascending.
std::vector<double> default_time_grid(std::uint64_t seed, double t_max = 10.0);

inline constexpr double kOverlapRelTol = 1e-9;

struct MpcVerdict {
  bool preserving = true;
  /// First sampled time whose overlap exceeds the tolerance (when violated).
  double witness_t = 0.0;
  double witness_overlap = 0.0;
  double tolerance = 0.0;
  std::vector<double> times;
  std::vector<double> overlaps;
};

/// Preserving iff every sampled overlap is at most kOverlapRelTol * vol(Omega).
MpcVerdict mpc_verdict(const PiecewiseAffinePotential& phi, const std::vector<double>& times);

struct MultiplicityResult {
  std::vector<int> counts;
  /// True when the query sits on the boundary of some image (within tolerance).
  std::vector<bool> on_boundary;
};

MultiplicityResult multiplicity_count(const PiecewiseAffinePotential& phi, double t, const std::vector<Vec>& queries);

struct ExpandingVerdict {
  bool expanding = true;
  /// Fraction of probe points with N(y) >= 2.
  double violated_fraction = 0.0;
  /// Probe estimate of vol{N >= 2}.
  double probe_volume = 0.0;
  /// Exact vol{N >= 2}.
  double exact_volume = 0.0;
  std::size_t probes = 0;
};

inline constexpr double kExpandingFraction = 1e-3;

ExpandingVerdict expanding_verdict(const PiecewiseAffinePotential& phi, double t, const geometry::PointSample& probe);
/// Probe drawn uniformly from the bounding box of the images.
ExpandingVerdict expanding_verdict(const PiecewiseAffinePotential& phi, double t, std::size_t probes,
                                   std::uint64_t seed);

struct GpsiSample {
  double t = 0.0;
  double value = 0.0;
  double error = 0.0;
};

struct GpsiCurve {
  TestFunction psi;
  std::vector<GpsiSample> samples;
};

/// g(t) = int_Omega psi(x + t grad phi(x)) dx = sum_i int_{A_i + t v_i} psi.
GpsiCurve gpsi_curve(const PiecewiseAffinePotential& phi, const TestFunction& psi, const std::vector<double>& times,
                     std::uint64_t seed = 0);

/// g(t) <= g(0) + tol on every sample. The curve must contain t = 0.
bool gpsi_monotone(const GpsiCurve& curve, double tol);

/// True when g(t_1) > g(t_0) beyond quadrature error for the first two samples.
bool gpsi_initial_increase(const GpsiCurve& curve);

struct DerivativeCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double dt = 0.0;
};

/// Central difference of g at t against int grad psi(x + t grad phi) . grad phi.
DerivativeCheck derivative_check(const PiecewiseAffinePotential& phi, const TestFunction& psi, double t,
                                 double dt = 1e-3, std::uint64_t seed = 0);

}  // namespace breaklab::flow
