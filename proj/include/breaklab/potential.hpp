#pragma once

#include <cstdint>
#include <vector>

#include "breaklab/partition.hpp"
#include "breaklab/quadrature.hpp"

namespace breaklab::potential {

using geometry::CellPartition;

/// Continuous phi(x) = v_i . x + c_i on cell A_i.
class PiecewiseAffinePotential {
 public:
  PiecewiseAffinePotential() = default;
  PiecewiseAffinePotential(CellPartition partition, std::vector<Vec> gradients, std::vector<double> offsets);
  /// Offsets solved by repair_offsets (c_0 = 0).
  static PiecewiseAffinePotential from_gradients(CellPartition partition, std::vector<Vec> gradients);

  int dimension() const { return partition_.dimension(); }
  const CellPartition& partition() const { return partition_; }
  const std::vector<Vec>& gradients() const { return gradients_; }
  const std::vector<double>& offsets() const { return offsets_; }

  double cell_value(std::size_t i, const Vec& x) const { return gradients_[i].dot(x) + offsets_[i]; }
  /// phi(x) for x in the closure of the domain; throws SupportError outside.
  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

 private:
  CellPartition partition_;
  std::vector<Vec> gradients_;
  std::vector<double> offsets_;
};

/// Offsets making phi continuous, by breadth-first search over the face
/// graph from cell 0. Throws NotContinuousError on a tangential gradient
/// jump or a disconnected face graph.
std::vector<double> repair_offsets(const CellPartition& partition, const std::vector<Vec>& gradients);

struct FaceResidual {
  int face = -1;
  /// |(v_a - v_b) - ((v_a - v_b) . nu) nu|
  double tangential = 0.0;
  /// max over face vertices of |phi_a - phi_b|
  double value_gap = 0.0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<FaceResidual> residuals;
  /// Indices into residuals that exceed the tolerance.
  std::vector<int> violations;
};

inline constexpr double kContinuityTol = 1e-9;
inline constexpr double kConvexityTol = 1e-9;

ValidationReport validate(const PiecewiseAffinePotential& phi);

struct InterfaceJump {
  int face = -1;
  int cell_a = -1;
  int cell_b = -1;
  Vec normal;
  /// (v_b - v_a) . nu
  double lambda = 0.0;
  double face_mass = 0.0;
};

/// Throws NotContinuousError when a face carries a tangential jump.
std::vector<InterfaceJump> interface_jumps(const PiecewiseAffinePotential& phi);

struct ConvexityVerdict {
  bool convex = true;
  std::vector<InterfaceJump> witnesses;
};

ConvexityVerdict is_locally_convex(const PiecewiseAffinePotential& phi);

struct HessianReport {
  std::vector<InterfaceJump> jumps;
  bool positive = true;
  /// |D(grad phi)|(Omega) = sum |lambda| * face mass.
  double total_variation = 0.0;
};

HessianReport distributional_hessian_report(const PiecewiseAffinePotential& phi);

/// -int grad phi . grad psi, cell by cell. Throws SupportError unless the
/// support of psi lies inside the domain.
quadrature::Scalar weak_laplacian_pairing(const PiecewiseAffinePotential& phi, const TestFunction& psi,
                                          std::uint64_t seed = 0);

/// sum over faces of lambda * int_face psi dH^{d-1}.
quadrature::Scalar face_sum_pairing(const PiecewiseAffinePotential& phi, const TestFunction& psi);

/// Bumps centred on a 5^d grid over the bounding box with radii R/4 and R/8
/// (R the inradius), kept when the support sits inside the domain.
std::vector<TestFunction> bump_battery(const geometry::Domain& domain);

struct PairingRecord {
  TestFunction psi;
  double volume_route = 0.0;
  double face_route = 0.0;
  double error = 0.0;
};

struct SubharmonicityReport {
  bool subharmonic = true;
  double min_pairing = 0.0;
  /// max |volume route - face route|
  double max_route_gap = 0.0;
  std::vector<PairingRecord> records;
};

inline constexpr double kPairingTol = 1e-6;

SubharmonicityReport subharmonicity_battery(const PiecewiseAffinePotential& phi, std::uint64_t seed = 0);

}  // namespace breaklab::potential
