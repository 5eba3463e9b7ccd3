#pragma once

#include <cstdint>
#include <vector>

#include "breaklab/geometry.hpp"
#include "breaklab/partition.hpp"

namespace breaklab {

/// Nonnegative C^1 bump psi(x) = (1 - |x-c|^2/r^2)^2 inside the ball B(c, r).
struct TestFunction {
  Vec center;
  double radius = 1.0;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// Integral over R^d.
  double integral() const;
  /// sup |grad psi| = 8 / (3 sqrt(3) r).
  double gradient_sup() const;
};

}  // namespace breaklab

namespace breaklab::quadrature {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const Rule& gauss_legendre(int n);

struct Scalar {
  double value = 0.0;
  /// Difference between two rule orders, or a Monte Carlo standard error.
  double error = 0.0;
};

struct Vector {
  Vec value;
  double error = 0.0;
};

/// Integral of psi over a polytope. Exact up to rounding in d = 1 (Gauss
/// rule on a polynomial), polar fan with analytic radial integrals in d = 2,
/// Monte Carlo in d = 3.
Scalar bump_integral(const geometry::ConvexPolytope& cell, const TestFunction& psi, std::uint64_t seed = 0);

/// Integral of grad psi over a polytope; same schemes as bump_integral.
Vector bump_gradient_integral(const geometry::ConvexPolytope& cell, const TestFunction& psi,
                              std::uint64_t seed = 0);

/// Integral of psi over an interior face with respect to H^{d-1}.
Scalar bump_face_integral(const geometry::InteriorFace& face, int dimension, const TestFunction& psi);

/// Monte Carlo sample count used by the d = 3 fallback.
inline constexpr std::size_t kMonteCarloSamples = 40'000;

}  // namespace breaklab::quadrature
