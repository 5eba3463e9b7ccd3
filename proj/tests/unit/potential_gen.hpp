#pragma once

#include "breaklab/potential.hpp"
#include "generators.hpp"

namespace gen {

using breaklab::geometry::CellPartition;
using breaklab::geometry::Domain;
using breaklab::potential::PiecewiseAffinePotential;

/// phi = sign * max_i (x . v_i + w_i) on a convex domain, cells built by
/// direct clipping; empty cells dropped.
inline PiecewiseAffinePotential max_affine(const ConvexPolytope& domain, const std::vector<Vec>& v,
                                           const std::vector<double>& w, double sign = 1.0) {
  std::vector<ConvexPolytope> cells;
  std::vector<Vec> grads;
  std::vector<double> offs;
  for (std::size_t i = 0; i < v.size(); ++i) {
    ConvexPolytope c = domain;
    for (std::size_t j = 0; j < v.size() && !c.is_empty(); ++j) {
      if (j == i) continue;
      c = breaklab::geometry::clip(c, HalfSpace::make(v[j] - v[i], w[i] - w[j]));
    }
    if (c.is_empty() || c.degenerate()) continue;
    cells.push_back(c);
    grads.push_back(sign * v[i]);
    offs.push_back(sign * w[i]);
  }
  return {CellPartition(Domain(domain), cells), grads, offs};
}

inline PiecewiseAffinePotential random_max_affine(Rng& rng, const ConvexPolytope& domain, int sites,
                                                  double sign = 1.0) {
  const int dim = domain.dimension();
  std::vector<Vec> v;
  std::vector<double> w;
  for (int i = 0; i < sites; ++i) {
    v.push_back(random_vec(rng, dim, -2.0, 2.0));
    w.push_back(rng.uniform(-0.3, 0.3));
  }
  return max_affine(domain, v, w, sign);
}

inline ConvexPolytope unit_square() { return ConvexPolytope::box(make_vec({0, 0}), make_vec({1, 1})); }

}  // namespace gen
