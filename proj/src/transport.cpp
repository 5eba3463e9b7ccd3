#include "breaklab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "breaklab/parallel.hpp"

namespace breaklab::transport {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConvexPolytope tagged_domain(const Domain& domain) {
  if (!domain.is_convex()) throw Error("Laguerre diagrams need a convex domain");
  const auto& p = domain.convex_piece();
  std::vector<geometry::HalfSpace> hs = p.halfspaces();
  for (std::size_t k = 0; k < hs.size(); ++k) hs[k].tag = -1 - static_cast<int>(k);
  return ConvexPolytope::from_halfspaces(p.dimension(), std::move(hs));
}

void check_distinct(const std::vector<Vec>& sites) {
  if (sites.empty()) throw Error("no sites");
  const int dim = static_cast<int>(sites.front().size());
  std::vector<int> order(sites.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sites[a](0) < sites[b](0); });
  for (std::size_t a = 0; a < order.size(); ++a) {
    if (sites[order[a]].size() != dim) throw DimensionError("sites of mixed dimension");
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (sites[order[b]](0) - sites[order[a]](0) > 1e-9) break;
      if ((sites[order[a]] - sites[order[b]]).norm() <= 1e-9) throw DegenerateError("coincident sites");
    }
  }
}

// Cells of the power diagram, clipped from `region`. Competitors are visited
// by increasing lifted distance; once that distance exceeds twice the lifted
// radius of the current cell no later competitor can cut it.
std::vector<ConvexPolytope> compute_cells(const ConvexPolytope& region, const std::vector<Vec>& v,
                                          const std::vector<double>& w) {
  const std::size_t n = v.size();
  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] = v[i].squaredNorm() + 2.0 * w[i];
  const double top = *std::max_element(psi.begin(), psi.end());
  std::vector<double> lift(n);
  for (std::size_t i = 0; i < n; ++i) lift[i] = std::sqrt(std::max(0.0, top - psi[i]));

  const geometry::Box box = region.bounds();
  std::vector<ConvexPolytope> cells(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, int>> order;
    order.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dh = lift[i] - lift[j];
      order.emplace_back((v[i] - v[j]).squaredNorm() + dh * dh, static_cast<int>(j));
    }
    // Start from the bounding box; domain facets are applied last, and only
    // those that cut, so interior cells never touch the full boundary.
    ConvexPolytope cell = ConvexPolytope::box(box.lo, box.hi);
    auto radius2 = [&] {
      double r = 0.0;
      for (const auto& x : cell.vertices()) r = std::max(r, (x - v[i]).squaredNorm());
      return r + lift[i] * lift[i];
    };
    double r2 = radius2();
    std::size_t sorted = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k == sorted) {
        const std::size_t end = std::min(order.size(), std::max<std::size_t>(32, 2 * sorted));
        const auto first = order.begin() + static_cast<long>(sorted);
        const auto last = order.begin() + static_cast<long>(end);
        if (last != order.end()) std::nth_element(first, last, order.end());
        std::sort(first, last);
        sorted = end;
      }
      const auto [d2, j] = order[k];
      if (d2 > 4.0 * r2 * (1.0 + 1e-12)) break;
      const auto h = geometry::HalfSpace::make(v[j] - v[i], w[i] - w[j], j);
      bool cuts = false;
      for (const auto& x : cell.vertices())
        if (h.slack(x) > 0.0) cuts = true;
      if (!cuts) continue;
      cell = geometry::clip(cell, h);
      if (cell.is_empty()) break;
      r2 = radius2();
    }
    for (const auto& h : region.halfspaces()) {
      if (cell.is_empty()) break;
      bool cuts = false;
      for (const auto& x : cell.vertices())
        if (h.slack(x) > 0.0) cuts = true;
      if (cuts) cell = geometry::clip(cell, h);
    }
    cells[i] = std::move(cell);
  });
  return cells;
}

LaguerreDiagram assemble(const Domain& domain, const ConvexPolytope& region, const std::vector<Vec>& sites,
                         const std::vector<double>& weights) {
  LaguerreDiagram d;
  d.domain = domain;
  d.sites = sites;
  d.weights = weights;
  d.cells = compute_cells(region, sites, weights);
  d.volumes.resize(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) d.volumes[i] = geometry::volume(d.cells[i]);
  return d;
}

// Symmetric graph Laplacian with entries H^{d-1}(Lag_i ∩ Lag_j) / |v_i - v_j|,
// each face measured from both sides and averaged.
Eigen::SparseMatrix<double> face_laplacian(const LaguerreDiagram& d) {
  const std::size_t n = d.sites.size();
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cell = d.cells[i];
    if (cell.is_empty()) continue;
    for (std::size_t k = 0; k < cell.facet_count(); ++k) {
      const int j = cell.halfspaces()[k].tag;
      if (j < 0) continue;
      const double m = geometry::facet_measure(cell, k);
      if (!(m > 0.0)) continue;
      const double c = 0.5 * m / (d.sites[i] - d.sites[j]).norm();
      trip.emplace_back(static_cast<int>(i), j, -c);
      trip.emplace_back(j, static_cast<int>(i), -c);
      diag[i] += c;
      diag[j] += c;
    }
  }
  for (std::size_t i = 0; i < n; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
  Eigen::SparseMatrix<double> L(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

double max_abs(const Eigen::VectorXd& g) { return g.size() ? g.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd gradient(const LaguerreDiagram& d, const DiscreteTarget& target) {
  Eigen::VectorXd g(static_cast<Eigen::Index>(d.sites.size()));
  for (std::size_t i = 0; i < d.sites.size(); ++i) g(i) = target.masses[i] - d.volumes[i];
  return g;
}

double objective(const LaguerreDiagram& d, const DiscreteTarget& target) {
  double f = 0.0;
  for (std::size_t i = 0; i < d.sites.size(); ++i) {
    f += target.masses[i] * d.weights[i];
    if (d.volumes[i] > 0.0)
      f -= (d.sites[i].dot(geometry::centroid(d.cells[i])) + d.weights[i]) * d.volumes[i];
  }
  return f;
}

// Weights whose cells are the Voronoi cells of the sites mapped affinely into
// the inscribed ball, so every cell starts with positive volume.
std::vector<double> initial_weights(const ConvexPolytope& region, const std::vector<Vec>& v) {
  // Largest ball about the centroid; any interior ball will do.
  const Vec c = geometry::centroid(region);
  double rho = std::numeric_limits<double>::infinity();
  for (const auto& h : region.halfspaces()) rho = std::min(rho, -h.slack(c));
  Vec mean = Vec::Zero(v.front().size());
  for (const auto& x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double spread = 0.0;
  for (const auto& x : v) spread = std::max(spread, (x - mean).norm());
  const double lambda = 2.0 * spread / rho;
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = -(c - mean / lambda).dot(v[i]) - v[i].squaredNorm() / (2.0 * lambda);
  const double w0 = w[0];
  for (double& x : w) x -= w0;
  return w;
}

}  // namespace

void validate_target(const Domain& domain, const DiscreteTarget& target) {
  if (target.sites.size() != target.masses.size()) throw Error("sites and masses differ in length");
  if (target.sites.empty()) throw Error("empty target");
  double total = 0.0;
  for (const auto& s : target.sites)
    if (s.size() != domain.dimension()) throw DimensionError("site dimension does not match the domain");
  for (double m : target.masses) {
    if (!(m > 0.0)) throw Error("target masses must be positive");
    total += m;
  }
  const double vol = domain.volume();
  if (std::abs(total - vol) > 1e-9 * vol) throw Error("target masses do not sum to the domain volume");
  check_distinct(target.sites);
}

LaguerreDiagram laguerre_cells(const Domain& domain, const std::vector<Vec>& sites,
                               const std::vector<double>& weights) {
  if (sites.size() != weights.size()) throw std::invalid_argument("sites and weights differ in length");
  check_distinct(sites);
  for (const auto& s : sites)
    if (s.size() != domain.dimension()) throw DimensionError("site dimension does not match the domain");
  return assemble(domain, tagged_domain(domain), sites, weights);
}

double dual_objective(const Domain& domain, const DiscreteTarget& target, const std::vector<double>& weights) {
  return objective(laguerre_cells(domain, target.sites, weights), target);
}

LaguerreDiagram solve_sdot(const Domain& domain, const DiscreteTarget& target, double tol,
                           const SdotOptions& options) {
  validate_target(domain, target);
  const ConvexPolytope region = tagged_domain(domain);
  const std::size_t n = target.sites.size();
  const double vol = domain.volume();
  const double goal = tol * vol;

  if (n == 1) {
    auto d = assemble(domain, region, target.sites, {0.0});
    d.residuals = {d.volumes[0] - target.masses[0]};
    d.residual_history = {std::abs(d.residuals[0])};
    return d;
  }

  auto d = assemble(domain, region, target.sites, initial_weights(region, target.sites));
  Eigen::VectorXd g = gradient(d, target);
  const double min_mass = *std::min_element(target.masses.begin(), target.masses.end());
  const double min_vol = *std::min_element(d.volumes.begin(), d.volumes.end());
  const double floor_vol = 0.5 * std::min(min_mass, min_vol);
  std::vector<double> history{max_abs(g)};

  int it = 0;
  int ascent = 0;
  while (max_abs(g) > goal) {
    if (it == options.max_iterations) {
      std::vector<double> res(n);
      for (std::size_t i = 0; i < n; ++i) res[i] = -g(i);
      throw ConvergenceError("semidiscrete transport did not converge", max_abs(g), std::move(res));
    }
    ++it;
    const Eigen::SparseMatrix<double> L = face_laplacian(d);
    const Eigen::Index m = static_cast<Eigen::Index>(n) - 1;
    const Eigen::SparseMatrix<double> reduced = L.bottomRightCorner(m, m);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    bool newton = false;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(reduced);
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
      step.tail(m) = ldlt.solve(g.tail(m));
      newton = ldlt.info() == Eigen::Success && step.allFinite();
    }
    if (!newton) {
      // Disconnected diagram: fixed-step ascent scaled by the largest
      // diagonal entry.
      const double scale = L.diagonal().maxCoeff();
      step = g / (scale > 0.0 ? scale : 1.0);
      step.array() -= step(0);
      ++ascent;
    }
    const double f0 = newton ? 0.0 : objective(d, target);
    double tau = 1.0;
    for (;;) {
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = d.weights[i] + tau * step(i);
      auto trial = assemble(domain, region, target.sites, w);
      const Eigen::VectorXd gt = gradient(trial, target);
      const double tmin = *std::min_element(trial.volumes.begin(), trial.volumes.end());
      const bool decrease = newton ? gt.norm() <= (1.0 - 0.5 * tau) * g.norm() : objective(trial, target) > f0;
      if (tmin >= floor_vol && decrease) {
        d = std::move(trial);
        g = gt;
        break;
      }
      tau *= 0.5;
      if (tau < 0x1.0p-40) {
        std::vector<double> res(n);
        for (std::size_t i = 0; i < n; ++i) res[i] = -g(i);
        throw ConvergenceError("damping stalled in semidiscrete transport", max_abs(g), std::move(res));
      }
    }
    history.push_back(max_abs(g));
  }
  d.residual_history = std::move(history);
  d.iterations = it;
  d.ascent_steps = ascent;
  d.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.residuals[i] = -g(i);
  return d;
}

potential::PiecewiseAffinePotential brenier_potential(const LaguerreDiagram& diagram, std::vector<int>* pruned) {
  std::vector<ConvexPolytope> cells;
  std::vector<Vec> grads;
  std::vector<double> offsets;
  for (std::size_t i = 0; i < diagram.cells.size(); ++i) {
    const auto& c = diagram.cells[i];
    if (c.is_empty() || c.degenerate() || !(diagram.volumes[i] > 0.0)) {
      if (pruned) pruned->push_back(static_cast<int>(i));
      continue;
    }
    cells.push_back(c);
    grads.push_back(diagram.sites[i]);
    offsets.push_back(diagram.weights[i]);
  }
  return {geometry::CellPartition(diagram.domain, std::move(cells)), std::move(grads), std::move(offsets)};
}

std::vector<int> optimal_assignment(std::size_t n, const std::function<double(std::size_t, std::size_t)>& cost) {
  // Shortest augmenting paths with row/column potentials, 1-based.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n, -1);
  for (std::size_t j = 1; j <= n; ++j) col[p[j] - 1] = static_cast<int>(j - 1);
  return col;
}

namespace {

// Successive shortest paths on the uncapacitated bipartite network.
std::vector<Transfer> transportation(const std::vector<Vec>& x, const std::vector<double>& a,
                                     const std::vector<Vec>& y, const std::vector<double>& b) {
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  std::vector<double> flow(n * m, 0.0);
  std::vector<double> supply = a;
  std::vector<double> demand = b;
  std::vector<double> pot(n + m, 0.0);
  double total = std::accumulate(a.begin(), a.end(), 0.0);
  const double eps = 1e-14 * total;
  auto cost = [&](std::size_t i, std::size_t j) { return (x[i] - y[j]).squaredNorm(); };
  double remaining = total;
  while (remaining > eps) {
    std::vector<double> dist(n + m, kInf);
    std::vector<long> prev(n + m, -1);
    std::vector<char> done(n + m, 0);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > eps) dist[i] = 0.0;
    long sink = -1;
    for (;;) {
      long u = -1;
      for (std::size_t k = 0; k < n + m; ++k)
        if (!done[k] && dist[k] < kInf && (u < 0 || dist[k] < dist[u])) u = static_cast<long>(k);
      if (u < 0) break;
      done[u] = 1;
      if (static_cast<std::size_t>(u) >= n && demand[u - n] > eps) {
        sink = u;
        break;
      }
      if (static_cast<std::size_t>(u) < n) {
        for (std::size_t j = 0; j < m; ++j) {
          const double rc = std::max(0.0, cost(u, j) + pot[u] - pot[n + j]);
          if (dist[u] + rc < dist[n + j]) dist[n + j] = dist[u] + rc, prev[n + j] = u;
        }
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow[i * m + j] <= eps) continue;
          const double rc = std::max(0.0, -cost(i, j) + pot[u] - pot[i]);
          if (dist[u] + rc < dist[i]) dist[i] = dist[u] + rc, prev[i] = u;
        }
      }
    }
    if (sink < 0) throw Error("transportation problem is infeasible");
    const double dt = dist[sink];
    for (std::size_t k = 0; k < n + m; ++k) pot[k] += std::min(dist[k], dt);
    double amount = demand[sink - n];
    long k = sink;
    while (prev[k] >= 0) {
      const long p = prev[k];
      if (static_cast<std::size_t>(p) >= n) amount = std::min(amount, flow[k * m + (p - n)]);
      k = p;
    }
    amount = std::min(amount, supply[k]);
    supply[k] -= amount;
    demand[sink - n] -= amount;
    remaining -= amount;
    k = sink;
    while (prev[k] >= 0) {
      const long p = prev[k];
      if (static_cast<std::size_t>(p) < n)
        flow[p * m + (k - n)] += amount;
      else
        flow[k * m + (p - n)] -= amount;
      k = p;
    }
  }
  std::vector<Transfer> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (flow[i * m + j] > eps) out.push_back({static_cast<int>(i), static_cast<int>(j), flow[i * m + j]});
  return out;
}

}  // namespace

Coupling discrete_ot(const std::vector<Vec>& source, const std::vector<double>& source_weights,
                     const std::vector<Vec>& target, const std::vector<double>& target_weights) {
  if (source.size() != source_weights.size() || target.size() != target_weights.size())
    throw std::invalid_argument("points and weights differ in length");
  if (source.empty() || target.empty()) throw std::invalid_argument("empty point cloud");
  if (source.size() > kMaxExactSize || target.size() > kMaxExactSize)
    throw SizeLimitError("exact transport is limited to 4096 points per side; subsample the clouds");
  const double ta = std::accumulate(source_weights.begin(), source_weights.end(), 0.0);
  const double tb = std::accumulate(target_weights.begin(), target_weights.end(), 0.0);
  if (std::abs(ta - tb) > 1e-9 * std::max(ta, tb)) throw std::invalid_argument("total masses differ");
  for (double w : source_weights)
    if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
  for (double w : target_weights)
    if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");

  Coupling c;
  const auto uniform = [](const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [&](double x) { return std::abs(x - w.front()) <= 1e-12 * w.front(); });
  };
  if (source.size() == target.size() && uniform(source_weights) && uniform(target_weights)) {
    const auto col = optimal_assignment(
        source.size(), [&](std::size_t i, std::size_t j) { return (source[i] - target[j]).squaredNorm(); });
    for (std::size_t i = 0; i < source.size(); ++i) c.transfers.push_back({static_cast<int>(i), col[i], source_weights[i]});
  } else {
    std::vector<double> b = target_weights;
    for (double& x : b) x *= ta / tb;
    c.transfers = transportation(source, source_weights, target, b);
  }
  c.map.assign(source.size(), Vec::Zero(source.front().size()));
  for (const auto& t : c.transfers) {
    c.cost += t.mass * (source[t.source] - target[t.target]).squaredNorm();
    c.map[t.source] += t.mass * target[t.target];
  }
  for (std::size_t i = 0; i < source.size(); ++i) c.map[i] /= source_weights[i];
  return c;
}

double w2_estimate(const std::vector<Vec>& source, const std::vector<Vec>& target, double weight) {
  if (source.size() != target.size()) throw std::invalid_argument("w2_estimate needs equal sample sizes");
  if (source.size() > kMaxExactSize)
    throw SizeLimitError("exact transport is limited to 4096 points per side; subsample the clouds");
  if (source.empty()) return 0.0;
  const auto col = optimal_assignment(
      source.size(), [&](std::size_t i, std::size_t j) { return (source[i] - target[j]).squaredNorm(); });
  double s = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) s += (source[i] - target[col[i]]).squaredNorm();
  return weight * s;
}

bool PolarExperimentResult::strictly_decreasing() const {
  for (std::size_t k = 1; k < steps.size(); ++k)
    if (!(steps[k].err_grad < steps[k - 1].err_grad)) return false;
  return true;
}

double PolarExperimentResult::reduction_factor() const {
  if (steps.empty()) return 1.0;
  const double last = steps.back().err_grad - noise_floor;
  if (last <= 0.0) return kInf;
  return (steps.front().err_grad - noise_floor) / last;
}

namespace {

struct Bins {
  BinLayout layout;
  std::array<int, 3> shape{1, 1, 1};
  std::vector<long> id;  // block flat index -> bin, or -1
  const field::Grid* grid = nullptr;

  std::array<int, 3> block_of(const Vec& x) const {
    std::array<int, 3> b{0, 0, 0};
    for (int a = 0; a < grid->dimension(); ++a) {
      const int cell = static_cast<int>(std::floor((x(a) - grid->origin()(a)) / grid->spacing()));
      b[a] = std::clamp(cell / layout.block, 0, shape[a] - 1);
    }
    return b;
  }
  std::size_t flat(const std::array<int, 3>& b) const {
    return static_cast<std::size_t>(b[0]) + static_cast<std::size_t>(shape[0]) * (b[1] + static_cast<std::size_t>(shape[1]) * b[2]);
  }
};

Bins make_bins(const field::Grid& grid, std::size_t samples, double per_bin) {
  Bins bins;
  bins.grid = &grid;
  const int dim = grid.dimension();
  const double vol = grid.domain().volume();
  const double side = std::pow(per_bin * vol / static_cast<double>(samples), 1.0 / dim);
  bins.layout.block = std::max(1, static_cast<int>(std::lround(side / grid.spacing())));
  for (int a = 0; a < dim; ++a) bins.shape[a] = (grid.shape()[a] + bins.layout.block - 1) / bins.layout.block;
  const std::size_t blocks = static_cast<std::size_t>(bins.shape[0]) * bins.shape[1] * bins.shape[2];
  bins.id.assign(blocks, -1);
  const auto& piece = grid.domain().convex_piece();
  for (std::size_t k = 0; k < blocks; ++k) {
    const std::array<int, 3> b{static_cast<int>(k % bins.shape[0]), static_cast<int>((k / bins.shape[0]) % bins.shape[1]),
                               static_cast<int>(k / (static_cast<std::size_t>(bins.shape[0]) * bins.shape[1]))};
    Vec lo(dim);
    Vec hi(dim);
    for (int a = 0; a < dim; ++a) {
      lo(a) = grid.origin()(a) + b[a] * bins.layout.block * grid.spacing();
      hi(a) = lo(a) + bins.layout.block * grid.spacing();
    }
    auto region = geometry::intersect(ConvexPolytope::box(lo, hi), piece);
    if (!region) continue;
    bins.id[k] = static_cast<long>(bins.layout.regions.size());
    bins.layout.volumes.push_back(geometry::volume(*region));
    bins.layout.centroids.push_back(geometry::centroid(*region));
    bins.layout.regions.push_back(std::move(*region));
  }
  return bins;
}

// Bin averages of the piecewise-constant map cell_i -> value_i.
std::vector<Vec> bin_average(const Bins& bins, const std::vector<ConvexPolytope>& cells, const std::vector<Vec>& values) {
  const int dim = bins.grid->dimension();
  std::vector<std::vector<std::pair<long, double>>> parts(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    if (cells[i].is_empty()) return;
    const auto box = cells[i].bounds();
    const auto lo = bins.block_of(box.lo);
    const auto hi = bins.block_of(box.hi);
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int a = lo[0]; a <= hi[0]; ++a) {
          const long b = bins.id[bins.flat({a, j, k})];
          if (b < 0) continue;
          const double v = geometry::intersection_volume(cells[i], bins.layout.regions[b]);
          if (v > 0.0) parts[i].emplace_back(b, v);
        }
  });
  std::vector<Vec> avg(bins.layout.regions.size(), Vec::Zero(dim));
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (const auto& [b, v] : parts[i]) avg[b] += v * values[i];
  for (std::size_t b = 0; b < avg.size(); ++b) avg[b] /= bins.layout.volumes[b];
  return avg;
}

// Bin means of per-sample values; empty bins fall back to `fallback`.
std::vector<Vec> bin_mean(const Bins& bins, const std::vector<Vec>& points, const std::vector<Vec>& values,
                          const std::vector<Vec>& fallback) {
  const int dim = bins.grid->dimension();
  std::vector<Vec> sum(bins.layout.regions.size(), Vec::Zero(dim));
  std::vector<int> count(sum.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const long b = bins.id[bins.flat(bins.block_of(points[i]))];
    if (b < 0) continue;
    sum[b] += values[i];
    ++count[b];
  }
  for (std::size_t b = 0; b < sum.size(); ++b) sum[b] = count[b] ? Vec(sum[b] / count[b]) : fallback[b];
  return sum;
}

double bin_l2(const Bins& bins, const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += bins.layout.volumes[k] * (a[k] - b[k]).squaredNorm();
  return std::sqrt(s);
}

double lipschitz_estimate(const field::GridVectorField& b) {
  const auto& g = b.grid();
  const int dim = g.dimension();
  double lip = 0.0;
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const Vec x = g.cell_center(c);
    if (!g.domain().contains(x)) continue;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
    bool inside = true;
    for (int a = 0; a < dim && inside; ++a) {
      Vec y = x;
      y(a) += g.spacing();
      if (!g.domain().contains(y)) inside = false;
      else J.col(a) = (b.evaluate(y) - b.evaluate(x)) / g.spacing();
    }
    if (!inside) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J.transpose() * J, Eigen::EigenvaluesOnly);
    lip = std::max(lip, std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())));
  }
  return lip;
}

}  // namespace

PolarExperimentResult polar_experiment(const field::GridVectorField& b, const std::vector<double>& t_grid,
                                       std::size_t sample_count, std::uint64_t seed, const PolarOptions& options) {
  const auto& grid = b.grid();
  const int dim = grid.dimension();
  if (dim > 2) throw DimensionError("the polar experiment supports d <= 2");
  if (!grid.domain().is_convex()) throw Error("the polar experiment needs a convex domain");
  if (t_grid.empty()) throw std::invalid_argument("empty t grid");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > 0.0)) throw std::invalid_argument("t grid must be positive");
    if (k > 0 && !(t_grid[k] < t_grid[k - 1])) throw std::invalid_argument("t grid must be strictly decreasing");
  }
  if (sample_count < 2) throw std::invalid_argument("need at least two samples");
  if (options.estimator == PolarEstimator::assignment && sample_count > kMaxExactSize)
    throw SizeLimitError("assignment estimator is limited to 4096 samples");

  PolarExperimentResult r;
  r.estimator = options.estimator;
  r.samples = sample_count;
  r.seed = seed;

  const auto split = field::helmholtz_project(b, options.helmholtz_tol);
  const auto& P = split.gradient_part;
  const Bins bins = make_bins(grid, sample_count, options.samples_per_bin);
  r.bins = bins.layout;
  const std::size_t nb = bins.layout.regions.size();

  std::vector<Vec> pbin(nb, Vec::Zero(dim));
  std::vector<double> pvol(nb, 0.0);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!grid.active(c)) continue;
    const long k = bins.id[bins.flat(bins.block_of(grid.cell_center(c)))];
    if (k < 0) continue;
    pbin[k] += grid.cell_volume(c) * P.cell_value(c);
    pvol[k] += grid.cell_volume(c);
  }
  for (std::size_t k = 0; k < nb; ++k)
    if (pvol[k] > 0.0) pbin[k] /= pvol[k];
  const std::vector<Vec> zeros(nb, Vec::Zero(dim));
  r.projected_norm = bin_l2(bins, pbin, zeros);
  r.lipschitz = lipschitz_estimate(b);

  const Domain& domain = grid.domain();
  const auto sample = geometry::sample_points(domain, sample_count, seed);
  const std::vector<Vec>& x = sample.points;
  const double mass = domain.volume() / static_cast<double>(sample_count);
  std::vector<Vec> bx(sample_count);
  std::vector<Vec> pbx(sample_count);
  for (std::size_t i = 0; i < sample_count; ++i) {
    bx[i] = b.evaluate(x[i]);
    pbx[i] = P.cell_value(grid.locate(x[i]));
  }
  const DiscreteTarget base{x, std::vector<double>(sample_count, mass)};

  auto err_phi = [&](const std::vector<double>& phi_t, const std::vector<double>& phi_0, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < sample_count; ++i) {
      const double d = (phi_t[i] - phi_0[i]) / t - (bx[i](0) - pbx[i](0));
      s += mass * d * d;
    }
    return std::sqrt(s);
  };

  if (options.estimator == PolarEstimator::semidiscrete) {
    const auto d0 = solve_sdot(domain, base, options.sdot_tol);
    const auto a0 = bin_average(bins, d0.cells, x);
    r.noise_floor = r.lipschitz * bin_l2(bins, a0, bins.layout.centroids);
    std::vector<double> phi0(sample_count, 0.0);
    if (dim == 1)
      for (std::size_t i = 0; i < sample_count; ++i) phi0[i] = geometry::centroid(d0.cells[i])(0);
    for (double t : t_grid) {
      DiscreteTarget target = base;
      for (std::size_t i = 0; i < sample_count; ++i) target.sites[i] = x[i] + t * bx[i];
      const auto dt = solve_sdot(domain, target, options.sdot_tol);
      const auto at = bin_average(bins, dt.cells, target.sites);
      PolarStep s;
      s.t = t;
      s.grad_h.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) s.grad_h[k] = (at[k] - a0[k]) / t;
      s.err_grad = bin_l2(bins, s.grad_h, pbin);
      s.grad_h_norm = bin_l2(bins, s.grad_h, zeros);
      for (std::size_t i = 0; i < sample_count; ++i)
        if (!dt.cells[i].is_empty()) s.w2 += geometry::second_moment(dt.cells[i], target.sites[i]);
      if (dim == 1) {
        std::vector<double> phit(sample_count);
        for (std::size_t i = 0; i < sample_count; ++i) phit[i] = geometry::centroid(dt.cells[i])(0);
        s.err_phi = err_phi(phit, phi0, t);
      }
      r.steps.push_back(std::move(s));
    }
  } else {
    const auto a0 = bin_mean(bins, x, x, bins.layout.centroids);
    r.noise_floor = r.lipschitz * bin_l2(bins, a0, bins.layout.centroids);
    std::vector<double> phi0(sample_count, 0.0);
    std::vector<std::size_t> by_position(sample_count);
    if (dim == 1) {
      for (std::size_t i = 0; i < sample_count; ++i) phi0[i] = x[i](0);
      std::iota(by_position.begin(), by_position.end(), 0);
      std::sort(by_position.begin(), by_position.end(), [&](std::size_t a, std::size_t c) { return x[a](0) < x[c](0); });
    }
    for (double t : t_grid) {
      std::vector<Vec> y(sample_count);
      for (std::size_t i = 0; i < sample_count; ++i) y[i] = x[i] + t * bx[i];
      const auto col =
          optimal_assignment(sample_count, [&](std::size_t i, std::size_t j) { return (x[i] - y[j]).squaredNorm(); });
      std::vector<Vec> gh(sample_count);
      PolarStep s;
      s.t = t;
      for (std::size_t i = 0; i < sample_count; ++i) {
        gh[i] = (y[col[i]] - x[i]) / t;
        s.w2 += mass * (y[col[i]] - x[i]).squaredNorm();
      }
      s.grad_h = bin_mean(bins, x, gh, zeros);
      s.err_grad = bin_l2(bins, s.grad_h, pbin);
      s.grad_h_norm = bin_l2(bins, s.grad_h, zeros);
      if (dim == 1) {
        // Phi_t(x_i): the sample whose rank matches the rank of y_i.
        std::vector<std::size_t> by_image(sample_count);
        std::iota(by_image.begin(), by_image.end(), 0);
        std::sort(by_image.begin(), by_image.end(), [&](std::size_t a, std::size_t c) { return y[a](0) < y[c](0); });
        std::vector<double> phit(sample_count);
        for (std::size_t k = 0; k < sample_count; ++k) phit[by_image[k]] = x[by_position[k]](0);
        s.err_phi = err_phi(phit, phi0, t);
      }
      r.steps.push_back(std::move(s));
    }
  }
  return r;
}

}  // namespace breaklab::transport
