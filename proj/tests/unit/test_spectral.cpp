#include <cmath>

#include "breaklab/spectral.hpp"
#include "doctest.h"
#include "generators.hpp"

using namespace breaklab;
using namespace breaklab::spectral;

namespace {

SymMatrix random_symmetric(Rng& rng, int d) {
  SymMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m(i, j) = m(j, i) = rng.normal();
  return m;
}

const std::vector<double> kTimes{0.1, 0.5, 1.0, 2.0, 5.0};

}  // namespace

TEST_CASE("eigenvalues of simple matrices") {
  for (double l : eigenvalues(SymMatrix::Zero(3, 3))) CHECK(l == 0.0);
  SymMatrix d(2, 2);
  d << 1, 0, 0, -1;
  const auto l = eigenvalues(d);
  CHECK(l[0] == -1.0);
  CHECK(l[1] == 1.0);
  SymMatrix asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(eigenvalues(asym), DimensionError);
  CHECK_THROWS_AS(eigenvalues(SymMatrix::Zero(0, 0)), DimensionError);
}

TEST_CASE("property: trace, determinant and residual oracles") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 1 + trial % 4;
    const SymMatrix m = random_symmetric(rng, d);
    const auto es = eigensystem(m);
    double sum = 0.0;
    double prod = 1.0;
    for (int k = 0; k < d; ++k) {
      sum += es.values[k];
      prod *= es.values[k];
      CHECK((m * es.vectors.col(k) - es.values[k] * es.vectors.col(k)).norm() <= 1e-10);
      if (k > 0) CHECK(es.values[k - 1] <= es.values[k]);
    }
    CHECK(std::abs(sum - m.trace()) <= 1e-10);
    CHECK(std::abs(prod - m.determinant()) <= 1e-10);
  }
}

TEST_CASE("rank-one jump matrices have spectrum {lambda, 0, ...}") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 2;
    Eigen::VectorXd nu(d);
    for (int a = 0; a < d; ++a) nu(a) = rng.normal();
    nu.normalize();
    const double lambda = rng.uniform(-3, 3);
    const SymMatrix m = lambda * nu * nu.transpose();
    auto l = eigenvalues(m);
    std::sort(l.begin(), l.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (int k = 0; k + 1 < d; ++k) CHECK(std::abs(l[k]) <= 1e-12);
    CHECK(l.back() == doctest::Approx(lambda).epsilon(1e-12));
  }
}

TEST_CASE("unit determinant sweep") {
  CHECK(unit_det_sweep(SymMatrix::Zero(2, 2), kTimes, 1e-9).rigid_zero);
  SymMatrix d(2, 2);
  d << 1, 0, 0, -1;
  const auto r = unit_det_sweep(d, {0.5, 1.0, 2.0}, 1e-9);
  CHECK_FALSE(r.rigid_zero);
  CHECK(r.violating_t == 0.5);
  CHECK(r.violating_det == doctest::Approx(0.75));
  CHECK_THROWS(unit_det_sweep(d, {0.5, 0.5, 1.0}, 1e-9));

  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    SymMatrix m = random_symmetric(rng, 2 + trial % 2);
    m -= (m.trace() / m.rows()) * SymMatrix::Identity(m.rows(), m.rows());
    CHECK_FALSE(unit_det_sweep(m, kTimes, 1e-9).rigid_zero);
  }
}

TEST_CASE("property: rigid_zero agrees with a dense time grid and the epsilon bound") {
  std::vector<double> dense;
  for (int k = 1; k <= 1000; ++k) dense.push_back(5.0 * k / 1000.0);
  const double eps = rigidity_epsilon(kTimes, 1e-9);
  CHECK(eps > 0.0);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const double scale = std::pow(10.0, rng.uniform(-14, 0));
    const SymMatrix m = scale * random_symmetric(rng, 2 + trial % 2);
    const auto coarse = unit_det_sweep(m, kTimes, 1e-9);
    const auto fine = unit_det_sweep(m, dense, 1e-9);
    if (coarse.rigid_zero) {
      CHECK(coarse.max_abs_eigenvalue <= eps);
    } else {
      CHECK_FALSE(fine.rigid_zero);
    }
  }
}

TEST_CASE("AM-GM trace bound") {
  const auto zero = amgm_trace_bound(SymMatrix::Zero(2, 2), 0.5);
  CHECK(zero.holds);
  CHECK(zero.trace == 0.0);

  SymMatrix m(2, 2);
  m << 1, 0, 0, -2.0 / 3.0;
  const auto r = amgm_trace_bound(m, 0.5);
  CHECK(r.unit_det);
  CHECK(r.trace == doctest::Approx(1.0 / 3.0));
  CHECK(r.holds);

  SymMatrix neg(1, 1);
  neg << -4;
  CHECK_THROWS_AS(amgm_trace_bound(neg, 0.5), DegenerateError);
}

TEST_CASE("property: AM-GM slack on constrained samples") {
  Rng rng(5);
  int accepted = 0;
  while (accepted < 1000) {
    const int d = 2 + accepted % 2;
    SymMatrix m = random_symmetric(rng, d);
    const double t = rng.uniform(0.1, 2.0);
    const auto l = eigenvalues(m);
    // Rescale by s so that sum log(1 + t s lambda_i) = 0 with s != 0.
    double tr = 0.0;
    for (double x : l) tr += x;
    const bool mixed = l.front() < 0 && l.back() > 0;
    if (!mixed || std::abs(tr) < 1e-3) continue;
    const double s_max = tr > 0 ? -1.0 / (t * l.front()) : -1.0 / (t * l.back());
    double s = 0.999 * s_max;
    for (int it = 0; it < 200; ++it) {
      double g = 0.0;
      double dg = 0.0;
      for (double x : l) {
        g += std::log1p(t * s * x);
        dg += t * x / (1.0 + t * s * x);
      }
      const double step = g / dg;
      double next = s - step;
      if ((next > 0) != (s_max > 0) || std::abs(next) >= std::abs(s_max)) next = 0.5 * (s + s_max);
      if (std::abs(next - s) < 1e-15 * std::abs(s)) break;
      s = next;
    }
    m *= s;
    const auto rep = amgm_trace_bound(m, t);
    if (!rep.unit_det) continue;
    ++accepted;
    CHECK(rep.slack >= -1e-12);
    CHECK(rep.holds);
    CHECK(rep.trace >= -1e-6);
  }
}
