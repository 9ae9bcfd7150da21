#include "doctest.h"

#include <cmath>
#include <limits>

#include "ptlab/coeffsets.hpp"
#include "ptlab/rng.hpp"

using namespace ptlab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

// Brute-force scalar prox on a grid of step h over [lo, hi].
double grid_prox(double x, double t, CoefficientSet set, double h = 1e-4) {
  double lo = -20.0, hi = 20.0;
  if (set == kBox01) lo = 0.0, hi = 1.0;
  if (set == kNonneg) lo = 0.0;
  double best = 0.0, best_f = std::numeric_limits<double>::infinity();
  for (double z = lo; z <= hi + 1e-12; z += h) {
    const double f = t * std::abs(z) + 0.5 * (z - x) * (z - x);
    if (f < best_f) best_f = f, best = z;
  }
  return best;
}

}  // namespace

TEST_CASE("ambient dimension") {
  CHECK(kBox01.ambient_dim() == 1);
  CHECK(kNonneg.ambient_dim() == 1);
  CHECK(kReal.ambient_dim() == 1);
  CHECK(kComplex.ambient_dim() == 2);
  CHECK(kComplex.is_complex());
  CHECK_FALSE(kReal.is_complex());
}

TEST_CASE("parse and name round trip") {
  for (CoefficientSet s : {kBox01, kNonneg, kReal, kComplex}) CHECK(CoefficientSet::parse(s.name()) == s);
  CHECK(CoefficientSet::parse("C") == kComplex);
  CHECK(CoefficientSet::parse("R") == kReal);
  CHECK_THROWS_AS(CoefficientSet::parse("quaternion"), std::invalid_argument);
}

TEST_CASE("membership") {
  const double a = 0.5, b = 1.5, c = -0.1;
  CHECK(kBox01.contains(&a));
  CHECK_FALSE(kBox01.contains(&b));
  CHECK_FALSE(kNonneg.contains(&c));
  CHECK(kReal.contains(&c));
  CHECK_THROWS(SignalVector(vec({0.2, 1.2}), kBox01, 2, 1));
  CHECK_THROWS(SignalVector(vec({0.2, 0.3, 0.4}), kReal, 2, 1));
}

TEST_CASE("norm_l1x examples") {
  CHECK(norm_l1x(SignalVector::zeros(kReal, 4, 2)) == 0.0);
  CHECK(norm_l1x(vec({1, -2, 0.5}), kReal) == doctest::Approx(3.5));
  CHECK(norm_l1x(vec({3, 4}), kComplex) == doctest::Approx(5.0));
}

TEST_CASE("norm_l1x homogeneity and triangle inequality") {
  Rng rng(1);
  for (CoefficientSet set : {kReal, kComplex}) {
    for (int rep = 0; rep < 1000; ++rep) {
      Eigen::VectorXd x(6), y(6);
      for (int i = 0; i < 6; ++i) x[i] = rng.normal(), y[i] = rng.normal();
      const double c = rng.normal();
      CHECK(std::abs(norm_l1x(c * x, set) - std::abs(c) * norm_l1x(x, set)) <= 1e-12 * (1 + norm_l1x(x, set)));
      CHECK(norm_l1x(x + y, set) <= norm_l1x(x, set) + norm_l1x(y, set) + 1e-12);
    }
  }
}

TEST_CASE("prox_step examples") {
  CHECK(prox_step(vec({2.0}), 0.5, kReal)[0] == doctest::Approx(1.5));
  CHECK(prox_step(vec({0.3}), 0.5, kReal)[0] == 0.0);
  CHECK(prox_step(vec({1.9}), 0.5, kBox01)[0] == 1.0);
  CHECK(prox_step(vec({-1.0}), 0.5, kNonneg)[0] == 0.0);
  const Eigen::VectorXd z = prox_step(vec({3.0, 4.0}), 1.0, kComplex);
  CHECK(z[0] == doctest::Approx(2.4));
  CHECK(z[1] == doctest::Approx(3.2));
  CHECK(prox_step(vec({0.3, 0.4}), 1.0, kComplex).norm() == 0.0);
}

TEST_CASE("prox_step matches a brute-force grid minimization") {
  Rng rng(2);
  for (CoefficientSet set : {kBox01, kNonneg, kReal}) {
    for (int rep = 0; rep < 60; ++rep) {
      const double x = 4.0 * rng.normal();
      const double t = 0.05 + 2.0 * rng.uniform();
      CHECK(std::abs(prox_step(vec({x}), t, set)[0] - grid_prox(x, t, set)) < 1e-3);
    }
  }
  // COMPLEX: the prox shrinks along the ray, so the grid runs over the radius.
  for (int rep = 0; rep < 60; ++rep) {
    const double a = 3.0 * rng.normal(), b = 3.0 * rng.normal(), t = 0.05 + 2.0 * rng.uniform();
    const double r = std::hypot(a, b);
    double best = 0.0, best_f = std::numeric_limits<double>::infinity();
    for (double s = 0.0; s <= r + 1e-12; s += 1e-4) {
      const double f = t * s + 0.5 * (s - r) * (s - r);
      if (f < best_f) best_f = f, best = s;
    }
    CHECK(std::abs(prox_step(vec({a, b}), t, kComplex).norm() - best) < 1e-3);
  }
}

TEST_CASE("REAL prox is odd") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const double x = 3.0 * rng.normal(), t = rng.uniform();
    CHECK(prox_step(vec({-x}), t, kReal)[0] == -prox_step(vec({x}), t, kReal)[0]);
  }
}

TEST_CASE("prox output lies in the set") {
  Rng rng(4);
  for (CoefficientSet set : {kBox01, kNonneg, kReal, kComplex}) {
    Eigen::VectorXd x(8);
    for (int i = 0; i < 8; ++i) x[i] = 3.0 * rng.normal();
    const Eigen::VectorXd z = prox_step(x, 0.3, set);
    CHECK_NOTHROW(SignalVector(z, set, 8 / set.ambient_dim(), 1));
  }
}

TEST_CASE("count_free examples") {
  CHECK(count_free(SignalVector(vec({0, 1, 0.5, 1}), kBox01, 4, 1)) == std::vector<int>{1});
  CHECK(count_free(SignalVector(vec({0, 0, 0}), kReal, 3, 1)) == std::vector<int>{0});
  CHECK(count_free(SignalVector(vec({0, 2.2, 0.1}), kNonneg, 3, 1)) == std::vector<int>{2});
  CHECK(count_free(SignalVector(vec({0, 0, 0, 1, 1, 0}), kComplex, 1, 3)) == std::vector<int>{0, 1, 1});
}

TEST_CASE("blocks partition the entries") {
  const SignalVector x(vec({1, 2, 3, 4, 5, 6}), kReal, 3, 2);
  CHECK(x.size() == 6);
  CHECK(x.block(1) == vec({4, 5, 6}));
  const SignalVector c(vec({1, 2, 3, 4}), kComplex, 1, 2);
  CHECK(c.block(1) == vec({3, 4}));
}
