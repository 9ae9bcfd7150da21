#include "doctest.h"

#include <cmath>

#include "ptlab/errors.hpp"
#include "ptlab/experiments.hpp"
#include "ptlab/lp_oracle.hpp"
#include "ptlab/solver.hpp"

using namespace ptlab;

namespace {

// Gaussian m x M matrix over the field of `set` (real-pair form for COMPLEX).
Eigen::MatrixXd gaussian(int m, int M, CoefficientSet set, Rng& rng) {
  if (set.is_complex()) {
    Eigen::MatrixXcd a(m, M);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < M; ++j) a(i, j) = {rng.normal(), rng.normal()};
    return to_real_pair(a);
  }
  Eigen::MatrixXd a(m, M);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < M; ++j) a(i, j) = rng.normal();
  return a;
}

}  // namespace

TEST_CASE("identity system returns x0 for every set") {
  for (CoefficientSet set : {kBox01, kNonneg, kReal, kComplex}) {
    const int M = 6;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M * set.ambient_dim(), M * set.ambient_dim());
    const SignalVector x0 = sample_signal({3, M, M, 1}, set, 11);
    const Eigen::VectorXd y = x0.entries();
    const auto res = solve_dense(I, y, set);
    CHECK(res.status == SolveStatus::CONVERGED);
    CHECK((res.x - x0.entries()).cwiseAbs().maxCoeff() < 1e-8);
  }
}

// For real signals the complex rows {0, 1, 2} of the 4-point DFT carry four
// independent real equations, so the 3-row real system is the real Fourier
// block on frequencies {0, 1}: DC plus one cos/sin pair.
TEST_CASE("1-sparse recovery from a 3-row real Fourier block") {
  const auto op = make_block_diagonal({real_fourier_block(4, {0, 1})}, 1, true, Field::REAL);
  CHECK(op.rows() == 3);
  Eigen::VectorXd e(4);
  e << 0, 1, 0, 0;
  const SignalVector x0(e, kReal, 4, 1);
  const auto y = op.apply(x0);
  const auto res = solve_p1(op, y, kReal);
  CHECK(res.status == SolveStatus::CONVERGED);
  CHECK(relative_error(x0, res.x1) < 1e-6);
  const auto orc = lp_oracle(op.effective_block(0, kReal), y, kReal);
  CHECK(orc.optimal);
  CHECK(std::abs(orc.value - res.value) < 1e-8);
  CHECK(std::abs(orc.value - 1.0) < 1e-8);
}

TEST_CASE("4 nonzeros in 4 columns with 3 rows is not recovered") {
  const auto op = make_block_diagonal({real_fourier_block(4, {0, 1})}, 1, true, Field::REAL);
  Eigen::VectorXd e(4);
  e << 1.0, -0.7, 0.4, 2.0;
  const SignalVector x0(e, kReal, 4, 1);
  const auto res = solve_p1(op, op.apply(x0), kReal);
  CHECK(relative_error(x0, res.x1) > 1e-3);
  CHECK(res.value <= norm_l1x(x0) + 1e-9);
}

TEST_CASE("declare_success threshold") {
  Eigen::VectorXd a(2);
  a << 1.0, 0.0;
  const SignalVector x0(a, kReal, 2, 1);
  CHECK(declare_success(x0, x0));
  Eigen::VectorXd b = a;
  b[1] = 0.002;
  CHECK_FALSE(declare_success(x0, SignalVector(b, kReal, 2, 1)));
  b[1] = 0.0009;
  CHECK(declare_success(x0, SignalVector(b, kReal, 2, 1)));
  CHECK_THROWS_AS(declare_success(SignalVector::zeros(kReal, 2, 1), x0), std::invalid_argument);
}

TEST_CASE("oracle hand examples") {
  SUBCASE("BOX01 [1 1] y = .5") {
    Eigen::MatrixXd A(1, 2);
    A << 1, 1;
    const auto r = lp_oracle(A, Eigen::VectorXd::Constant(1, 0.5), kBox01);
    CHECK(r.optimal);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("REAL identity") {
    Eigen::VectorXd y(3);
    y << 1.0, -2.0, 0.5;
    const auto r = lp_oracle(Eigen::MatrixXd::Identity(3, 3), y, kReal);
    CHECK(r.value == doctest::Approx(3.5).epsilon(1e-9));
  }
  SUBCASE("NONNEG [1 -1] y = 1") {
    Eigen::MatrixXd A(1, 2);
    A << 1, -1;
    const auto r = lp_oracle(A, Eigen::VectorXd::Constant(1, 1.0), kNonneg);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(std::abs(r.x[1]) < 1e-7);
    const auto s = solve_dense(A, Eigen::VectorXd::Constant(1, 1.0), kNonneg);
    CHECK(s.value == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("COMPLEX single pair") {
    // min |z| s.t. z = 3 + 4i
    const auto r = lp_oracle(Eigen::MatrixXd::Identity(2, 2), (Eigen::VectorXd(2) << 3, 4).finished(), kComplex);
    CHECK(r.value == doctest::Approx(5.0).epsilon(1e-9));
  }
  SUBCASE("guard") {
    CHECK_THROWS_AS(lp_oracle(Eigen::MatrixXd::Ones(2, 65), Eigen::VectorXd::Ones(2), kReal), GuardError);
  }
}

TEST_CASE("NT scaling maps z to W^{-1} s") {
  Eigen::VectorXd s(3), z(3);
  s << 2.0, 0.3, -1.1;
  z << 1.5, -0.4, 0.2;
  const auto sc = soc_nt_scaling(s, z);
  CHECK((sc.W() * z - sc.Winv() * s).norm() < 1e-12);
  CHECK((sc.W() * sc.Winv() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("solver agrees with the oracle on random instances") {
  Rng rng(2024);
  int checked = 0;
  for (CoefficientSet set : {kBox01, kNonneg, kReal, kComplex}) {
    for (int rep = 0; rep < 10; ++rep) {
      const int M = 6 + static_cast<int>(rng.below(set.is_complex() ? 11 : 27));
      const int m = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(M - 2)));
      const int ell = static_cast<int>(rng.below(static_cast<std::uint64_t>(M + 1)));
      const Eigen::MatrixXd A = gaussian(m, M, set, rng);
      const SignalVector x0 = sample_signal({ell, m, M, 1}, set, rng.next());
      const Eigen::VectorXd y = A * x0.entries();
      const auto s = solve_dense(A, y, set);
      const auto o = lp_oracle(A, y, set);
      REQUIRE(o.optimal);
      CHECK(s.status == SolveStatus::CONVERGED);
      CHECK(std::abs(s.value - o.value) <= 1e-6 * (1.0 + std::abs(o.value)));
      CHECK(s.value <= norm_l1x(x0.entries(), set) + 1e-8 * (1.0 + norm_l1x(x0.entries(), set)));
      CHECK((A * s.x - y).norm() <= 1e-9 * (1.0 + y.norm()) * 10);
      ++checked;
    }
  }
  CHECK(checked == 40);
}

TEST_CASE("separability over blocks") {
  const int B = 4, M = 8, m = 5;
  for (CoefficientSet set : {kBox01, kReal, kComplex}) {
    const ProblemSizes sz{3, m, M, B};
    const auto op = make_ensemble("dbuse", sz, set, 5);
    const SignalVector x0 = sample_signal(sz, set, 6);
    const auto y = op.apply(x0);
    double sum = 0.0;
    const int rb = static_cast<int>(y.size()) / B;
    for (int b = 0; b < B; ++b) {
      const auto part = solve_dense(op.effective_block(b, set), y.segment(b * rb, rb), set);
      sum += part.value;
    }
    const auto split = solve_p1(op, y, set);
    CHECK(std::abs(split.value - sum) < 1e-7);
  }
}

TEST_CASE("dense block-diagonal solve matches the split solve") {
  const ProblemSizes sz{2, 4, 8, 4};
  const auto op = make_ensemble("dbuse", sz, kReal, 9);
  const SignalVector x0 = sample_signal(sz, kReal, 10);
  const auto y = op.apply(x0);
  const auto whole = solve_dense(op.dense(), y, kReal);
  const auto split = solve_p1(op, y, kReal);
  CHECK(std::abs(whole.value - split.value) < 1e-7);
}

TEST_CASE("scaling A and y together leaves the value unchanged") {
  Rng rng(3);
  const Eigen::MatrixXd A = gaussian(5, 10, kReal, rng);
  const SignalVector x0 = sample_signal({2, 5, 10, 1}, kReal, 4);
  const Eigen::VectorXd y = A * x0.entries();
  const auto a = solve_dense(A, y, kReal);
  const auto b = solve_dense(7.5 * A, 7.5 * y, kReal);
  CHECK(b.value / a.value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("complex DFT rows determine a real 4-vector") {
  const auto op = make_block_diagonal({partial_dft_block(4, {0, 1, 2})}, 1, true, Field::COMPLEX);
  Eigen::VectorXd e(4);
  e << 1.0, -0.7, 0.4, 2.0;
  const SignalVector x0(e, kReal, 4, 1);
  const auto res = solve_p1(op, op.apply(x0), kReal);
  CHECK(relative_error(x0, res.x1) < 1e-8);
}

TEST_CASE("inconsistent system reports INFEASIBLE") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 1, 0;
  const auto r = solve_dense(A, Eigen::Vector2d(1.0, 2.0), kReal);
  CHECK(r.status == SolveStatus::INFEASIBLE);
}

TEST_CASE("zero signal is recovered as zero") {
  const ProblemSizes sz{0, 4, 8, 2};
  const auto op = make_ensemble("rbuse", sz, kReal, 1);
  const SignalVector x0 = sample_signal(sz, kReal, 2);
  CHECK(x0.entries().norm() == 0.0);
  const auto res = solve_p1(op, op.apply(x0), kReal);
  CHECK(res.status == SolveStatus::CONVERGED);
  CHECK(res.x1.entries().norm() < 1e-9);
}

TEST_CASE("converged status implies the feasibility bound") {
  Rng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd A = gaussian(6, 12, kNonneg, rng);
    const SignalVector x0 = sample_signal({4, 6, 12, 1}, kNonneg, rng.next());
    const Eigen::VectorXd y = A * x0.entries();
    SolverOptions o;
    const auto r = solve_dense(A, y, kNonneg, o);
    if (r.status == SolveStatus::CONVERGED) CHECK((A * r.x - y).norm() <= o.feas_tol * (1.0 + y.norm()));
  }
}
