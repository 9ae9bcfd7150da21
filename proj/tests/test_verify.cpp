#include "doctest.h"

#include <cmath>

#include "ptlab/errors.hpp"
#include "ptlab/verify.hpp"

using namespace ptlab;

TEST_CASE("Gram matrix of the anisotropic sampler is block diagonal") {
  SUBCASE("T = 4, K1 = {0, 2}") {
    const auto g = check_gram_structure(aniso_sampler_2d(4, 4, {0, 2}));
    CHECK(g.max_offblock < 1e-12);
    CHECK(g.max_block_deviation < 1e-12);
    CHECK(g.block_rank == 2);
    CHECK(g.G.rows() == 32);
    for (double r : g.eigvec_residuals) CHECK(r < 1e-12);
  }
  SUBCASE("all rows sampled gives the identity") {
    const auto g = check_gram_structure(aniso_sampler_2d(5, {0, 1, 2, 3, 4}));
    CHECK((g.G - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.block_rank == 5);
  }
  SUBCASE("rectangular T0 != T1") {
    const auto g = check_gram_structure(aniso_sampler_2d(3, 6, {1, 5}));
    CHECK(g.T0 == 3);
    CHECK(g.T1 == 6);
    CHECK(g.max_offblock < 1e-12);
    CHECK(g.block_rank == 2);
  }
  CHECK_THROWS(check_gram_structure(make_block_diagonal({sample_use(3, 5, Field::REAL, 1)}, 2, true)));
}

TEST_CASE("Fourier modes are eigenvectors of the diagonal block") {
  const auto e = check_eigvecs(aniso_sampler_2d(8, {1, 4, 6}));
  CHECK(e.in_ells == std::vector<int>{1, 4, 6});
  CHECK(e.out_ells.size() == 5);
  CHECK(e.max_in < 1e-12);
  CHECK(e.max_out < 1e-12);
}

TEST_CASE("rank reduction keeps the solution set") {
  SUBCASE("full row rank") {
    Eigen::MatrixXd G(2, 3);
    G << 1, 2, 0, 0, 1, 1;
    const Eigen::VectorXd b = Eigen::Vector2d(1, 2);
    const auto r = reduce_rank_deficient(G, b);
    CHECK(r.rank == 2);
    CHECK(r.consistent);
    CHECK_FALSE(r.ambiguous);
    // any solution of one system solves the other
    const Eigen::VectorXd x = G.completeOrthogonalDecomposition().solve(b);
    CHECK((r.A * x - r.y).norm() < 1e-12);
  }
  SUBCASE("duplicated rows") {
    Eigen::MatrixXd G(3, 6);
    G << 1, 0, 2, 0, 1, 0, 0, 1, 0, 1, 0, 3, 1, 0, 2, 0, 1, 0;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
    x0[1] = 1.0;
    x0[4] = -2.0;
    const Eigen::VectorXd b = G * x0;
    const auto r = reduce_rank_deficient(G, b);
    CHECK(r.rank == 2);
    CHECK(r.A.rows() == 2);
    CHECK(r.consistent);
    CHECK((r.A * x0 - r.y).norm() < 1e-12);
    // same l1 minimizer value through the solver
    const auto full = solve_dense(G, b, kReal);
    const auto red = solve_dense(r.A, r.y, kReal);
    REQUIRE(red.status == SolveStatus::CONVERGED);
    CHECK(full.status != SolveStatus::INFEASIBLE);
    CHECK(std::abs(full.value - red.value) < 1e-6);
    Eigen::VectorXd bad = b;
    bad[2] += 1.0;
    CHECK_FALSE(reduce_rank_deficient(G, bad).consistent);
  }
  SUBCASE("zero matrix") {
    const auto r = reduce_rank_deficient(Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(3));
    CHECK(r.rank == 0);
    CHECK(r.A.rows() == 0);
    CHECK(r.consistent);
  }
  CHECK_THROWS(reduce_rank_deficient(Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(2)));
}

TEST_CASE("anisotropic and block-diagonal problems agree") {
  SolverOptions opts;
  SUBCASE("M = 7, |K1| = 3, sparse complex and box01 signals") {
    for (CoefficientSet set : {kComplex, kBox01}) {
      for (int ell : {1, 3, 5}) {
        const SignalVector x0 = sample_signal({ell, 3, 7, 7}, set, 100 + ell);
        const auto r = check_equivalence(7, {0, 1, 3}, SignalVector(x0.entries(), set, 49, 1), set, opts);
        CHECK(r.both_converged);
        CHECK(r.decision == "pass");
        CHECK(r.value_gap <= 1e-6 * (1.0 + std::abs(r.val_aus)));
      }
    }
  }
  SUBCASE("all rows sampled: both recover x0") {
    const SignalVector x0 = sample_signal({4, 5, 5, 5}, kComplex, 3);
    const auto r = check_equivalence(5, {0, 1, 2, 3, 4}, SignalVector(x0.entries(), kComplex, 25, 1), kComplex, opts);
    CHECK(r.pass);
    CHECK(r.success_aus);
    CHECK(r.success_blockdiag);
    CHECK(r.solution_gap < 1e-4);
  }
  SUBCASE("zero signal") {
    const SignalVector x0(Eigen::VectorXd::Zero(2 * 36), kComplex, 36, 1);
    const auto r = check_equivalence(6, {1, 2}, x0, kComplex, opts);
    CHECK(r.pass);
    CHECK(r.val_aus == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("guards") {
    const SignalVector x0(Eigen::VectorXd::Zero(17 * 17), kBox01, 17 * 17, 1);
    CHECK_THROWS(check_equivalence(17, {0, 1}, x0, kBox01, opts));
    const SignalVector r0(Eigen::VectorXd::Zero(16), kReal, 16, 1);
    CHECK_THROWS(check_equivalence(4, {0, 1}, r0, kReal, opts));
    const SignalVector wrong(Eigen::VectorXd::Zero(9), kBox01, 9, 1);
    CHECK_THROWS(check_equivalence(4, {0, 1}, wrong, kBox01, opts));
  }
}

TEST_CASE("T A V factorization of the anisotropic sampler") {
  for (auto [M, K1] : std::vector<std::pair<int, std::vector<int>>>{{4, {0, 2}}, {4, {0, 1, 2, 3}}, {8, {1, 4, 5}}}) {
    const auto f = check_isometry_factorization(M, K1);
    CHECK(f.max_deviation < 1e-12);
    CHECK(f.t_isometry < 1e-10);
    CHECK(f.v_isometry < 1e-10);
    CHECK(f.v_l1_isometry < 1e-10);
  }
  const Eigen::MatrixXcd T = row_transform_matrix(4, 2);
  CHECK((T.adjoint() * T - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXcd V = vectorization_matrix(3);
  CHECK((V.transpose() * V - Eigen::MatrixXcd::Identity(9, 9)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(V(0 * 3 + 2, 0 + 3 * 2) == 1.0);
  CHECK(V(1 * 3 + 0, 1 + 3 * 0) == 1.0);
}

TEST_CASE("partial DFT rows of prime length are in general position") {
  for (int M : {5, 7, 11, 13}) {
    // every K with |K| <= 4 by bitmask
    double worst = 1e300;
    for (int mask = 1; mask < (1 << M); ++mask) {
      if (__builtin_popcount(mask) > 4) continue;
      std::vector<int> K;
      for (int k = 0; k < M; ++k)
        if (mask >> k & 1) K.push_back(k);
      worst = std::min(worst, general_position_check(M, K));
    }
    CHECK(worst > 1e-6);
  }
  // composite length: rows {0, 2} of length 4 share the columns 0 and 2
  CHECK(general_position_check(4, {0, 2}) < 1e-12);
  Eigen::MatrixXd A(2, 3);
  A << 1, 0, 1, 0, 1, 1;
  CHECK(min_column_minor(A) == doctest::Approx(1.0));
  CHECK_THROWS(min_column_minor(Eigen::MatrixXd(Eigen::MatrixXd::Ones(3, 2))));
}

TEST_CASE("verify suite passes") {
  const auto j = run_verify_suite(SolverOptions{}, 7);
  CHECK(j.at("gram").at("pass").get<bool>());
  CHECK(j.at("factorization").at("pass").get<bool>());
  CHECK(j.at("equivalence").at("pass").get<bool>());
  CHECK(j.at("general_position").at("pass").get<bool>());
  CHECK(j.at("pass").get<bool>());
}
