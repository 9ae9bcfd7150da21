#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ptlab/coeffsets.hpp"

namespace ptlab {

/// Largest real dimension (columns of A) the reference solver accepts.
inline constexpr int kOracleMaxDim = 64;

/// Cone program  min c'x  s.t.  A x = b,  G x + s = h,  s in K,
/// K = R_+^l x SOC(q_1) x ... (second-order cones in listed order).
struct ConeProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  int l = 0;
  std::vector<int> q;
};

struct ConeSolution {
  Eigen::VectorXd x, y, s, z;
  double primal_value = 0.0;
  double dual_value = 0.0;
  bool optimal = false;
  int iterations = 0;
};

/// Primal-dual interior point (Nesterov-Todd scaling, Mehrotra correction).
/// Dense, intended for a few hundred variables at most.
ConeSolution solve_cone_program(const ConeProgram& prog, double tol = 1e-10, int max_iters = 100);

/// Nesterov-Todd scaling of one second-order cone pair (s, z) in the
/// interior: W = beta (2 v v' - J), with W z = W^{-1} s. Exposed for tests.
struct SocScaling {
  double beta = 1.0;
  Eigen::VectorXd v;
  Eigen::MatrixXd W() const;
  Eigen::MatrixXd Winv() const;
};
SocScaling soc_nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z);

/// u with lambda o u = v in the second-order-cone Jordan algebra.
Eigen::VectorXd soc_arrow_solve(const Eigen::VectorXd& lambda, const Eigen::VectorXd& v);

struct OracleResult {
  double value = 0.0;
  Eigen::VectorXd x;  // reals in the coefficient layout
  bool optimal = false;
  bool infeasible = false;
  int iterations = 0;
};

/// Independent reference for (P_{1,X}) on a dense real matrix: the split LP
/// for REAL, the orthant LP for NONNEG, the box LP for BOX01 and the SOC
/// program over (t_i, re_i, im_i) for COMPLEX. The equality system is first
/// reduced to full row rank. Throws GuardError beyond kOracleMaxDim columns.
OracleResult lp_oracle(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, CoefficientSet set);

}  // namespace ptlab
