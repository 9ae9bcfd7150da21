#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "ptlab/coeffsets.hpp"
#include "ptlab/ensembles.hpp"

namespace ptlab {

enum class SolveStatus { CONVERGED, MAX_ITERS, INFEASIBLE };

std::string to_string(SolveStatus s);

struct SolverOptions {
  double feas_tol = 1e-9;  // relative: ||Ax - y|| <= feas_tol (1 + ||y||)
  double obj_tol = 1e-9;   // relative duality gap
  long max_iters = 50000;
  double rho = 1.0;
  double over_relax = 1.6;
  int check_every = 25;  // iterations between certificate attempts
};

/// Real-coordinate solution of one (P_{1,X}) instance.
struct DenseSolution {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::MAX_ITERS;
  double value = 0.0;
  double primal_residual = 0.0;  // ||A x - y||
  double dual_residual = 0.0;    // last rho ||z - z_prev||
  double gap = 0.0;              // value minus certified lower bound (inf if none)
  long iterations = 0;
};

/// ADMM for min ||x||_{1,X} s.t. Ax = y, x in X^N on one dense real matrix.
/// The affine projection is a cached SVD, so one instance serves any number
/// of right-hand sides (the repeated-block case).
class BlockSolver {
 public:
  BlockSolver(Eigen::MatrixXd A, CoefficientSet set, SolverOptions opts = {});
  ~BlockSolver();
  BlockSolver(BlockSolver&&) noexcept;
  BlockSolver& operator=(BlockSolver&&) noexcept;

  DenseSolution solve(const Eigen::VectorXd& y) const;

  int rank() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DenseSolution solve_dense(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, CoefficientSet set,
                          const SolverOptions& opts = {});

struct SolveResult {
  SignalVector x1;
  SolveStatus status = SolveStatus::MAX_ITERS;
  double value = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  long iterations = 0;  // summed over blocks
};

/// Solves (P_{1,X}) for y = A x0. Block-diagonal operators are split into
/// independent per-block problems; everything else is solved as one block.
/// y is laid out as MeasurementOperator::apply(SignalVector) produces it.
SolveResult solve_p1(const MeasurementOperator& A, const Eigen::VectorXd& y, CoefficientSet set,
                     const SolverOptions& opts = {});

inline constexpr double kSuccessThreshold = 1e-3;

/// ||x0 - x1||_2 / ||x0||_2; rejects x0 = 0 and shape mismatch.
double relative_error(const SignalVector& x0, const SignalVector& x1);

/// relative_error < 0.001.
bool declare_success(const SignalVector& x0, const SignalVector& x1);

}  // namespace ptlab
