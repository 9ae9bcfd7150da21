#include "ptlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace ptlab {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::CONVERGED:
      return "converged";
    case SolveStatus::MAX_ITERS:
      return "max_iters";
    case SolveStatus::INFEASIBLE:
      return "infeasible";
  }
  return "?";
}

struct BlockSolver::Impl {
  Eigen::MatrixXd A;
  CoefficientSet set;
  SolverOptions opts;
  int r = 0;
  Eigen::MatrixXd U;  // rows x r
  Eigen::VectorXd S;  // r
  Eigen::MatrixXd V;  // cols x r

  Impl(Eigen::MatrixXd a, CoefficientSet s, SolverOptions o) : A(std::move(a)), set(s), opts(o) {
    if (opts.rho <= 0.0) throw std::invalid_argument("solver: rho must be positive");
    if (opts.feas_tol <= 0.0 || opts.obj_tol <= 0.0) throw std::invalid_argument("solver: tolerances must be positive");
    if (opts.max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
    if (A.cols() % set.ambient_dim() != 0) throw std::invalid_argument("solver: column count does not match set");
    if (A.rows() == 0) return;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
    while (r < sv.size() && sv[r] > cut) ++r;
    U = svd.matrixU().leftCols(r);
    S = sv.head(r);
    V = svd.matrixV().leftCols(r);
  }

  double objective(const Eigen::VectorXd& x) const { return norm_l1x(x, set); }

  // Largest dual value reachable by rescaling nu = pinv(A^T) g.
  double lower_bound(const Eigen::VectorXd& g, const Eigen::VectorXd& y) const {
    if (r == 0) return 0.0;
    const Eigen::VectorXd coef = V.transpose() * g;
    return dual_value(U * coef.cwiseQuotient(S), y);
  }

  // Dual objective at nu, made feasible by rescaling (or by the conjugate
  // for BOX01). Any nu gives a valid lower bound.
  double dual_value(const Eigen::VectorXd& nu, const Eigen::VectorXd& y) const {
    const Eigen::VectorXd w = A.transpose() * nu;
    const double ynu = y.dot(nu);
    switch (set.tag()) {
      case CoeffTag::BOX01: {
        double conj = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) conj += std::max(w[i] - 1.0, 0.0);
        return ynu - conj;
      }
      case CoeffTag::NONNEG: {
        const double top = w.size() ? w.maxCoeff() : 0.0;
        return top > 1.0 ? ynu / top : ynu;
      }
      case CoeffTag::REAL: {
        const double top = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
        return top > 1.0 ? ynu / top : ynu;
      }
      case CoeffTag::COMPLEX: {
        double top = 0.0;
        for (Eigen::Index i = 0; i + 1 < w.size(); i += 2) top = std::max(top, std::hypot(w[i], w[i + 1]));
        return top > 1.0 ? ynu / top : ynu;
      }
    }
    return -std::numeric_limits<double>::infinity();
  }

  // The ADMM multiplier certifies slowly on degenerate instances. Shift its
  // nu by the min-norm correction making A_F^T nu equal the subgradient on
  // the free set of the polished point p.
  double polished_bound(const Eigen::VectorXd& p, const Eigen::VectorXd& g, const Eigen::VectorXd& y) const {
    if (r == 0) return 0.0;
    const Eigen::VectorXd coef = V.transpose() * g;
    const Eigen::VectorXd nu0 = U * coef.cwiseQuotient(S);
    std::vector<Eigen::Index> free;
    std::vector<double> target;
    const Eigen::Index n = p.size();
    if (set.is_complex()) {
      for (Eigen::Index i = 0; i + 1 < n; i += 2) {
        const double h = std::hypot(p[i], p[i + 1]);
        if (h > 0.0) {
          free.insert(free.end(), {i, i + 1});
          target.insert(target.end(), {p[i] / h, p[i + 1] / h});
        }
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool bound = p[i] == 0.0 || (set.tag() == CoeffTag::BOX01 && p[i] == 1.0);
        if (!bound) {
          free.push_back(i);
          target.push_back(set.tag() == CoeffTag::REAL ? (p[i] > 0.0 ? 1.0 : -1.0) : 1.0);
        }
      }
    }
    if (free.empty()) return dual_value(nu0, y);
    Eigen::MatrixXd AFt(static_cast<Eigen::Index>(free.size()), A.rows());
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(free.size()));
    for (std::size_t j = 0; j < free.size(); ++j) {
      AFt.row(static_cast<Eigen::Index>(j)) = A.col(free[j]).transpose();
      rhs[static_cast<Eigen::Index>(j)] = target[j];
    }
    rhs -= AFt * nu0;
    const Eigen::VectorXd nu = nu0 + AFt.completeOrthogonalDecomposition().solve(rhs);
    if (!nu.allFinite()) return -std::numeric_limits<double>::infinity();
    return dual_value(nu, y);
  }

  bool feasible(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double* resid = nullptr) const {
    const double res = A.rows() ? (A * x - y).norm() : 0.0;
    if (resid) *resid = res;
    return res <= opts.feas_tol * (1.0 + y.norm());
  }

  // Re-solve the equality system on the support of z with boundary entries
  // frozen. Returns a point of X satisfying the constraints, or nothing.
  std::optional<Eigen::VectorXd> polish(const Eigen::VectorXd& z, const Eigen::VectorXd& y) const {
    const Eigen::Index n = z.size();
    std::vector<Eigen::Index> free;
    if (set.is_complex()) {
      for (Eigen::Index i = 0; i + 1 < n; i += 2) {
        if (z[i] != 0.0 || z[i + 1] != 0.0) {
          free.push_back(i);
          free.push_back(i + 1);
        }
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool bound = z[i] == 0.0 || (set.tag() == CoeffTag::BOX01 && z[i] == 1.0);
        if (!bound) free.push_back(i);
      }
    }
    if (static_cast<Eigen::Index>(free.size()) > A.rows()) return std::nullopt;
    Eigen::VectorXd p = z;
    if (!free.empty()) {
      Eigen::VectorXd rhs = y;
      Eigen::MatrixXd AF(A.rows(), static_cast<Eigen::Index>(free.size()));
      for (std::size_t j = 0; j < free.size(); ++j) {
        AF.col(static_cast<Eigen::Index>(j)) = A.col(free[j]);
        p[free[j]] = 0.0;
      }
      rhs.noalias() -= A * p;
      const Eigen::VectorXd w = AF.completeOrthogonalDecomposition().solve(rhs);
      for (std::size_t j = 0; j < free.size(); ++j) {
        double v = w[static_cast<Eigen::Index>(j)];
        if (!std::isfinite(v)) return std::nullopt;
        if (set.tag() == CoeffTag::NONNEG || set.tag() == CoeffTag::BOX01) {
          const double c = std::clamp(v, 0.0, set.tag() == CoeffTag::BOX01 ? 1.0 : v);
          if (std::abs(c - v) > 1e-9) return std::nullopt;
          v = c;
        }
        p[free[j]] = v;
      }
    }
    if (!feasible(p, y)) return std::nullopt;
    return p;
  }

  DenseSolution solve(const Eigen::VectorXd& y) const {
    if (y.size() != A.rows()) throw std::invalid_argument("solver: y has the wrong length");
    const Eigen::Index n = A.cols();
    DenseSolution out;
    out.x = Eigen::VectorXd::Zero(n);
    const double ynorm = y.norm();

    Eigen::VectorXd x_ls = Eigen::VectorXd::Zero(n);
    if (r > 0) x_ls = V * (U.transpose() * y).cwiseQuotient(S);
    if (!feasible(x_ls, y, &out.primal_residual)) {
      out.status = SolveStatus::INFEASIBLE;
      out.gap = std::numeric_limits<double>::infinity();
      out.primal_residual = A.rows() ? (A * out.x - y).norm() : 0.0;
      return out;
    }
    if (r == 0) {
      // No effective constraint: the norm's minimizer over X is 0.
      out.status = SolveStatus::CONVERGED;
      out.primal_residual = ynorm;
      return out;
    }

    const double alpha = opts.over_relax;
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double abs_tol = 1e-12;
    double rho = opts.rho;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n), u = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd x(n), xh(n), z_old(n), v(n);

    auto finish = [&](Eigen::VectorXd pt, SolveStatus st, long it, double r_dual) {
      out.x = std::move(pt);
      out.status = st;
      out.iterations = it;
      out.value = objective(out.x);
      out.primal_residual = (A * out.x - y).norm();
      out.dual_residual = r_dual;
      out.gap = out.value - std::max(lower_bound(rho * u, y), polished_bound(out.x, rho * u, y));
      return out;
    };

    double r_pri = 0.0, r_dual = 0.0;
    for (long it = 1; it <= opts.max_iters; ++it) {
      v = z - u;
      x = v - V * (V.transpose() * v) + x_ls;
      xh = alpha * x + (1.0 - alpha) * z;
      z_old = z;
      z = prox_step(xh + u, 1.0 / rho, set);
      u += xh - z;

      r_pri = (x - z).norm();
      r_dual = rho * (z - z_old).norm();
      const double eps_pri = sqrt_n * abs_tol + opts.feas_tol * std::max(x.norm(), z.norm());
      const double eps_dual = sqrt_n * abs_tol + opts.obj_tol * rho * u.norm();
      const bool std_stop = r_pri <= eps_pri && r_dual <= eps_dual;

      if (std_stop || it % opts.check_every == 0) {
        const double lb = lower_bound(rho * u, y);
        if (auto p = polish(z, y)) {
          const double val = objective(*p);
          const double lb2 = std::max(lb, polished_bound(*p, rho * u, y));
          if (val - lb2 <= opts.obj_tol * (1.0 + std::abs(val))) return finish(std::move(*p), SolveStatus::CONVERGED, it, r_dual);
          if (std_stop && val <= objective(z) + opts.obj_tol * (1.0 + std::abs(val)))
            return finish(std::move(*p), SolveStatus::CONVERGED, it, r_dual);
        }
        if (std_stop && feasible(z, y)) return finish(z, SolveStatus::CONVERGED, it, r_dual);
      }

      if (it % 20 == 0) {
        if (r_pri > 10.0 * r_dual) {
          rho *= 2.0;
          u *= 0.5;
        } else if (r_dual > 10.0 * r_pri) {
          rho *= 0.5;
          u *= 2.0;
        }
      }
    }
    if (auto p = polish(z, y)) return finish(std::move(*p), SolveStatus::MAX_ITERS, opts.max_iters, r_dual);
    return finish(z, SolveStatus::MAX_ITERS, opts.max_iters, r_dual);
  }
};

BlockSolver::BlockSolver(Eigen::MatrixXd A, CoefficientSet set, SolverOptions opts)
    : impl_(std::make_unique<Impl>(std::move(A), set, opts)) {}
BlockSolver::~BlockSolver() = default;
BlockSolver::BlockSolver(BlockSolver&&) noexcept = default;
BlockSolver& BlockSolver::operator=(BlockSolver&&) noexcept = default;

DenseSolution BlockSolver::solve(const Eigen::VectorXd& y) const { return impl_->solve(y); }
int BlockSolver::rank() const { return impl_->r; }

DenseSolution solve_dense(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, CoefficientSet set,
                          const SolverOptions& opts) {
  return BlockSolver(A, set, opts).solve(y);
}

namespace {

int severity(SolveStatus s) {
  switch (s) {
    case SolveStatus::CONVERGED:
      return 0;
    case SolveStatus::MAX_ITERS:
      return 1;
    case SolveStatus::INFEASIBLE:
      return 2;
  }
  return 2;
}

}  // namespace

SolveResult solve_p1(const MeasurementOperator& A, const Eigen::VectorXd& y, CoefficientSet set,
                     const SolverOptions& opts) {
  const int B = A.num_blocks();
  const int k = set.ambient_dim();
  const Eigen::Index in_len = static_cast<Eigen::Index>(k) * A.block_cols();

  std::vector<BlockSolver> solvers;
  const bool shared = A.kind() != OperatorKind::BLOCK_DIAG_DISTINCT;
  for (int b = 0; b < (shared ? 1 : B); ++b) solvers.emplace_back(A.effective_block(b, set), set, opts);
  const Eigen::Index out_len = A.effective_block(0, set).rows();
  if (y.size() != out_len * B) throw std::invalid_argument("solve_p1: y has the wrong length");

  Eigen::VectorXd x(in_len * B);
  SolveStatus status = SolveStatus::CONVERGED;
  double value = 0.0, res2 = 0.0, dual = 0.0, gap = 0.0;
  long iters = 0;
  for (int b = 0; b < B; ++b) {
    const DenseSolution s = solvers[shared ? 0 : b].solve(y.segment(b * out_len, out_len));
    x.segment(b * in_len, in_len) = s.x;
    if (severity(s.status) > severity(status)) status = s.status;
    value += s.value;
    res2 += s.primal_residual * s.primal_residual;
    dual = std::max(dual, s.dual_residual);
    gap += s.gap;
    iters += s.iterations;
  }
  return SolveResult{SignalVector(std::move(x), set, A.block_cols(), B), status, value, std::sqrt(res2), dual, gap,
                     iters};
}

double relative_error(const SignalVector& x0, const SignalVector& x1) {
  if (x0.entries().size() != x1.entries().size() || !(x0.coeff_set() == x1.coeff_set()))
    throw std::invalid_argument("relative_error: shape mismatch");
  const double n0 = x0.entries().norm();
  if (n0 == 0.0) throw std::invalid_argument("relative_error: x0 is zero");
  return (x0.entries() - x1.entries()).norm() / n0;
}

bool declare_success(const SignalVector& x0, const SignalVector& x1) {
  return relative_error(x0, x1) < kSuccessThreshold;
}

}  // namespace ptlab
