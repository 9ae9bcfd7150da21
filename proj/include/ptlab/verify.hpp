#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ptlab/coeffsets.hpp"
#include "ptlab/ensembles.hpp"
#include "ptlab/solver.hpp"

namespace ptlab {

/// Gram matrix of an anisotropic 2D Fourier sampler,
/// G(t, u) = sum_k F_k(t) conj(F_k(u)), with rows and columns regrouped so
/// the exhaustively sampled index t0 labels the diagonal blocks.
struct GramReport {
  Eigen::MatrixXd G;  // real-pair form, (t0, t1) -> t0*T1 + t1
  int T0 = 0;
  int T1 = 0;
  std::vector<int> K1;
  double max_offblock = 0.0;
  double max_block_deviation = 0.0;  // max |G^(b) - G^(1)| over blocks b
  int block_rank = 0;                // numerical rank of G^(1)
  std::vector<double> eigvec_residuals;  // ||G^(1) V_l - V_l|| / ||V_l|| for l in K1
};

GramReport check_gram_structure(const MeasurementOperator& op);

/// Residuals of V_l(t) = exp(2 pi i l t / T1) against G^(1): eigenvalue 1 for
/// l in K1, eigenvalue 0 otherwise.
struct EigvecReport {
  std::vector<int> in_ells;
  std::vector<double> in_residuals;   // ||G1 V - V|| / ||V||
  std::vector<int> out_ells;
  std::vector<double> out_residuals;  // ||G1 V|| / ||V||
  double max_in = 0.0;
  double max_out = 0.0;
};

EigvecReport check_eigvecs(const MeasurementOperator& op);

/// Full-row-rank system with the same solution set as G x = b:
/// A = V_r', y = S_r^{-1} U_r' b, r = #{sigma > 1e-10 sigma_max}.
struct ReducedSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd y;
  int rank = 0;
  bool ambiguous = false;   // some sigma within a factor 10 of the cut
  bool consistent = true;   // b lies in the range of G
};

ReducedSystem reduce_rank_deficient(const Eigen::MatrixXd& G, const Eigen::VectorXd& b);

struct EquivalenceReport {
  double val_aus = 0.0;
  double val_blockdiag = 0.0;
  double value_gap = 0.0;
  double solution_gap = 0.0;  // max |V x_aus - x_bd|
  int M = 0;
  std::vector<int> K1;
  bool both_converged = false;
  bool success_aus = false;
  bool success_blockdiag = false;
  std::string decision;  // pass | fail | no_decision
  bool pass = false;
};

inline constexpr int kMaxEquivalenceM = 16;

/// Solves the anisotropic 2D problem and the repeated partial-DFT block
/// problem built from the same rows and compares them. x0 is the M x M array
/// vectorized column-major (index t0 + M t1).
EquivalenceReport check_equivalence(int M, const std::vector<int>& K1, const SignalVector& x0, CoefficientSet set,
                                    const SolverOptions& opts = {});

struct FactorizationReport {
  double max_deviation = 0.0;  // max |T A V - F_aus|
  double t_isometry = 0.0;     // max | ||Tx|| - ||x|| | on random inputs
  double v_isometry = 0.0;
  double v_l1_isometry = 0.0;
};

/// Dense T (k0-DFT after un-vectorizing), A = I (x) partial_dft_block and
/// V (column-major array to block order); M <= 32.
FactorizationReport check_isometry_factorization(int M, const std::vector<int>& K1, Seed seed = 7);

/// Dense permutation V and unitary T used above, exposed for tests.
Eigen::MatrixXcd vectorization_matrix(int M);
Eigen::MatrixXcd row_transform_matrix(int M, int m);

/// Smallest |det| over all m x m column submatrices.
double min_column_minor(const Eigen::MatrixXcd& A);
double min_column_minor(const Eigen::MatrixXd& A);

/// min_column_minor of the complex partial DFT rows K of length M.
double general_position_check(int M, const std::vector<int>& K);

/// Runs every structural check at small sizes and returns a JSON report with
/// a pass flag per check and overall.
nlohmann::json run_verify_suite(const SolverOptions& opts, Seed seed);

}  // namespace ptlab
