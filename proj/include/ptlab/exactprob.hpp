#pragma once

#include <optional>

namespace ptlab {

/// P_{k,n} = 2^{-(n-1)} sum_{j<k} C(n-1, j), i.e. Pr(Bin(n-1, 1/2) <= k-1).
/// This is the convention under which 1 - P_{M-m, M-ell} is the single-block
/// success probability and P_{n/2,n} = 1/2 for even n. Values k >= n give 1.
double binom_tail(long k, long n);

/// Single-block success probability for X = [0,1]: 1 - P_{M-m, M-ell}.
/// Exactly 1 when m = M and 0 when ell >= m < M.
double q_sb_exact(int ell, int m, int M);

/// Q_sb^B, evaluated as exp(B log Q_sb).
double q_mb_exact(int ell, int m, int M, int B);

/// 1/2 for a single block, 1 - 1/e otherwise.
double default_q_star(int B);

struct CriticalSparsity {
  int ell_star = 0;      // largest ell with Q_mb(ell) >= q*
  int ell_minus = 0;     // smallest ell with Q_mb(ell) <= q*
  double eps_star = 0.0; // ell_star / M
  double q_at_star = 0.0;
  double q_at_next = 0.0;  // Q_mb(ell_star + 1), 0 past the end
  double ell0 = 0.0;       // continuum approximation
  double q_star = 0.0;
  double z_B = 0.0;
};

/// Bisection over ell (Q_mb is nonincreasing in ell). Throws std::domain_error
/// if q* is not bracketed by Q(0) and Q(M).
CriticalSparsity critical_ell(int m, int M, int B, std::optional<double> q_star = std::nullopt);

/// Phi^{-1}(log(1/q*) / B).
double z_b(double q_star, int B);

/// 2m - M - sqrt(z^4 + 8 z^2 (M - m)) / 2 - z^2 / 2 with z = z_b(q*, B).
double continuum_ell0(int m, int M, int B, double q_star);

/// Phi((2k - n) / sqrt(n)).
double normal_approx(long k, long n);

/// Berry-Esseen type bound 0.26/n + exp(-sqrt(n)) for |P_{k,n} - Phi_{k,n}|,
/// stated for 0 < k < n/2 under the usual binomial convention.
double uspensky_gap(long k, long n);

/// 2^{-(n-1)} C(n-1, k): the difference between the two P_{k,n} conventions
/// at the index where they disagree.
double convention_shift(long k, long n);

/// P_{k,n+h} <= P_{k,n} 2^{-h} (1 - k/n)^{-h}, checked with 1e-12 relative slack.
bool tail_decay_check(long k, long n, long h);

}  // namespace ptlab
