#include "ptlab/exactprob.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "ptlab/normal.hpp"

namespace ptlab {
namespace {

// 2^{-s} sum_{j=0}^{J} C(s, j) for 0 <= J <= s/2. The terms shrink as j
// decreases, so summing from the top down keeps every addend smaller than
// the running total.
long double lower_sum(long s, long J) {
  if (J < 0) return 0.0L;
  const long double ln2 = 0.693147180559945309417232121458176568L;
  long double term =
      std::exp(std::lgamma(static_cast<long double>(s) + 1) - std::lgamma(static_cast<long double>(J) + 1) -
               std::lgamma(static_cast<long double>(s - J) + 1) - s * ln2);
  long double sum = 0.0L;
  for (long j = J; j >= 0; --j) {
    sum += term;
    if (term < sum * 1e-22L) break;
    if (j > 0) term *= static_cast<long double>(j) / static_cast<long double>(s - j + 1);
  }
  return sum;
}

// {P_{k,n}, 1 - P_{k,n}}, each accurate in the relative sense.
std::pair<long double, long double> tail_pair(long k, long n) {
  if (n < 1) throw std::invalid_argument("binom_tail: n must be >= 1");
  if (k < 0) throw std::invalid_argument("binom_tail: k must be >= 0");
  if (k == 0) return {0.0L, 1.0L};
  if (k >= n) return {1.0L, 0.0L};
  const long s = n - 1;
  const long J = k - 1;
  if (2 * J <= s) {
    const long double p = lower_sum(s, J);
    return {p, 1.0L - p};
  }
  const long double q = lower_sum(s, s - J - 1);
  return {1.0L - q, q};
}

void check_sizes(int ell, int m, int M) {
  if (M < 1) throw std::invalid_argument("need M >= 1");
  if (m < 1 || m > M) throw std::invalid_argument("need 1 <= m <= M");
  if (ell < 0 || ell > M) throw std::invalid_argument("need 0 <= ell <= M");
}

// log Q_sb, -inf when Q_sb = 0.
long double log_q_sb(int ell, int m, int M) {
  check_sizes(ell, m, M);
  if (m == M) return 0.0L;
  if (ell >= m) return -std::numeric_limits<long double>::infinity();
  const auto [p, q] = tail_pair(M - m, M - ell);
  return q < 0.5L ? std::log(q) : std::log1p(-p);
}

long double log_q_mb(int ell, int m, int M, int B) {
  if (B < 1) throw std::invalid_argument("need B >= 1");
  const long double l = log_q_sb(ell, m, M);
  return std::isinf(l) ? l : B * l;
}

}  // namespace

double binom_tail(long k, long n) {
  if (k > n) throw std::invalid_argument("binom_tail: need k <= n");
  return static_cast<double>(tail_pair(k, n).first);
}

double q_sb_exact(int ell, int m, int M) { return static_cast<double>(std::exp(log_q_sb(ell, m, M))); }

double q_mb_exact(int ell, int m, int M, int B) { return static_cast<double>(std::exp(log_q_mb(ell, m, M, B))); }

double default_q_star(int B) {
  if (B < 1) throw std::invalid_argument("need B >= 1");
  return B == 1 ? 0.5 : 1.0 - std::exp(-1.0);
}

double z_b(double q_star, int B) {
  if (!(q_star > 0.0 && q_star < 1.0)) throw std::domain_error("q* must lie in (0, 1)");
  if (B < 1) throw std::invalid_argument("need B >= 1");
  return norm_quantile(std::log(1.0 / q_star) / B);
}

double continuum_ell0(int m, int M, int B, double q_star) {
  check_sizes(0, m, M);
  const double z = z_b(q_star, B);
  const double z2 = z * z;
  return 2.0 * m - M - 0.5 * std::sqrt(z2 * z2 + 8.0 * z2 * (M - m)) - 0.5 * z2;
}

CriticalSparsity critical_ell(int m, int M, int B, std::optional<double> q_star) {
  check_sizes(0, m, M);
  const double q = q_star.value_or(default_q_star(B));
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("critical_ell: q* must lie in (0, 1)");
  const long double log_q = std::log(static_cast<long double>(q));
  // Exact ties (Q = 1/2 at even splits) must count as reaching q*, so allow
  // a few units of rounding in the log.
  auto ok = [&](int ell) { return log_q_mb(ell, m, M, B) >= log_q - 1e-14L * (1.0L + std::abs(log_q)); };

  if (!ok(0))
    throw std::domain_error("critical_ell: q* above Q(0) = " + std::to_string(q_mb_exact(0, m, M, B)) +
                            ", no bracket");
  CriticalSparsity cs;
  cs.q_star = q;
  cs.z_B = z_b(q, B);
  cs.ell0 = continuum_ell0(m, M, B, q);
  int lo = 0, hi = M;  // ok(lo) holds; find the last ell with ok
  if (ok(M)) {
    lo = M;
  } else {
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      (ok(mid) ? lo : hi) = mid;
    }
  }
  cs.ell_star = lo;
  cs.eps_star = static_cast<double>(lo) / M;
  cs.q_at_star = q_mb_exact(lo, m, M, B);
  cs.q_at_next = lo < M ? q_mb_exact(lo + 1, m, M, B) : 0.0;
  cs.ell_minus = cs.q_at_star <= q ? lo : lo + 1;
  return cs;
}

double normal_approx(long k, long n) {
  if (n < 1) throw std::invalid_argument("normal_approx: n must be >= 1");
  return norm_cdf((2.0 * k - n) / std::sqrt(static_cast<double>(n)));
}

double uspensky_gap(long k, long n) {
  if (n < 1 || k < 0 || 2 * k > n) throw std::invalid_argument("uspensky_gap: need 0 <= k <= n/2");
  return 0.26 / n + std::exp(-std::sqrt(static_cast<double>(n)));
}

double convention_shift(long k, long n) {
  if (n < 1 || k < 0 || k > n - 1) return 0.0;
  const long s = n - 1;
  const long double ln2 = 0.693147180559945309417232121458176568L;
  return static_cast<double>(std::exp(std::lgamma(static_cast<long double>(s) + 1) -
                                      std::lgamma(static_cast<long double>(k) + 1) -
                                      std::lgamma(static_cast<long double>(s - k) + 1) - s * ln2));
}

bool tail_decay_check(long k, long n, long h) {
  if (n < 1 || k < 0 || k >= n || h < 0) throw std::invalid_argument("tail_decay_check: bad arguments");
  const long double lhs = tail_pair(k, n + h).first;
  const long double rhs =
      tail_pair(k, n).first * std::pow(0.5L, h) * std::pow(1.0L - static_cast<long double>(k) / n, -h);
  return lhs <= rhs * (1.0L + 1e-12L);
}

}  // namespace ptlab
