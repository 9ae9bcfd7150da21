#include "doctest.h"

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "ptlab/exactprob.hpp"
#include "ptlab/normal.hpp"
#include "ptlab/predict.hpp"

using namespace ptlab;
namespace mp = boost::multiprecision;

namespace {

// Exact P_{k,n} = 2^{-(n-1)} sum_{j<k} C(n-1, j) with integer arithmetic.
double tail_oracle(long k, long n) {
  mp::cpp_int sum = 0, c = 1;
  for (long j = 0; j < k; ++j) {
    sum += c;
    c = c * (n - 1 - j) / (j + 1);
  }
  mp::cpp_bin_float_50 v(sum);
  v = mp::ldexp(v, static_cast<int>(-(n - 1)));
  return static_cast<double>(v);
}

double rel(double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("binom_tail hand values") {
  CHECK(binom_tail(0, 10) == 0.0);
  CHECK(binom_tail(1, 2) == 0.5);
  for (long n = 2; n <= 64; n += 2) CHECK(binom_tail(n / 2, n) == 0.5);
  CHECK_THROWS(binom_tail(-1, 5));
  CHECK_THROWS(binom_tail(6, 5));
  CHECK_THROWS(binom_tail(1, 0));
}

TEST_CASE("binom_tail against exact integer sums") {
  double worst = 0.0;
  for (long n : {1L, 2L, 3L, 7L, 16L, 33L, 100L, 257L, 1000L, 4096L}) {
    for (long k = 0; k <= n; k += std::max(1L, n / 37)) {
      const double o = tail_oracle(k, n);
      if (o < 1e-290) continue;
      worst = std::max(worst, rel(binom_tail(k, n), o));
    }
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("binom_tail is monotone in k and stays finite for huge n") {
  for (long n : {50L, 513L}) {
    double prev = 0.0;
    for (long k = 0; k <= n; ++k) {
      const double v = binom_tail(k, n);
      CHECK(v >= prev);
      prev = v;
    }
  }
  CHECK(std::isfinite(binom_tail(400000, 1000000)));
  CHECK(binom_tail(500000, 1000000) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("q_sb_exact") {
  CHECK(q_sb_exact(3, 7, 7) == 1.0);
  CHECK(q_sb_exact(2, 3, 4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q_sb_exact(1, 3, 4) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(q_sb_exact(5, 3, 8) == 0.0);  // ell >= m: too many free entries
  CHECK_THROWS(q_sb_exact(9, 3, 8));
  CHECK_THROWS(q_sb_exact(1, 0, 8));
}

TEST_CASE("q_sb_exact is monotone for M <= 64") {
  for (int M = 1; M <= 64; ++M)
    for (int m = 1; m <= M; ++m)
      for (int ell = 0; ell <= M; ++ell) {
        if (ell < M) CHECK(q_sb_exact(ell + 1, m, M) <= q_sb_exact(ell, m, M));
        if (m < M) CHECK(q_sb_exact(ell, m + 1, M) >= q_sb_exact(ell, m, M));
      }
}

TEST_CASE("q_mb_exact") {
  CHECK(q_mb_exact(4, 10, 17, 1) == q_sb_exact(4, 10, 17));
  CHECK(q_mb_exact(2, 3, 4, 3) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(q_mb_exact(5, 9, 9, 1000) == 1.0);
  for (int ell = 0; ell <= 30; ++ell) {
    const double a = q_mb_exact(ell, 22, 30, 12), b = std::pow(q_mb_exact(ell, 22, 30, 3), 4);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1e-300, b) + 1e-300);
  }
}

TEST_CASE("critical_ell") {
  SUBCASE("single block, exact half") {
    const auto c = critical_ell(4, 6, 1, 0.5);
    CHECK(c.ell_star == 2);
    CHECK(c.q_at_star == doctest::Approx(0.5));
  }
  SUBCASE("m = M") { CHECK(critical_ell(6, 6, 1).ell_star == 6); }
  SUBCASE("defaults") {
    CHECK(default_q_star(1) == 0.5);
    CHECK(default_q_star(5) == doctest::Approx(1.0 - std::exp(-1.0)));
  }
  SUBCASE("matches an exhaustive scan") {
    for (int M : {12, 48, 100}) {
      for (int m : {M / 2, 3 * M / 4, M - 1}) {
        for (int B : {1, 7, M}) {
          const double q = default_q_star(B);
          int scan = -1;
          for (int ell = 0; ell <= M; ++ell)
            if (q_mb_exact(ell, m, M, B) >= q) scan = ell;
          if (scan < 0) {
            CHECK_THROWS(critical_ell(m, M, B));
            continue;
          }
          const auto c = critical_ell(m, M, B);
          CHECK(c.ell_star == scan);
          CHECK(c.q_at_star >= q);
          CHECK(c.q_at_next < q);
          CHECK(c.eps_star == doctest::Approx(static_cast<double>(scan) / M));
        }
      }
    }
  }
  CHECK_THROWS(critical_ell(4, 6, 1, 1.5));
}

TEST_CASE("continuum approximation") {
  SUBCASE("z_B = 0 collapses to 2m - M") {
    const int B = 6;
    const double q = std::exp(-B / 2.0);
    CHECK(std::abs(z_b(q, B)) < 1e-12);
    CHECK(continuum_ell0(30, 40, B, q) == doctest::Approx(20.0).epsilon(1e-9));
  }
  SUBCASE("M = B = 192, m = 144") {
    const double q = 1.0 - std::exp(-1.0);
    const double z = z_b(q, 192);
    CHECK(z == doctest::Approx(norm_quantile(std::log(1.0 / q) / 192)));
    CHECK(z == doctest::Approx(-2.82).epsilon(0.005));
    const double l0 = continuum_ell0(144, 192, 192, q);
    CHECK(l0 == doctest::Approx(64.10).epsilon(0.002));
    const double offset = 0.5 - l0 / 192.0;
    CHECK(offset == doctest::Approx(std::sqrt(0.5) * gamma_factor(192, 192)).epsilon(0.005));
  }
  CHECK_THROWS(z_b(1e-300, 1));
}

TEST_CASE("normal approximation and the Uspensky bound") {
  CHECK(normal_approx(50, 100) == 0.5);
  CHECK(uspensky_gap(10, 100) == doctest::Approx(0.26 / 100 + std::exp(-10.0)).epsilon(1e-12));
  CHECK(uspensky_gap(10, 100) == doctest::Approx(0.0026454).epsilon(1e-4));
  for (long n = 16; n <= 256; ++n)
    for (long k = 1; 2 * k < n; ++k)
      CHECK(std::abs(binom_tail(k, n) - normal_approx(k, n)) <= uspensky_gap(k, n) + convention_shift(k, n));
}

TEST_CASE("tail decay inequality") {
  CHECK(tail_decay_check(10, 40, 0));
  CHECK(tail_decay_check(10, 40, 5));
  bool all = true;
  for (long n = 2; n <= 128; ++n)
    for (long k = 1; 2 * k < n; ++k)
      for (long h = 1; h <= 16; ++h) all = all && tail_decay_check(k, n, h);
  CHECK(all);
}

TEST_CASE("critical offset ratio approaches sqrt(2(1 - delta))") {
  double prev = 1e9;
  for (int M : {48, 96, 192, 384, 768}) {
    const auto c = critical_ell(3 * M / 4, M, M);
    const double ratio = (0.5 - c.eps_star) / gamma_factor(M, M);
    CHECK(ratio <= prev);
    prev = ratio;
  }
  CHECK(std::abs(prev - std::sqrt(0.5)) < 0.15 * std::sqrt(0.5));
}
