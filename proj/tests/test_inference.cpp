#include "doctest.h"

#include <cmath>

#include "ptlab/errors.hpp"
#include "ptlab/exactprob.hpp"
#include "ptlab/inference.hpp"

using namespace ptlab;

namespace {

std::vector<QuantalCell> synthetic(Link link, double a, double b, long S, Seed seed) {
  std::vector<QuantalCell> cells;
  Rng rng(seed);
  for (int i = 1; i <= 11; ++i) {
    const double eps = 0.05 * i;
    const double p = link_prob(link, a + b * eps);
    long k = 0;
    for (long s = 0; s < S; ++s) k += rng.bernoulli(p);
    cells.push_back({eps, S, k});
  }
  return cells;
}

}  // namespace

TEST_CASE("links") {
  CHECK(link_prob(Link::PROBIT, 0.0) == 0.5);
  CHECK(link_prob(Link::CLL, 0.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(parse_link("cll") == Link::CLL);
  CHECK(parse_link("probit") == Link::PROBIT);
  CHECK_THROWS(parse_link("logit"));
}

TEST_CASE("CLL fit recovers a synthetic transition") {
  const auto cells = synthetic(Link::CLL, 3.0, -10.0, 2000, 31);
  const auto f = fit_quantal(cells, Link::CLL);
  REQUIRE(f.converged);
  CHECK(std::abs(f.a - 3.0) <= 2.0 * f.se_a);
  CHECK(std::abs(f.b + 10.0) <= 2.0 * f.se_b);
  CHECK(std::abs(f.eps_star - 0.3) <= 2.0 * f.se_eps_star);
  CHECK(empirical_pt(f) == f.eps_star);
  for (std::size_t i = 1; i < f.loglik_trace.size(); ++i) CHECK(f.loglik_trace[i] >= f.loglik_trace[i - 1]);
}

TEST_CASE("probit fit recovers a synthetic transition") {
  const auto cells = synthetic(Link::PROBIT, 2.0, -8.0, 1500, 32);
  const auto f = fit_quantal(cells, Link::PROBIT);
  REQUIRE(f.converged);
  CHECK(std::abs(f.eps_star - 0.25) <= 2.0 * f.se_eps_star);
}

TEST_CASE("Newton agrees with a coarse likelihood grid") {
  const auto cells = synthetic(Link::CLL, 1.0, -4.0, 300, 33);
  const auto f = fit_quantal(cells, Link::CLL);
  double best = -1e300, ba = 0.0, bb = 0.0;
  for (double a = 0.0; a <= 2.0; a += 0.01)
    for (double b = -6.0; b <= -2.0; b += 0.01) {
      double ll = 0.0;
      for (const auto& c : cells) {
        const double p = link_prob(Link::CLL, a + b * c.eps);
        ll += c.successes * std::log(p) + (c.S - c.successes) * std::log1p(-p);
      }
      if (ll > best) best = ll, ba = a, bb = b;
    }
  CHECK(std::abs(f.a - ba) < 0.02);
  CHECK(std::abs(f.b - bb) < 0.02);
  CHECK(f.loglik >= best - 1e-9);
}

TEST_CASE("affine change of the eps axis moves the transition consistently") {
  const auto cells = synthetic(Link::CLL, 3.0, -10.0, 500, 34);
  auto moved = cells;
  for (auto& c : moved) c.eps = 4.0 * c.eps - 1.0;
  const auto f = fit_quantal(cells, Link::CLL), g = fit_quantal(moved, Link::CLL);
  CHECK(g.eps_star == doctest::Approx(4.0 * f.eps_star - 1.0).epsilon(1e-8));
}

TEST_CASE("degenerate data") {
  std::vector<QuantalCell> all{{0.1, 10, 10}, {0.2, 10, 10}, {0.3, 10, 10}};
  CHECK_THROWS_AS(fit_quantal(all, Link::CLL), SeparationError);
  std::vector<QuantalCell> two{{0.1, 10, 9}, {0.2, 10, 3}, {0.2, 10, 4}};
  CHECK_THROWS_AS(fit_quantal(two, Link::CLL), std::invalid_argument);
}

TEST_CASE("empirical_pt") {
  QuantalFit f;
  f.converged = true;
  f.a = 0.0;
  f.b = -1.0;
  CHECK(empirical_pt(f) == 0.0);
  f.a = 3.0;
  f.b = -10.0;
  CHECK(empirical_pt(f) == doctest::Approx(0.3));
  f.b = 1.0;
  CHECK_THROWS(empirical_pt(f));
  f.b = -1.0;
  f.converged = false;
  CHECK_THROWS(empirical_pt(f));
}

TEST_CASE("fit on exact-formula BOX01 data lands within 1/M of the critical sparsity") {
  const int M = 48, m = 36;
  const long S = 100000;
  std::vector<QuantalCell> cells;
  for (int ell = 0; ell <= M; ++ell) {
    const double q = q_mb_exact(ell, m, M, M);
    cells.push_back({static_cast<double>(ell) / M, S, std::lround(q * S)});
  }
  const auto f = fit_quantal(cells, Link::CLL);
  REQUIRE(f.converged);
  const auto c = critical_ell(m, M, M);
  CHECK(std::abs(empirical_pt(f) - c.eps_star) <= 1.0 / M);
}

TEST_CASE("hypothesis test") {
  const double q = 1.0 - std::exp(-1.0);
  const auto d = hypothesis_test(0.0, 10000, 100, q, 0.05);
  CHECK(d.mu == doctest::Approx(0.0045868).epsilon(1e-4));
  CHECK(d.lo == doctest::Approx(0.0032594).epsilon(1e-4));
  CHECK(d.hi == doctest::Approx(0.0059141).epsilon(1e-4));
  CHECK(d.z == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(d.outcome == TestOutcome::ACCEPT_H0);
  CHECK(hypothesis_test(d.mu, 10000, 100, q, 0.05).outcome == TestOutcome::NO_DECISION);
  CHECK(hypothesis_test(0.01, 10000, 100, q, 0.05).outcome == TestOutcome::REJECT_H0);
  CHECK_THROWS(hypothesis_test(0.0, 0, 100, q, 0.05));
  CHECK_THROWS(hypothesis_test(0.0, 10, 100, q, 1.5));
}

TEST_CASE("test calibration at the null boundary") {
  const auto r = calibrate_test(100, 5000, 10000, 0.05, 1.0 - std::exp(-1.0), 2);
  CHECK(std::abs(r.out_of_band_rate - 0.05) <= 0.02);
  CHECK(r.reject_rate >= 0.01);
  CHECK(r.reject_rate <= 0.05);
}
