#pragma once

#include <string>
#include <vector>

#include "ptlab/experiments.hpp"
#include "ptlab/rng.hpp"

namespace ptlab {

enum class Link { PROBIT, CLL };

std::string to_string(Link link);
Link parse_link(const std::string& text);

/// Success probability pi(eta) under the link.
double link_prob(Link link, double eta);

/// Binomial aggregate at one sparsity level.
struct QuantalCell {
  double eps = 0.0;
  long S = 0;
  long successes = 0;
};

struct QuantalFit {
  Link link = Link::CLL;
  double a = 0.0;
  double b = 0.0;
  double se_a = 0.0;
  double se_b = 0.0;
  double cov_ab = 0.0;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double eps_star = 0.0;     // -a/b
  double se_eps_star = 0.0;  // delta method
  std::vector<double> loglik_trace;  // one entry per accepted Newton step
};

/// Maximum likelihood for pi(eps) = link(a + b eps) by damped Newton
/// (step halving keeps the log-likelihood non-decreasing). Wald errors come
/// from the observed information. Throws SeparationError when no cell has
/// 0 < successes < S and std::invalid_argument for fewer than 3 distinct
/// eps levels.
QuantalFit fit_quantal(const std::vector<QuantalCell>& cells, Link link, double tol = 1e-10, int max_iters = 100);

/// Cells from a success table at one (m, M, B); eps = ell / M.
std::vector<QuantalCell> cells_from_table(const SuccessTable& table);

/// -a/b: the eps where pi = 1/2 (probit) or 1 - 1/e (CLL).
double empirical_pt(const QuantalFit& fit);

enum class TestOutcome { REJECT_H0, ACCEPT_H0, NO_DECISION };
std::string to_string(TestOutcome o);

struct TestDecision {
  double y_bar = 0.0;
  double mu = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double z = 0.0;
  TestOutcome outcome = TestOutcome::NO_DECISION;
};

/// mu = ln(1/q*)/B, band mu -/+ z_{1-alpha/2} sqrt(mu/S); REJECT above the
/// band, ACCEPT below it.
TestDecision hypothesis_test(double y_bar, long S, int B, double q_star, double alpha);

struct CalibrationResult {
  long reps = 0;
  double reject_rate = 0.0;
  double accept_rate = 0.0;
  double out_of_band_rate = 0.0;
};

/// Simulates the test at the null boundary: Y_s ~ Bernoulli(1 - q*^{1/B}).
CalibrationResult calibrate_test(int B, long S, long reps, double alpha, double q_star, Seed seed);

}  // namespace ptlab
