#include "ptlab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "ptlab/errors.hpp"
#include "ptlab/normal.hpp"

namespace ptlab {

std::string to_string(Link link) { return link == Link::PROBIT ? "probit" : "cll"; }

Link parse_link(const std::string& text) {
  if (text == "probit" || text == "normal") return Link::PROBIT;
  if (text == "cll" || text == "cloglog") return Link::CLL;
  throw std::invalid_argument("unknown link '" + text + "' (expected probit or cll)");
}

double link_prob(Link link, double eta) {
  return link == Link::PROBIT ? norm_cdf(eta) : -std::expm1(-std::exp(eta));
}

std::string to_string(TestOutcome o) {
  switch (o) {
    case TestOutcome::REJECT_H0:
      return "reject_h0";
    case TestOutcome::ACCEPT_H0:
      return "accept_h0";
    case TestOutcome::NO_DECISION:
      return "no_decision";
  }
  return "?";
}

namespace {

// Per-cell log-likelihood and its first two derivatives in eta.
struct CellTerms {
  double ll, g, h;
};

CellTerms cell_terms(Link link, double eta, double y, double S) {
  const double f = S - y;
  if (link == Link::PROBIT) {
    const double lp = log_norm_cdf(eta), lq = log_norm_cdf(-eta);
    const double lphi = -0.5 * eta * eta - 0.5 * std::log(2.0 * std::numbers::pi);
    const double r1 = std::exp(lphi - lp), r2 = std::exp(lphi - lq);
    return {y * lp + f * lq, y * r1 - f * r2, -y * r1 * (eta + r1) - f * r2 * (r2 - eta)};
  }
  const double t = std::exp(eta);
  const double em1 = std::expm1(t);
  const double lp = std::log(-std::expm1(-t));
  double gy = 0.0, hy = 0.0;
  if (t < 700.0) {
    gy = t / em1;
    hy = t * (em1 - t * std::exp(t)) / (em1 * em1);
  }
  return {y * lp - f * t, y * gy - f * t, y * hy - f * t};
}

double initial_eta(Link link, double p) {
  return link == Link::PROBIT ? norm_quantile(p) : std::log(-std::log1p(-p));
}

struct Eval {
  double ll;
  Eigen::Vector2d grad;
  Eigen::Matrix2d hess;
};

Eval evaluate(const std::vector<QuantalCell>& cells, Link link, const Eigen::Vector2d& th) {
  Eval e{0.0, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
  for (const auto& c : cells) {
    const double eta = th[0] + th[1] * c.eps;
    const CellTerms t = cell_terms(link, eta, static_cast<double>(c.successes), static_cast<double>(c.S));
    const Eigen::Vector2d x(1.0, c.eps);
    e.ll += t.ll;
    e.grad += t.g * x;
    e.hess += t.h * x * x.transpose();
  }
  return e;
}

}  // namespace

QuantalFit fit_quantal(const std::vector<QuantalCell>& cells, Link link, double tol, int max_iters) {
  std::set<double> levels;
  bool interior = false;
  for (const auto& c : cells) {
    if (c.S <= 0 || c.successes < 0 || c.successes > c.S) throw std::invalid_argument("fit_quantal: bad cell counts");
    if (!std::isfinite(c.eps)) throw std::invalid_argument("fit_quantal: non-finite eps");
    levels.insert(c.eps);
    if (c.successes > 0 && c.successes < c.S) interior = true;
  }
  if (levels.size() < 3) throw std::invalid_argument("fit_quantal: degenerate design (need >= 3 distinct eps levels)");
  if (!interior) throw SeparationError("fit_quantal: complete separation, no cell has 0 < pi_hat < 1");

  // Start from weighted least squares on the linearized empirical rates.
  Eigen::Matrix2d XtWX = Eigen::Matrix2d::Zero();
  Eigen::Vector2d XtWz = Eigen::Vector2d::Zero();
  for (const auto& c : cells) {
    const double p = (c.successes + 0.5) / (c.S + 1.0);
    const Eigen::Vector2d x(1.0, c.eps);
    XtWX += c.S * x * x.transpose();
    XtWz += c.S * initial_eta(link, p) * x;
  }
  Eigen::Vector2d th = XtWX.ldlt().solve(XtWz);

  QuantalFit fit;
  fit.link = link;
  Eval cur = evaluate(cells, link, th);
  fit.loglik_trace.push_back(cur.ll);
  for (int it = 1; it <= max_iters; ++it) {
    fit.iterations = it;
    const Eigen::Vector2d step = cur.hess.fullPivLu().solve(-cur.grad);
    if (!step.allFinite()) break;
    double s = 1.0;
    bool accepted = false;
    Eval next{};
    Eigen::Vector2d cand;
    for (int halving = 0; halving < 40; ++halving, s *= 0.5) {
      cand = th + s * step;
      next = evaluate(cells, link, cand);
      if (std::isfinite(next.ll) && next.ll >= cur.ll) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.converged = step.cwiseAbs().maxCoeff() < std::sqrt(tol);
      break;
    }
    const double change = (s * step).cwiseAbs().maxCoeff();
    th = cand;
    cur = next;
    fit.loglik_trace.push_back(cur.ll);
    if (change < tol) {
      fit.converged = true;
      break;
    }
  }

  fit.a = th[0];
  fit.b = th[1];
  fit.loglik = cur.ll;
  const Eigen::Matrix2d cov = (-cur.hess).inverse();
  if (cov.allFinite() && cov(0, 0) >= 0.0 && cov(1, 1) >= 0.0) {
    fit.se_a = std::sqrt(cov(0, 0));
    fit.se_b = std::sqrt(cov(1, 1));
    fit.cov_ab = cov(0, 1);
  } else {
    fit.converged = false;
  }
  fit.eps_star = -fit.a / fit.b;
  const Eigen::Vector2d d(-1.0 / fit.b, fit.a / (fit.b * fit.b));
  fit.se_eps_star = std::sqrt(std::max(d.dot(cov * d), 0.0));
  return fit;
}

std::vector<QuantalCell> cells_from_table(const SuccessTable& table) {
  std::vector<QuantalCell> cells;
  for (const auto& r : table.rows) {
    if (!cells.empty() && (r.m != table.rows.front().m || r.M != table.rows.front().M || r.B != table.rows.front().B))
      throw std::invalid_argument("cells_from_table: rows mix different (m, M, B)");
    cells.push_back({static_cast<double>(r.ell) / r.M, r.S, r.successes});
  }
  return cells;
}

double empirical_pt(const QuantalFit& fit) {
  if (!fit.converged) throw std::domain_error("empirical_pt: fit did not converge");
  if (!(fit.b < 0.0)) throw std::domain_error("empirical_pt: slope b must be negative");
  return -fit.a / fit.b;
}

TestDecision hypothesis_test(double y_bar, long S, int B, double q_star, double alpha) {
  if (S < 1 || B < 1) throw std::invalid_argument("hypothesis_test: need S >= 1 and B >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("hypothesis_test: alpha must lie in (0, 1)");
  if (!(q_star > 0.0 && q_star < 1.0)) throw std::invalid_argument("hypothesis_test: q* must lie in (0, 1)");
  TestDecision d;
  d.y_bar = y_bar;
  d.mu = std::log(1.0 / q_star) / B;
  d.z = norm_quantile(1.0 - alpha / 2.0);
  const double half = d.z * std::sqrt(d.mu / S);
  d.lo = d.mu - half;
  d.hi = d.mu + half;
  d.outcome = y_bar > d.hi ? TestOutcome::REJECT_H0 : y_bar < d.lo ? TestOutcome::ACCEPT_H0 : TestOutcome::NO_DECISION;
  return d;
}

CalibrationResult calibrate_test(int B, long S, long reps, double alpha, double q_star, Seed seed) {
  if (reps < 1) throw std::invalid_argument("calibrate_test: reps must be >= 1");
  const double qB = -std::expm1(std::log(q_star) / B);
  CalibrationResult r;
  r.reps = reps;
  long rej = 0, acc = 0;
  for (long i = 0; i < reps; ++i) {
    Rng rng(derive_seed(seed, "calibration", static_cast<std::uint64_t>(i)));
    long T = 0;
    for (long s = 0; s < S; ++s) T += rng.bernoulli(qB) ? 1 : 0;
    const auto d = hypothesis_test(static_cast<double>(T) / S, S, B, q_star, alpha);
    rej += d.outcome == TestOutcome::REJECT_H0;
    acc += d.outcome == TestOutcome::ACCEPT_H0;
  }
  r.reject_rate = static_cast<double>(rej) / reps;
  r.accept_rate = static_cast<double>(acc) / reps;
  r.out_of_band_rate = r.reject_rate + r.accept_rate;
  return r;
}

}  // namespace ptlab
