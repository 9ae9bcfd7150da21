#include "ptlab/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

#include "ptlab/normal.hpp"

namespace ptlab {
namespace {

// E_k(tau) and its derivative, per coefficient set.
double tail_energy(double tau, CoefficientSet set) {
  const double upper = norm_cdf(-tau);
  switch (set.tag()) {
    case CoeffTag::NONNEG:
      return (1.0 + tau * tau) * upper - tau * norm_pdf(tau);
    case CoeffTag::REAL:
      return 2.0 * ((1.0 + tau * tau) * upper - tau * norm_pdf(tau));
    case CoeffTag::COMPLEX:
      return 2.0 * std::exp(-0.5 * tau * tau) - 2.0 * std::sqrt(2.0 * std::numbers::pi) * tau * upper;
    default:
      throw std::logic_error("tail_energy: no descent-cone formula for this set");
  }
}

double tail_energy_slope(double tau, CoefficientSet set) {
  const double upper = norm_cdf(-tau);
  switch (set.tag()) {
    case CoeffTag::NONNEG:
      return -2.0 * (norm_pdf(tau) - tau * upper);
    case CoeffTag::REAL:
      return -4.0 * (norm_pdf(tau) - tau * upper);
    case CoeffTag::COMPLEX:
      return -2.0 * std::sqrt(2.0 * std::numbers::pi) * upper;
    default:
      throw std::logic_error("tail_energy_slope: no descent-cone formula for this set");
  }
}

constexpr double kTauMax = 60.0;

void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("delta must lie in (0, 1]");
}

}  // namespace

PredictionConstants prediction_constants(CoefficientSet set) {
  switch (set.tag()) {
    case CoeffTag::BOX01:
      return {1.0, 0.5, set};
    case CoeffTag::NONNEG:
      return {1.0, -1.0 / 3.0, set};
    case CoeffTag::REAL:
      return {1.0, -0.5, set};
    case CoeffTag::COMPLEX:
      return {2.0 / 3.0, -1.0 / 3.0, set};
  }
  throw std::logic_error("prediction_constants");
}

double statistical_dimension(double eps, CoefficientSet set) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::domain_error("statistical_dimension: eps must lie in [0, 1]");
  if (set.tag() == CoeffTag::BOX01) return 0.5 * (1.0 + eps);
  if (eps == 0.0) return 0.0;
  const double k = set.ambient_dim();
  if (eps == 1.0) return 1.0;
  // The objective is strictly convex in tau; its slope changes sign once on [0, kTauMax].
  auto slope = [&](double tau) { return 2.0 * eps * tau + (1.0 - eps) * tail_energy_slope(tau, set); };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(slope, 0.0, kTauMax, tol, iters);
  const double tau = 0.5 * (a + b);
  return (eps * (k + tau * tau) + (1.0 - eps) * tail_energy(tau, set)) / k;
}

double asymptotic_pt(double delta, CoefficientSet set) {
  check_delta(delta);
  if (set.tag() == CoeffTag::BOX01) return std::max(2.0 * delta - 1.0, 0.0);
  if (delta == 1.0) return 1.0;
  auto f = [&](double eps) { return statistical_dimension(eps, set) - delta; };
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, 1.0, -delta, 1.0 - delta, tol, iters);
  return 0.5 * (a + b);
}

double gamma_factor(int M, int B) {
  if (M < 1) throw std::invalid_argument("gamma_factor: M must be >= 1");
  if (B < 2) throw std::invalid_argument("gamma_factor: B must be >= 2");
  return std::sqrt(2.0 * std::log(static_cast<double>(B)) / M);
}

double eta_shape(double delta, CoefficientSet set) {
  check_delta(delta);
  switch (set.tag()) {
    case CoeffTag::BOX01: {
      if (!(delta > 0.5)) throw std::domain_error("eta_shape: BOX01 needs delta > 1/2");
      const double e = 2.0 * delta - 1.0;
      return std::sqrt(1.0 - e) / e;
    }
    case CoeffTag::NONNEG:
      return std::sqrt(std::max(1.0 - asymptotic_pt(delta, set), 0.0) / delta);
    case CoeffTag::REAL:
    case CoeffTag::COMPLEX:
      return 1.0 / std::sqrt(delta);
  }
  throw std::logic_error("eta_shape");
}

double zeta_shape(double delta, CoefficientSet set) {
  if (set.tag() == CoeffTag::BOX01) {
    check_delta(delta);
    if (!(delta > 0.5)) throw std::domain_error("zeta_shape: BOX01 needs delta > 1/2");
    return 1.0;
  }
  return eta_shape(delta, set);
}

OffsetPrediction predict_pt(int m, int M, int B, CoefficientSet set, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("predict_pt: order must be 1 or 2");
  if (M < 1 || m < 1 || m > M) throw std::invalid_argument("predict_pt: need 1 <= m <= M");
  OffsetPrediction p;
  p.delta = static_cast<double>(m) / M;
  p.eps_asy = asymptotic_pt(p.delta, set);
  p.gamma = gamma_factor(M, B);
  p.eta = eta_shape(p.delta, set);
  p.zeta = zeta_shape(p.delta, set);
  const auto c = prediction_constants(set);
  p.rel_offset_first = c.alpha * p.eta * p.gamma;
  p.rel_offset_second = p.rel_offset_first + c.beta * p.zeta * p.gamma * p.gamma;
  p.eps_bd_first = p.eps_asy * (1.0 - p.rel_offset_first);
  p.eps_bd_second = p.eps_asy * (1.0 - p.rel_offset_second);
  p.order = order;
  p.eps_bd = order == 1 ? p.eps_bd_first : p.eps_bd_second;
  p.extrapolated = B != M;
  return p;
}

double general_d_offset(int d, int d_e, double delta, long N) {
  if (d < 2) throw std::invalid_argument("general_d_offset: d must be >= 2");
  if (d_e < 0 || d_e > d) throw std::invalid_argument("general_d_offset: need 0 <= d_e <= d");
  check_delta(delta);
  if (N < 2) throw std::invalid_argument("general_d_offset: N must be >= 2");
  const long T = std::lround(std::pow(static_cast<double>(N), 1.0 / d));
  long p = 1;
  for (int i = 0; i < d; ++i) p *= T;
  if (p != N) throw std::invalid_argument("general_d_offset: N is not a perfect d-th power");
  const int d_r = d - d_e;
  const double ratio = static_cast<double>(d_e) / d;
  return std::sqrt(4.0 * ratio * (1.0 - delta) * std::log(static_cast<double>(N)) /
                   std::pow(static_cast<double>(N), static_cast<double>(d_r) / d));
}

double mri_offset(MriDims dims, double delta, int M) {
  check_delta(delta);
  if (M < 2) throw std::invalid_argument("mri_offset: M must be >= 2");
  const double denom = dims == MriDims::D2 ? static_cast<double>(M) : static_cast<double>(M) * M;
  const double g2 = 2.0 * std::log(static_cast<double>(M)) / denom;
  return (2.0 / 3.0 * std::sqrt(g2) - g2 / 3.0) / std::sqrt(delta);
}

}  // namespace ptlab
