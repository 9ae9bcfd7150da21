#pragma once

#include "ptlab/coeffsets.hpp"

namespace ptlab {

struct PredictionConstants {
  double alpha = 0.0;
  double beta = 0.0;
  CoefficientSet coeff_set;
};

PredictionConstants prediction_constants(CoefficientSet set);

/// Large-N Gaussian phase transition eps*(delta; X). BOX01 is (2 delta - 1)_+;
/// the other sets invert delta = psi(eps), where psi is the normalized
/// statistical dimension of the l1 (or l_{2,1}) descent cone:
///   psi(eps) = min_tau [eps (k + tau^2) + (1 - eps) E_k(tau)] / k,
/// E_k(tau) = E (|g| - tau)_+^2 for g standard in the coefficient's ambient
/// space (one-sided for NONNEG).
double asymptotic_pt(double delta, CoefficientSet set);

/// psi(eps) above; exposed for tests.
double statistical_dimension(double eps, CoefficientSet set);

/// sqrt(2 ln B / M).
double gamma_factor(int M, int B);

double eta_shape(double delta, CoefficientSet set);
double zeta_shape(double delta, CoefficientSet set);

struct OffsetPrediction {
  double delta = 0.0;
  double eps_asy = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  double rel_offset_first = 0.0;   // alpha eta gamma
  double rel_offset_second = 0.0;  // + beta zeta gamma^2
  double eps_bd_first = 0.0;
  double eps_bd_second = 0.0;
  int order = 2;
  double eps_bd = 0.0;  // the one selected by `order`
  // The formulas were calibrated at B = M; other B is an extrapolation.
  bool extrapolated = false;
};

/// eps_bd = eps_asy (1 - r), r the relative offset of the requested order.
OffsetPrediction predict_pt(int m, int M, int B, CoefficientSet set, int order = 2);

/// sqrt(4 (d_e/d) (1 - delta) ln N / N^{d_r/d}), d_r = d - d_e; N must be a
/// perfect d-th power.
double general_d_offset(int d, int d_e, double delta, long N);

enum class MriDims { D2, D3 };

/// delta^{-1/2} [(2/3) g - (1/3) g^2] with g^2 = 2 ln M / M (2D) or
/// 2 ln M / M^2 (3D).
double mri_offset(MriDims dims, double delta, int M);

}  // namespace ptlab
