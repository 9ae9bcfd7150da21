#include "ptlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/SVD>

namespace ptlab {

namespace {

using cd = std::complex<double>;

const OperatorDescriptor& aniso_descriptor(const MeasurementOperator& op) {
  if (op.kind() != OperatorKind::ANISO_2D || !op.descriptor())
    throw std::invalid_argument("verify: operator is not an anisotropic 2D sampler");
  return *op.descriptor();
}

// G(t, u) = sum_k F_k(t) conj(F_k(u)); note this is the conjugate of A^H A.
Eigen::MatrixXcd gram_grouped(const MeasurementOperator& op, int T0, int T1) {
  const Eigen::MatrixXcd A = op.dense_complex();
  const Eigen::MatrixXcd G = (A.adjoint() * A).conjugate();
  const int N = T0 * T1;
  std::vector<int> g(N);
  for (int c = 0; c < N; ++c) g[c] = (c % T0) * T1 + c / T0;
  Eigen::MatrixXcd P(N, N);
  for (int c = 0; c < N; ++c)
    for (int d = 0; d < N; ++d) P(g[c], g[d]) = G(c, d);
  return P;
}

int numerical_rank(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s[i] > 1e-10 * s[0];
  return r;
}

Eigen::VectorXcd fourier_mode(int T1, int ell) {
  Eigen::VectorXcd v(T1);
  for (int t = 0; t < T1; ++t) v[t] = std::polar(1.0, 2.0 * std::numbers::pi * ell * t / T1);
  return v;
}

template <class Mat>
double min_minor_impl(const Mat& A) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (m > n) throw std::invalid_argument("min_column_minor: more rows than columns");
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  double best = std::numeric_limits<double>::infinity();
  Mat sub(m, m);
  while (true) {
    for (int j = 0; j < m; ++j) sub.col(j) = A.col(idx[j]);
    best = std::min(best, static_cast<double>(std::abs(sub.partialPivLu().determinant())));
    int i = m - 1;
    while (i >= 0 && idx[i] == n - m + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

}  // namespace

GramReport check_gram_structure(const MeasurementOperator& op) {
  const auto& d = aniso_descriptor(op);
  GramReport r;
  r.T0 = d.T0;
  r.T1 = d.T1;
  r.K1 = d.K;
  const Eigen::MatrixXcd P = gram_grouped(op, d.T0, d.T1);
  const int T1 = d.T1;
  const Eigen::MatrixXcd G1 = P.topLeftCorner(T1, T1);
  for (int i = 0; i < P.rows(); ++i)
    for (int j = 0; j < P.cols(); ++j)
      if (i / T1 != j / T1) r.max_offblock = std::max(r.max_offblock, std::abs(P(i, j)));
  for (int b = 0; b < d.T0; ++b)
    r.max_block_deviation =
        std::max(r.max_block_deviation, (P.block(b * T1, b * T1, T1, T1) - G1).cwiseAbs().maxCoeff());
  r.block_rank = numerical_rank(G1);
  for (int ell : d.K) {
    const Eigen::VectorXcd v = fourier_mode(T1, ell);
    r.eigvec_residuals.push_back((G1 * v - v).norm() / v.norm());
  }
  r.G = to_real_pair(P);
  return r;
}

EigvecReport check_eigvecs(const MeasurementOperator& op) {
  const auto& d = aniso_descriptor(op);
  const Eigen::MatrixXcd G1 = gram_grouped(op, d.T0, d.T1).topLeftCorner(d.T1, d.T1);
  EigvecReport r;
  for (int ell = 0; ell < d.T1; ++ell) {
    const Eigen::VectorXcd v = fourier_mode(d.T1, ell);
    const bool in = std::find(d.K.begin(), d.K.end(), ell) != d.K.end();
    if (in) {
      r.in_ells.push_back(ell);
      r.in_residuals.push_back((G1 * v - v).norm() / v.norm());
      r.max_in = std::max(r.max_in, r.in_residuals.back());
    } else {
      r.out_ells.push_back(ell);
      r.out_residuals.push_back((G1 * v).norm() / v.norm());
      r.max_out = std::max(r.max_out, r.out_residuals.back());
    }
  }
  return r;
}

ReducedSystem reduce_rank_deficient(const Eigen::MatrixXd& G, const Eigen::VectorXd& b) {
  if (G.rows() != b.size()) throw std::invalid_argument("reduce_rank_deficient: size mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  ReducedSystem r;
  const double smax = s.size() ? s[0] : 0.0;
  const double cut = 1e-10 * smax;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (smax > 0.0 && s[i] > cut) ++r.rank;
    if (smax > 0.0 && s[i] > 0.1 * cut && s[i] < 10.0 * cut) r.ambiguous = true;
  }
  const auto U = svd.matrixU().leftCols(r.rank);
  const auto V = svd.matrixV().leftCols(r.rank);
  r.A = V.transpose();
  r.y = (U.transpose() * b).cwiseQuotient(s.head(r.rank));
  const double resid = (b - U * (U.transpose() * b)).norm();
  r.consistent = resid <= 1e-8 * (1.0 + b.norm());
  return r;
}

Eigen::MatrixXcd vectorization_matrix(int M) {
  // (V x)[t0*M + t1] = x[t0 + M*t1]
  const int N = M * M;
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(N, N);
  for (int t0 = 0; t0 < M; ++t0)
    for (int t1 = 0; t1 < M; ++t1) V(t0 * M + t1, t0 + M * t1) = 1.0;
  return V;
}

Eigen::MatrixXcd row_transform_matrix(int M, int m) {
  // block output t0*m + i  ->  aniso output k0 + M*i, DFT along t0
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(M * m, M * m);
  const double s = 1.0 / std::sqrt(static_cast<double>(M));
  for (int k0 = 0; k0 < M; ++k0)
    for (int i = 0; i < m; ++i)
      for (int t0 = 0; t0 < M; ++t0)
        T(k0 + M * i, t0 * m + i) = s * std::polar(1.0, 2.0 * std::numbers::pi * k0 * t0 / M);
  return T;
}

EquivalenceReport check_equivalence(int M, const std::vector<int>& K1, const SignalVector& x0, CoefficientSet set,
                                    const SolverOptions& opts) {
  if (M < 1 || M > kMaxEquivalenceM)
    throw std::invalid_argument("check_equivalence: M must lie in [1, " + std::to_string(kMaxEquivalenceM) + "]");
  if (set != kComplex && set != kBox01)
    throw std::invalid_argument("check_equivalence: coefficient set must be complex or box01");
  validate_index_set(K1, M, "K1");
  if (x0.size() != M * M || x0.coeff_set() != set)
    throw std::invalid_argument("check_equivalence: x0 must hold M*M coefficients over the given set");
  const int m = static_cast<int>(K1.size());
  const int a = set.ambient_dim();

  EquivalenceReport r;
  r.M = M;
  r.K1 = K1;

  const MeasurementOperator aus = aniso_sampler_2d(M, K1);
  const SignalVector xa(x0.entries(), set, M * M, 1);
  const Eigen::VectorXd y_aus = aus.apply(xa);
  const SolveResult sa = solve_p1(aus, y_aus, set, opts);

  // Reindex to block order: block t0 holds the column x[t0 + M*t1], t1 = 0..M-1.
  auto reorder = [&](const Eigen::VectorXd& e) {
    Eigen::VectorXd out(e.size());
    for (int t0 = 0; t0 < M; ++t0)
      for (int t1 = 0; t1 < M; ++t1)
        out.segment((t0 * M + t1) * a, a) = e.segment((t0 + M * t1) * a, a);
    return out;
  };
  const SignalVector xb(reorder(x0.entries()), set, M, M);
  OperatorDescriptor d;
  d.source = "pdft";
  d.field = Field::COMPLEX;
  d.m = m;
  d.M = M;
  d.B = M;
  d.repeated = true;
  d.K = K1;
  const MeasurementOperator bd = build_operator(d);
  const Eigen::VectorXd y_bd = bd.apply(xb);
  const SolveResult sb = solve_p1(bd, y_bd, set, opts);

  r.val_aus = sa.value;
  r.val_blockdiag = sb.value;
  r.value_gap = std::abs(sa.value - sb.value);
  r.solution_gap = (reorder(sa.x1.entries()) - sb.x1.entries()).cwiseAbs().maxCoeff();
  r.both_converged = sa.status == SolveStatus::CONVERGED && sb.status == SolveStatus::CONVERGED;
  if (x0.entries().norm() > 0.0) {
    r.success_aus = relative_error(xa, SignalVector(sa.x1.entries(), set, M * M, 1)) < kSuccessThreshold;
    r.success_blockdiag = relative_error(xb, sb.x1) < kSuccessThreshold;
  }
  if (!r.both_converged) {
    r.decision = "no_decision";
    r.pass = false;
    return r;
  }
  const bool values_match = r.value_gap <= 1e-6 * (1.0 + std::abs(r.val_aus));
  const bool solutions_match = !(r.success_aus && r.success_blockdiag) || r.solution_gap <= 1e-4;
  r.pass = values_match && solutions_match && r.success_aus == r.success_blockdiag;
  r.decision = r.pass ? "pass" : "fail";
  return r;
}

FactorizationReport check_isometry_factorization(int M, const std::vector<int>& K1, Seed seed) {
  if (M < 1 || M > 32) throw std::invalid_argument("check_isometry_factorization: M must lie in [1, 32]");
  validate_index_set(K1, M, "K1");
  const int m = static_cast<int>(K1.size());
  const Eigen::MatrixXcd F = aniso_sampler_2d(M, K1).dense_complex();
  const Eigen::MatrixXcd A1 = from_real_pair(partial_dft_block(M, K1));
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(M * m, M * M);
  for (int b = 0; b < M; ++b) A.block(b * m, b * M, m, M) = A1;
  const Eigen::MatrixXcd V = vectorization_matrix(M);
  const Eigen::MatrixXcd T = row_transform_matrix(M, m);

  FactorizationReport r;
  r.max_deviation = (T * A * V - F).cwiseAbs().maxCoeff();
  Rng rng(derive_seed(seed, "isometry", 0));
  auto random_vec = [&](int n) {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = cd(rng.normal(), rng.normal());
    return v;
  };
  auto l1 = [](const Eigen::VectorXcd& v) { return v.cwiseAbs().sum(); };
  for (int rep = 0; rep < 8; ++rep) {
    const Eigen::VectorXcd u = random_vec(M * m), x = random_vec(M * M);
    r.t_isometry = std::max(r.t_isometry, std::abs((T * u).norm() - u.norm()));
    r.v_isometry = std::max(r.v_isometry, std::abs((V * x).norm() - x.norm()));
    r.v_l1_isometry = std::max(r.v_l1_isometry, std::abs(l1(V * x) - l1(x)));
  }
  return r;
}

double min_column_minor(const Eigen::MatrixXcd& A) { return min_minor_impl(A); }
double min_column_minor(const Eigen::MatrixXd& A) { return min_minor_impl(A); }

double general_position_check(int M, const std::vector<int>& K) {
  validate_index_set(K, M, "K");
  return min_column_minor(from_real_pair(partial_dft_block(M, K)));
}

nlohmann::json run_verify_suite(const SolverOptions& opts, Seed seed) {
  using nlohmann::json;
  json out;
  bool all = true;

  {
    json cases = json::array();
    bool ok = true;
    const std::vector<std::pair<int, std::vector<int>>> grid{{4, {0, 2}}, {4, {1, 2, 3}}, {8, {1, 4, 6}}, {8, {0, 3, 5, 7}}};
    for (const auto& [M, K1] : grid) {
      const auto op = aniso_sampler_2d(M, K1);
      const auto g = check_gram_structure(op);
      const auto e = check_eigvecs(op);
      const bool c = g.max_offblock < 1e-10 && g.max_block_deviation < 1e-12 &&
                     g.block_rank == static_cast<int>(K1.size()) && e.max_in < 1e-10 && e.max_out < 1e-10;
      cases.push_back({{"T0", M},
                       {"T1", M},
                       {"K1", K1},
                       {"max_offblock", g.max_offblock},
                       {"max_block_deviation", g.max_block_deviation},
                       {"block_rank", g.block_rank},
                       {"max_eig_residual_in", e.max_in},
                       {"max_eig_residual_out", e.max_out},
                       {"pass", c}});
      ok = ok && c;
    }
    out["gram"] = {{"cases", cases}, {"pass", ok}};
    all = all && ok;
  }
  {
    json cases = json::array();
    bool ok = true;
    const std::vector<std::pair<int, std::vector<int>>> grid{{4, {0, 2}}, {8, {1, 4, 5}}};
    for (const auto& [M, K1] : grid) {
      const auto f = check_isometry_factorization(M, K1, seed);
      const bool c =
          f.max_deviation < 1e-12 && f.t_isometry < 1e-10 && f.v_isometry < 1e-10 && f.v_l1_isometry < 1e-10;
      cases.push_back({{"M", M},
                       {"K1", K1},
                       {"max_deviation", f.max_deviation},
                       {"t_isometry", f.t_isometry},
                       {"v_isometry", f.v_isometry},
                       {"v_l1_isometry", f.v_l1_isometry},
                       {"pass", c}});
      ok = ok && c;
    }
    out["factorization"] = {{"cases", cases}, {"pass", ok}};
    all = all && ok;
  }
  {
    const int M = 7;
    const std::vector<int> K1{0, 1, 3};
    json rows = json::array();
    bool ok = true;
    for (CoefficientSet set : {kComplex, kBox01}) {
      const ProblemSizes sz{1, static_cast<int>(K1.size()), M, M};
      const SignalVector x0 = sample_signal(sz, set, derive_seed(seed, "equivalence", static_cast<int>(set.tag())));
      const auto r = check_equivalence(M, K1, SignalVector(x0.entries(), set, M * M, 1), set, opts);
      rows.push_back({{"coeffset", set.name()},
                      {"val_aus", r.val_aus},
                      {"val_blockdiag", r.val_blockdiag},
                      {"value_gap", r.value_gap},
                      {"solution_gap", r.solution_gap},
                      {"decision", r.decision}});
      ok = ok && r.pass;
    }
    out["equivalence"] = {{"M", M}, {"K1", K1}, {"cases", rows}, {"pass", ok}};
    all = all && ok;
  }
  {
    const int M = 13;
    const std::vector<int> K{0, 2, 5, 11};
    const double mn = general_position_check(M, K);
    const bool ok = mn > 1e-8;
    out["general_position"] = {{"M", M}, {"K", K}, {"min_abs_minor", mn}, {"pass", ok}};
    all = all && ok;
  }
  out["pass"] = all;
  return out;
}

}  // namespace ptlab
