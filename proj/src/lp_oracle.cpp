#include "ptlab/lp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ptlab/errors.hpp"

namespace ptlab {

// ---------------------------------------------------------------------------
// Second-order cone algebra

Eigen::MatrixXd SocScaling::W() const {
  const Eigen::Index k = v.size();
  Eigen::MatrixXd J = -Eigen::MatrixXd::Identity(k, k);
  J(0, 0) = 1.0;
  return beta * (2.0 * v * v.transpose() - J);
}

Eigen::MatrixXd SocScaling::Winv() const {
  const Eigen::Index k = v.size();
  Eigen::VectorXd Jv = -v;
  Jv[0] = v[0];
  Eigen::MatrixXd J = -Eigen::MatrixXd::Identity(k, k);
  J(0, 0) = 1.0;
  return (2.0 * Jv * Jv.transpose() - J) / beta;
}

namespace {

double jdot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a[0] * b[0] - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

}  // namespace

SocScaling soc_nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  const double sn = jdot(s, s), zn = jdot(z, z);
  if (!(sn > 0.0 && zn > 0.0 && s[0] > 0.0 && z[0] > 0.0))
    throw std::domain_error("soc_nt_scaling: point outside the cone interior");
  const Eigen::VectorXd sb = s / std::sqrt(sn);
  const Eigen::VectorXd zb = z / std::sqrt(zn);
  const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
  Eigen::VectorXd Jzb = -zb;
  Jzb[0] = zb[0];
  Eigen::VectorXd wb = (sb + Jzb) / (2.0 * gamma);
  Eigen::VectorXd v = wb;
  v[0] += 1.0;
  v /= std::sqrt(2.0 * (wb[0] + 1.0));
  return SocScaling{std::pow(sn / zn, 0.25), v};
}

Eigen::VectorXd soc_arrow_solve(const Eigen::VectorXd& lambda, const Eigen::VectorXd& v) {
  const Eigen::Index k = lambda.size();
  const double l0 = lambda[0];
  const auto l1 = lambda.tail(k - 1);
  const double det = l0 * l0 - l1.squaredNorm();
  Eigen::VectorXd u(k);
  u[0] = (l0 * v[0] - l1.dot(v.tail(k - 1))) / det;
  u.tail(k - 1) = (v.tail(k - 1) - u[0] * l1) / l0;
  return u;
}

namespace {

struct Cones {
  int l;
  std::vector<int> q;
  int dim() const {
    int d = l;
    for (int k : q) d += k;
    return d;
  }
  int degree() const { return l + static_cast<int>(q.size()); }
};

Eigen::VectorXd unit(const Cones& K) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(K.dim());
  e.head(K.l).setOnes();
  int at = K.l;
  for (int k : K.q) {
    e[at] = 1.0;
    at += k;
  }
  return e;
}

Eigen::VectorXd jordan_prod(const Cones& K, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd r(a.size());
  r.head(K.l) = a.head(K.l).cwiseProduct(b.head(K.l));
  int at = K.l;
  for (int k : K.q) {
    const auto as = a.segment(at, k), bs = b.segment(at, k);
    r[at] = as.dot(bs);
    r.segment(at + 1, k - 1) = as[0] * bs.tail(k - 1) + bs[0] * as.tail(k - 1);
    at += k;
  }
  return r;
}

Eigen::VectorXd jordan_div(const Cones& K, const Eigen::VectorXd& lambda, const Eigen::VectorXd& v) {
  Eigen::VectorXd r(v.size());
  r.head(K.l) = v.head(K.l).cwiseQuotient(lambda.head(K.l));
  int at = K.l;
  for (int k : K.q) {
    r.segment(at, k) = soc_arrow_solve(lambda.segment(at, k), v.segment(at, k));
    at += k;
  }
  return r;
}

// Largest alpha >= 0 keeping u + alpha du in the cone (inf if unbounded).
double max_step(const Cones& K, const Eigen::VectorXd& u, const Eigen::VectorXd& du) {
  double a = std::numeric_limits<double>::infinity();
  for (int i = 0; i < K.l; ++i)
    if (du[i] < 0.0) a = std::min(a, -u[i] / du[i]);
  int at = K.l;
  for (int k : K.q) {
    const Eigen::VectorXd us = u.segment(at, k), ds = du.segment(at, k);
    if (ds[0] < 0.0) a = std::min(a, -us[0] / ds[0]);
    const double qa = jdot(ds, ds), qb = 2.0 * jdot(us, ds), qc = jdot(us, us);
    // smallest positive root of qa t^2 + qb t + qc (qc > 0 inside the cone)
    if (std::abs(qa) < 1e-300) {
      if (qb < 0.0) a = std::min(a, -qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double t = -0.5 * (qb + std::copysign(sq, qb));
        for (double root : {t / qa, t != 0.0 ? qc / t : std::numeric_limits<double>::infinity()})
          if (root > 0.0) a = std::min(a, root);
      }
    }
    at += k;
  }
  return a;
}

// How far u must be shifted along e to enter the cone (negative when inside).
double cone_violation(const Cones& K, const Eigen::VectorXd& u) {
  double a = -std::numeric_limits<double>::infinity();
  if (K.l > 0) a = -u.head(K.l).minCoeff();
  int at = K.l;
  for (int k : K.q) {
    a = std::max(a, u.segment(at + 1, k - 1).norm() - u[at]);
    at += k;
  }
  return a;
}

struct Scaling {
  Eigen::MatrixXd W, Winv;
};

Scaling nt_scaling(const Cones& K, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  const int m = K.dim();
  Scaling sc{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
  for (int i = 0; i < K.l; ++i) {
    const double d = std::sqrt(s[i] / z[i]);
    sc.W(i, i) = d;
    sc.Winv(i, i) = 1.0 / d;
  }
  int at = K.l;
  for (int k : K.q) {
    const SocScaling ns = soc_nt_scaling(s.segment(at, k), z.segment(at, k));
    sc.W.block(at, at, k, k) = ns.W();
    sc.Winv.block(at, at, k, k) = ns.Winv();
    at += k;
  }
  return sc;
}

class KktSolver {
 public:
  KktSolver(const ConeProgram& P, const Eigen::MatrixXd& H) : n_(P.c.size()), p_(P.A.rows()), m_(P.G.rows()) {
    const Eigen::Index t = n_ + p_ + m_;
    K_ = Eigen::MatrixXd::Zero(t, t);
    K_.block(0, n_, n_, p_) = P.A.transpose();
    K_.block(0, n_ + p_, n_, m_) = P.G.transpose();
    K_.block(n_, 0, p_, n_) = P.A;
    K_.block(n_ + p_, 0, m_, n_) = P.G;
    K_.block(n_ + p_, n_ + p_, m_, m_) = -H;
    lu_.compute(K_);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = lu_.solve(rhs);
    for (int i = 0; i < 2; ++i) x += lu_.solve(rhs - K_ * x);
    return x;
  }

 private:
  Eigen::Index n_, p_, m_;
  Eigen::MatrixXd K_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

ConeSolution solve_cone_program(const ConeProgram& P, double tol, int max_iters) {
  const Cones K{P.l, P.q};
  const Eigen::Index n = P.c.size(), p = P.A.rows(), m = P.G.rows();
  if (K.dim() != m || P.h.size() != m || P.G.cols() != n || P.A.cols() != n || P.b.size() != p)
    throw std::invalid_argument("solve_cone_program: inconsistent dimensions");
  for (int k : K.q)
    if (k < 2) throw std::invalid_argument("solve_cone_program: second-order cones need size >= 2");

  const Eigen::VectorXd e = unit(K);
  ConeSolution out;

  // Start: least-squares primal and dual points, shifted into the cone.
  {
    const KktSolver k0(P, Eigen::MatrixXd::Identity(m, m));
    Eigen::VectorXd rhs(n + p + m);
    rhs << Eigen::VectorXd::Zero(n), P.b, P.h;
    Eigen::VectorXd sol = k0.solve(rhs);
    out.x = sol.head(n);
    Eigen::VectorXd s = -sol.tail(m);
    rhs << -P.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m);
    sol = k0.solve(rhs);
    out.y = sol.segment(n, p);
    Eigen::VectorXd z = sol.tail(m);
    const double as = cone_violation(K, s), az = cone_violation(K, z);
    if (as >= 0.0) s += (1.0 + as) * e;
    if (az >= 0.0) z += (1.0 + az) * e;
    out.s = s;
    out.z = z;
  }

  const double nb = 1.0 + P.b.norm(), nh = 1.0 + P.h.norm(), nc = 1.0 + P.c.norm();
  for (int it = 0; it <= max_iters; ++it) {
    Eigen::VectorXd& x = out.x;
    Eigen::VectorXd& y = out.y;
    Eigen::VectorXd& s = out.s;
    Eigen::VectorXd& z = out.z;
    const Eigen::VectorXd rx = P.c + P.A.transpose() * y + P.G.transpose() * z;
    const Eigen::VectorXd ry = P.A * x - P.b;
    const Eigen::VectorXd rz = P.G * x + s - P.h;
    const double gap = s.dot(z);
    out.primal_value = P.c.dot(x);
    out.dual_value = -P.b.dot(y) - P.h.dot(z);
    out.iterations = it;
    const double pres = std::max(ry.size() ? ry.norm() / nb : 0.0, rz.norm() / nh);
    const double dres = rx.norm() / nc;
    const double rel_gap = std::abs(out.primal_value - out.dual_value) / std::max(1.0, std::abs(out.primal_value));
    if (pres <= tol && dres <= tol && (gap <= tol || rel_gap <= tol)) {
      out.optimal = true;
      return out;
    }
    if (it == max_iters) break;

    const Scaling sc = nt_scaling(K, s, z);
    const Eigen::VectorXd lambda = sc.W * z;
    const KktSolver kkt(P, sc.W * sc.W);
    const Eigen::VectorXd ll = jordan_prod(K, lambda, lambda);
    const double mu = gap / K.degree();

    struct Dir {
      Eigen::VectorXd dx, dy, dz, ds;
    };
    auto direction = [&](const Eigen::VectorXd& d_s) {
      Eigen::VectorXd rhs(n + p + m);
      const Eigen::VectorXd ld = jordan_div(K, lambda, d_s);
      rhs << -rx, -ry, -rz + sc.W * ld;
      const Eigen::VectorXd sol = kkt.solve(rhs);
      Dir d;
      d.dx = sol.head(n);
      d.dy = sol.segment(n, p);
      d.dz = sol.tail(m);
      d.ds = sc.W * (-ld - sc.W * d.dz);
      return d;
    };

    const Dir aff = direction(ll);
    const double a_aff = std::min({1.0, max_step(K, s, aff.ds), max_step(K, z, aff.dz)});
    const double gap_aff = (s + a_aff * aff.ds).dot(z + a_aff * aff.dz);
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);
    const Eigen::VectorXd corr = jordan_prod(K, sc.Winv * aff.ds, sc.W * aff.dz);
    const Dir d = direction(ll + corr - sigma * mu * e);
    const double a = std::min(1.0, 0.99 * std::min(max_step(K, s, d.ds), max_step(K, z, d.dz)));
    x += a * d.dx;
    y += a * d.dy;
    s += a * d.ds;
    z += a * d.dz;
  }
  return out;
}

OracleResult lp_oracle(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, CoefficientSet set) {
  if (A.cols() > kOracleMaxDim)
    throw GuardError("lp_oracle: dimension guard (" + std::to_string(A.cols()) + " > " +
                     std::to_string(kOracleMaxDim) + " real columns)");
  if (A.rows() != y.size()) throw std::invalid_argument("lp_oracle: y has the wrong length");
  const int k = set.ambient_dim();
  if (A.cols() % k != 0) throw std::invalid_argument("lp_oracle: column count does not match set");
  const int N = static_cast<int>(A.cols()) / k;
  OracleResult res;

  // Full-row-rank equivalent system A' = V_r', y' = S_r^{-1} U_r' y.
  Eigen::MatrixXd Ar(0, A.cols());
  Eigen::VectorXd yr(0);
  if (A.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int r = 0;
    while (r < sv.size() && sv[r] > 1e-10 * sv[0]) ++r;
    const Eigen::MatrixXd U = svd.matrixU().leftCols(r), V = svd.matrixV().leftCols(r);
    yr = (U.transpose() * y).cwiseQuotient(sv.head(r));
    Ar = V.transpose();
    if ((A * (V * yr) - y).norm() > 1e-8 * (1.0 + y.norm())) {
      res.infeasible = true;
      return res;
    }
  }
  const Eigen::Index p = Ar.rows();

  ConeProgram P;
  switch (set.tag()) {
    case CoeffTag::REAL: {
      const int nv = 2 * N;
      P.c = Eigen::VectorXd::Ones(nv);
      P.A.resize(p, nv);
      P.A << Ar, -Ar;
      P.G = -Eigen::MatrixXd::Identity(nv, nv);
      P.h = Eigen::VectorXd::Zero(nv);
      P.l = nv;
      break;
    }
    case CoeffTag::NONNEG:
      P.c = Eigen::VectorXd::Ones(N);
      P.A = Ar;
      P.G = -Eigen::MatrixXd::Identity(N, N);
      P.h = Eigen::VectorXd::Zero(N);
      P.l = N;
      break;
    case CoeffTag::BOX01:
      P.c = Eigen::VectorXd::Ones(N);
      P.A = Ar;
      P.G.resize(2 * N, N);
      P.G << -Eigen::MatrixXd::Identity(N, N), Eigen::MatrixXd::Identity(N, N);
      P.h.resize(2 * N);
      P.h << Eigen::VectorXd::Zero(N), Eigen::VectorXd::Ones(N);
      P.l = 2 * N;
      break;
    case CoeffTag::COMPLEX: {
      const int nv = 3 * N;
      P.c = Eigen::VectorXd::Zero(nv);
      P.A = Eigen::MatrixXd::Zero(p, nv);
      for (int i = 0; i < N; ++i) {
        P.c[3 * i] = 1.0;
        P.A.col(3 * i + 1) = Ar.col(2 * i);
        P.A.col(3 * i + 2) = Ar.col(2 * i + 1);
      }
      P.G = -Eigen::MatrixXd::Identity(nv, nv);
      P.h = Eigen::VectorXd::Zero(nv);
      P.q.assign(N, 3);
      break;
    }
  }
  P.b = yr;

  const ConeSolution sol = solve_cone_program(P);
  res.optimal = sol.optimal;
  res.iterations = sol.iterations;
  res.value = sol.primal_value;
  res.x.resize(A.cols());
  switch (set.tag()) {
    case CoeffTag::REAL:
      res.x = sol.x.head(N) - sol.x.tail(N);
      break;
    case CoeffTag::NONNEG:
    case CoeffTag::BOX01:
      res.x = sol.x;
      break;
    case CoeffTag::COMPLEX:
      for (int i = 0; i < N; ++i) {
        res.x[2 * i] = sol.x[3 * i + 1];
        res.x[2 * i + 1] = sol.x[3 * i + 2];
      }
      break;
  }
  return res;
}

}  // namespace ptlab
