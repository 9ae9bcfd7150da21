#include "ptlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ptlab/errors.hpp"
#include "ptlab/lp_oracle.hpp"
#include "ptlab/predict.hpp"

namespace ptlab {

MeasurementOperator make_ensemble(const std::string& ensemble, const ProblemSizes& sizes, CoefficientSet set,
                                  Seed seed, const std::vector<int>& K) {
  sizes.validate();
  OperatorDescriptor d;
  d.field = set.is_complex() ? Field::COMPLEX : Field::REAL;
  d.m = sizes.m;
  d.M = sizes.M;
  d.B = sizes.B;
  d.seed = seed;
  if (ensemble == "rbuse" || ensemble == "dbuse") {
    d.source = "use";
    d.repeated = ensemble == "rbuse";
  } else if (ensemble == "rbpft") {
    d.repeated = true;
    if (set.is_complex()) {
      d.source = "pdft";
      if (!K.empty()) {
        d.K = K;
      } else {
        Rng rng(derive_seed(seed, "rows", 0));
        d.K = rng.choose(sizes.M, sizes.m);
        std::sort(d.K.begin(), d.K.end());
      }
    } else {
      d.source = "rdft";
      d.K = K.empty() ? sample_real_fourier_freqs(sizes.M, sizes.m, seed) : K;
    }
  } else {
    throw std::invalid_argument("unknown ensemble '" + ensemble + "' (expected rbuse, dbuse or rbpft)");
  }
  return build_operator(d);
}

std::string to_string(Backend b) { return b == Backend::ADMM ? "admm" : "ipm"; }

Backend parse_backend(const std::string& text) {
  if (text == "admm") return Backend::ADMM;
  if (text == "ipm" || text == "interior-point") return Backend::INTERIOR_POINT;
  throw std::invalid_argument("unknown solver backend '" + text + "' (expected admm or ipm)");
}

namespace {

// Block by block through the interior-point reference.
SolveResult solve_interior_point(const MeasurementOperator& A, const Eigen::VectorXd& y, CoefficientSet set) {
  const int B = A.num_blocks();
  const Eigen::Index rb = y.size() / B;
  Eigen::VectorXd x(static_cast<Eigen::Index>(A.cols()) * set.ambient_dim());
  Eigen::Index at = 0;
  SolveResult res{SignalVector::zeros(set, A.cols() / B, B)};
  res.status = SolveStatus::CONVERGED;
  for (int b = 0; b < B; ++b) {
    const Eigen::MatrixXd Ab = A.effective_block(b, set);
    const auto o = lp_oracle(Ab, y.segment(b * rb, rb), set);
    if (o.infeasible) res.status = SolveStatus::INFEASIBLE;
    else if (!o.optimal && res.status == SolveStatus::CONVERGED) res.status = SolveStatus::MAX_ITERS;
    x.segment(at, o.x.size()) = o.x;
    at += o.x.size();
    res.value += o.value;
    res.iterations += o.iterations;
  }
  // interior iterates can sit a hair outside the box
  if (set == kBox01) x = x.cwiseMax(0.0).cwiseMin(1.0);
  else if (set == kNonneg) x = x.cwiseMax(0.0);
  res.x1 = SignalVector(x, set, A.cols() / B, B);
  return res;
}

int worker_count(int jobs, long tasks) {
  long w = jobs > 0 ? jobs : static_cast<long>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(std::clamp(w, 1L, std::max(tasks, 1L)));
}

// Runs f(i) for i in [0, count) on `workers` threads. The first exception
// thrown by any task is rethrown on the caller's thread.
template <class F>
void parallel_for(long count, int workers, F&& f) {
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto body = [&] {
    for (long i = next++; i < count; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
        next = count;
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

TrialRecord run_one(const TrialConfig& cfg, long t, const MeasurementOperator* fixed) {
  const auto t0 = std::chrono::steady_clock::now();
  const Seed trial_seed = derive_seed(cfg.master_seed, "trial", static_cast<std::uint64_t>(t));
  TrialRecord rec;
  rec.sizes = cfg.sizes;
  rec.ensemble = cfg.ensemble;
  rec.coeff_set = cfg.coeff_set;
  rec.master_seed = cfg.master_seed;
  rec.trial_index = t;

  std::optional<MeasurementOperator> fresh;
  if (!fixed) fresh.emplace(make_ensemble(cfg.ensemble, cfg.sizes, cfg.coeff_set, derive_seed(trial_seed, "matrix", 0), cfg.K));
  const MeasurementOperator& A = fixed ? *fixed : *fresh;

  const SignalVector x0 = sample_signal(cfg.sizes, cfg.coeff_set, derive_seed(trial_seed, "signal", 0));
  const Eigen::VectorXd y = A.apply(x0);
  const SolveResult res = cfg.backend == Backend::ADMM ? solve_p1(A, y, cfg.coeff_set, cfg.solver)
                                                       : solve_interior_point(A, y, cfg.coeff_set);
  const double n0 = x0.entries().norm();
  rec.raw_rel_error = n0 > 0.0 ? relative_error(x0, res.x1) : res.x1.entries().norm();
  rec.status = res.status;
  rec.iterations = res.iterations;
  rec.rel_error = res.status == SolveStatus::CONVERGED ? rec.raw_rel_error : std::numeric_limits<double>::infinity();
  rec.success = rec.rel_error < kSuccessThreshold;
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

std::vector<TrialRecord> run_trials(const TrialConfig& cfg) {
  cfg.sizes.validate();
  if (cfg.S < 0) throw std::invalid_argument("run_trials: S must be >= 0");
  if (cfg.sizes.N() > kMaxCampaignN)
    throw GuardError("desk-scale guard: N = B*M = " + std::to_string(cfg.sizes.N()) + " exceeds " +
                     std::to_string(kMaxCampaignN));
  if (cfg.backend == Backend::INTERIOR_POINT && cfg.sizes.M * cfg.coeff_set.ambient_dim() > kOracleMaxDim)
    throw GuardError("interior-point guard: a block has " + std::to_string(cfg.sizes.M * cfg.coeff_set.ambient_dim()) +
                     " reals, more than " + std::to_string(kOracleMaxDim));
  std::vector<TrialRecord> out(static_cast<std::size_t>(cfg.S));
  if (cfg.S == 0) return out;

  std::optional<MeasurementOperator> fixed;
  if (cfg.policy == MatrixPolicy::FIXED)
    fixed.emplace(make_ensemble(cfg.ensemble, cfg.sizes, cfg.coeff_set, derive_seed(cfg.master_seed, "matrix", 0), cfg.K));

  parallel_for(cfg.S, worker_count(cfg.jobs, cfg.S),
               [&](long t) { out[static_cast<std::size_t>(t)] = run_one(cfg, t, fixed ? &*fixed : nullptr); });
  return out;
}

SuccessRow summarize(const TrialConfig& cfg, const std::vector<TrialRecord>& records) {
  SuccessRow row;
  row.ell = cfg.sizes.ell;
  row.m = cfg.sizes.m;
  row.M = cfg.sizes.M;
  row.B = cfg.sizes.B;
  row.S = static_cast<long>(records.size());
  for (const auto& r : records) row.successes += r.success ? 1 : 0;
  row.pi_hat = row.S > 0 ? static_cast<double>(row.successes) / row.S : 0.0;
  row.ensemble = cfg.ensemble;
  row.coeffset = cfg.coeff_set.name();
  row.seed = cfg.master_seed;
  return row;
}

double predicted_center_ell(int m, int M, int B, CoefficientSet set) {
  const double delta = static_cast<double>(m) / M;
  try {
    if (B >= 2) return predict_pt(m, M, B, set, 2).eps_bd * M;
  } catch (const std::exception&) {
    // shape undefined here (BOX01 with delta <= 1/2, say)
  }
  return asymptotic_pt(delta, set) * M;
}

SuccessTable run_phase_grid(const GridConfig& cfg) {
  const ProblemSizes& s = cfg.base.sizes;
  std::vector<int> ells = cfg.ells;
  if (ells.empty()) {
    const double c = predicted_center_ell(s.m, s.M, s.B, cfg.base.coeff_set);
    const int w = cfg.half_width > 0 ? cfg.half_width : std::max(3, s.M / 4);
    const int lo = std::max(0, static_cast<int>(std::lround(c)) - w);
    const int hi = std::min(s.M, static_cast<int>(std::lround(c)) + w);
    for (int ell = lo; ell <= hi; ++ell) ells.push_back(ell);
  }
  SuccessTable table;
  for (int ell : ells) {
    TrialConfig cell = cfg.base;
    cell.sizes.ell = ell;
    cell.master_seed = derive_seed(cfg.base.master_seed, "cell", static_cast<std::uint64_t>(ell));
    SuccessRow row = summarize(cell, run_trials(cell));
    row.seed = cfg.base.master_seed;
    table.rows.push_back(row);
  }
  return table;
}

CampaignResult single_block_campaign(int ell, int m, int M, long S, Seed seed, CoefficientSet set,
                                     const std::string& ensemble, const SolverOptions& opts, int jobs) {
  if (M > kMaxSingleBlockM)
    throw GuardError("desk-scale guard: single-block M = " + std::to_string(M) + " exceeds " +
                     std::to_string(kMaxSingleBlockM));
  TrialConfig cfg;
  cfg.sizes = ProblemSizes{ell, m, M, 1};
  cfg.ensemble = ensemble;
  cfg.coeff_set = set;
  cfg.S = S;
  cfg.master_seed = seed;
  cfg.solver = opts;
  cfg.jobs = jobs;
  const auto records = run_trials(cfg);
  CampaignResult r;
  r.S = S;
  for (const auto& rec : records) r.T += rec.success ? 0 : 1;
  r.y_bar = S > 0 ? static_cast<double>(r.T) / S : 0.0;
  return r;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_success_csv(std::ostream& os, const SuccessTable& table, bool header) {
  if (header) os << kSuccessCsvHeader << '\n';
  for (const auto& r : table.rows) {
    os << r.ell << ',' << r.m << ',' << r.M << ',' << r.B << ',' << r.S << ',' << r.successes << ','
       << format_double(r.pi_hat) << ',' << r.ensemble << ',' << r.coeffset << ',' << r.seed << '\n';
  }
}

SuccessTable read_success_csv(std::istream& is) {
  SuccessTable t;
  std::string line;
  bool first = true;
  long lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("ell,", 0) == 0) continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw std::invalid_argument("success CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      SuccessRow r;
      r.ell = std::stoi(f[0]);
      r.m = std::stoi(f[1]);
      r.M = std::stoi(f[2]);
      r.B = std::stoi(f[3]);
      r.S = std::stol(f[4]);
      r.successes = std::stol(f[5]);
      r.pi_hat = std::stod(f[6]);
      r.ensemble = f[7];
      r.coeffset = f[8];
      r.seed = std::stoull(f[9]);
      t.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("success CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return t;
}

}  // namespace ptlab
