#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ptlab/coeffsets.hpp"
#include "ptlab/ensembles.hpp"
#include "ptlab/rng.hpp"
#include "ptlab/solver.hpp"

namespace ptlab {

/// Multiblock solves refuse N = B*M beyond this.
inline constexpr long kMaxCampaignN = 4096;
/// Single-block campaigns refuse M beyond this.
inline constexpr int kMaxSingleBlockM = 1024;

enum class MatrixPolicy { FRESH, FIXED };

/// ADMM is the production solver. The interior-point reference ends in the
/// relative interior of the optimal set, so a trial succeeds only when the
/// solution is unique; ADMM may land on x0 when it is one of several minimizers.
/// Interior point needs blocks of at most kOracleMaxDim reals.
enum class Backend { ADMM, INTERIOR_POINT };

std::string to_string(Backend b);
Backend parse_backend(const std::string& text);

/// Ensemble ids: rbuse (one USE block repeated), dbuse (B independent USE
/// blocks), rbpft (one partial Fourier block repeated). For real coefficient
/// sets rbpft uses the real orthonormal Fourier rows, so a block always
/// carries m real constraints per coefficient dimension.
MeasurementOperator make_ensemble(const std::string& ensemble, const ProblemSizes& sizes, CoefficientSet set,
                                  Seed seed, const std::vector<int>& K = {});

struct TrialConfig {
  ProblemSizes sizes;
  std::string ensemble = "rbuse";
  CoefficientSet coeff_set = kBox01;
  long S = 100;
  Seed master_seed = 1;
  MatrixPolicy policy = MatrixPolicy::FRESH;
  std::vector<int> K;  // optional fixed Fourier rows for rbpft
  SolverOptions solver;
  Backend backend = Backend::ADMM;
  int jobs = 0;  // 0: hardware concurrency
};

struct TrialRecord {
  ProblemSizes sizes;
  std::string ensemble;
  CoefficientSet coeff_set;
  Seed master_seed = 0;
  long trial_index = 0;
  // ||x0 - x1|| / ||x0|| (||x1|| when x0 = 0); +inf when the solver did not
  // converge, so that success is always rel_error < 0.001.
  double rel_error = 0.0;
  double raw_rel_error = 0.0;  // the error of the returned point regardless of status
  bool success = false;
  SolveStatus status = SolveStatus::CONVERGED;
  long iterations = 0;
  double wall_time = 0.0;
};

/// S independent trials; trial t draws from the stream (master, "trial", t).
/// Output order is the trial index, independent of the worker count.
std::vector<TrialRecord> run_trials(const TrialConfig& cfg);

struct SuccessRow {
  int ell = 0, m = 0, M = 0, B = 0;
  long S = 0;
  long successes = 0;
  double pi_hat = 0.0;
  std::string ensemble;
  std::string coeffset;
  Seed seed = 0;
};

struct SuccessTable {
  std::vector<SuccessRow> rows;
};

struct GridConfig {
  TrialConfig base;            // sizes.ell is ignored
  std::vector<int> ells;       // explicit sweep; empty means a window around the prediction
  int half_width = 0;          // window half width in ell; 0 picks max(3, M/4)
};

/// Center of the default window: predicted eps_bd (order 2) times M, or the
/// asymptotic transition when the finite-N formula is undefined.
double predicted_center_ell(int m, int M, int B, CoefficientSet set);

/// One cell per ell, each with S trials seeded from (master, "cell", ell).
SuccessTable run_phase_grid(const GridConfig& cfg);

struct CampaignResult {
  double y_bar = 0.0;  // mean failure indicator
  long T = 0;          // number of failures
  long S = 0;
};

CampaignResult single_block_campaign(int ell, int m, int M, long S, Seed seed, CoefficientSet set = kBox01,
                                     const std::string& ensemble = "rbuse", const SolverOptions& opts = {},
                                     int jobs = 0);

SuccessRow summarize(const TrialConfig& cfg, const std::vector<TrialRecord>& records);

inline const char* kSuccessCsvHeader = "ell,m,M,B,S,successes,pi_hat,ensemble,coeffset,seed";

/// Shortest decimal form that parses back to the same double (at most 17 digits).
std::string format_double(double v);

void write_success_csv(std::ostream& os, const SuccessTable& table, bool header = true);
SuccessTable read_success_csv(std::istream& is);

}  // namespace ptlab
