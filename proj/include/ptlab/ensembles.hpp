#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ptlab/coeffsets.hpp"
#include "ptlab/rng.hpp"

namespace ptlab {

enum class Field { REAL, COMPLEX };

/// (ell, m, M, B): free entries per block, rows per block, columns per
/// block, number of blocks.
struct ProblemSizes {
  int ell = 0;
  int m = 1;
  int M = 1;
  int B = 1;

  void validate() const;
  long k() const { return static_cast<long>(B) * ell; }
  long n() const { return static_cast<long>(B) * m; }
  long N() const { return static_cast<long>(B) * M; }
  double delta() const { return static_cast<double>(m) / M; }
  double eps() const { return static_cast<double>(ell) / M; }
};

enum class OperatorKind { DENSE, BLOCK_DIAG_REPEATED, BLOCK_DIAG_DISTINCT, ANISO_2D, ISO_2D };

std::string to_string(OperatorKind kind);

/// How an operator was built, sufficient to rebuild it bit-for-bit. Never
/// carries matrix entries.
struct OperatorDescriptor {
  std::string source;  // use | pdft | rdft | aniso2d | iso2d | identity
  Field field = Field::REAL;
  int m = 0;
  int M = 0;
  int B = 1;
  bool repeated = true;
  std::optional<Seed> seed;
  std::vector<int> K;  // DFT rows, real-Fourier frequencies, or 2D sample indices
  int T0 = 0;
  int T1 = 0;
  int n = 0;
};

void to_json(nlohmann::json& j, const OperatorDescriptor& d);
void from_json(const nlohmann::json& j, OperatorDescriptor& d);

/// Linear map with block structure. Complex operators hold the 2x2 real
/// representation of every entry ([[a, -b], [b, a]]) so a single real
/// kernel serves all coefficient sets. Immutable once built.
class MeasurementOperator {
 public:
  MeasurementOperator(OperatorKind kind, Field field, std::vector<Eigen::MatrixXd> blocks, int num_blocks,
                      std::vector<int> sample_set = {});

  OperatorKind kind() const { return kind_; }
  Field field() const { return field_; }
  bool is_block_diagonal() const {
    return kind_ == OperatorKind::BLOCK_DIAG_REPEATED || kind_ == OperatorKind::BLOCK_DIAG_DISTINCT;
  }
  int num_blocks() const { return num_blocks_; }
  /// Rows and columns per block in coefficient units (complex entries count once).
  int block_rows() const { return block_rows_; }
  int block_cols() const { return block_cols_; }
  int rows() const { return block_rows_ * num_blocks_; }
  int cols() const { return block_cols_ * num_blocks_; }
  int stored_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<int>& sample_set() const { return sample_set_; }

  /// Stored (native) block b; the repeated kind returns its single block.
  const Eigen::MatrixXd& block(int b) const;

  /// The real matrix that block b applies to the reals of a coefficient
  /// vector over `set`. A complex operator seen by a real set keeps only the
  /// real-input columns; a real operator seen by COMPLEX acts on both parts.
  Eigen::MatrixXd effective_block(int b, CoefficientSet set) const;

  /// y = A x with x, y in the native representation (pairs when complex).
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd adjoint(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  /// y = A x for a coefficient vector over `set` (see effective_block).
  Eigen::VectorXd apply(const SignalVector& x) const;

  /// Dense native matrix.
  Eigen::MatrixXd dense() const;
  /// Dense complex matrix (requires field COMPLEX).
  Eigen::MatrixXcd dense_complex() const;

  const std::optional<OperatorDescriptor>& descriptor() const { return descriptor_; }
  void set_descriptor(OperatorDescriptor d) { descriptor_ = std::move(d); }

 private:
  int native_rows() const { return field_ == Field::COMPLEX ? 2 * block_rows_ : block_rows_; }
  int native_cols() const { return field_ == Field::COMPLEX ? 2 * block_cols_ : block_cols_; }

  OperatorKind kind_;
  Field field_;
  std::vector<Eigen::MatrixXd> blocks_;
  int num_blocks_;
  int block_rows_ = 0;
  int block_cols_ = 0;
  std::vector<int> sample_set_;
  std::optional<OperatorDescriptor> descriptor_;
};

Eigen::MatrixXd to_real_pair(const Eigen::MatrixXcd& a);
Eigen::MatrixXcd from_real_pair(const Eigen::MatrixXd& a);
Eigen::VectorXd to_real_pair(const Eigen::VectorXcd& v);
Eigen::VectorXcd from_real_pair_vector(const Eigen::VectorXd& v);

/// m x M block with i.i.d. columns uniform on the unit sphere of R^m or C^m.
/// Complex blocks come back in real-pair form (2m x 2M).
Eigen::MatrixXd sample_use(int m, int M, Field field, Seed seed);

/// Block-diagonal operator. repeated: exactly one block applied B times;
/// distinct: exactly B blocks of identical shape.
MeasurementOperator make_block_diagonal(std::vector<Eigen::MatrixXd> blocks, int B, bool repeated,
                                        Field field = Field::REAL);

/// Rows K of the unitary M-point DFT, entry (i, t) = exp(2 pi i K_i t / M) / sqrt(M),
/// in real-pair form.
Eigen::MatrixXd partial_dft_block(int M, const std::vector<int>& K);

/// Real orthonormal Fourier rows for frequencies in {0, ..., M/2}: the DC and
/// Nyquist frequencies give one row, every other frequency a cos/sin pair.
/// For real signals this is the partial DFT over the conjugate-symmetric set
/// K u (-K) with duplicate information removed; for prime M its columns are
/// in general position.
Eigen::MatrixXd real_fourier_block(int M, const std::vector<int>& freqs);

/// Frequencies giving exactly m real rows: DC iff m is odd, plus m/2 distinct
/// random non-DC, non-Nyquist frequencies.
std::vector<int> sample_real_fourier_freqs(int M, int m, Seed seed);

/// 2D DFT on T0 x T1 arrays sampled exhaustively along k0 and on the rows
/// k1 in K1. Arrays are vectorized column-major (index t0 + T0*t1); outputs
/// are indexed k0 + T0*i for K1[i].
MeasurementOperator aniso_sampler_2d(int T0, int T1, const std::vector<int>& K1);
MeasurementOperator aniso_sampler_2d(int M, const std::vector<int>& K1);

/// 2D DFT of an M x M array at n distinct uniformly drawn (k0, k1) pairs.
MeasurementOperator iso_sampler_2d(int M, int n, Seed seed);

/// Block-regular sparse signal: per block, ell free positions drawn without
/// replacement. Free values are U(0,1) (BOX01), |N(0,1)| (NONNEG), N(0,1)
/// (REAL) or standard complex Gaussian; constrained BOX01 entries are fair
/// coin flips over {0, 1}, all others exactly 0.
SignalVector sample_signal(const ProblemSizes& sizes, CoefficientSet set, Seed seed);

/// Rebuild an operator from its descriptor.
MeasurementOperator build_operator(const OperatorDescriptor& d);

/// Checks K: distinct entries in [0, M).
void validate_index_set(const std::vector<int>& K, int M, const char* what);

}  // namespace ptlab
